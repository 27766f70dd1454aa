from __future__ import annotations

from fastapi import APIRouter, HTTPException, Query
from pydantic import BaseModel

from app.schemas.report import RunReport
from app.services import report_service
from app.services.preset_service import PRESETS
from app.utils.exceptions import ConfigurationError, RunError, UnknownPresetError

router = APIRouter(prefix="/presets")


class PresetInfo(BaseModel):
    name: str
    description: str


@router.get("", response_model=list[PresetInfo])
def list_presets() -> list[PresetInfo]:
    return [PresetInfo(name=name, description=desc) for name, desc in PRESETS.items()]


@router.post("/{name}/report", response_model=RunReport)
def preset_report(
    name: str,
    dt: float | None = Query(default=None, gt=0, description="override the step size [s]"),
) -> RunReport:
    """Run a preset in memory and return its report; no files are written."""
    try:
        return report_service.preset_report(name, dt)
    except UnknownPresetError as e:
        raise HTTPException(status_code=404, detail=str(e)) from e
    except ConfigurationError as e:
        raise HTTPException(status_code=400, detail=str(e)) from e
    except RunError as e:
        raise HTTPException(status_code=500, detail=str(e)) from e
