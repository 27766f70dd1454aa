from __future__ import annotations

from enum import Enum

from pydantic import BaseModel, Field

from app.schemas.analysis import (
    FaultCheck,
    PassivitySummary,
    RoleFraction,
    SegmentCheck,
    TrackingMetrics,
)
from app.schemas.config_file import ConfigFile
from app.schemas.lti import SprCertificate


class RunSource(str, Enum):
    CONFIG = "config"
    PRESET = "preset"


class WindowRoles(BaseModel):
    t_a: float
    t_b: float
    agents: list[RoleFraction]


class RunReport(BaseModel):
    name: str
    source: RunSource
    preset: str | None = None
    dt: float
    t_end: float
    rows: int
    spr: SprCertificate
    windows: list[TrackingMetrics]
    roles: list[WindowRoles] = Field(default_factory=list)
    passivity: PassivitySummary | None = None
    segments: list[SegmentCheck] = Field(default_factory=list)
    faults: list[FaultCheck] = Field(default_factory=list)
    flags: list[str] = Field(default_factory=list)
    files: dict[str, str] = Field(default_factory=dict)
    # resolved input, for provenance
    config: ConfigFile

    model_config = {"ser_json_inf_nan": "constants"}


class BatchStatus(str, Enum):
    COMPLETED = "completed"
    FAILED = "failed"


class BatchOutcome(BaseModel):
    name: str
    status: BatchStatus
    exit_code: int = 0
    out_dir: str | None = None
    error_message: str | None = None
    report: RunReport | None = None
