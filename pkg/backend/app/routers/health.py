from __future__ import annotations

import matplotlib
import numpy as np
import scipy
from fastapi import APIRouter

from app.config import settings
from app.services.preset_service import PRESETS

router = APIRouter()


@router.get("/health")
def health_check() -> dict:
    """Liveness plus the numeric stack and run defaults in effect."""
    return {
        "status": "healthy",
        "app_name": settings.app_name,
        "presets": sorted(PRESETS),
        "allow_non_spr": settings.allow_non_spr,
        "passivity_tol": settings.passivity_tol,
        "versions": {
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "matplotlib": matplotlib.__version__,
        },
    }
