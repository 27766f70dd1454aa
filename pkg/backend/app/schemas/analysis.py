from __future__ import annotations

from pydantic import BaseModel, Field, model_validator


class ShareVector(BaseModel):
    """Per-agent split u_ri of the reference input u_r."""

    u_r: float
    u_ri: tuple[float, ...]

    model_config = {"frozen": True}

    @model_validator(mode="after")
    def check_sum(self) -> ShareVector:
        total = sum(self.u_ri)
        if abs(total - self.u_r) > 1e-12 * max(1.0, abs(self.u_r)):
            raise ValueError(f"shares sum to {total!r}, expected u_r={self.u_r!r}")
        return self


class TrackingMetrics(BaseModel):
    t_a: float
    t_b: float
    n_samples: int
    mean_e: float
    rms_e: float
    std_e: float
    max_abs_e: float
    mean_yp: float


class RoleFraction(BaseModel):
    """Share of window samples an agent spent at u_p, at u_n, or strictly between."""

    agent: int
    at_u_p: float
    at_u_n: float
    between: float


class SegmentCheck(BaseModel):
    index: int
    t_start: float
    t_end: float
    y_r: float
    reached: bool
    # max y_p when approaching from below, min y_p from above
    closest_y_p: float


class FaultCheck(BaseModel):
    t: float
    agents: list[int]
    zero_after: bool
    rows_checked: int


class PassivitySummary(BaseModel):
    kind: str
    segments: int
    L: list[float]
    C_u: float = Field(ge=0)
    C_Vu: float
    max_violation: float
    tol: float
    within_tol: bool
    # integral controller only: max per-step |ΔV_c - v·e·dt| on unsaturated steps
    equality_residual: float | None = None
    unsaturated_steps: int | None = None
    # ASSC only
    vui_max: float | None = None
    vui_bound: float | None = None
