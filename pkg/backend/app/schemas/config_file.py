"""JSON document accepted by ``simulate --config`` (and written as config.json)."""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, Field, PositiveFloat, PositiveInt, model_validator

_STRICT = {"extra": "forbid"}


class PlantBlock(BaseModel):
    num: list[float] = Field(min_length=1)
    den: list[float] = Field(min_length=1)

    model_config = _STRICT


class SegmentBlock(BaseModel):
    t_start: float
    y_r: float

    model_config = _STRICT


class ReferenceBlock(BaseModel):
    segments: list[SegmentBlock] = Field(min_length=1)

    model_config = _STRICT


class GainsBlock(BaseModel):
    """Exactly one of: named preset, k_lo with k_hi_factor or k_hi, or fixed k."""

    # "paper-eq16" is the published id; "staircase" is an alias
    preset: Literal["paper-eq16", "staircase"] | None = None
    k_lo: list[PositiveFloat] | None = None
    k_hi_factor: list[PositiveFloat] | None = None
    k_hi: list[PositiveFloat] | None = None
    k: list[PositiveFloat] | None = None

    model_config = _STRICT

    @model_validator(mode="after")
    def check_one_form(self) -> GainsBlock:
        forms = [
            self.preset is not None,
            self.k_lo is not None,
            self.k is not None,
        ]
        if sum(forms) != 1:
            raise ValueError("gains: give exactly one of 'preset', 'k_lo', or 'k'")
        if self.k_lo is not None and (self.k_hi_factor is None) == (self.k_hi is None):
            raise ValueError("gains: 'k_lo' needs exactly one of 'k_hi_factor' or 'k_hi'")
        if self.k_lo is None and (self.k_hi_factor is not None or self.k_hi is not None):
            raise ValueError("gains: 'k_hi_factor'/'k_hi' only go with 'k_lo'")
        return self


class AgentsBlock(BaseModel):
    kind: Literal["asc", "assc", "integral"]
    m: PositiveInt
    u_p: float
    u_n: float
    phi_p: float | None = None
    phi_n: float | None = None
    gains: GainsBlock

    model_config = _STRICT


class FaultBlock(BaseModel):
    t: float
    agents: list[int] = Field(min_length=1)

    model_config = _STRICT


class AnalysisBlock(BaseModel):
    passivity: bool = True
    u_share: Literal["equal"] = "equal"
    tol: PositiveFloat = 1e-6
    windows: list[tuple[float, float]] | None = None

    model_config = _STRICT


class ConfigFile(BaseModel):
    name: str | None = None
    plant: PlantBlock
    dt: PositiveFloat
    t_end: PositiveFloat
    initial_plant_state: list[float] | None = None
    reference: ReferenceBlock
    agents: AgentsBlock
    faults: list[FaultBlock] | None = None
    analysis: AnalysisBlock | None = None
    fault_freezes_phase: bool | None = None

    model_config = _STRICT
