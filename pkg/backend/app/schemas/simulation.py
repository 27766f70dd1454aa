from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, Field, PositiveFloat, model_validator

from app.schemas.agent import AgentParams
from app.schemas.lti import TransferFunction
from app.schemas.reference import ReferenceSchedule


class FaultEvent(BaseModel):
    """From the first tick with t >= self.t the listed agents output 0."""

    t: float = Field(ge=0)
    agent_indices: tuple[int, ...] = Field(min_length=1)

    model_config = {"frozen": True}

    @model_validator(mode="after")
    def check_indices(self) -> FaultEvent:
        if any(i < 1 for i in self.agent_indices):
            raise ValueError("agent indices are 1-based")
        return self


class AnalysisOptions(BaseModel):
    passivity: bool = True
    u_share: Literal["equal"] = "equal"
    tol: PositiveFloat = 1e-6
    # explicit tracking windows; defaults to the last quarter of each segment
    windows: tuple[tuple[float, float], ...] | None = None

    model_config = {"frozen": True}


class SimConfig(BaseModel):
    name: str = "custom"
    plant: TransferFunction
    dt: PositiveFloat
    t_end: PositiveFloat
    agents: tuple[AgentParams, ...] = Field(min_length=1)
    reference: ReferenceSchedule
    faults: tuple[FaultEvent, ...] = ()
    initial_plant_state: tuple[float, ...] | None = None
    fault_freezes_phase: bool = False
    analysis: AnalysisOptions = AnalysisOptions()

    model_config = {"frozen": True}

    @model_validator(mode="after")
    def check_invariants(self) -> SimConfig:
        if self.t_end < self.dt:
            raise ValueError(f"t_end={self.t_end} must be at least dt={self.dt}")
        m = len(self.agents)
        for fault in self.faults:
            bad = [i for i in fault.agent_indices if i > m]
            if bad:
                raise ValueError(f"fault at t={fault.t} names agents {bad} outside 1..{m}")
        if self.initial_plant_state is not None and len(self.initial_plant_state) != self.plant.order:
            raise ValueError(
                f"initial_plant_state has {len(self.initial_plant_state)} entries, "
                f"plant order is {self.plant.order}"
            )
        return self

    @property
    def m(self) -> int:
        return len(self.agents)

    @property
    def n_rows(self) -> int:
        return int(self.t_end / self.dt + 1e-9) + 1

    @property
    def u_min(self) -> float:
        return sum(a.u_n for a in self.agents)

    @property
    def u_max(self) -> float:
        return sum(a.u_p for a in self.agents)
