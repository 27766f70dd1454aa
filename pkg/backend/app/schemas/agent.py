from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from pydantic import BaseModel, PositiveFloat, model_validator


class ControllerKind(str, Enum):
    ASC = "asc"
    ASSC = "assc"
    INTEGRAL = "integral"


class GainMode(str, Enum):
    # k_hi whenever φ·e < 0
    SWITCHED = "switched"
    # k_hi only for φ > 0 and e < 0; φ <= 0 with e >= 0 keeps k_lo
    STAIRCASE = "staircase"


class GainSchedule(BaseModel):
    k_lo: PositiveFloat
    k_hi: PositiveFloat
    mode: GainMode = GainMode.SWITCHED

    model_config = {"frozen": True}

    @model_validator(mode="after")
    def check_order(self) -> GainSchedule:
        if self.k_lo > self.k_hi:
            raise ValueError(f"k_lo={self.k_lo} must not exceed k_hi={self.k_hi}")
        return self


class AgentParams(BaseModel):
    kind: ControllerKind
    u_p: float
    u_n: float
    phi_p: float = 0.0
    phi_n: float = 0.0
    gains: GainSchedule | None = None
    # fixed gain K_i of the integral controller
    k: PositiveFloat | None = None

    model_config = {"frozen": True}

    @model_validator(mode="after")
    def check_invariants(self) -> AgentParams:
        if not self.u_n < self.u_p:
            raise ValueError(f"u_n={self.u_n} must be below u_p={self.u_p}")
        if self.kind is ControllerKind.INTEGRAL:
            if self.k is None:
                raise ValueError("integral agents need a fixed gain k")
            return self
        if self.gains is None:
            raise ValueError(f"{self.kind.value} agents need a gain schedule")
        if self.kind is ControllerKind.ASSC:
            if not (self.phi_n <= 0 <= self.phi_p and self.phi_n < self.phi_p):
                raise ValueError(
                    f"ASSC thresholds need phi_n <= 0 <= phi_p with phi_n < phi_p, "
                    f"got phi_n={self.phi_n}, phi_p={self.phi_p}"
                )
            if not self.u_n <= 0 <= self.u_p:
                raise ValueError("ASSC levels need u_n <= 0 <= u_p")
            # the single linear interpolant must also pass through (0, 0)
            at_zero = self.u_n + self.slope * (0.0 - self.phi_n)
            if not math.isclose(at_zero, 0.0, abs_tol=1e-12 * max(1.0, self.u_p - self.u_n)):
                raise ValueError(
                    f"interpolant through (phi_n, u_n) and (phi_p, u_p) gives "
                    f"sigma_c(0)={at_zero:g}, expected 0"
                )
        return self

    @property
    def slope(self) -> float:
        """(u_p - u_n) / (phi_p - phi_n) of the ASSC interpolant."""
        return (self.u_p - self.u_n) / (self.phi_p - self.phi_n)

    @property
    def min_gain(self) -> float:
        if self.kind is ControllerKind.INTEGRAL:
            return float(self.k)
        return float(self.gains.k_lo)


@dataclass(frozen=True, slots=True)
class AgentState:
    phi: float = 0.0
    faulted: bool = False

    def __post_init__(self) -> None:
        if not math.isfinite(self.phi):
            raise ValueError(f"phase must be finite, got {self.phi}")
