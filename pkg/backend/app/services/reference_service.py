"""Reference signal generation for constant-input reference models."""

from __future__ import annotations

import bisect
import logging
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from app.services.lti_service import StateSpace, rk4_step
from app.utils.exceptions import ReferenceScheduleError, SingularSystemError

if TYPE_CHECKING:
    from app.schemas.lti import TransferFunction
    from app.schemas.reference import ReferenceSchedule

logger = logging.getLogger(__name__)


def steady_state_init(ss: StateSpace, u_r: float) -> np.ndarray:
    """x_r(0) solving A x = -b u_r, so the reference model sits at rest."""
    try:
        return np.linalg.solve(ss.A, -ss.b * u_r)
    except np.linalg.LinAlgError as e:
        raise SingularSystemError(
            "A is singular: a constant reference is not realizable for this plant"
        ) from e


def dc_gain(tf: TransferFunction) -> float:
    den0 = tf.den[-1]
    if den0 == 0:
        raise SingularSystemError("den(0) = 0: integrating plant has no DC gain")
    num0 = tf.num[-1] if len(tf.num) else 0.0
    return num0 / den0


def ur_for_yr(tf: TransferFunction, y_r: float) -> float:
    g0 = dc_gain(tf)
    if g0 == 0:
        raise SingularSystemError("zero DC gain: no constant input reaches a nonzero y_r")
    return y_r / g0


def reference_at(schedule: ReferenceSchedule, t: float) -> float:
    """y_r of the last segment with t_start <= t."""
    if t < schedule.segments[0].t_start:
        raise ReferenceScheduleError(f"t={t} precedes the first reference segment")
    return schedule.segments[segment_index(schedule, t)].y_r


def segment_index(schedule: ReferenceSchedule, t: float) -> int:
    starts = [s.t_start for s in schedule.segments]
    return bisect.bisect_right(starts, t) - 1


@dataclass
class ReferenceModel:
    """x_r' = A x_r + b u_r with the plant's own realization."""

    ss: StateSpace
    u_r: float
    x_r: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if self.x_r is None:
            self.x_r = steady_state_init(self.ss, self.u_r)
            logger.debug("Reference model at rest: u_r=%g, y_r=%g", self.u_r, self.y_r)

    @property
    def y_r(self) -> float:
        return self.ss.output(self.x_r, self.u_r)

    def step(self, dt: float) -> float:
        self.x_r = rk4_step(self.ss, self.x_r, self.u_r, dt)
        return self.y_r
