"""Closed-loop engine: broadcast e, sum agent outputs into u_p, integrate the plant."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from app.schemas.agent import AgentState
from app.services.agent_service import agent_output, agent_step
from app.services.lti_service import rk4_step, tf_to_statespace
from app.services.reference_service import reference_at
from app.utils.exceptions import ImproperSystemError

if TYPE_CHECKING:
    from app.schemas.simulation import SimConfig

logger = logging.getLogger(__name__)

# tick times are k*dt rounded so that switch instants land on their own tick
_TIME_DECIMALS = 12


def tick_time(k: int, dt: float) -> float:
    return round(k * dt, _TIME_DECIMALS)


@dataclass(eq=False)
class SimTrace:
    dt: float
    t: np.ndarray
    y_r: np.ndarray
    y_p: np.ndarray
    e: np.ndarray
    u_p: np.ndarray
    u_agents: np.ndarray  # rows x m
    phi: np.ndarray  # rows x m

    @property
    def n_rows(self) -> int:
        return self.t.size

    @property
    def m(self) -> int:
        return self.u_agents.shape[1]

    def window(self, t_a: float, t_b: float) -> np.ndarray:
        """Boolean row mask for t_a <= t <= t_b."""
        return (self.t >= t_a - 1e-12) & (self.t <= t_b + 1e-12)

    def columns(self) -> list[str]:
        agents = range(1, self.m + 1)
        return [
            "t", "y_r", "y_p", "e", "u_p",
            *(f"u_p_{i}" for i in agents),
            *(f"phi_{i}" for i in agents),
        ]

    def as_matrix(self) -> np.ndarray:
        return np.column_stack(
            [self.t, self.y_r, self.y_p, self.e, self.u_p, self.u_agents, self.phi]
        )

    @classmethod
    def from_matrix(cls, data: np.ndarray, dt: float) -> SimTrace:
        m = (data.shape[1] - 5) // 2
        return cls(
            dt=dt,
            t=data[:, 0].copy(),
            y_r=data[:, 1].copy(),
            y_p=data[:, 2].copy(),
            e=data[:, 3].copy(),
            u_p=data[:, 4].copy(),
            u_agents=data[:, 5 : 5 + m].copy(),
            phi=data[:, 5 + m :].copy(),
        )


def simulate(config: SimConfig) -> SimTrace:
    """Run the sampled closed loop tick by tick.

    Per tick: read y_r and y_p, broadcast e, read agent outputs (fault mask
    applied), log the row, advance the phases by Euler and the plant by RK4
    with u_p held over the step.
    """
    if not config.plant.is_strictly_proper:
        raise ImproperSystemError(
            "simulation needs a strictly proper plant (d = 0); got relative degree 0"
        )
    ss = tf_to_statespace(config.plant)
    m = config.m
    n_rows = config.n_rows
    dt = config.dt
    params = config.agents

    x = (
        np.asarray(config.initial_plant_state, dtype=float)
        if config.initial_plant_state is not None
        else np.zeros(ss.n)
    )
    states = [AgentState() for _ in range(m)]
    faults = sorted(config.faults, key=lambda f: f.t)
    next_fault = 0

    t_col = np.empty(n_rows)
    yr_col = np.empty(n_rows)
    yp_col = np.empty(n_rows)
    e_col = np.empty(n_rows)
    up_col = np.empty(n_rows)
    u_agents = np.empty((n_rows, m))
    phi = np.empty((n_rows, m))

    logger.info(
        "Simulating %s: m=%d, dt=%g, t_end=%g (%d rows)",
        config.name, m, dt, config.t_end, n_rows,
    )
    for k in range(n_rows):
        t = tick_time(k, dt)
        while next_fault < len(faults) and t >= faults[next_fault].t:
            for i in faults[next_fault].agent_indices:
                states[i - 1] = AgentState(phi=states[i - 1].phi, faulted=True)
            logger.info("Fault at t=%g: agents %s output 0", t, list(faults[next_fault].agent_indices))
            next_fault += 1

        y_r = reference_at(config.reference, t)
        y_p = float(ss.c @ x)
        e = y_r - y_p
        outputs = [agent_output(s, p) for s, p in zip(states, params, strict=True)]
        u_p = sum(outputs)

        t_col[k] = t
        yr_col[k] = y_r
        yp_col[k] = y_p
        e_col[k] = e
        up_col[k] = u_p
        u_agents[k] = outputs
        phi[k] = [s.phi for s in states]

        states = [
            s if (s.faulted and config.fault_freezes_phase) else agent_step(s, p, e, dt)
            for s, p in zip(states, params, strict=True)
        ]
        x = rk4_step(ss, x, u_p, dt)

    logger.info("Simulation %s finished: final y_p=%.6g", config.name, yp_col[-1])
    return SimTrace(
        dt=dt, t=t_col, y_r=yr_col, y_p=yp_col, e=e_col, u_p=up_col,
        u_agents=u_agents, phi=phi,
    )
