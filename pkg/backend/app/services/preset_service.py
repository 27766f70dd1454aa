"""Experiment presets: the second-order SPR plant driven by ten agents."""

from __future__ import annotations

import logging
from typing import TYPE_CHECKING

from app.schemas.agent import GainMode, GainSchedule
from app.schemas.config_file import (
    AgentsBlock,
    AnalysisBlock,
    ConfigFile,
    FaultBlock,
    GainsBlock,
    PlantBlock,
    ReferenceBlock,
    SegmentBlock,
)
from app.services.simulation_service import simulate
from app.utils.exceptions import UnknownPresetError

if TYPE_CHECKING:
    from app.schemas.simulation import SimConfig
    from app.services.simulation_service import SimTrace

logger = logging.getLogger(__name__)

BENCH_PLANT_NUM = (75.0, 4900.0)  # β1, β0
BENCH_PLANT_DEN = (1.0, 98.0, 4900.0)  # s² + α1 s + α0
BENCH_M = 10
BENCH_U_P = 3.0
BENCH_U_N = 0.0
BENCH_PHI_P = 0.06
BENCH_DT = 1e-5
BENCH_T_END = 0.4
FAULT_TIME = 0.2
FAULTED_AGENTS = (1, 2, 3, 4, 5)
STAIRCASE_PRESET_ID = "paper-eq16"

PRESETS: dict[str, str] = {
    "asc-cond1": "ASC, two-stage reference 28 -> 10 at t=0.2",
    "asc-cond2": "ASC, constant reference 10, agents 1-5 fail at t=0.2",
    "assc-cond1": "ASSC (phi_p=0.06), two-stage reference 28 -> 10 at t=0.2",
    "integral-cond1": "Saturated integral baseline, two-stage reference 28 -> 10",
}


def staircase_k_lo(i: int) -> float:
    """5(2 - 0.2(i - 1)), written as 10 - (i - 1) to stay exact in binary."""
    return 10.0 - (i - 1)


def staircase_k_hi(i: int) -> float:
    """k_lo(1 + 0.2(i - 1)) = k_lo (i + 4) / 5."""
    return staircase_k_lo(i) * (i + 4) / 5.0


def staircase_gains(m: int = BENCH_M) -> list[GainSchedule]:
    return [
        GainSchedule(k_lo=staircase_k_lo(i), k_hi=staircase_k_hi(i), mode=GainMode.STAIRCASE)
        for i in range(1, m + 1)
    ]


def _condition1() -> ReferenceBlock:
    return ReferenceBlock(
        segments=[SegmentBlock(t_start=0.0, y_r=28.0), SegmentBlock(t_start=0.2, y_r=10.0)]
    )


def _condition2() -> ReferenceBlock:
    return ReferenceBlock(segments=[SegmentBlock(t_start=0.0, y_r=10.0)])


def preset_config_file(name: str, dt: float | None = None) -> ConfigFile:
    """The preset as the JSON-facing config document."""
    if name not in PRESETS:
        raise UnknownPresetError(f"unknown preset '{name}'; choose from {sorted(PRESETS)}")
    kind, condition = name.split("-")

    if kind == "integral":
        gains = GainsBlock(k=[staircase_k_lo(i) for i in range(1, BENCH_M + 1)])
    else:
        gains = GainsBlock(preset=STAIRCASE_PRESET_ID)
    agents = AgentsBlock(
        kind=kind,
        m=BENCH_M,
        u_p=BENCH_U_P,
        u_n=BENCH_U_N,
        phi_p=BENCH_PHI_P if kind == "assc" else None,
        phi_n=0.0 if kind == "assc" else None,
        gains=gains,
    )
    faults = (
        [FaultBlock(t=FAULT_TIME, agents=list(FAULTED_AGENTS))] if condition == "cond2" else None
    )
    return ConfigFile(
        name=name,
        plant=PlantBlock(num=list(BENCH_PLANT_NUM), den=list(BENCH_PLANT_DEN)),
        dt=dt or BENCH_DT,
        t_end=BENCH_T_END,
        reference=_condition2() if condition == "cond2" else _condition1(),
        agents=agents,
        faults=faults,
        analysis=AnalysisBlock(windows=[(0.15, 0.2), (0.35, 0.4)]),
    )


def build_preset(name: str, dt: float | None = None) -> SimConfig:
    from app.services.config_service import resolve_config

    return resolve_config(preset_config_file(name, dt))


def run_preset(name: str, dt: float | None = None) -> SimTrace:
    logger.info("Running preset %s", name)
    return simulate(build_preset(name, dt))
