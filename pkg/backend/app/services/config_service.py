"""Load, validate and resolve run configurations."""

from __future__ import annotations

import logging
from pathlib import Path

from pydantic import ValidationError

from app.config import settings
from app.schemas.agent import AgentParams, ControllerKind, GainMode, GainSchedule
from app.schemas.config_file import AgentsBlock, ConfigFile
from app.schemas.lti import TransferFunction
from app.schemas.reference import ReferenceSchedule, ReferenceSegment
from app.schemas.simulation import AnalysisOptions, FaultEvent, SimConfig
from app.services.lti_service import spr_test
from app.services.preset_service import staircase_gains
from app.services.reference_service import ur_for_yr
from app.utils.exceptions import (
    AgentParamsError,
    ConfigurationError,
    ImproperSystemError,
    InfeasibleReferenceError,
    NonSprPlantError,
)

logger = logging.getLogger(__name__)


def describe_validation_error(e: ValidationError) -> str:
    """One line per failing field, e.g. ``dt: Field required``."""
    parts = []
    for err in e.errors():
        loc = ".".join(str(p) for p in err["loc"]) or "<root>"
        parts.append(f"{loc}: {err['msg']}")
    return "; ".join(parts)


# ── Parsing ──


def parse_config_file(source: str | bytes) -> ConfigFile:
    try:
        return ConfigFile.model_validate_json(source)
    except ValidationError as e:
        raise ConfigurationError(f"invalid config: {describe_validation_error(e)}") from e


def read_config_file(path: str | Path) -> ConfigFile:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigurationError(f"cannot read config {path}: {e.strerror or e}") from e
    return parse_config_file(text)


def load_config(source: str | bytes, *, allow_non_spr: bool | None = None) -> SimConfig:
    """Parse a JSON config and return the fully validated SimConfig."""
    return resolve_config(parse_config_file(source), allow_non_spr=allow_non_spr)


def with_overrides(cfg: ConfigFile, *, dt: float | None = None) -> ConfigFile:
    if dt is None:
        return cfg
    if dt <= 0:
        raise ConfigurationError(f"--dt must be positive, got {dt}")
    return cfg.model_copy(update={"dt": dt})


# ── Resolution ──


def _gain_list(block: AgentsBlock) -> tuple[list[GainSchedule] | None, list[float] | None]:
    gains = block.gains
    m = block.m
    kind = ControllerKind(block.kind)

    if kind is ControllerKind.INTEGRAL:
        if gains.k is None:
            raise AgentParamsError("integral agents take fixed gains: use {\"k\": [...]}")
        _check_length("k", gains.k, m)
        return None, list(gains.k)

    if gains.k is not None:
        raise AgentParamsError(f"fixed gains 'k' only apply to integral agents, not {kind.value}")
    if gains.preset is not None:
        return staircase_gains(m), None

    _check_length("k_lo", gains.k_lo, m)
    if gains.k_hi_factor is not None:
        _check_length("k_hi_factor", gains.k_hi_factor, m)
        pairs = zip(gains.k_lo, gains.k_hi_factor, strict=True)
        return [
            GainSchedule(k_lo=lo, k_hi=lo * f, mode=GainMode.STAIRCASE) for lo, f in pairs
        ], None
    _check_length("k_hi", gains.k_hi, m)
    return [
        GainSchedule(k_lo=lo, k_hi=hi) for lo, hi in zip(gains.k_lo, gains.k_hi, strict=True)
    ], None


def _check_length(field: str, values: list[float], m: int) -> None:
    if len(values) != m:
        raise AgentParamsError(f"gains.{field} has {len(values)} entries, expected m={m}")


def _agents(block: AgentsBlock) -> tuple[AgentParams, ...]:
    schedules, fixed = _gain_list(block)
    kind = ControllerKind(block.kind)
    common = {
        "kind": kind,
        "u_p": block.u_p,
        "u_n": block.u_n,
        "phi_p": block.phi_p or 0.0,
        "phi_n": block.phi_n or 0.0,
    }
    if fixed is not None:
        return tuple(AgentParams(**common, k=k) for k in fixed)
    return tuple(AgentParams(**common, gains=g) for g in schedules)


def check_feasibility(config: SimConfig) -> None:
    """m·u_n <= u_r <= m·u_p (per-agent sums) for every reference segment."""
    for idx, seg in enumerate(config.reference.segments, start=1):
        u_r = ur_for_yr(config.plant, seg.y_r)
        where = f"reference segment {idx} (t_start={seg.t_start:g}, y_r={seg.y_r:g})"
        if u_r > config.u_max:
            raise InfeasibleReferenceError(f"{where}: u_r={u_r:g} > Σu_p={config.u_max:g}")
        if u_r < config.u_min:
            raise InfeasibleReferenceError(f"{where}: u_r={u_r:g} < Σu_n={config.u_min:g}")


def resolve_config(cfg: ConfigFile, *, allow_non_spr: bool | None = None) -> SimConfig:
    """Turn the JSON document into a SimConfig and enforce run preconditions.

    Checks strict properness of the plant, reference feasibility against the
    summed agent bounds, and strict positive realness unless allowed.
    """
    if allow_non_spr is None:
        allow_non_spr = settings.allow_non_spr
    try:
        plant = TransferFunction(num=tuple(cfg.plant.num), den=tuple(cfg.plant.den))
        analysis = (
            AnalysisOptions(
                passivity=cfg.analysis.passivity,
                u_share=cfg.analysis.u_share,
                tol=cfg.analysis.tol,
                windows=tuple(cfg.analysis.windows) if cfg.analysis.windows else None,
            )
            if cfg.analysis is not None
            else AnalysisOptions(tol=settings.passivity_tol)
        )
        config = SimConfig(
            name=cfg.name or "custom",
            plant=plant,
            dt=cfg.dt,
            t_end=cfg.t_end,
            agents=_agents(cfg.agents),
            reference=ReferenceSchedule(
                segments=tuple(
                    ReferenceSegment(t_start=s.t_start, y_r=s.y_r) for s in cfg.reference.segments
                )
            ),
            faults=tuple(
                FaultEvent(t=f.t, agent_indices=tuple(f.agents)) for f in cfg.faults or ()
            ),
            initial_plant_state=(
                tuple(cfg.initial_plant_state) if cfg.initial_plant_state is not None else None
            ),
            fault_freezes_phase=(
                cfg.fault_freezes_phase
                if cfg.fault_freezes_phase is not None
                else settings.fault_freezes_phase
            ),
            analysis=analysis,
        )
    except ValidationError as e:
        raise ConfigurationError(f"invalid config: {describe_validation_error(e)}") from e

    if not config.plant.is_strictly_proper:
        raise ImproperSystemError(
            "plant must be strictly proper (d = 0) to close the loop; "
            f"num={list(config.plant.num)}, den={list(config.plant.den)}"
        )
    check_feasibility(config)

    certificate = spr_test(config.plant)
    if not certificate.is_spr:
        if not allow_non_spr:
            raise NonSprPlantError(certificate)
        logger.warning("Plant is %s; continuing (allow_non_spr)", certificate.verdict.value)
    return config
