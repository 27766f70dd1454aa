"""Run orchestration: simulate, analyse, and write trace/report/figures."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Any

from app.schemas.report import BatchOutcome, BatchStatus, RunReport, RunSource, WindowRoles
from app.services import analysis_service
from app.services.config_service import read_config_file, resolve_config, with_overrides
from app.services.lti_service import spr_test
from app.services.preset_service import preset_config_file
from app.services.simulation_service import simulate
from app.utils.exceptions import AnalysisError, ConfigurationError, RunError
from app.utils.file_handling import (
    staged_output,
    write_json,
    write_json_document,
    write_trace_csv,
)
from app.utils.plotting import render_all

if TYPE_CHECKING:
    from app.schemas.config_file import ConfigFile
    from app.schemas.simulation import SimConfig
    from app.services.simulation_service import SimTrace

logger = logging.getLogger(__name__)

TRACE_FILE = "trace.csv"
REPORT_FILE = "report.json"
REPORT_SCHEMA_FILE = "report.schema.json"
CONFIG_FILE = "config.json"


# ── In-memory report ──


def build_report(
    cfg: ConfigFile,
    config: SimConfig,
    trace: SimTrace,
    *,
    source: RunSource = RunSource.CONFIG,
    preset: str | None = None,
) -> RunReport:
    """Tracking windows, role statistics, passivity summary and checks for one run."""
    windows = list(config.analysis.windows or analysis_service.default_windows(config.reference, config.t_end))
    try:
        metrics = [analysis_service.tracking_metrics(trace, w) for w in windows]
        roles = [
            WindowRoles(t_a=a, t_b=b, agents=analysis_service.role_fractions(trace, config.agents, (a, b)))
            for a, b in windows
        ]
        passivity = (
            analysis_service.passivity_check(trace, config).summary()
            if config.analysis.passivity
            else None
        )
    except ConfigurationError as e:
        raise AnalysisError(f"analysis of {config.name} failed: {e}") from e

    segments = analysis_service.reference_reached(trace, config.reference)
    faults = analysis_service.fault_check(trace, config.faults)

    flags = [f"reference not reached in segment {s.index}" for s in segments if not s.reached]
    flags.extend(
        f"agents {f.agents} did not output 0 after t={f.t:g}" for f in faults if not f.zero_after
    )
    for flag in flags:
        logger.warning("%s: %s", config.name, flag)

    return RunReport(
        name=config.name,
        source=source,
        preset=preset,
        dt=config.dt,
        t_end=config.t_end,
        rows=trace.n_rows,
        spr=spr_test(config.plant),
        windows=metrics,
        roles=roles,
        passivity=passivity,
        segments=segments,
        faults=faults,
        flags=flags,
        config=cfg,
    )


def preset_report(name: str, dt: float | None = None) -> RunReport:
    cfg = preset_config_file(name, dt)
    config = resolve_config(cfg)
    return build_report(cfg, config, simulate(config), source=RunSource.PRESET, preset=name)


def report_schema() -> dict[str, Any]:
    """JSON Schema every report.json validates against."""
    return RunReport.model_json_schema()


# ── Runs with output files ──


def run_to_directory(
    cfg: ConfigFile,
    out_dir: Path,
    *,
    source: RunSource = RunSource.CONFIG,
    preset: str | None = None,
    allow_non_spr: bool | None = None,
) -> RunReport:
    """Simulate ``cfg`` and publish trace, figures and report into ``out_dir``.

    Files appear in ``out_dir`` only once all of them were written.
    """
    config = resolve_config(cfg, allow_non_spr=allow_non_spr)
    trace = simulate(config)
    report = build_report(cfg, config, trace, source=source, preset=preset)

    out_dir = Path(out_dir).resolve()
    files = {"trace": TRACE_FILE, "report": REPORT_FILE, "report_schema": REPORT_SCHEMA_FILE}
    with staged_output(out_dir) as staging:
        write_trace_csv(trace, staging / TRACE_FILE)
        write_json_document(report_schema(), staging / REPORT_SCHEMA_FILE)
        if source is RunSource.PRESET:
            write_json(cfg, staging / CONFIG_FILE)
            files["config"] = CONFIG_FILE
        for key, path in render_all(trace, staging, config.name).items():
            files[key] = path.name
        report.files = {key: str(out_dir / name) for key, name in files.items()}
        write_json(report, staging / REPORT_FILE)

    logger.info("%s: wrote %d files to %s", config.name, len(files), out_dir)
    return report


def cmd_simulate(
    config_path: str | Path,
    out_dir: str | Path,
    *,
    dt: float | None = None,
    allow_non_spr: bool | None = None,
) -> RunReport:
    cfg = with_overrides(read_config_file(config_path), dt=dt)
    return run_to_directory(cfg, Path(out_dir), allow_non_spr=allow_non_spr)


def cmd_preset(
    name: str,
    out_dir: str | Path,
    *,
    dt: float | None = None,
    allow_non_spr: bool | None = None,
) -> RunReport:
    cfg = preset_config_file(name, dt)
    return run_to_directory(
        cfg, Path(out_dir), source=RunSource.PRESET, preset=name, allow_non_spr=allow_non_spr
    )


# ── Batches ──


@dataclass(frozen=True)
class BatchJob:
    """One simulate/preset invocation; picklable for the process pool."""

    kind: RunSource
    target: str
    out_dir: str
    dt: float | None = None
    allow_non_spr: bool | None = None

    @property
    def name(self) -> str:
        return self.target if self.kind is RunSource.PRESET else Path(self.target).stem


def run_job(job: BatchJob) -> BatchOutcome:
    """Run one job, recording failures instead of raising."""
    try:
        if job.kind is RunSource.PRESET:
            report = cmd_preset(job.target, job.out_dir, dt=job.dt, allow_non_spr=job.allow_non_spr)
        else:
            report = cmd_simulate(job.target, job.out_dir, dt=job.dt, allow_non_spr=job.allow_non_spr)
    except ConfigurationError as e:
        logger.error("%s rejected: %s", job.name, e)
        return BatchOutcome(name=job.name, status=BatchStatus.FAILED, exit_code=1, error_message=str(e))
    except RunError as e:
        logger.error("%s failed: %s", job.name, e)
        return BatchOutcome(name=job.name, status=BatchStatus.FAILED, exit_code=2, error_message=str(e))
    except Exception as e:
        logger.exception("%s failed unexpectedly", job.name)
        return BatchOutcome(name=job.name, status=BatchStatus.FAILED, exit_code=2, error_message=str(e))
    return BatchOutcome(
        name=job.name, status=BatchStatus.COMPLETED, out_dir=job.out_dir, report=report
    )


def run_batch(jobs: list[BatchJob], max_workers: int = 1) -> list[BatchOutcome]:
    """Run independent jobs, in a process pool when ``max_workers`` > 1.

    Outcomes come back in job order.
    """
    if max_workers <= 1 or len(jobs) <= 1:
        return [run_job(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=min(max_workers, len(jobs))) as pool:
        return list(pool.map(run_job, jobs))
