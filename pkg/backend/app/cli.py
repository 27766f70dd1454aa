"""Command-line front end.

Exit status: 0 success, 1 usage or configuration error, 2 runtime or
analysis failure.

    python -m app.cli preset asc-cond1 --out runs/asc-cond1
    python -m app.cli simulate --config my.json --out runs/my
    python -m app.cli spr --num 75 4900 --den 1 98 4900
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import TYPE_CHECKING, NoReturn

from pydantic import ValidationError

from app.config import settings
from app.schemas.lti import TransferFunction
from app.schemas.report import BatchStatus, RunSource
from app.services.config_service import describe_validation_error
from app.services.lti_service import spr_test
from app.services.preset_service import PRESETS
from app.services.report_service import BatchJob, run_batch
from app.utils.exceptions import ConfigurationError, RunError

if TYPE_CHECKING:
    from collections.abc import Sequence

    from app.schemas.report import BatchOutcome, RunReport

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _global_options(parser: argparse.ArgumentParser, *, suppress: bool) -> None:
    """Shared flags, accepted before or after the subcommand."""

    def default(value: object) -> object:
        return argparse.SUPPRESS if suppress else value

    parser.add_argument("--dt", type=float, default=default(None), help="override the step size [s]")
    parser.add_argument(
        "--allow-non-spr",
        action="store_true",
        default=default(settings.allow_non_spr),
        help="run plants that fail the strict positive-real test",
    )
    parser.add_argument(
        "--jobs", type=int, default=default(1), help="parallel runs for several configs/presets"
    )
    parser.add_argument(
        "--log-level",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        default=default(settings.log_level),
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="broadcast-tracking", description=__doc__.splitlines()[0])
    _global_options(parser, suppress=False)
    shared = _Parser(add_help=False)
    _global_options(shared, suppress=True)

    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", parents=[shared], help="run JSON config file(s)")
    sim.add_argument("--config", nargs="+", required=True, type=Path, metavar="PATH")
    sim.add_argument("--out", type=Path, default=None, help=f"output directory (default {settings.output_dir}/<name>)")

    pre = sub.add_parser("preset", parents=[shared], help="run named experiment preset(s)")
    pre.add_argument("names", nargs="+", metavar="NAME")
    pre.add_argument("--out", type=Path, default=None)

    spr = sub.add_parser("spr", parents=[shared], help="strict positive-realness test")
    spr.add_argument("--num", nargs="+", type=float, required=True)
    spr.add_argument("--den", nargs="+", type=float, required=True)
    spr.add_argument("--json", action="store_true", help="print the certificate as JSON")

    sub.add_parser("presets", parents=[shared], help="list preset names")
    return parser


# ── Commands ──


def _out_dirs(names: list[str], out: Path | None) -> list[Path]:
    """A single run writes into ``out``; several runs get ``out/<name>``."""
    root = out or Path(settings.output_dir)
    if len(names) == 1 and out is not None:
        return [out]
    seen: dict[str, int] = {}
    dirs = []
    for name in names:
        seen[name] = seen.get(name, 0) + 1
        suffix = f"-{seen[name]}" if seen[name] > 1 else ""
        dirs.append(root / f"{name}{suffix}")
    return dirs


def _print_report(report: RunReport) -> None:
    print(f"{report.name}: {report.rows} rows at dt={report.dt:g}, verdict {report.spr.verdict.value}")
    for w in report.windows:
        print(
            f"  [{w.t_a:g}, {w.t_b:g}] mean y_p={w.mean_yp:.6g} mean e={w.mean_e:.3g} "
            f"std e={w.std_e:.3g}"
        )
    if report.passivity is not None:
        p = report.passivity
        line = f"  passivity: C_u={p.C_u:.12g} max violation={p.max_violation:.3g}"
        if p.equality_residual is not None:
            line += f" equality residual={p.equality_residual:.3g}"
        print(line)
    for check in report.faults:
        state = "output 0" if check.zero_after else "NOT silent"
        print(f"  fault t={check.t:g}: agents {check.agents} {state}")
    for flag in report.flags:
        print(f"  flag: {flag}")
    for key, path in report.files.items():
        print(f"  {key}: {path}")


def _run_jobs(jobs: list[BatchJob], n_jobs: int) -> int:
    outcomes: list[BatchOutcome] = run_batch(jobs, max_workers=min(n_jobs, settings.max_jobs))
    code = EXIT_OK
    for outcome in outcomes:
        if outcome.status is BatchStatus.COMPLETED and outcome.report is not None:
            _print_report(outcome.report)
        else:
            print(f"{outcome.name}: {outcome.error_message}", file=sys.stderr)
        code = max(code, outcome.exit_code)
    return code


def cmd_simulate(args: argparse.Namespace) -> int:
    names = [p.stem for p in args.config]
    jobs = [
        BatchJob(RunSource.CONFIG, str(path), str(out), args.dt, args.allow_non_spr)
        for path, out in zip(args.config, _out_dirs(names, args.out), strict=True)
    ]
    return _run_jobs(jobs, args.jobs)


def cmd_preset(args: argparse.Namespace) -> int:
    unknown = [n for n in args.names if n not in PRESETS]
    if unknown:
        raise ConfigurationError(f"unknown preset(s) {unknown}; choose from {sorted(PRESETS)}")
    jobs = [
        BatchJob(RunSource.PRESET, name, str(out), args.dt, args.allow_non_spr)
        for name, out in zip(args.names, _out_dirs(args.names, args.out), strict=True)
    ]
    return _run_jobs(jobs, args.jobs)


def cmd_spr(args: argparse.Namespace) -> int:
    try:
        tf = TransferFunction(num=tuple(args.num), den=tuple(args.den))
    except ValidationError as e:
        raise ConfigurationError(describe_validation_error(e)) from e
    cert = spr_test(tf)
    if args.json:
        print(cert.model_dump_json(indent=2))
    else:
        print(f"hurwitz: {str(cert.hurwitz).lower()}")
        print(f"relative degree: {cert.relative_degree}")
        print(f"p(x) = {cert.describe_poly()}")
        print(f"min p(x), x >= 0: {cert.min_nonneg_value:.12g}")
        print(f"verdict: {cert.verdict.value}")
        if cert.reason:
            print(f"reason: {cert.reason}")
    return EXIT_OK if cert.is_spr else EXIT_USAGE


def cmd_presets(args: argparse.Namespace) -> int:
    for name, description in PRESETS.items():
        print(f"{name:16s} {description}")
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "preset": cmd_preset,
    "spr": cmd_spr,
    "presets": cmd_presets,
}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=args.log_level, format="%(asctime)s %(levelname)s %(name)s: %(message)s"
    )
    try:
        return COMMANDS[args.command](args)
    except ConfigurationError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except RunError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
