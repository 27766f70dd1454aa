from __future__ import annotations

import contextlib
import csv
import json
import logging
import os
import shutil
import tempfile
from pathlib import Path
from typing import TYPE_CHECKING, Any

import numpy as np

from app.config import settings
from app.services.simulation_service import SimTrace
from app.utils.exceptions import OutputWriteError

if TYPE_CHECKING:
    from collections.abc import Iterator

    from pydantic import BaseModel

logger = logging.getLogger(__name__)


def format_value(x: float, digits: int | None = None) -> str:
    return f"{x:.{digits or settings.csv_significant_digits}g}"


def write_trace_csv(trace: SimTrace, path: Path, digits: int | None = None) -> Path:
    """One row per tick, LF line endings; 17 significant digits round-trip exactly."""
    digits = digits or settings.csv_significant_digits
    data = trace.as_matrix()
    try:
        with path.open("w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(trace.columns())
            writer.writerows([format_value(x, digits) for x in row] for row in data.tolist())
    except OSError as e:
        raise OutputWriteError(str(path), e.strerror or str(e)) from e
    return path


def read_trace_csv(path: Path, dt: float) -> SimTrace:
    with path.open(newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader)
        rows = [[float(x) for x in row] for row in reader]
    data = np.array(rows, dtype=float).reshape(len(rows), len(header))
    return SimTrace.from_matrix(data, dt)


def write_json(model: BaseModel, path: Path) -> Path:
    try:
        path.write_text(model.model_dump_json(indent=2) + "\n", encoding="utf-8")
    except OSError as e:
        raise OutputWriteError(str(path), e.strerror or str(e)) from e
    return path


def write_json_document(data: dict[str, Any], path: Path) -> Path:
    try:
        path.write_text(json.dumps(data, indent=2) + "\n", encoding="utf-8")
    except OSError as e:
        raise OutputWriteError(str(path), e.strerror or str(e)) from e
    return path


def _publish(staging: Path, out_dir: Path) -> None:
    """Move staged files into ``out_dir``; on failure restore what was there."""
    if not out_dir.exists():
        staging.rename(out_dir)
        return
    backup = Path(tempfile.mkdtemp(prefix=f".{out_dir.name}-previous-", dir=out_dir.parent))
    # (published path, where its previous version was parked)
    placed: list[tuple[Path, Path | None]] = []
    try:
        for item in sorted(staging.iterdir()):
            target = out_dir / item.name
            parked = None
            if target.exists():
                parked = backup / item.name
                os.replace(target, parked)
            placed.append((target, parked))
            os.replace(item, target)
    except OSError:
        for target, parked in reversed(placed):
            target.unlink(missing_ok=True)
            if parked is not None:
                os.replace(parked, target)
        raise
    finally:
        shutil.rmtree(backup, ignore_errors=True)


@contextlib.contextmanager
def staged_output(out_dir: Path) -> Iterator[Path]:
    """Yield a scratch directory whose files land in ``out_dir`` only on success.

    On any failure the scratch directory is removed and ``out_dir`` is left as
    it was.
    """
    out_dir = out_dir.resolve()
    try:
        out_dir.parent.mkdir(parents=True, exist_ok=True)
        staging = Path(tempfile.mkdtemp(prefix=f".{out_dir.name}-staging-", dir=out_dir.parent))
    except OSError as e:
        raise OutputWriteError(str(out_dir), e.strerror or str(e)) from e

    try:
        yield staging
        _publish(staging, out_dir)
    except OSError as e:
        raise OutputWriteError(str(out_dir), e.strerror or str(e)) from e
    finally:
        shutil.rmtree(staging, ignore_errors=True)
    logger.info("Wrote outputs to %s", out_dir)
