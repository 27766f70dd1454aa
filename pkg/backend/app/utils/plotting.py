"""Static SVG figures for a trace: tracking, agent outputs, agent phases."""

from __future__ import annotations

import logging
from typing import TYPE_CHECKING

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from app.utils.exceptions import OutputWriteError  # noqa: E402

if TYPE_CHECKING:
    from pathlib import Path

    import numpy as np
    from matplotlib.axes import Axes

    from app.services.simulation_service import SimTrace

logger = logging.getLogger(__name__)

# agents 1-5 solid, 6 onward dashed
_SOLID_AGENTS = 5
# keep SVG output byte-stable between runs
_SVG_RC = {"svg.hashsalt": "broadcast-tracking", "svg.fonttype": "none"}
# rows beyond this are strided out of the figures
_MAX_POINTS = 20_000


def _stride(trace: SimTrace) -> slice:
    return slice(None, None, max(1, -(-trace.n_rows // _MAX_POINTS)))


def _agent_series(ax: Axes, t: np.ndarray, values: np.ndarray, label: str) -> None:
    for i in range(values.shape[1]):
        style = "-" if i < _SOLID_AGENTS else "--"
        ax.plot(t, values[:, i], linestyle=style, linewidth=0.8, label=f"{label}{i + 1}")
    ax.legend(ncol=2, fontsize="small", loc="best")


def _save(fig: plt.Figure, path: Path) -> Path:
    try:
        fig.savefig(path, format="svg", metadata={"Date": None})
    except OSError as e:
        raise OutputWriteError(str(path), e.strerror or str(e)) from e
    finally:
        plt.close(fig)
    return path


def plot_tracking(trace: SimTrace, path: Path, title: str = "") -> Path:
    with plt.rc_context(_SVG_RC):
        fig, ax = plt.subplots(figsize=(8, 4))
        s = _stride(trace)
        ax.plot(trace.t[s], trace.y_r[s], color="black", linestyle="--", linewidth=1.0, label="y_r")
        ax.plot(trace.t[s], trace.y_p[s], linewidth=1.0, label="y_p")
        ax.set_xlabel("t [s]")
        ax.set_ylabel("output")
        ax.set_title(title or "Plant output vs reference")
        ax.legend(loc="best")
        ax.grid(visible=True, alpha=0.3)
        return _save(fig, path)


def plot_agent_outputs(trace: SimTrace, path: Path, title: str = "") -> Path:
    with plt.rc_context(_SVG_RC):
        fig, ax = plt.subplots(figsize=(8, 4))
        s = _stride(trace)
        _agent_series(ax, trace.t[s], trace.u_agents[s], "u_p")
        ax.set_xlabel("t [s]")
        ax.set_ylabel("u_pi")
        ax.set_title(title or "Agent outputs")
        ax.grid(visible=True, alpha=0.3)
        return _save(fig, path)


def plot_phases(trace: SimTrace, path: Path, title: str = "") -> Path:
    with plt.rc_context(_SVG_RC):
        fig, ax = plt.subplots(figsize=(8, 4))
        s = _stride(trace)
        _agent_series(ax, trace.t[s], trace.phi[s], "phi_")
        ax.set_xlabel("t [s]")
        ax.set_ylabel("phi_i")
        ax.set_title(title or "Agent phases")
        ax.grid(visible=True, alpha=0.3)
        return _save(fig, path)


def render_all(trace: SimTrace, out_dir: Path, name: str) -> dict[str, Path]:
    """Write the three figure families into ``out_dir``."""
    paths = {
        "tracking": plot_tracking(trace, out_dir / "tracking.svg", f"{name}: y_p vs y_r"),
        "agent_outputs": plot_agent_outputs(trace, out_dir / "agent_outputs.svg", f"{name}: u_pi"),
        "phases": plot_phases(trace, out_dir / "phases.svg", f"{name}: phi_i"),
    }
    logger.info("Rendered %d figures for %s", len(paths), name)
    return paths
