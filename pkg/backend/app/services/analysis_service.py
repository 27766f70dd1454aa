"""Storage functions, dissipation checks and tracking statistics over traces."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from app.schemas.agent import AgentParams, ControllerKind
from app.schemas.analysis import (
    FaultCheck,
    PassivitySummary,
    RoleFraction,
    SegmentCheck,
    ShareVector,
    TrackingMetrics,
)
from app.services.agent_service import assc_output
from app.services.reference_service import segment_index, ur_for_yr
from app.utils.exceptions import (
    AnalysisError,
    ControllerKindError,
    InfeasibleReferenceError,
    KhBoundError,
    ShareRangeError,
)

if TYPE_CHECKING:
    from collections.abc import Sequence

    from app.schemas.reference import ReferenceSchedule
    from app.schemas.simulation import FaultEvent, SimConfig
    from app.services.simulation_service import SimTrace

logger = logging.getLogger(__name__)

ArrayLike = float | np.ndarray


def _out(x: np.ndarray) -> ArrayLike:
    """Plain float for scalar input, array otherwise."""
    return float(x) if np.ndim(x) == 0 else x


# ── Shares of u_r ──


def _water_fill(u_r: float, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Clamp a common level λ into every [lo_i, hi_i] so the clamped sum is u_r."""
    breaks = np.unique(np.concatenate([lo, hi]))
    totals = np.array([np.clip(b, lo, hi).sum() for b in breaks])
    j = int(np.searchsorted(totals, u_r, side="left"))
    if j == 0:
        level = breaks[0]
    else:
        f0, f1 = totals[j - 1], totals[j]
        b0, b1 = breaks[j - 1], breaks[j]
        level = b0 if f1 == f0 else b0 + (u_r - f0) * (b1 - b0) / (f1 - f0)
    return np.clip(level, lo, hi)


def u_share(
    u_r: float, params: Sequence[AgentParams], healthy: Sequence[bool] | None = None
) -> ShareVector:
    """Split u_r over the healthy agents; faulted agents get share 0.

    Equal split when it fits every agent's [u_n, u_p], otherwise a
    water-filling clamp that keeps the sum.
    """
    m = len(params)
    healthy = [True] * m if healthy is None else list(healthy)
    active = [i for i in range(m) if healthy[i]]
    lo = np.array([params[i].u_n for i in active])
    hi = np.array([params[i].u_p for i in active])
    if not active or u_r > hi.sum() or u_r < lo.sum():
        raise InfeasibleReferenceError(
            f"u_r={u_r:g} outside [Σu_n={lo.sum():g}, Σu_p={hi.sum():g}] "
            f"of the {len(active)} healthy agents"
        )

    equal = u_r / len(active)
    if np.all((lo <= equal) & (equal <= hi)):
        values = [equal] * len(active)
    else:
        values = _water_fill(u_r, lo, hi).tolist()
        logger.debug("Equal split %g infeasible, water-filled shares %s", equal, values)

    shares = [0.0] * m
    for i, v in zip(active, values, strict=True):
        shares[i] = float(v)
    return ShareVector(u_r=u_r, u_ri=tuple(shares))


def _check_share(params: AgentParams, u_ri: float) -> None:
    if not params.u_n <= u_ri <= params.u_p:
        raise ShareRangeError(f"u_ri={u_ri:g} outside [u_n={params.u_n:g}, u_p={params.u_p:g}]")


def _check_assc(params: AgentParams) -> None:
    if params.kind is not ControllerKind.ASSC:
        raise ControllerKindError(f"expected an ASSC agent, got {params.kind.value}")


# ── ASC ──


def asc_storage(phi: ArrayLike, params: AgentParams, u_ri: float, L: float) -> ArrayLike:
    """∫₀^φ (σ(x) - u_ri)/L dx for the two-level σ; nonnegative for u_ri in [u_n, u_p]."""
    _check_share(params, u_ri)
    phi = np.asarray(phi, dtype=float)
    level = np.where(phi >= 0, params.u_p, params.u_n)
    return _out((level - u_ri) * phi / L)


# ── ASSC ──


def sigma_inverse(params: AgentParams, u: float) -> float:
    _check_assc(params)
    return params.phi_n + (u - params.u_n) / params.slope


def sigma_integral(phi: ArrayLike, params: AgentParams) -> ArrayLike:
    """∫₀^φ σ_c(x) dx for the saturated linear interpolant."""
    x = np.asarray(phi, dtype=float)

    def from_phi_n(x: np.ndarray) -> np.ndarray:
        w = np.clip(x, params.phi_n, params.phi_p) - params.phi_n
        return (
            params.u_n * w
            + 0.5 * params.slope * w * w
            + params.u_n * np.minimum(x - params.phi_n, 0.0)
            + params.u_p * np.maximum(x - params.phi_p, 0.0)
        )

    return _out(from_phi_n(x) - from_phi_n(np.float64(0.0)))


def clipped_reference(phi: ArrayLike, params: AgentParams, u_ri: float) -> ArrayLike:
    """ũ_ri(φ): u_ri on the far side of σ⁻¹(u_ri), σ(φ) elsewhere."""
    _check_assc(params)
    _check_share(params, u_ri)
    x = np.asarray(phi, dtype=float)
    pivot = sigma_inverse(params, u_ri)
    clipped = x >= pivot if u_ri > 0 else x <= pivot
    sigma = np.vectorize(lambda p: assc_output(p, params), otypes=[float])(x)
    return _out(np.where(clipped, u_ri, sigma))


def assc_storage(phi: ArrayLike, params: AgentParams, u_ri: float, L: float) -> ArrayLike:
    """∫₀^φ (σ(x) - ũ_ri(x))/L dx, piecewise quadratic in φ and never negative."""
    _check_assc(params)
    _check_share(params, u_ri)
    x = np.asarray(phi, dtype=float)
    pivot = sigma_inverse(params, u_ri)
    # integrand vanishes between 0 and the pivot
    active = x > pivot if u_ri > 0 else x < pivot
    value = (
        np.asarray(sigma_integral(x, params))
        - sigma_integral(pivot, params)
        - u_ri * (x - pivot)
    ) / L
    # the integrand is one-signed past the pivot; clamp round-off below zero
    return _out(np.where(active, np.maximum(value, 0.0), 0.0))


def vui(phi: ArrayLike, params: AgentParams, u_ri: float) -> ArrayLike:
    """∫₀^φ (u_ri - ũ_ri(x)) dx. Negative for φ < 0 when u_ri > 0."""
    _check_assc(params)
    _check_share(params, u_ri)
    x = np.asarray(phi, dtype=float)
    pivot = sigma_inverse(params, u_ri)
    c = np.minimum(x, pivot) if u_ri > 0 else np.maximum(x, pivot)
    return _out(u_ri * c - np.asarray(sigma_integral(c, params)))


def delta_u_rm(params: Sequence[AgentParams]) -> float:
    return max(p.u_p - p.u_n for p in params)


def phi_m(params: Sequence[AgentParams]) -> float:
    return max(max(abs(p.phi_p), abs(p.phi_n)) for p in params)


def required_kh(params: Sequence[AgentParams]) -> float:
    """Smallest kh with 1/K_i <= kh for every reachable gain."""
    return 1.0 / min(p.min_gain for p in params)


def cu_bound(params: Sequence[AgentParams], kh: float) -> float:
    """C_u = m·kh·Δu_rm·φ_m."""
    required = required_kh(params)
    if kh < required:
        raise KhBoundError(kh, required)
    return len(params) * kh * delta_u_rm(params) * phi_m(params)


# ── Integral controller ──


def integral_storage(u_pi: Sequence[float], u_r: float, gains: Sequence[float]) -> float:
    """(Σu_pi - u_r)² / (2·ΣK_i)."""
    k_s = sum(gains)
    if k_s <= 0 or any(k <= 0 for k in gains):
        raise ValueError("integral gains must be positive")
    return (sum(u_pi) - u_r) ** 2 / (2.0 * k_s)


def saturated_integral_storage(
    phi: ArrayLike, params: AgentParams, u_ri: float, L: float
) -> ArrayLike:
    """∫_{u_ri}^φ (clamp(x) - u_ri)/L dx.

    Stays exact under the output clamp; off saturation it is
    (φ - u_ri)²/(2L). With L_i = K_i and φ_i - u_ri proportional to K_i the
    sum over agents equals integral_storage.
    """
    _check_share(params, u_ri)
    x = np.asarray(phi, dtype=float)
    a, b = params.u_n, params.u_p
    inside = 0.5 * (np.clip(x, a, b) - u_ri) ** 2
    below = (a - u_ri) * np.minimum(x - a, 0.0)
    above = (b - u_ri) * np.maximum(x - b, 0.0)
    return _out((inside + below + above) / L)


# ── Passivity along a trace ──


@dataclass(frozen=True)
class AnalysisSegment:
    """Rows [k0, k1) with constant u_r and a fixed set of healthy agents."""

    t_start: float
    k0: int
    k1: int
    u_r: float
    healthy: tuple[bool, ...]
    shares: ShareVector


@dataclass(eq=False)
class PassivityReport:
    kind: ControllerKind
    L: list[float]
    segments: list[AnalysisSegment]
    V_c: np.ndarray
    V_ci: np.ndarray  # rows x m, 0 for faulted agents
    v: np.ndarray
    supply: np.ndarray  # cumulative trapezoid of v·e from t=0
    margin: np.ndarray  # V_c - V_c(k0) - supply over the segment - C_u
    C_u: float
    max_violation: float
    tol: float
    equality_residual: float | None = None
    unsaturated_steps: int | None = None
    vui_max: float | None = None
    vui_bound: float | None = None

    @property
    def C_Vu(self) -> float:
        return float(self.V_c[0]) + self.C_u

    @property
    def within_tol(self) -> bool:
        ok = self.max_violation <= self.tol
        if self.equality_residual is not None:
            ok = ok and self.equality_residual <= self.tol
        return ok

    def summary(self) -> PassivitySummary:
        return PassivitySummary(
            kind=self.kind.value,
            segments=len(self.segments),
            L=self.L,
            C_u=self.C_u,
            C_Vu=self.C_Vu,
            max_violation=self.max_violation,
            tol=self.tol,
            within_tol=self.within_tol,
            equality_residual=self.equality_residual,
            unsaturated_steps=self.unsaturated_steps,
            vui_max=self.vui_max,
            vui_bound=self.vui_bound,
        )


def analysis_segments(trace: SimTrace, config: SimConfig) -> list[AnalysisSegment]:
    """Split the trace at reference switches and fault instants."""
    starts = {s.t_start for s in config.reference.segments}
    starts.update(f.t for f in config.faults)
    starts = sorted(t for t in starts if t <= trace.t[-1])
    if not starts or starts[0] > 0:
        starts.insert(0, 0.0)

    segments = []
    row_starts = [int(np.searchsorted(trace.t, t, side="left")) for t in starts]
    bounds = zip(starts, row_starts, [*row_starts[1:], trace.n_rows], strict=True)
    for t_start, k0, k1 in bounds:
        if k1 <= k0:
            continue
        t0 = float(trace.t[k0])
        faulted = {i for f in config.faults if f.t <= t0 for i in f.agent_indices}
        healthy = tuple(i + 1 not in faulted for i in range(config.m))
        seg_ref = config.reference.segments[segment_index(config.reference, t0)]
        u_r = ur_for_yr(config.plant, seg_ref.y_r)
        segments.append(
            AnalysisSegment(
                t_start=t_start,
                k0=k0,
                k1=k1,
                u_r=u_r,
                healthy=healthy,
                shares=u_share(u_r, config.agents, healthy),
            )
        )
    return segments


def _agent_storage(
    phi: np.ndarray, params: AgentParams, u_ri: float, L: float
) -> np.ndarray:
    if params.kind is ControllerKind.ASC:
        return asc_storage(phi, params, u_ri, L)
    if params.kind is ControllerKind.ASSC:
        return assc_storage(phi, params, u_ri, L)
    return saturated_integral_storage(phi, params, u_ri, L)


def default_storage_gains(config: SimConfig) -> list[float]:
    """L_i = k_lo_i for switching agents, the fixed K_i for integral ones."""
    return [p.min_gain for p in config.agents]


def passivity_check(
    trace: SimTrace,
    config: SimConfig,
    L: Sequence[float] | None = None,
    tol: float | None = None,
) -> PassivityReport:
    """Evaluate storage V_c, supply ∫v·e and the dissipation margin along a trace.

    V_c is re-based at every segment start, so the margin at row k of a
    segment is V_c(k) - V_c(k0) - ∫_{k0}^{k} v e dt - C_u. For the integral
    controller the per-step equality residual on unsaturated steps is also
    reported.
    """
    if trace.m != config.m or trace.n_rows != config.n_rows or trace.dt != config.dt:
        raise AnalysisError(
            f"trace ({trace.n_rows} rows, m={trace.m}, dt={trace.dt:g}) does not come from "
            f"config {config.name!r} ({config.n_rows} rows, m={config.m}, dt={config.dt:g})"
        )
    kinds = {p.kind for p in config.agents}
    if len(kinds) != 1:
        raise AnalysisError("passivity check needs a single controller kind across agents")
    kind = kinds.pop()
    L = list(default_storage_gains(config) if L is None else L)
    if len(L) != config.m or any(x <= 0 for x in L):
        raise AnalysisError(f"need {config.m} positive storage gains L_i, got {L}")
    tol = config.analysis.tol if tol is None else tol

    segments = analysis_segments(trace, config)
    n = trace.n_rows
    V_ci = np.zeros((n, config.m))
    v = np.empty(n)
    for seg in segments:
        rows = slice(seg.k0, seg.k1)
        v[rows] = trace.u_p[rows] - seg.u_r
        for i, p in enumerate(config.agents):
            if seg.healthy[i]:
                V_ci[rows, i] = _agent_storage(trace.phi[rows, i], p, seg.shares.u_ri[i], L[i])
    V_c = V_ci.sum(axis=1)

    ve = v * trace.e
    supply = np.concatenate([[0.0], np.cumsum(0.5 * trace.dt * (ve[:-1] + ve[1:]))])

    C_u = cu_bound(config.agents, required_kh(config.agents)) if kind is ControllerKind.ASSC else 0.0
    margin = np.empty(n)
    for seg in segments:
        rows = slice(seg.k0, seg.k1)
        margin[rows] = (V_c[rows] - V_c[seg.k0]) - (supply[rows] - supply[seg.k0]) - C_u
    max_violation = float(margin.max())

    report = PassivityReport(
        kind=kind,
        L=L,
        segments=segments,
        V_c=V_c,
        V_ci=V_ci,
        v=v,
        supply=supply,
        margin=margin,
        C_u=C_u,
        max_violation=max_violation,
        tol=tol,
    )
    if kind is ControllerKind.INTEGRAL:
        report.equality_residual, report.unsaturated_steps = _integral_residual(
            trace, config, segments, V_c, v
        )
    elif kind is ControllerKind.ASSC:
        report.vui_max = _vui_max(trace, config, segments)
        report.vui_bound = delta_u_rm(config.agents) * phi_m(config.agents)

    logger.info(
        "Passivity %s: C_u=%g, max_violation=%.3g over %d segment(s)",
        config.name, C_u, max_violation, len(segments),
    )
    return report


def _integral_residual(
    trace: SimTrace,
    config: SimConfig,
    segments: list[AnalysisSegment],
    V_c: np.ndarray,
    v: np.ndarray,
) -> tuple[float | None, int]:
    """max |ΔV_c - e_k·(v_k + v_{k+1})·dt/2| over steps with every healthy agent off saturation.

    Agents integrate e held over the tick, so this is the supply delivered to
    them over one step; the quadratic storage matches it up to round-off.
    """
    u_n = np.array([p.u_n for p in config.agents])
    u_p = np.array([p.u_p for p in config.agents])
    free = (trace.phi > u_n) & (trace.phi < u_p)
    worst: float | None = None
    count = 0
    for seg in segments:
        mask = np.array(seg.healthy)
        rows_free = free[seg.k0 : seg.k1][:, mask].all(axis=1)
        step_ok = rows_free[:-1] & rows_free[1:]
        if not step_ok.any():
            continue
        dV = np.diff(V_c[seg.k0 : seg.k1])
        e = trace.e[seg.k0 : seg.k1 - 1]
        dS = 0.5 * trace.dt * e * (v[seg.k0 : seg.k1 - 1] + v[seg.k0 + 1 : seg.k1])
        resid = np.abs(dV - dS)[step_ok]
        count += int(step_ok.sum())
        worst = max(worst or 0.0, float(resid.max()))
    return worst, count


def _vui_max(trace: SimTrace, config: SimConfig, segments: list[AnalysisSegment]) -> float:
    best = -np.inf
    for seg in segments:
        for i, p in enumerate(config.agents):
            if seg.healthy[i]:
                vals = vui(trace.phi[seg.k0 : seg.k1, i], p, seg.shares.u_ri[i])
                best = max(best, float(np.max(vals)))
    return float(best)


# ── Tracking statistics ──


def tracking_metrics(trace: SimTrace, window: tuple[float, float]) -> TrackingMetrics:
    t_a, t_b = window
    if not t_a < t_b:
        raise AnalysisError(f"window [{t_a}, {t_b}] is empty")
    mask = trace.window(t_a, t_b)
    if not mask.any():
        raise AnalysisError(
            f"window [{t_a}, {t_b}] holds no samples of the trace "
            f"[{trace.t[0]:g}, {trace.t[-1]:g}]"
        )
    e = trace.e[mask]
    return TrackingMetrics(
        t_a=t_a,
        t_b=t_b,
        n_samples=int(mask.sum()),
        mean_e=float(e.mean()),
        rms_e=float(np.sqrt(np.mean(e * e))),
        std_e=float(e.std()),
        max_abs_e=float(np.abs(e).max()),
        mean_yp=float(trace.y_p[mask].mean()),
    )


def default_windows(schedule: ReferenceSchedule, t_end: float) -> list[tuple[float, float]]:
    """Last quarter of every reference segment."""
    return [(b - 0.25 * (b - a), b) for a, b in schedule.bounds(t_end)]


def role_fractions(
    trace: SimTrace, params: Sequence[AgentParams], window: tuple[float, float]
) -> list[RoleFraction]:
    mask = trace.window(*window)
    n = int(mask.sum())
    if n == 0:
        raise AnalysisError(f"window {window} holds no samples")
    out = []
    for i, p in enumerate(params):
        u = trace.u_agents[mask, i]
        at_p = int(np.count_nonzero(u == p.u_p))
        at_n = int(np.count_nonzero(u == p.u_n))
        out.append(
            RoleFraction(agent=i + 1, at_u_p=at_p / n, at_u_n=at_n / n, between=(n - at_p - at_n) / n)
        )
    return out


def reference_reached(trace: SimTrace, schedule: ReferenceSchedule) -> list[SegmentCheck]:
    """Whether y_p got to y_r inside each segment, approaching from either side."""
    checks = []
    t_end = float(trace.t[-1])
    for idx, ((a, b), seg) in enumerate(
        zip(schedule.bounds(t_end), schedule.segments, strict=True), start=1
    ):
        k0 = int(np.searchsorted(trace.t, a, side="left"))
        k1 = int(np.searchsorted(trace.t, b, side="left")) if idx < len(schedule.segments) else trace.n_rows
        if k1 <= k0:
            continue
        y = trace.y_p[k0:k1]
        from_below = y[0] <= seg.y_r
        closest = float(y.max() if from_below else y.min())
        reached = closest >= seg.y_r if from_below else closest <= seg.y_r
        checks.append(
            SegmentCheck(index=idx, t_start=a, t_end=b, y_r=seg.y_r, reached=bool(reached), closest_y_p=closest)
        )
    return checks


def fault_check(trace: SimTrace, faults: Sequence[FaultEvent]) -> list[FaultCheck]:
    out = []
    for fault in faults:
        rows = trace.t >= fault.t
        cols = [i - 1 for i in fault.agent_indices]
        after = trace.u_agents[np.ix_(rows, cols)]
        out.append(
            FaultCheck(
                t=fault.t,
                agents=list(fault.agent_indices),
                zero_after=bool(np.all(after == 0.0)),
                rows_checked=int(rows.sum()),
            )
        )
    return out
