"""Tests for storage functions, shares, bounds and trace statistics."""

from __future__ import annotations

import os
import sys

import numpy as np
import pytest
from scipy.integrate import quad

sys.path.insert(0, os.path.join(os.path.dirname(__file__), ".."))

from app.schemas.agent import AgentParams, ControllerKind, GainMode, GainSchedule  # noqa: E402
from app.schemas.reference import ReferenceSchedule, ReferenceSegment  # noqa: E402
from app.schemas.simulation import FaultEvent  # noqa: E402
from app.services.agent_service import asc_output, assc_output, gain  # noqa: E402
from app.services.analysis_service import (  # noqa: E402
    asc_storage,
    assc_storage,
    clipped_reference,
    cu_bound,
    default_windows,
    delta_u_rm,
    fault_check,
    integral_storage,
    phi_m,
    reference_reached,
    required_kh,
    role_fractions,
    saturated_integral_storage,
    sigma_integral,
    sigma_inverse,
    tracking_metrics,
    u_share,
    vui,
)
from app.services.preset_service import staircase_gains  # noqa: E402
from app.services.simulation_service import SimTrace, tick_time  # noqa: E402
from app.utils.exceptions import (  # noqa: E402
    AnalysisError,
    ControllerKindError,
    InfeasibleReferenceError,
    KhBoundError,
    ShareRangeError,
)

ASC = AgentParams(
    kind=ControllerKind.ASC,
    u_p=3.0,
    u_n=0.0,
    gains=GainSchedule(k_lo=10.0, k_hi=10.0, mode=GainMode.STAIRCASE),
)
ASSC = AgentParams(
    kind=ControllerKind.ASSC,
    u_p=3.0,
    u_n=0.0,
    phi_p=0.06,
    phi_n=0.0,
    gains=GainSchedule(k_lo=10.0, k_hi=10.0, mode=GainMode.STAIRCASE),
)
INTEGRAL = AgentParams(kind=ControllerKind.INTEGRAL, u_p=3.0, u_n=0.0, k=2.0)


def _uniform(params: AgentParams, m: int) -> list[AgentParams]:
    return [params] * m


def _trace(
    e: list[float],
    dt: float = 0.1,
    y_p: list[float] | None = None,
    u_agents: list[list[float]] | None = None,
) -> SimTrace:
    n = len(e)
    e_arr = np.asarray(e, dtype=float)
    y_arr = np.zeros(n) if y_p is None else np.asarray(y_p, dtype=float)
    u = np.zeros((n, 1)) if u_agents is None else np.asarray(u_agents, dtype=float)
    return SimTrace(
        dt=dt,
        t=np.array([tick_time(k, dt) for k in range(n)]),
        y_r=e_arr + y_arr,
        y_p=y_arr,
        e=e_arr,
        u_p=u.sum(axis=1),
        u_agents=u,
        phi=np.zeros_like(u),
    )


def _integrate(fn, phi: float, breaks: list[float]) -> float:
    """∫₀^φ fn, oriented, with the integrand's kinks passed to quad."""
    lo, hi = sorted((0.0, phi))
    if lo == hi:
        return 0.0
    points = [b for b in breaks if lo < b < hi]
    value, _ = quad(fn, lo, hi, points=points or None, epsabs=1e-15, epsrel=1e-12, limit=200)
    return value if phi >= 0 else -value


# ---------------------------------------------------------------------------
# Shares of u_r
# ---------------------------------------------------------------------------


class TestUShare:
    def test_equal_split(self):
        shares = u_share(28.0, _uniform(ASC, 10))
        assert shares.u_ri == pytest.approx((2.8,) * 10)
        assert sum(shares.u_ri) == pytest.approx(28.0, abs=1e-12)

    def test_zero(self):
        assert u_share(0.0, _uniform(ASC, 10)).u_ri == (0.0,) * 10

    @pytest.mark.parametrize("u_r", [35.0, -0.5])
    def test_infeasible(self, u_r):
        with pytest.raises(InfeasibleReferenceError, match="outside"):
            u_share(u_r, _uniform(ASC, 10))

    def test_water_filling(self):
        narrow = AgentParams(
            kind=ControllerKind.ASC, u_p=1.0, u_n=0.0, gains=GainSchedule(k_lo=1.0, k_hi=1.0)
        )
        shares = u_share(6.0, [narrow, ASC, ASC])
        assert shares.u_ri == pytest.approx((1.0, 2.5, 2.5))

    def test_faulted_agents_get_nothing(self):
        healthy = [False] * 5 + [True] * 5
        shares = u_share(10.0, _uniform(ASC, 10), healthy)
        assert shares.u_ri == pytest.approx((0.0,) * 5 + (2.0,) * 5)

    def test_all_faulted(self):
        with pytest.raises(InfeasibleReferenceError):
            u_share(1.0, _uniform(ASC, 2), [False, False])


# ---------------------------------------------------------------------------
# Storage functions: examples
# ---------------------------------------------------------------------------


class TestAscStorage:
    @pytest.mark.parametrize(
        ("phi", "expected"), [(0.0, 0.0), (0.1, 0.002), (-0.1, 0.028)]
    )
    def test_examples(self, phi, expected):
        assert asc_storage(phi, ASC, 2.8, 10.0) == pytest.approx(expected)

    def test_vectorised(self):
        values = asc_storage(np.array([0.1, -0.1]), ASC, 2.8, 10.0)
        np.testing.assert_allclose(values, [0.002, 0.028])

    def test_share_out_of_range(self):
        with pytest.raises(ShareRangeError):
            asc_storage(0.1, ASC, 3.5, 10.0)


class TestAsscStorage:
    def test_sigma_inverse(self):
        assert sigma_inverse(ASSC, 1.0) == pytest.approx(0.02)

    @pytest.mark.parametrize(("phi", "expected"), [(0.05, 1.0), (0.01, 0.5)])
    def test_clipped_reference(self, phi, expected):
        assert clipped_reference(phi, ASSC, 1.0) == pytest.approx(expected)

    def test_clipped_reference_zero_share(self):
        assert clipped_reference(-0.5, ASSC, 0.0) == 0.0

    def test_clipped_reference_needs_assc(self):
        with pytest.raises(ControllerKindError):
            clipped_reference(0.0, ASC, 1.0)

    @pytest.mark.parametrize(("phi", "expected"), [(0.0, 0.0), (0.06, 0.004), (-0.5, 0.0)])
    def test_storage_examples(self, phi, expected):
        assert assc_storage(phi, ASSC, 1.0, 10.0) == pytest.approx(expected, abs=1e-15)

    @pytest.mark.parametrize(("phi", "expected"), [(0.0, 0.0), (0.06, 0.01), (-0.5, -0.5)])
    def test_vui_examples(self, phi, expected):
        assert vui(phi, ASSC, 1.0) == pytest.approx(expected, abs=1e-15)

    def test_sigma_integral_saturated(self):
        # 0.09 over the ramp, then 3 per unit beyond phi_p
        assert sigma_integral(0.1, ASSC) == pytest.approx(0.09 + 3.0 * 0.04)


# ---------------------------------------------------------------------------
# Storage functions: quadrature oracle and sign properties
# ---------------------------------------------------------------------------

PHI_GRID = np.linspace(-0.2, 0.2, 20)
SHARE_GRID = np.linspace(0.0, 3.0, 10)


class TestStorageOracle:
    def test_asc_matches_quadrature(self):
        L = 7.0
        for u_ri in SHARE_GRID:
            for phi in PHI_GRID:
                expected = _integrate(lambda x, u=u_ri: (asc_output(x, ASC) - u) / L, phi, [0.0])
                got = asc_storage(phi, ASC, u_ri, L)
                assert got == pytest.approx(expected, rel=1e-9, abs=1e-14)

    def test_assc_matches_quadrature(self):
        L = 7.0
        for u_ri in SHARE_GRID:
            breaks = [0.0, 0.06, sigma_inverse(ASSC, u_ri)]
            for phi in PHI_GRID:
                expected = _integrate(
                    lambda x, u=u_ri: (assc_output(x, ASSC) - clipped_reference(x, ASSC, u)) / L,
                    phi,
                    breaks,
                )
                got = assc_storage(phi, ASSC, u_ri, L)
                assert got == pytest.approx(expected, rel=1e-9, abs=1e-14)

    def test_vui_matches_quadrature(self):
        for u_ri in SHARE_GRID:
            breaks = [0.0, 0.06, sigma_inverse(ASSC, u_ri)]
            for phi in PHI_GRID:
                expected = _integrate(
                    lambda x, u=u_ri: u - clipped_reference(x, ASSC, u), phi, breaks
                )
                assert vui(phi, ASSC, u_ri) == pytest.approx(expected, rel=1e-9, abs=1e-14)

    def test_nonnegative(self):
        phis = np.linspace(-1.0, 1.0, 201)
        for u_ri in SHARE_GRID:
            assert np.all(asc_storage(phis, ASC, u_ri, 3.0) >= 0.0)
            assert np.all(assc_storage(phis, ASSC, u_ri, 3.0) >= 0.0)
            assert np.all(saturated_integral_storage(phis * 10, INTEGRAL, u_ri, 2.0) >= 0.0)

    @pytest.mark.parametrize("u_ri", [3.0, 0.0])
    def test_assc_nonnegative_at_saturated_share(self, u_ri):
        # pivot sits on a saturation corner; the closed form cancels to ~1e-17 there
        phis = np.linspace(-1.0, 1.0, 201)
        values = assc_storage(phis, ASSC, u_ri, 3.0)
        assert values.min() >= 0.0
        assert assc_storage(0.71, ASSC, u_ri, 3.0) >= 0.0

    def test_assc_integrand_has_sign_of_phase(self):
        phis = np.linspace(-0.2, 0.2, 81)
        for u_ri in SHARE_GRID:
            diff = np.array([assc_output(p, ASSC) for p in phis]) - clipped_reference(
                phis, ASSC, u_ri
            )
            nonzero = np.abs(diff) > 1e-12
            assert np.all(np.sign(diff[nonzero]) == np.sign(phis[nonzero]))

    def test_vui_bound(self):
        bound = delta_u_rm([ASSC]) * phi_m([ASSC])
        assert bound == pytest.approx(0.18)
        phis = np.linspace(-1.0, 1.0, 201)
        for u_ri in SHARE_GRID:
            assert np.all(vui(phis, ASSC, u_ri) <= bound + 1e-15)


# ---------------------------------------------------------------------------
# Bounds and gains
# ---------------------------------------------------------------------------


class TestBounds:
    def test_benchmark_assc(self):
        agents = [
            AgentParams(kind=ControllerKind.ASSC, u_p=3.0, u_n=0.0, phi_p=0.06, phi_n=0.0, gains=g)
            for g in staircase_gains()
        ]
        assert required_kh(agents) == 1.0
        # 10 * 1 * 3 * 0.06 rounds to 1.7999999999999998 in binary
        assert cu_bound(agents, 1.0) == pytest.approx(1.8, rel=1e-12)

    def test_asc_limit(self):
        assert cu_bound(_uniform(ASC, 10), 0.1) == 0.0

    def test_single_agent(self):
        agent = AgentParams(
            kind=ControllerKind.ASSC,
            u_p=1.0,
            u_n=0.0,
            phi_p=0.1,
            phi_n=0.0,
            gains=GainSchedule(k_lo=1.0, k_hi=2.0),
        )
        assert cu_bound([agent], 1.0) == pytest.approx(0.1)

    def test_kh_below_required(self):
        agents = [
            AgentParams(kind=ControllerKind.ASSC, u_p=3.0, u_n=0.0, phi_p=0.06, phi_n=0.0, gains=g)
            for g in staircase_gains()
        ]
        with pytest.raises(KhBoundError) as exc_info:
            cu_bound(agents, 0.5)
        assert exc_info.value.required == 1.0

    def test_gain_ratio(self):
        rng = np.random.default_rng(11)
        for schedule in staircase_gains():
            params = AgentParams(kind=ControllerKind.ASC, u_p=3.0, u_n=0.0, gains=schedule)
            L = params.min_gain
            for phi, e in rng.normal(size=(40, 2)):
                ratio = gain(params, phi, e) / L
                if phi * e >= 0:
                    assert ratio == 1.0
                else:
                    assert ratio >= 1.0


class TestIntegralStorage:
    def test_at_reference(self):
        assert integral_storage([1.0, 2.0], 3.0, [1.0, 1.0]) == 0.0

    def test_benchmark_preset(self):
        gains = [10.0 - i for i in range(10)]
        assert integral_storage([0.0] * 10, 28.0, gains) == pytest.approx(7.1272727, rel=1e-7)

    def test_single_agent(self):
        assert integral_storage([3.0], 1.0, [2.0]) == 1.0

    def test_rejects_nonpositive_gain(self):
        with pytest.raises(ValueError, match="positive"):
            integral_storage([1.0], 0.0, [0.0])

    @pytest.mark.parametrize(("phi", "expected"), [(5.0, 3.0), (-1.0, 0.75), (2.0, 0.25)])
    def test_saturated_storage(self, phi, expected):
        assert saturated_integral_storage(phi, INTEGRAL, 1.0, 2.0) == pytest.approx(expected)

    def test_saturated_storage_matches_aggregate_form(self):
        gains = [3.0, 2.0, 1.0]
        u_r, z = 1.2, 0.4
        total = 0.0
        phis = []
        for k in gains:
            params = AgentParams(kind=ControllerKind.INTEGRAL, u_p=10.0, u_n=-10.0, k=k)
            phi = k * z
            phis.append(phi)
            total += saturated_integral_storage(phi, params, u_r * k / sum(gains), k)
        assert total == pytest.approx(integral_storage(phis, u_r, gains))


# ---------------------------------------------------------------------------
# Trace statistics
# ---------------------------------------------------------------------------


class TestTrackingMetrics:
    def test_zero_trace(self):
        m = tracking_metrics(_trace([0.0] * 11), (0.0, 1.0))
        assert m.n_samples == 11
        assert (m.mean_e, m.rms_e, m.std_e, m.max_abs_e, m.mean_yp) == (0.0,) * 5

    def test_square_wave(self):
        m = tracking_metrics(_trace([1.0, -1.0] * 10), (0.0, 1.9))
        assert m.mean_e == pytest.approx(0.0, abs=1e-15)
        assert m.rms_e == pytest.approx(1.0)
        assert m.std_e == pytest.approx(1.0)
        assert m.max_abs_e == 1.0

    def test_window_selects_rows(self):
        m = tracking_metrics(_trace([0.0] * 5 + [2.0] * 6, y_p=[1.0] * 11), (0.5, 1.0))
        assert m.n_samples == 6
        assert m.mean_e == 2.0
        assert m.mean_yp == 1.0

    @pytest.mark.parametrize("window", [(0.5, 0.5), (0.6, 0.2), (5.0, 6.0)])
    def test_bad_window(self, window):
        with pytest.raises(AnalysisError):
            tracking_metrics(_trace([0.0] * 11), window)

    def test_default_windows(self):
        schedule = ReferenceSchedule(
            segments=(ReferenceSegment(t_start=0.0, y_r=28.0), ReferenceSegment(t_start=0.2, y_r=10.0))
        )
        windows = default_windows(schedule, 0.4)
        assert windows[0] == pytest.approx((0.15, 0.2))
        assert windows[1] == pytest.approx((0.35, 0.4))


class TestRoleAndFaultChecks:
    def test_role_fractions(self):
        trace = _trace([0.0] * 4, u_agents=[[3.0], [3.0], [0.0], [1.5]])
        (r,) = role_fractions(trace, [ASSC], (0.0, 0.3))
        assert (r.agent, r.at_u_p, r.at_u_n, r.between) == (1, 0.5, 0.25, 0.25)

    def test_reference_reached(self):
        schedule = ReferenceSchedule(
            segments=(ReferenceSegment(t_start=0.0, y_r=28.0), ReferenceSegment(t_start=0.2, y_r=10.0))
        )
        hit = reference_reached(_trace([0.0] * 5, y_p=[0.0, 30.0, 25.0, 9.0, 10.0]), schedule)
        assert [c.reached for c in hit] == [True, True]
        assert hit[1].closest_y_p == 9.0

        miss = reference_reached(_trace([0.0] * 5, y_p=[0.0, 20.0, 25.0, 12.0, 11.0]), schedule)
        assert [c.reached for c in miss] == [False, False]
        assert miss[0].closest_y_p == 20.0

    def test_fault_check(self):
        trace = _trace([0.0] * 4, u_agents=[[3.0, 3.0], [3.0, 3.0], [0.0, 3.0], [0.0, 3.0]])
        silent, loud = fault_check(
            trace,
            [FaultEvent(t=0.2, agent_indices=(1,)), FaultEvent(t=0.2, agent_indices=(2,))],
        )
        assert silent.zero_after
        assert silent.rows_checked == 2
        assert not loud.zero_after
