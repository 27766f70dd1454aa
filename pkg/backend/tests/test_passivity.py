"""Tests for passivity_check on short synthetic loops."""

from __future__ import annotations

import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), ".."))

from app.schemas.agent import AgentParams, ControllerKind, GainMode, GainSchedule  # noqa: E402
from app.schemas.lti import TransferFunction  # noqa: E402
from app.schemas.reference import ReferenceSchedule, ReferenceSegment  # noqa: E402
from app.schemas.simulation import FaultEvent, SimConfig  # noqa: E402
from app.services.analysis_service import (  # noqa: E402
    analysis_segments,
    default_storage_gains,
    passivity_check,
)
from app.services.simulation_service import simulate  # noqa: E402
from app.utils.exceptions import AnalysisError  # noqa: E402

PLANT = TransferFunction(num=(75.0, 4900.0), den=(1.0, 98.0, 4900.0))


def _asc(k_lo: float) -> AgentParams:
    return AgentParams(
        kind=ControllerKind.ASC,
        u_p=3.0,
        u_n=0.0,
        gains=GainSchedule(k_lo=k_lo, k_hi=1.4 * k_lo, mode=GainMode.STAIRCASE),
    )


def _integral(k: float, bound: float = 20.0) -> AgentParams:
    return AgentParams(kind=ControllerKind.INTEGRAL, u_p=bound, u_n=-bound, k=k)


def _config(agents, reference: ReferenceSchedule, **overrides) -> SimConfig:
    fields = {"plant": PLANT, "dt": 1e-5, "t_end": 0.02, "agents": tuple(agents), "reference": reference}
    fields.update(overrides)
    return SimConfig(**fields)


TWO_STAGE = ReferenceSchedule(
    segments=(ReferenceSegment(t_start=0.0, y_r=6.0), ReferenceSegment(t_start=0.01, y_r=2.0))
)


class TestPassivityCheck:
    def test_all_zero_trace(self):
        cfg = _config([_asc(3.0), _asc(2.0)], ReferenceSchedule.constant(0.0), dt=1e-4)
        report = passivity_check(simulate(cfg), cfg)
        assert not np.any(report.V_c)
        assert not np.any(report.supply)
        assert report.max_violation <= 0.0
        assert report.within_tol

    def test_series_lengths(self):
        cfg = _config([_asc(3.0), _asc(2.0), _asc(1.0)], TWO_STAGE)
        trace = simulate(cfg)
        report = passivity_check(trace, cfg)
        for series in (report.V_c, report.v, report.supply, report.margin):
            assert series.shape == (trace.n_rows,)
        assert report.V_ci.shape == (trace.n_rows, 3)
        assert report.C_u == 0.0
        assert report.C_Vu == pytest.approx(report.V_c[0])

    def test_asc_storage_bounded_by_supply(self):
        cfg = _config([_asc(3.0), _asc(2.0), _asc(1.0)], TWO_STAGE)
        report = passivity_check(simulate(cfg), cfg)
        assert report.max_violation < 1e-3
        assert np.all(report.V_c >= 0.0)

    def test_margin_rebased_per_segment(self):
        cfg = _config([_asc(3.0), _asc(2.0), _asc(1.0)], TWO_STAGE)
        report = passivity_check(simulate(cfg), cfg)
        starts = [seg.k0 for seg in report.segments]
        assert starts == [0, 1000]
        assert np.all(report.margin[starts] == -report.C_u)

    def test_v_uses_segment_reference_input(self):
        cfg = _config([_asc(3.0), _asc(2.0), _asc(1.0)], TWO_STAGE)
        trace = simulate(cfg)
        report = passivity_check(trace, cfg)
        np.testing.assert_array_equal(report.v[:1000], trace.u_p[:1000] - 6.0)
        np.testing.assert_array_equal(report.v[1000:], trace.u_p[1000:] - 2.0)

    def test_integral_equality_off_saturation(self):
        cfg = _config([_integral(3.0), _integral(2.0), _integral(1.0)], ReferenceSchedule.constant(5.0))
        trace = simulate(cfg)
        report = passivity_check(trace, cfg)
        assert report.unsaturated_steps == trace.n_rows - 1
        assert report.equality_residual < 1e-9
        assert report.max_violation < 1e-3

    def test_integral_residual_skips_saturated_steps(self):
        agents = [_integral(300.0, bound=0.5), _integral(200.0, bound=0.5)]
        cfg = _config(agents, ReferenceSchedule.constant(0.8))
        trace = simulate(cfg)
        report = passivity_check(trace, cfg)
        assert 0 < report.unsaturated_steps < trace.n_rows - 1
        assert report.equality_residual < 1e-9

    def test_custom_storage_gains(self):
        cfg = _config([_asc(3.0), _asc(2.0)], ReferenceSchedule.constant(4.0))
        trace = simulate(cfg)
        default = passivity_check(trace, cfg)
        doubled = passivity_check(trace, cfg, L=[6.0, 4.0])
        assert default.L == default_storage_gains(cfg) == [3.0, 2.0]
        np.testing.assert_allclose(doubled.V_c, default.V_c / 2.0)

    def test_summary(self):
        cfg = _config([_asc(3.0), _asc(2.0)], ReferenceSchedule.constant(4.0))
        summary = passivity_check(simulate(cfg), cfg, tol=1e-3).summary()
        assert summary.kind == "asc"
        assert summary.segments == 1
        assert summary.tol == 1e-3
        assert summary.equality_residual is None


class TestPassivityErrors:
    def test_trace_from_other_config(self):
        cfg = _config([_asc(3.0), _asc(2.0)], ReferenceSchedule.constant(4.0))
        trace = simulate(cfg)
        with pytest.raises(AnalysisError, match="does not come from"):
            passivity_check(trace, _config([_asc(3.0), _asc(2.0)], ReferenceSchedule.constant(4.0), dt=2e-5))

    def test_mixed_kinds(self):
        cfg = _config([_asc(3.0), _integral(2.0, bound=3.0)], ReferenceSchedule.constant(2.0))
        with pytest.raises(AnalysisError, match="single controller kind"):
            passivity_check(simulate(cfg), cfg)

    @pytest.mark.parametrize("L", [[1.0], [1.0, 0.0]])
    def test_bad_storage_gains(self, L):
        cfg = _config([_asc(3.0), _asc(2.0)], ReferenceSchedule.constant(4.0))
        with pytest.raises(AnalysisError, match="storage gains"):
            passivity_check(simulate(cfg), cfg, L=L)


class TestAnalysisSegments:
    def test_fault_splits_segment(self):
        cfg = _config(
            [_asc(3.0), _asc(2.0), _asc(1.0)],
            ReferenceSchedule.constant(4.0),
            faults=(FaultEvent(t=0.005, agent_indices=(2,)),),
        )
        segments = analysis_segments(simulate(cfg), cfg)
        assert [(s.k0, s.k1) for s in segments] == [(0, 500), (500, 2001)]
        assert segments[1].healthy == (True, False, True)
        assert segments[1].shares.u_ri == pytest.approx((2.0, 0.0, 2.0))
