import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tactile_hardness.control import ControllerConfig, FixedDistance, ForceThreshold, run_grasp
from tactile_hardness.core import GraspTrace, GridDims
from tactile_hardness.hardness import (Constant, EstimationError, SlopeConfig, Variable, analyze,
                                       classify_rate, estimate_slope, hardness_from_distance,
                                       hardness_from_slope, loading_span, readout_window,
                                       second_derivative, slope_profile)
from tactile_hardness.presets import CUCUMBER
from tactile_hardness.sim import FruitModel, SimConfig, Sphere, effective_stiffness


def ols_slope(t, y):
    """Closed-form simple regression from raw sums."""
    n = len(t)
    st_, sy = math.fsum(t), math.fsum(y)
    stt = math.fsum(a * a for a in t)
    sty = math.fsum(a * b for a, b in zip(t, y))
    return (n * sty - st_ * sy) / (n * stt - st_ * st_)


def quad_curvature(t, y):
    """2a from the 3x3 normal equations of y = a t^2 + b t + c."""
    t = np.asarray(t, float)
    A = np.column_stack([t * t, t, np.ones_like(t)])
    a, _, _ = np.linalg.solve(A.T @ A, A.T @ np.asarray(y, float))
    return 2 * a


def line_trace(values, fr=120.0, t0=0.0):
    return GraspTrace.from_columns(fr, values, t0=t0)


def test_estimate_slope_examples():
    tr = GraspTrace.from_columns(1.0, [0, 5, 10])
    assert estimate_slope(tr, 0, 2) == pytest.approx(5.0, abs=1e-12)
    assert estimate_slope(line_trace([3.0] * 20), 0, 1) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(EstimationError):
        estimate_slope(tr, 0.2, 0.8)


def test_estimate_slope_matches_normal_equations():
    rng = np.random.default_rng(3)
    t = np.arange(30) / 120.0
    y = 2.0 + 3.7 * t + rng.normal(0, 0.05, 30)
    tr = line_trace(np.clip(y, 0, None))
    got = estimate_slope(tr, 0, t[-1])
    assert got == pytest.approx(ols_slope(t, tr.column("mean_normal")), abs=1e-9)
    assert got == pytest.approx(3.7, abs=1.0)


def test_second_derivative_examples():
    t = np.arange(40) / 120.0
    assert second_derivative(line_trace(2 * t * t), 0, t[-1]) == pytest.approx(4.0, abs=1e-9)
    assert second_derivative(line_trace(1 + 3 * t), 0, t[-1]) == pytest.approx(0.0, abs=1e-9)
    with pytest.raises(EstimationError):
        second_derivative(line_trace([1, 2, 3]), 0, 1 / 120)


def test_second_derivative_matches_normal_equations():
    rng = np.random.default_rng(11)
    t = np.arange(60) / 120.0
    y = 1 + t + 5 * t * t + rng.normal(0, 0.02, 60)
    assert second_derivative(line_trace(y), 0, t[-1]) == pytest.approx(quad_curvature(t, y), abs=1e-9)


def test_slope_profile_examples():
    cfg = SlopeConfig()
    t = np.arange(48) / 120.0
    prof = slope_profile(line_trace(1 + 2 * t), cfg)
    np.testing.assert_allclose(prof, [2.0] * 4, atol=1e-9)

    # slope 1 for the first half, 4 afterwards, continuous at the kink
    kink = t[24]
    y = np.where(t < kink, 1 + t, 1 + kink + 4 * (t - kink))
    prof = slope_profile(line_trace(y), cfg)
    assert prof[0] == pytest.approx(1.0, abs=1e-9)
    assert prof[-1] == pytest.approx(4.0, abs=1e-9)

    short = GraspTrace.from_columns(120.0, [0, 0, 1, 2, 3], delta=[0, 0, 1, 2, 3])
    with pytest.raises(EstimationError):
        slope_profile(short, cfg)


def test_classify_rate_examples():
    cfg = SlopeConfig(rate_tolerance=0.2)
    r = classify_rate([5, 5, 5, 5], cfg)
    assert isinstance(r, Constant) and r.c == 5 and r.max_rel_dev == 0
    r = classify_rate([1, 1, 1, 4], cfg)
    assert isinstance(r, Variable)
    assert r.max_rel_dev == pytest.approx(2.25 / 1.75)
    assert r.max_rel_dev == pytest.approx(1.286, abs=1e-3)
    r = classify_rate([5.4, 4.8, 5.0, 5.2], cfg)
    assert isinstance(r, Constant)
    assert r.c == pytest.approx(5.1)
    assert r.max_rel_dev == pytest.approx(0.3 / 5.1)
    assert r.max_rel_dev == pytest.approx(0.0588, abs=1e-4)
    with pytest.raises(EstimationError):
        classify_rate([1, -1], cfg)
    with pytest.raises(EstimationError):
        classify_rate([], cfg)


@given(st.floats(1e-3, 10), st.floats(0.1, 50), st.integers(2, 8))
def test_linear_trace_is_constant_for_any_tolerance(eps, slope, k):
    t = np.arange(60) / 120.0
    cfg = SlopeConfig(subwindows=k, rate_tolerance=eps)
    assert isinstance(classify_rate(slope_profile(line_trace(1 + slope * t), cfg), cfg), Constant)


def test_hardness_mappings():
    assert hardness_from_slope(5, 10) == 0.5
    assert hardness_from_slope(0, 10) == 0
    with pytest.raises(EstimationError):
        hardness_from_slope(5, 0)
    assert hardness_from_distance(20, 0.5, 6.0, 1.5) == pytest.approx(19.5 / 4.5)
    assert hardness_from_distance(20, 0.5, 6.0, 1.5) == pytest.approx(4.333, abs=1e-3)
    with pytest.raises(EstimationError):
        hardness_from_distance(20, 0.5, 3.0, 3.0)
    h1 = hardness_from_distance(10, 2, 5, 1)
    assert hardness_from_distance(18, 2, 5, 1) == pytest.approx(2 * h1)


def test_loading_span_and_readout():
    delta = [0, 0, 0.5, 1.0, 1.5, 2.0, 2.0, 2.0]
    mean = [0, 0, 1, 2, 3, 4, 4, 4]
    tr = GraspTrace.from_columns(10.0, mean, delta=delta)
    assert loading_span(tr) == (2, 5)
    assert readout_window(tr, SlopeConfig(window=0.1)) == pytest.approx((0.2, 0.3))
    assert readout_window(tr, SlopeConfig(window=0.1, readout="final")) == pytest.approx((0.4, 0.5))
    assert readout_window(tr, SlopeConfig(readout="full")) == pytest.approx((0.2, 0.5))
    with pytest.raises(EstimationError):
        loading_span(GraspTrace.from_columns(10.0, [0, 0, 0]))


def test_config_validation():
    for bad in (dict(window=0), dict(subwindows=1), dict(rate_tolerance=0), dict(readout="middle")):
        with pytest.raises(EstimationError):
            SlopeConfig(**bad)


@settings(max_examples=50, deadline=None)
@given(st.floats(-100, 100), st.lists(st.floats(0, 50), min_size=5, max_size=40))
def test_slope_time_translation_invariant(shift, ys):
    tr = line_trace(ys, t0=5.0)
    moved = line_trace(ys, t0=5.0 + abs(shift))
    t_end = tr[-1].t
    a = estimate_slope(tr, 5.0, t_end)
    b = estimate_slope(moved, 5.0 + abs(shift), t_end + abs(shift))
    assert a == pytest.approx(b, abs=1e-9 * max(1.0, abs(a)) + 1e-6)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.1, 20))
def test_scaling_scales_slope_d2_and_h(a):
    t = np.arange(80) / 120.0
    base = 0.5 + 2 * t + 3 * t * t
    delta = np.minimum(t * 10, 5.0)
    tr = GraspTrace.from_columns(120.0, base, delta=delta)
    sc = GraspTrace.from_columns(120.0, a * base, delta=delta)
    cfg = SlopeConfig()
    r1, r2 = analyze(tr, 10.0, cfg), analyze(sc, 10.0, cfg)
    assert r2.c == pytest.approx(a * r1.c, rel=1e-9)
    assert r2.h == pytest.approx(a * r1.h, rel=1e-9)
    assert r2.d2 == pytest.approx(a * r1.d2, rel=1e-9)


def test_report_invariants(quiet):
    out = run_grasp(FruitModel(Sphere(10), 6.0), quiet, ControllerConfig(mode=FixedDistance(5)))
    r = out.report
    assert r.h == pytest.approx(r.c / quiet.closing_speed, abs=1e-12)
    assert r.delta_max == pytest.approx(5.0)
    assert r.peak_force == pytest.approx(out.trace.column("mean_normal").max())


def test_h_matches_analytic_slope_at_full_resolution():
    # mean normal over a sphere contact disk is kappa_eff * delta / 2, so dF/d(delta) = kappa_eff / 2
    sim = SimConfig(dims=GridDims.full_scale(), noise_sigma=0.0)
    model = FruitModel(Sphere(10), 6.0)
    out = run_grasp(model, sim, ControllerConfig(mode=FixedDistance(3), hold_time=0.0))
    k_eff = effective_stiffness(model, sim.gel_stiffness, 1.0)
    assert out.report.h == pytest.approx(k_eff / 2, rel=0.10)


@pytest.mark.parametrize("mode", [FixedDistance(5), ForceThreshold(20, 1.5, 4)])
def test_stiffer_shell_gives_higher_h(quiet, mode):
    ctrl = ControllerConfig(mode=mode)
    soft = run_grasp(FruitModel(Sphere(10), 6.0), quiet, ctrl).report.h
    hard = run_grasp(FruitModel(Sphere(10), 12.0), quiet, ctrl).report.h
    assert hard > soft


def test_frame_rate_doubling_keeps_h(quiet):
    ctrl = ControllerConfig(mode=FixedDistance(5))
    model = FruitModel(Sphere(10), 8.0)
    h1 = run_grasp(model, quiet, ctrl).report.h
    h2 = run_grasp(model, replace(quiet, frame_rate=240.0), ctrl).report.h
    assert h2 == pytest.approx(h1, rel=0.10)


def test_layered_cucumber_curvature_positive_across_onset(quiet):
    out = run_grasp(CUCUMBER, quiet, ControllerConfig(mode=FixedDistance(25)))
    tr = out.trace
    delta = tr.column("delta")
    i0 = int(np.argmax(delta >= 17.0))
    i1 = int(np.argmax(delta >= 24.0))
    assert second_derivative(tr, tr[i0].t, tr[i1].t) > 0
