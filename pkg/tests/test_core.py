import numpy as np
import pytest
from hypothesis import given, strategies as st

from tactile_hardness.core import (DisplacementField, FieldError, ForceField, GraspTrace, GridDims,
                                   TraceSample, box_mean, frame_times, new_zero_displacement)


def test_zero_field_small():
    f = new_zero_displacement(GridDims(2, 2, 0.5))
    assert f.dims.cell_count == 4
    for g in (f.dx, f.dy, f.dz):
        assert g.shape == (2, 2)
        assert not g.any()


def test_zero_field_full_scale():
    f = new_zero_displacement(GridDims(320, 240))
    assert f.dz.size == 76_800


@pytest.mark.parametrize("w,h,pitch", [(0, 4, 0.5), (4, 0, 0.5), (2, 2, 0.0), (2, 2, -1.0)])
def test_invalid_dims(w, h, pitch):
    with pytest.raises(FieldError):
        GridDims(w, h, pitch)


def test_fields_are_frozen():
    f = new_zero_displacement(GridDims(3, 2))
    with pytest.raises(ValueError):
        f.dz[0, 0] = 1.0


def test_mismatched_grids_rejected():
    dims = GridDims(3, 2)
    ok = np.zeros((2, 3))
    with pytest.raises(FieldError):
        DisplacementField(dims, ok, ok, np.zeros((3, 2)))
    with pytest.raises(FieldError):
        ForceField(dims, ok, np.zeros((2, 4)), ok)


def test_field_rejects_negative_normal_and_nan():
    dims = GridDims(2, 2)
    z = np.zeros((2, 2))
    with pytest.raises(FieldError):
        DisplacementField(dims, z, z, -np.ones((2, 2)))
    with pytest.raises(FieldError):
        ForceField(dims, np.full((2, 2), np.nan), z, z)


def test_frame_times_examples():
    assert frame_times(3, 120) == [0, 1 / 120, 2 / 120]
    assert frame_times(1, 60) == [0]
    with pytest.raises(FieldError):
        frame_times(2, 0)


@given(st.integers(1, 500), st.floats(1.0, 1000.0))
def test_frame_times_spacing(n, rate):
    ts = frame_times(n, rate)
    assert len(ts) == n
    if n > 1:
        np.testing.assert_allclose(np.diff(ts), 1 / rate, atol=1e-12)


def test_empty_contact_sample_reports_zero_force():
    with pytest.raises(FieldError):
        TraceSample(0.0, 0.0, 0.3, 0.3, 0.0, 0)
    s = TraceSample(0.0, 0.0, 0.0, 0.0, 0.0, 0)
    assert s.mean_normal == 0 and s.max_normal == 0


def test_trace_spacing_checked():
    good = [TraceSample(i / 120, 0, 0, 0, 0, 0) for i in range(3)]
    GraspTrace(tuple(good), 120)
    bad = good[:2] + [TraceSample(3 / 120, 0, 0, 0, 0, 0)]
    with pytest.raises(FieldError):
        GraspTrace(tuple(bad), 120)


def _box_mean_reference(grid, k):
    h, w = grid.shape
    r = k // 2
    out = np.empty_like(grid)
    for y in range(h):
        for x in range(w):
            vals = [grid[j, i] for j in range(y - r, y + r + 1) for i in range(x - r, x + r + 1)
                    if 0 <= j < h and 0 <= i < w]
            out[y, x] = sum(vals) / len(vals)
    return out


@pytest.mark.parametrize("k", [1, 3, 5, 7])
def test_box_mean_matches_loop(k):
    grid = np.random.default_rng(k).random((9, 11))
    np.testing.assert_allclose(box_mean(grid, k), _box_mean_reference(grid, k), atol=1e-12)


def test_box_mean_rejects_even_kernel():
    with pytest.raises(FieldError):
        box_mean(np.zeros((3, 3)), 2)
