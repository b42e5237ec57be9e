import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from balancelaw.constants import wallis
from balancelaw.errors import GridMismatch, UnresolvedScale
from balancelaw.grid import (
    GridFn,
    UniformGrid,
    l1_distance_ball,
    l1_norm,
    mollified_tv,
    shifted_values,
    total_variation,
)

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def grid1(n=100, lo=-1.0, hi=2.0, boundary="padded", pad_value=None):
    return UniformGrid.from_bounds(lo, hi, n, boundary, pad_value)


def test_grid_validation():
    with pytest.raises(ValueError):
        UniformGrid((0.0,), (0.1,), (2,))
    with pytest.raises(ValueError):
        UniformGrid((0.0,), (-0.1,), (10,))
    with pytest.raises(ValueError):
        UniformGrid((0.0,), (0.1,), (10,), boundary="reflect")


def test_grid_geometry():
    g = UniformGrid.from_bounds([0, -1], [1, 1], [10, 40])
    assert g.ndim == 2 and g.cell_size == (0.1, 0.05) and g.h == 0.05
    assert g.cell_volume == pytest.approx(0.005)
    assert g.centers().shape == (2, 10, 40)
    assert g.faces(1).shape == (2, 10, 41)
    assert g.refine().shape == (20, 80)
    assert g.upper == pytest.approx((1.0, 1.0))


def test_gridfn_rejects_bad_values():
    g = grid1(10)
    with pytest.raises(GridMismatch):
        GridFn(g, np.zeros(11))
    with pytest.raises(ValueError):
        GridFn(g, np.full(10, np.nan))
    u = GridFn(g, np.zeros(10))
    with pytest.raises(ValueError):
        u.values[0] = 1.0


def test_cell_average_exact_for_cubics():
    g = grid1(7, 0.0, 1.0)
    u = g.average(lambda x: x[0] ** 3)
    edges = np.linspace(0, 1, 8)
    exact = (edges[1:] ** 4 - edges[:-1] ** 4) / 4 / np.diff(edges)
    assert np.allclose(u.values, exact, atol=1e-15)


def test_tv_constant_and_indicator():
    g = grid1(300, -1.0, 2.0)
    assert total_variation(GridFn(g, np.full(g.shape, 3.0))) == 0.0
    u = g.sample(lambda x: ((x[0] >= 0) & (x[0] < 1)).astype(float))
    assert total_variation(u) == pytest.approx(2.0)


@pytest.mark.parametrize("n", [10, 20, 40])
def test_tv_square_perimeter(n):
    g = UniformGrid.from_bounds([-1, -1], [2, 2], [3 * n, 3 * n])
    u = g.sample(lambda x: ((x[0] > 0) & (x[0] < 1) & (x[1] > 0) & (x[1] < 1)).astype(float))
    assert total_variation(u) == pytest.approx(4.0, rel=1e-12)


def test_tv_boundary_conventions():
    g = grid1(10, 0, 1, "padded", pad_value=0.0)
    u = GridFn(g, np.ones(10))
    assert total_variation(u) == pytest.approx(2.0)
    assert total_variation(GridFn(grid1(10, 0, 1), np.ones(10))) == 0.0
    gp = grid1(10, 0, 1, "periodic")
    step = GridFn(gp, (np.arange(10) < 5).astype(float))
    assert total_variation(step) == pytest.approx(2.0)


@given(arrays(float, 16, elements=finite), arrays(float, 16, elements=finite), finite)
def test_tv_is_seminorm(a, b, c):
    g = grid1(16, boundary="periodic")
    u, v = GridFn(g, a), GridFn(g, b)
    assert total_variation(GridFn(g, c * a)) == pytest.approx(abs(c) * total_variation(u), rel=1e-12, abs=1e-12)
    assert total_variation(u + v) <= total_variation(u) + total_variation(v) + 1e-9


@given(arrays(float, (6, 7), elements=finite), st.integers(-6, 6), st.integers(-7, 7))
def test_tv_translation_invariant_periodic(a, s0, s1):
    g = UniformGrid.from_bounds([0, 0], [1, 1], [6, 7], "periodic")
    u = GridFn(g, a)
    shifted = GridFn(g, np.roll(a, (s0, s1), axis=(0, 1)))
    assert total_variation(shifted) == pytest.approx(total_variation(u), rel=1e-12, abs=1e-12)


@given(arrays(float, 20, elements=finite), st.sampled_from(["padded", "periodic"]))
def test_one_cell_shift_bounded_by_tv(a, boundary):
    g = grid1(20, boundary=boundary)
    u = GridFn(g, a)
    for s in (1, -1):
        dist = np.sum(np.abs(u.values - shifted_values(u, [s]))) * g.cell_volume
        assert dist <= g.h * total_variation(u) * (1 + 1e-12) + 1e-12


def test_l1_ball_examples():
    g = grid1(30, 0.0, 3.0)
    u = GridFn(g, np.ones(30))
    v = GridFn(g, np.zeros(30))
    assert l1_distance_ball(u, u) == 0.0
    # centres 1.05 .. 1.95 lie within 0.45 of 1.5
    assert l1_distance_ball(u, v, x0=1.5, radius=0.46) == pytest.approx(10 * 0.1)
    assert l1_distance_ball(u, v, radius=math.inf) == pytest.approx(l1_norm(u))
    with pytest.raises(GridMismatch):
        l1_distance_ball(u, GridFn(grid1(31), np.zeros(31)))


@given(arrays(float, 25, elements=finite), st.floats(0.0, 3.0), st.floats(0.0, 3.0))
def test_l1_ball_monotone_in_radius(a, r1, r2):
    g = grid1(25, 0.0, 3.0)
    u, v = GridFn(g, a), GridFn(g, np.zeros(25))
    lo, hi = sorted((r1, r2))
    assert l1_distance_ball(u, v, 1.5, lo) <= l1_distance_ball(u, v, 1.5, hi)


def test_mollified_tv_constant_and_scale_check():
    g = grid1(200)
    u = GridFn(g, np.full(200, 2.0))
    assert mollified_tv(u, 8 * g.h) == 0.0
    with pytest.raises(UnresolvedScale):
        mollified_tv(u, 1.5 * g.h)


def test_mollified_tv_converges_to_tv():
    g = grid1(800, -2.0, 2.0)
    u = g.average(lambda x: np.exp(-4 * x[0] ** 2))
    tv = total_variation(u)
    vals = [mollified_tv(u, k * g.h) for k in (16, 8, 4)]
    assert abs(vals[-1] - tv) / tv < 0.05
    assert abs(vals[-1] - tv) <= abs(vals[0] - tv) + 1e-12


def test_mollified_tv_exact_on_monotone_profile():
    g = grid1(400, -2.0, 2.0)
    u = g.average(lambda x: np.tanh(3 * np.clip(x[0], -1.0, 1.0)))
    assert mollified_tv(u, 10 * g.h) == pytest.approx(total_variation(u), rel=1e-12)


@given(arrays(float, (12, 12), elements=finite))
def test_mollified_tv_bounded_by_moment_ratio(a):
    g = UniformGrid.from_bounds([0, 0], [1, 1], [12, 12], "periodic")
    u = GridFn(g, a)
    assert mollified_tv(u, 3 * g.h) <= 2 * wallis(2) * total_variation(u) * (1 + 1e-12) + 1e-9


def test_csv_and_npy_export(tmp_path):
    g = UniformGrid.from_bounds([0, 0], [1, 1], [3, 4])
    u = g.sample(lambda x: x[0] + 10 * x[1])
    u.to_csv(tmp_path / "u.csv")
    rows = (tmp_path / "u.csv").read_text().splitlines()
    assert rows[0] == "index,x1,x2,value" and len(rows) == 13
    u.to_npy(tmp_path / "u.npy")
    assert np.array_equal(np.load(tmp_path / "u.npy"), u.values)
