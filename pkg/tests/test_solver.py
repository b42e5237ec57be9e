import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from balancelaw.errors import CflViolation, InsufficientPadding, NonFiniteState
from balancelaw.grid import GridFn, UniformGrid, l1_norm, total_variation
from balancelaw.model import FluxField, ProblemSpec, SourceField
from balancelaw.problems import _bump, make_initial, make_problem
from balancelaw.solver import Trajectory, cfl_dt, solve, step

vals = st.floats(-2, 2, allow_nan=False)


def test_cfl_dt_examples():
    g1 = UniformGrid.from_bounds(0, 1, 100)
    assert cfl_dt(g1, 1.0, 0.5) == pytest.approx(0.005)
    assert cfl_dt(g1, 0.0, 0.5, sup_du_F=2.0) == pytest.approx(0.25)
    g2 = UniformGrid.from_bounds([0, 0], [1, 1], [100, 100])
    assert cfl_dt(g2, 1.0, 0.5) == pytest.approx(cfl_dt(g1, 1.0, 0.5) / 2)
    with pytest.raises(ValueError):
        cfl_dt(g1, 1.0, 1.5)


def test_constant_state_is_preserved():
    g = UniformGrid.from_bounds(0, 1, 50, "periodic")
    u = GridFn(g, np.full(50, 0.7))
    assert np.array_equal(step(u, 0.0, 0.005, make_problem("burgers")).values, u.values)


def exact_shift_error(n):
    g = UniformGrid.from_bounds(-math.pi, math.pi, n, "periodic")
    spec = make_problem("advection", u0=make_initial("sine"))
    traj = solve(spec, g, 1.0)
    exact = g.average(lambda x: np.sin(x[0] - 1.0))
    return l1_norm(traj.final - exact)


def test_advection_converges_at_first_order():
    errs = [exact_shift_error(n) for n in (100, 200, 400)]
    orders = [math.log2(a / b) for a, b in zip(errs[:-1], errs[1:])]
    assert all(0.6 <= p <= 1.1 for p in orders), orders


def test_burgers_shock_follows_rankine_hugoniot():
    g = UniformGrid.from_bounds(-1, 2, 600)
    spec = make_problem("burgers", u0=make_initial("riemann", left=1.0, right=0.0))
    u = solve(spec, g, 0.5).final
    xc = g.axis_centers(0)
    pos = xc[np.argmin(np.abs(u.values - 0.5))]
    assert abs(pos - 0.25) <= 2 * g.h


def test_state_independent_source_is_integrated_exactly():
    g = UniformGrid.from_bounds(-2, 2, 200)
    spec = make_problem("ode_source", u0=make_initial("zero"), amplitude=1.5, width=1.0)
    T = 0.8
    u = solve(spec, g, T).final
    assert np.allclose(u.values, T * 1.5 * _bump(g.axis_centers(0)), atol=1e-14)


def test_cos_flux_follows_cellwise_ode():
    g = UniformGrid.from_bounds(-3 * math.pi, 3 * math.pi, 1600)
    spec = make_problem("cosx_flux", u0=make_initial("zero"), window=(-2 * math.pi, 2 * math.pi, 1.0))
    T = 1.0
    u = solve(spec, g, T).final
    xc = g.axis_centers(0)
    inside = np.abs(xc) < 2 * math.pi
    assert np.max(np.abs(u.values[inside] - T * np.sin(xc[inside]))) < 1e-3


def test_burgers_tv_nonincreasing():
    g = UniformGrid.from_bounds(-2, 3, 400)
    spec = make_problem("burgers", u0=make_initial("box", a=-0.5, b=0.5))
    traj = solve(spec, g, 0.5, every_step=True)
    tv = traj.tv_series()
    assert np.all(np.diff(tv) <= 1e-12)
    assert tv[-1] <= tv[0] + 1e-12


@given(arrays(float, 24, elements=vals), arrays(float, 24, elements=st.floats(0, 1)))
def test_step_is_monotone(a, bump):
    g = UniformGrid.from_bounds(0, 1, 24, "periodic")
    spec = make_problem("radiating_gas", window=(0.2, 0.8, 0.1), damping=1.0)
    u, v = GridFn(g, a), GridFn(g, a + bump)
    dt = cfl_dt(g, 2.0 + 1.0, 0.9, 1.0)
    assert np.all(step(u, 0.0, dt, spec, u_range=(0.0, 3.0)).values
                  <= step(v, 0.0, dt, spec, u_range=(0.0, 3.0)).values + 1e-12)


@given(arrays(float, 32, elements=vals))
def test_conservation_max_principle_and_tvd(a):
    g = UniformGrid.from_bounds(0, 1, 32, "periodic")
    spec = make_problem("burgers")
    u = GridFn(g, a)
    dt = cfl_dt(g, 2.0, 0.9)
    v = step(u, 0.0, dt, spec)
    assert abs(v.integral() - u.integral()) <= 1e-12 * max(1.0, l1_norm(u))
    assert a.min() - 1e-12 <= v.values.min() and v.values.max() <= a.max() + 1e-12
    assert total_variation(v) <= total_variation(u) + 1e-12


def test_two_dimensional_conservation_and_tvd():
    g = UniformGrid.from_bounds([0, 0], [1, 1], [40, 40], "periodic")
    spec = make_problem("burgers", dim=2, u0=make_initial("box", a=0.25, b=0.6))
    traj = solve(spec, g, 0.2, snapshot_times=[0.1])
    masses = [s.integral() for s in traj.states]
    assert max(masses) - min(masses) < 1e-12
    assert np.all(np.diff(traj.tv_series()) <= 1e-12)


def test_burgers_self_convergence():
    spec = make_problem("burgers", u0=make_initial("box", a=-0.5, b=0.5))
    finals = [solve(spec, UniformGrid.from_bounds(-2, 3, n), 0.5).final for n in (100, 200, 400, 800)]
    errs = []
    for c, f in zip(finals[:-1], finals[1:]):
        errs.append(np.sum(np.abs(c.values - f.values.reshape(-1, 2).mean(axis=1))) * c.grid.cell_volume)
    assert all(a / b >= 1.3 for a, b in zip(errs[:-1], errs[1:])), errs


def test_error_conditions():
    g = UniformGrid.from_bounds(0, 1, 20, "periodic")
    u = GridFn(g, np.ones(20))
    with pytest.raises(CflViolation):
        step(u, 0.0, 1.0, make_problem("burgers"))
    blow = ProblemSpec(FluxField(lambda t, x, u: 0.0 * u, du_f=lambda t, x, u: 0.0, dim=1),
                       SourceField(lambda t, x, u: 1e308 * (1 + u**2), dim=1), None)
    with pytest.raises(NonFiniteState), np.errstate(over="ignore", invalid="ignore"):
        step(GridFn(g, np.full(20, 1e10)), 0.0, 1.0, blow)
    tight = UniformGrid.from_bounds(-1, 1, 50)
    spec = make_problem("burgers", u0=make_initial("box", a=-0.5, b=0.5))
    with pytest.raises(InsufficientPadding):
        solve(spec, tight, 1.0)


def test_snapshots_metadata_and_export(tmp_path):
    g = UniformGrid.from_bounds(-2, 3, 100)
    spec = make_problem("burgers", u0=make_initial("box", a=-0.5, b=0.5))
    traj = solve(spec, g, 0.5, snapshot_times=[0.1, 0.25])
    assert np.allclose(traj.times, [0, 0.1, 0.25, 0.5])
    assert traj.metadata["numerical_flux"] == "local_lax_friedrichs"
    full = solve(spec, g, 0.5, every_step=True)
    assert np.allclose(np.diff(full.times), full.dt_history)
    assert len(full.extra_sources) == len(full.states) - 1
    traj.to_csv(tmp_path / "s.csv")
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0] == "t,index,x1,value" and len(lines) == 1 + 4 * 100


def test_minimum_step_count():
    g = UniformGrid.from_bounds(-10, 10, 100)
    spec = make_problem("cosx_flux", u0=make_initial("zero"), window=(-5, 5, 1))
    traj = solve(spec, g, 1.0, every_step=True)
    assert len(traj.times) - 1 >= 10


def test_trajectory_validation():
    g = UniformGrid.from_bounds(0, 1, 5)
    s = GridFn(g, np.zeros(5))
    with pytest.raises(ValueError):
        Trajectory(np.array([0.0, 0.0]), [s, s], np.array([0.0]))
    with pytest.raises(ValueError):
        Trajectory(np.array([0.0]), [s, s], np.array([]))


def test_solve_is_deterministic():
    g = UniformGrid.from_bounds(-2, 3, 200)
    spec = make_problem("burgers", u0=make_initial("box", a=-0.5, b=0.5))
    a = solve(spec, g, 0.5).final.values
    b = solve(spec, g, 0.5).final.values
    assert a.tobytes() == b.tobytes()
