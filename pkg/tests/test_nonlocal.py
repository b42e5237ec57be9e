import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from balancelaw.errors import GridMismatch, NoContraction
from balancelaw.grid import GridFn, UniformGrid, l1_norm
from balancelaw.model import FluxField, ProblemSpec, SourceField
from balancelaw.nonlocal_source import (KernelSpec, contraction_horizon, convolve, convolve_direct, convolve_fft,
                                        exponential_kernel, gaussian_kernel, kernel_from_csv, kernel_l1_distance,
                                        picard_solve, top_hat_kernel)
from balancelaw.problems import make_initial, make_problem
from balancelaw.solver import solve

vals = st.floats(-3, 3, allow_nan=False)


def delta_kernel(h, mass=1.0):
    return KernelSpec(lambda t, z: np.where(np.abs(z[0]) < h / 2, mass / h, 0.0), mass)


def brute_periodic(kvals_fn, u, h):
    n = u.size
    out = np.zeros(n)
    for i in range(n):
        for j in range(n):
            off = (i - j + n // 2) % n - n // 2
            out[i] += kvals_fn(off * h) * u[j]
    return out * h


def test_delta_kernel_is_identity(rng):
    g = UniformGrid.from_bounds(0, 1, 40, "periodic")
    u = GridFn(g, rng.normal(size=40))
    for method in ("direct", "fft"):
        assert np.allclose(convolve(delta_kernel(g.h), 0.0, u, method).values, u.values, atol=1e-13)


def test_constant_times_mass():
    g = UniformGrid.from_bounds(-math.pi, math.pi, 128, "periodic")
    K = gaussian_kernel(0.3, mass=2.5)
    out = convolve(K, 0.0, GridFn(g, np.full(128, 1.5)))
    assert np.allclose(out.values, 1.5 * K.discrete_l1(0.0, g), rtol=1e-13)
    assert K.discrete_l1(0.0, g) == pytest.approx(2.5, rel=1e-10)


@given(arrays(float, 70, elements=vals))
def test_fft_matches_direct_and_brute_force(u):
    g = UniformGrid.from_bounds(-2, 2, 70, "periodic")
    K = exponential_kernel(3.0, mass=0.7)
    U = GridFn(g, u)
    d = convolve_direct(K, 0.0, U).values
    f = convolve_fft(K, 0.0, U).values
    b = brute_periodic(lambda z: K.func(0.0, np.array([[z]]))[0], u, g.h)
    assert np.max(np.abs(d - f)) < 1e-10
    assert np.max(np.abs(d - b)) < 1e-10


@given(arrays(float, 30, elements=vals), arrays(float, 30, elements=vals), st.floats(-2, 2), st.integers(-29, 29))
def test_linearity_shift_and_young(u, v, c, s):
    g = UniformGrid.from_bounds(0, 3, 30, "periodic")
    K = top_hat_kernel(0.35, mass=1.3)
    cu = lambda w: convolve_direct(K, 0.0, GridFn(g, w)).values
    assert np.allclose(cu(u + c * v), cu(u) + c * cu(v), atol=1e-12)
    assert np.allclose(cu(np.roll(u, s)), np.roll(cu(u), s), atol=1e-12)
    assert l1_norm(GridFn(g, cu(u))) <= K.discrete_l1(0.0, g) * l1_norm(GridFn(g, u)) * (1 + 1e-12) + 1e-12


def test_padded_convolution_zero_extends():
    g = UniformGrid.from_bounds(0, 1, 10)
    u = np.zeros(10)
    u[0] = 1.0
    K = KernelSpec(lambda t, z: np.where(np.abs(z[0] - 0.1) < 0.05, 10.0, 0.0), 1.0)
    out = convolve(K, 0.0, GridFn(g, u)).values
    assert out[1] == pytest.approx(1.0) and abs(out[0]) < 1e-15 and np.sum(np.abs(out)) == pytest.approx(1.0)
    with pytest.raises(GridMismatch):
        convolve_fft(K, 0.0, GridFn(g, u))


def test_contraction_horizon_examples():
    assert contraction_horizon(1.0, 1.0, 0.5) == pytest.approx(math.log(1.5), rel=1e-14)
    assert contraction_horizon(0.0, 2.0, 0.5) == pytest.approx(0.25)
    T = contraction_horizon(3.0, 0.7, 0.4)
    assert math.expm1(3.0 * T) / 3.0 * 0.7 == pytest.approx(0.4, rel=1e-12)
    for bad in ((1.0, 0.0, 0.5), (1.0, 1.0, 1.0), (-1.0, 1.0, 0.5)):
        with pytest.raises(ValueError):
            contraction_horizon(*bad)


def test_kernel_distance_and_csv(tmp_path):
    g = UniformGrid.from_bounds(-2, 2, 80, "periodic")
    a, b = gaussian_kernel(0.3), gaussian_kernel(0.3, mass=0.9)
    assert kernel_l1_distance(a, b, g, [0.0, 1.0]) == pytest.approx(0.1, rel=1e-9)
    path = tmp_path / "k.csv"
    path.write_text("z1,value\n-0.05,2.0\n0.0,6.0\n0.05,2.0\n")
    K = kernel_from_csv(path)
    assert K.mass == pytest.approx(0.5)
    g2 = UniformGrid.from_bounds(0, 1, 20, "periodic")
    u = np.zeros(20)
    u[5] = 1.0
    out = convolve(K, 0.0, GridFn(g2, u)).values
    assert np.allclose(out[4:7], [0.1, 0.3, 0.1])
    with pytest.raises(GridMismatch):
        convolve(K, 0.0, GridFn(UniformGrid.from_bounds(0, 1, 30, "periodic"), np.ones(30)))


def test_zero_kernel_reduces_to_local_solver():
    g = UniformGrid.from_bounds(-math.pi, math.pi, 100, "periodic")
    spec = make_problem("radiating_gas", u0=make_initial("bump", width=1.0), window=(-2, 2, 1), damping=1.0)
    zero = KernelSpec(lambda t, z: 0.0 * z[0], 0.0)
    traj = picard_solve(spec, zero, g, 0.5, u_range=(0.0, 1.0))
    ref = solve(spec, g, 0.5, dt=traj.metadata["dt"], u_range=(0.0, 1.0))
    assert np.max(np.abs(traj.final.values - ref.final.values)) < 1e-13


def test_zero_datum_stays_zero():
    g = UniformGrid.from_bounds(-math.pi, math.pi, 64, "periodic")
    spec = make_problem("radiating_gas", u0=make_initial("zero"), window=(-2, 2, 1))
    traj = picard_solve(spec, gaussian_kernel(0.3), g, 1.0, u_range=(0.0, 1.0))
    assert max(np.max(np.abs(s.values)) for s in traj.states) == 0.0


def test_mass_balance_and_contraction():
    g = UniformGrid.from_bounds(-math.pi, math.pi, 128, "periodic")
    spec = ProblemSpec(FluxField(lambda t, x, u: 0.0 * u, du_f=lambda t, x, u: 0.0 * u, dim=1),
                       SourceField(lambda t, x, u: -u, du_F=lambda t, x, u: -np.ones_like(u), dim=1),
                       make_initial("bump", width=1.0))
    traj = picard_solve(spec, gaussian_kernel(0.3), g, 1.0, u_range=(0.0, 1.0))
    m0 = traj.states[0].integral()
    assert all(abs(s.integral() - m0) < 1e-10 for s in traj.states)
    for slab in traj.metadata["picard"]:
        d = slab["distances"]
        assert all(b <= 0.6 * a for a, b in zip(d[:-1], d[1:]) if a > 1e-13)


def test_radiating_gas_contraction_ratios():
    g = UniformGrid.from_bounds(-math.pi, math.pi, 200, "periodic")
    spec = make_problem("radiating_gas", u0=make_initial("bump", width=1.0), window=(-2, 2, 1), damping=1.0)
    traj = picard_solve(spec, gaussian_kernel(0.3), g, 1.0)
    for slab in traj.metadata["picard"]:
        d = slab["distances"]
        assert d[-1] < traj.metadata["tol"]
        assert all(b <= 0.6 * a for a, b in zip(d[:-1], d[1:]) if a > 1e-13)


def test_no_contraction_is_reported():
    g = UniformGrid.from_bounds(-1, 1, 32, "periodic")
    spec = make_problem("radiating_gas", u0=make_initial("bump", width=0.5), window=(-0.5, 0.5, 0.2))
    with pytest.raises(NoContraction):
        picard_solve(spec, gaussian_kernel(0.2), g, 0.2, tol=1e-300, max_iter=2)
