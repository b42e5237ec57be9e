"""Convolution sources ``K *_x u`` and the fixed-point solver for balance laws that contain them.

The nonlocal problem ``u_t + Div f = F + K * u`` is solved by freezing the
convolution term: on a time slab short enough that the frozen-source map
is a contraction in ``C([a, b]; L1)``, iterate ``w -> solve(f, F + K * w)``
until successive iterates agree.
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .constants import ball_volume
from .errors import GridMismatch, NoContraction
from .grid import GridFn, UniformGrid, l1_norm
from .model import SamplingBox, audit_hypotheses, default_state_interval
from .model import ProblemSpec
from .solver import Trajectory, cfl_dt, solve, speed_bounds

__all__ = [
    "KernelSpec",
    "gaussian_kernel",
    "exponential_kernel",
    "top_hat_kernel",
    "kernel_from_csv",
    "KERNELS",
    "convolve",
    "convolve_direct",
    "convolve_fft",
    "kernel_l1_distance",
    "contraction_horizon",
    "picard_solve",
]

log = logging.getLogger(__name__)

TRUNCATION = 1e-12
FFT_THRESHOLD = 64


@dataclass(frozen=True)
class KernelSpec:
    """Time dependent kernel ``K(t, z)`` on R^N with ``z`` of shape ``(N, ...)``.

    ``mass`` is the analytic ``sup_t ||K(t)||_L1``; :meth:`sampled_mass`
    gives the value the discrete scheme actually sees.
    """

    func: Callable
    mass: float
    dim: int = 1
    name: str = "custom"
    lattice_step: tuple | None = None

    def sample(self, t: float, grid: UniformGrid):
        """Lattice offsets ``j`` (shape ``(N, m)``) and kernel values ``K(t, j h)``.

        Offsets cover the whole periodic lattice (minimum image) on periodic
        grids and ``|j_d| < n_d`` otherwise; entries below
        ``1e-12 * max|K|`` are dropped.
        """
        if grid.ndim != self.dim:
            raise GridMismatch(f"kernel dim {self.dim} vs grid dim {grid.ndim}")
        if self.lattice_step is not None and not np.allclose(self.lattice_step, grid.cell_size):
            raise GridMismatch("tabulated kernel spacing differs from the grid spacing")
        if grid.boundary == "periodic":
            ranges = [np.arange(-(n // 2), n - n // 2) for n in grid.shape]
        else:
            ranges = [np.arange(-(n - 1), n) for n in grid.shape]
        offs = np.stack(np.meshgrid(*ranges, indexing="ij")).reshape(grid.ndim, -1)
        z = offs * np.asarray(grid.cell_size).reshape(-1, 1)
        vals = np.asarray(self.func(t, z), dtype=float) * np.ones(offs.shape[1])
        peak = float(np.max(np.abs(vals))) if vals.size else 0.0
        keep = np.abs(vals) >= TRUNCATION * peak if peak > 0 else np.zeros(vals.shape, dtype=bool)
        return offs[:, keep], vals[keep], float(np.sum(np.abs(vals[~keep])) * grid.cell_volume)

    def discrete_l1(self, t: float, grid: UniformGrid) -> float:
        _, vals, _ = self.sample(t, grid)
        return float(np.sum(np.abs(vals)) * grid.cell_volume)

    def truncated_mass(self, t: float, grid: UniformGrid) -> float:
        return self.sample(t, grid)[2]

    def sampled_mass(self, grid: UniformGrid, times) -> float:
        """``max_t h^N sum |K(t, j h)|`` over the given times."""
        return max(self.discrete_l1(t, grid) for t in np.atleast_1d(times))


def _radius(z):
    return np.sqrt(np.sum(np.asarray(z, dtype=float) ** 2, axis=0))


def gaussian_kernel(sigma: float, mass: float = 1.0, dim: int = 1, time_factor: Callable | None = None) -> KernelSpec:
    """``mass (2 pi sigma^2)^(-N/2) exp(-|z|^2 / (2 sigma^2))``, optionally times ``time_factor(t)`` (|.| <= 1)."""
    c = mass / (2 * math.pi * sigma**2) ** (dim / 2)

    def K(t, z):
        v = c * np.exp(-_radius(z) ** 2 / (2 * sigma**2))
        return v * time_factor(t) if time_factor is not None else v

    return KernelSpec(K, abs(mass), dim, f"gaussian({sigma:g})")


def exponential_kernel(alpha: float, mass: float = 1.0, dim: int = 1) -> KernelSpec:
    """Radial ``exp(-alpha |z|)`` normalised to ``mass``."""
    c = mass * alpha**dim / (dim * ball_volume(dim) * math.gamma(dim))
    return KernelSpec(lambda t, z: c * np.exp(-alpha * _radius(z)), abs(mass), dim, f"exponential({alpha:g})")


def top_hat_kernel(r: float, mass: float = 1.0, dim: int = 1) -> KernelSpec:
    """Uniform density ``mass / |B(0, r)|`` on the closed ball of radius ``r``."""
    c = mass / (ball_volume(dim) * r**dim)
    return KernelSpec(lambda t, z: np.where(_radius(z) <= r, c, 0.0), abs(mass), dim, f"top_hat({r:g})")


def kernel_from_csv(path, dim: int = 1) -> KernelSpec:
    """Time independent kernel tabulated on a lattice: columns ``z1..zN, value``.

    The table spacing must equal the grid spacing it is later sampled on;
    offsets absent from the table are zero.
    """
    rows = []
    with Path(path).open() as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().startswith("#"):
                continue
            try:
                rows.append([float(v) for v in row[: dim + 1]])
            except ValueError:
                continue  # header
    if not rows:
        raise ValueError(f"no numeric rows in kernel table {path}")
    data = np.array(rows)
    z, vals = data[:, :dim].T, data[:, dim]
    step = []
    for d in range(dim):
        u = np.unique(z[d])
        step.append(float(np.min(np.diff(u))) if u.size > 1 else 1.0)
    step = tuple(step)
    keys = {tuple(int(round(z[d, i] / step[d])) for d in range(dim)): vals[i] for i in range(vals.size)}
    mass = float(np.sum(np.abs(vals)) * math.prod(step))

    def K(t, zz):
        zz = np.asarray(zz, dtype=float)
        flat = zz.reshape(dim, -1)
        out = np.array([keys.get(tuple(int(round(flat[d, i] / step[d])) for d in range(dim)), 0.0)
                        for i in range(flat.shape[1])])
        return out.reshape(zz.shape[1:])

    return KernelSpec(K, mass, dim, f"csv({Path(path).name})", lattice_step=step)


KERNELS = {"gaussian": gaussian_kernel, "exponential": exponential_kernel, "top_hat": top_hat_kernel}


def _shift_zero(values, grid, offset):
    # u(x - j h) with zero outside a padded domain
    out = values
    for d, s in enumerate(offset):
        s = int(s)
        if s == 0:
            continue
        if grid.boundary == "periodic":
            out = np.roll(out, s, axis=d)
        else:
            res = np.zeros_like(out)
            n = grid.shape[d]
            if abs(s) < n:
                src = [slice(None)] * out.ndim
                dst = [slice(None)] * out.ndim
                if s > 0:
                    src[d], dst[d] = slice(0, n - s), slice(s, n)
                else:
                    src[d], dst[d] = slice(-s, n), slice(0, n + s)
                res[tuple(dst)] = out[tuple(src)]
            out = res
    return out


def convolve_direct(kernel: KernelSpec, t: float, u: GridFn) -> GridFn:
    """``h^N sum_j K(t, j h) u(x - j h)`` by explicit summation over the kernel support."""
    offs, vals, _ = kernel.sample(t, u.grid)
    acc = np.zeros(u.grid.shape)
    for j in range(vals.size):
        acc += vals[j] * _shift_zero(u.values, u.grid, offs[:, j])
    return GridFn(u.grid, acc * u.grid.cell_volume)


def convolve_fft(kernel: KernelSpec, t: float, u: GridFn) -> GridFn:
    """Circular convolution through the discrete Fourier transform (periodic grids only)."""
    g = u.grid
    if g.boundary != "periodic":
        raise GridMismatch("transform path needs a periodic grid")
    offs, vals, _ = kernel.sample(t, g)
    kgrid = np.zeros(g.shape)
    idx = tuple(offs[d] % g.shape[d] for d in range(g.ndim))
    np.add.at(kgrid, idx, vals)
    axes = tuple(range(g.ndim))
    out = np.fft.irfftn(np.fft.rfftn(u.values, axes=axes) * np.fft.rfftn(kgrid, axes=axes), s=g.shape, axes=axes)
    return GridFn(g, out * g.cell_volume)


def convolve(kernel: KernelSpec, t: float, u: GridFn, method: str = "auto") -> GridFn:
    """Discrete ``(K(t) * u)(x)``; zero extension outside padded grids."""
    if method == "auto":
        method = "fft" if u.grid.boundary == "periodic" and u.values.size >= FFT_THRESHOLD else "direct"
    if method == "fft":
        return convolve_fft(kernel, t, u)
    if method == "direct":
        return convolve_direct(kernel, t, u)
    raise ValueError(f"unknown method {method!r}")


def kernel_l1_distance(a: KernelSpec, b: KernelSpec, grid: UniformGrid, times) -> float:
    """``max_t ||K(t) - K~(t)||_L1`` on the grid lattice."""
    best = 0.0
    for t in np.atleast_1d(times):
        oa, va, _ = a.sample(t, grid)
        ob, vb, _ = b.sample(t, grid)
        table = {}
        for j in range(va.size):
            table[tuple(oa[:, j])] = table.get(tuple(oa[:, j]), 0.0) + va[j]
        for j in range(vb.size):
            table[tuple(ob[:, j])] = table.get(tuple(ob[:, j]), 0.0) - vb[j]
        best = max(best, float(sum(abs(v) for v in table.values()) * grid.cell_volume))
    return best


def contraction_horizon(kappa: float, k: float, target: float = 0.5) -> float:
    """Largest ``T`` with ``(exp(kappa T) - 1) / kappa * k <= target``."""
    if k <= 0:
        raise ValueError("kernel mass must be positive")
    if not 0 < target < 1:
        raise ValueError("target must lie in (0, 1)")
    if kappa < 0:
        raise ValueError("kappa must be nonnegative")
    if kappa * target / k < 1e-12:
        return target / k
    return math.log1p(kappa * target / k) / kappa


def picard_solve(spec: ProblemSpec, kernel: KernelSpec, grid: UniformGrid, T: float, cfl: float = 0.5,
                 tol: float | None = None, target: float = 0.5, max_iter: int = 60,
                 u_range=None, kappa: float | None = None, snapshot_times=None) -> Trajectory:
    """Solve ``u_t + Div f = F + K * u`` by slab-wise fixed-point iteration.

    Each slab is at most ``contraction_horizon(kappa, k, target)`` long
    with ``kappa = 2N |grad d_u f| + |d_u F|`` and ``k`` the sampled kernel
    mass.  The first iterate on a slab freezes ``K * u`` at the slab start;
    iteration stops once ``sup_t ||w_{m+1} - w_m||_L1 < tol``.  The result
    keeps every step (landing exactly on ``snapshot_times``), and
    ``metadata["picard"]`` records the distances per slab.
    """
    u0 = spec.initial(grid)
    if tol is None:
        tol = max(1e-8 * l1_norm(u0), 1e-12)
    if u_range is None:
        u_range = spec.state_interval or default_state_interval(u0.values)
    check_times = np.linspace(0.0, T, 5)
    k = kernel.sampled_mass(grid, check_times)
    if kappa is None:
        box = SamplingBox.for_grid(grid, T, u_range)
        rep = audit_hypotheses(spec, box, resolution=(5, min(max(grid.shape) + 1, 257), 9))
        kappa = 2 * spec.dim * rep.sup_grad_du_f + rep.sup_du_F
    slab = contraction_horizon(kappa, k, target) if k > 0 else T
    n_slabs = max(1, math.ceil(T / slab - 1e-12))
    edges = np.linspace(0.0, T, n_slabs + 1)
    sup_f, sup_F = speed_bounds(spec, grid, 0.0, T, u_range)
    dt = min(cfl_dt(grid, sup_f, cfl, sup_F), T / 10)

    times, states, extras, dts = [0.0], [u0], [], []
    history = []
    stops = [float(s) for s in (snapshot_times if snapshot_times is not None else [])]
    u_start = u0
    for a, b in zip(edges[:-1], edges[1:]):
        frozen = convolve(kernel, a, u_start)
        w = solve(spec, grid, b, every_step=True, t0=a, initial=u_start, dt=dt, u_range=u_range,
                  extra_source=lambda i, t, s=frozen: s, check_padding_margin=False, snapshot_times=stops)
        dists = []
        ratios_high = 0
        for it in range(max_iter):
            conv = [convolve(kernel, tt, s) for tt, s in zip(w.times, w.states)]
            new = solve(spec, grid, b, every_step=True, t0=a, initial=u_start, dt=dt, u_range=u_range,
                        extra_source=lambda i, t, c=conv: c[i], check_padding_margin=False, snapshot_times=stops)
            d = max(l1_norm(x - y) for x, y in zip(new.states, w.states))
            dists.append(d)
            w = new
            if d < tol:
                break
            if len(dists) > 1 and dists[-2] > 0 and d / dists[-2] >= 0.9:
                ratios_high += 1
                if ratios_high >= 3:
                    raise NoContraction(f"iterate distances {dists} on slab [{a}, {b}]")
            else:
                ratios_high = 0
        else:
            raise NoContraction(f"no convergence to tol={tol} within {max_iter} iterates on [{a}, {b}]")
        log.debug("slab [%g, %g]: %d iterates, distances %s", a, b, len(dists), dists)
        history.append({"slab": (float(a), float(b)), "distances": dists})
        times.extend(w.times[1:])
        states.extend(w.states[1:])
        extras.extend(w.extra_sources)
        dts.extend(w.dt_history)
        u_start = w.final

    meta = {
        "numerical_flux": "local_lax_friedrichs",
        "source_stage": "explicit_euler",
        "cfl": cfl,
        "dt": dt,
        "sup_du_f": sup_f,
        "sup_du_F": sup_F,
        "u_range": tuple(u_range),
        "every_step": True,
        "problem": spec.name,
        "kernel": kernel.name,
        "kappa": kappa,
        "kernel_mass": k,
        "slab_length": float(edges[1] - edges[0]),
        "picard": history,
        "tol": tol,
    }
    return Trajectory(np.array(times), states, np.array(dts), meta, extras)
