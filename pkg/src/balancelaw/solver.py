"""Monotone finite-volume solver for ``u_t + Div f(t, x, u) = F(t, x, u) [+ s(t, x)]``.

The hyperbolic part is an unsplit, dimension-by-dimension local
Lax-Friedrichs (Rusanov) update with interface-evaluated flux; the source
is applied afterwards by one explicit Euler stage (Lie splitting).  Both
stages are monotone under the step restriction of :func:`cfl_dt`, so the
scheme satisfies a discrete entropy inequality for every Kruzkov constant.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import CflViolation, InsufficientPadding, NonFiniteState
from .grid import GridFn, UniformGrid, _pad_axis, total_variation, write_snapshots_csv
from .model import ProblemSpec, default_state_interval, true_source

__all__ = [
    "EPS_FLOOR",
    "Trajectory",
    "cfl_dt",
    "interface_states",
    "numerical_flux",
    "hyperbolic_stage",
    "step",
    "solve",
    "speed_bounds",
]

EPS_FLOOR = 1e-14
FLUX_NAME = "local_lax_friedrichs"
# samples of the interface state interval used for the local wave speed; exact for
# fluxes whose d_u f is monotone in u (all built-ins)
_SPEED_SAMPLES = np.linspace(0.0, 1.0, 5)
_RANGE_SAMPLES = 9


@dataclass
class Trajectory:
    """Snapshots of a discrete solution.

    When ``metadata["every_step"]`` is true, consecutive states are exactly
    one scheme step apart, ``dt_history[k] == times[k+1] - times[k]`` and
    ``extra_sources[k]`` holds the frozen source used in that step (or None).
    """

    times: np.ndarray
    states: list
    dt_history: np.ndarray
    metadata: dict = field(default_factory=dict)
    extra_sources: list | None = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if len(self.times) != len(self.states):
            raise ValueError("one state per time required")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")
        g = self.states[0].grid
        if any(s.grid is not g and not s.grid.compatible(g) for s in self.states):
            raise ValueError("states must share one grid")

    @property
    def grid(self) -> UniformGrid:
        return self.states[0].grid

    @property
    def final(self) -> GridFn:
        return self.states[-1]

    def state_at(self, t: float, rtol: float = 1e-9) -> GridFn:
        i = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[i] - t) > rtol * max(1.0, abs(t)):
            raise KeyError(f"no snapshot at t={t}")
        return self.states[i]

    def tv_series(self) -> np.ndarray:
        return np.array([total_variation(s) for s in self.states])

    def subsample(self, times: Sequence[float]) -> "Trajectory":
        idx = [int(np.argmin(np.abs(self.times - t))) for t in times]
        meta = dict(self.metadata, every_step=False)
        return Trajectory(self.times[idx], [self.states[i] for i in idx], self.dt_history, meta)

    def to_csv(self, path) -> None:
        """Columns ``t, index, x1..xN, value``."""
        write_snapshots_csv(path, self.states, self.times)


def cfl_dt(grid: UniformGrid, sup_du_f: float, cfl: float = 0.5, sup_du_F: float = 0.0) -> float:
    """Explicit step ``cfl h / (N max|d_u f|)``, capped by ``cfl / max|d_u F|``."""
    if sup_du_f < 0 or sup_du_F < 0:
        raise ValueError("speed bounds must be nonnegative")
    if not 0 < cfl <= 1:
        raise ValueError("cfl must lie in (0, 1]")
    dt = cfl * grid.h / (grid.ndim * max(sup_du_f, EPS_FLOOR))
    return min(dt, cfl / max(sup_du_F, EPS_FLOOR))


def interface_states(values: np.ndarray, grid: UniformGrid, d: int):
    """Left and right states at the ``shape[d] + 1`` interfaces normal to axis ``d``."""
    ext = _pad_axis(values, grid, d, 1)
    n = grid.shape[d]
    left = np.take(ext, range(0, n + 1), axis=d)
    right = np.take(ext, range(1, n + 2), axis=d)
    return left, right


def _wave_speed(spec: ProblemSpec, t, xf, d, a, b, u_range=None):
    lo = np.minimum(a, b)
    span = np.abs(b - a)
    alpha = np.zeros(np.shape(a))
    for s in _SPEED_SAMPLES:
        alpha = np.maximum(alpha, np.abs(spec.flux.du_f(t, xf, lo + s * span)[d]))
    if u_range is not None:
        for u in np.linspace(u_range[0], u_range[1], _RANGE_SAMPLES):
            alpha = np.maximum(alpha, np.abs(spec.flux.du_f(t, xf, u)[d]))
    return alpha


def numerical_flux(spec: ProblemSpec, t: float, d: int, xf: np.ndarray, a, b, u_range=None) -> np.ndarray:
    """Rusanov flux ``(f(a) + f(b)) / 2 - alpha (b - a) / 2`` at interface points ``xf``.

    ``alpha`` is the largest ``|d_u f_d|`` at the interface position over the
    state interval between ``a`` and ``b`` joined with ``u_range``.  While
    the states stay in ``u_range`` the viscosity does not depend on them,
    so the update is monotone under ``alpha dt / h <= 1``; with a purely
    local ``alpha`` the derivative of ``alpha`` in the states can break
    monotonicity near that Courant limit.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    fa = spec.flux.f(t, xf, a)[d]
    fb = spec.flux.f(t, xf, b)[d]
    return 0.5 * (fa + fb) - 0.5 * _wave_speed(spec, t, xf, d, a, b, u_range) * (b - a)


def hyperbolic_stage(values: np.ndarray, grid: UniformGrid, t: float, dt: float, spec: ProblemSpec,
                     check_cfl: bool = True, u_range=None):
    """One conservative LLF update; returns ``(u_star, courant)``.

    ``courant`` is ``sum_d max(alpha_d) dt / h_d`` over the grid, which must
    not exceed 1 for monotonicity.
    """
    out = np.array(values, dtype=float)
    courant = 0.0
    for d in range(grid.ndim):
        a, b = interface_states(values, grid, d)
        xf = grid.faces(d)
        alpha = _wave_speed(spec, t, xf, d, a, b, u_range)
        fa = spec.flux.f(t, xf, a)[d]
        fb = spec.flux.f(t, xf, b)[d]
        H = 0.5 * (fa + fb) - 0.5 * alpha * (b - a)
        courant += float(np.max(alpha)) * dt / grid.cell_size[d]
        out -= dt / grid.cell_size[d] * np.diff(H, axis=d)
    if check_cfl and courant > 1.0 + 1e-12:
        raise CflViolation(f"Courant number {courant:.6g} exceeds 1")
    return out, courant


def step(state: GridFn, t: float, dt: float, spec: ProblemSpec, extra_source=None,
         check_cfl: bool = True, u_range=None) -> GridFn:
    """Advance ``state`` by ``dt``: LLF transport, then explicit Euler source.

    ``extra_source`` (a GridFn or array) is added to ``F`` during the
    source stage; it is how a frozen convolution term enters.  ``u_range``
    fixes the state interval the numerical viscosity is taken over (see
    :func:`numerical_flux`); two states compared for monotonicity must
    share it.
    """
    grid = state.grid
    ustar, _ = hyperbolic_stage(state.values, grid, t, dt, spec, check_cfl, u_range)
    src = spec.source.F(t, grid.centers(), ustar)
    if extra_source is not None:
        src = src + (extra_source.values if isinstance(extra_source, GridFn) else np.asarray(extra_source))
    new = ustar + dt * src
    if not np.all(np.isfinite(new)):
        raise NonFiniteState(f"non-finite state after step at t={t}")
    return GridFn(grid, new)


def speed_bounds(spec: ProblemSpec, grid: UniformGrid, t0: float, T: float, u_range, n_t: int = 5, n_u: int = 9):
    """``(sup |d_u f|, sup |d_u F|)`` over interfaces/centres, ``n_t`` times and the state interval."""
    us = np.linspace(u_range[0], u_range[1], n_u)
    sup_f = sup_F = 0.0
    xc = grid.centers()
    for t in np.linspace(t0, T, n_t):
        for d in range(grid.ndim):
            xf = grid.faces(d)
            for u in us:
                sup_f = max(sup_f, float(np.max(np.abs(spec.flux.du_f(t, xf, u)[d]))))
        for u in us:
            sup_F = max(sup_F, float(np.max(np.abs(spec.source.du_F(t, xc, u)))))
    return sup_f, sup_F


def check_padding(spec: ProblemSpec, u0: GridFn, t0: float, T: float, sup_du_f: float) -> float:
    """Raise :class:`InsufficientPadding` unless the data can not reach a padded boundary.

    The active set is where ``u0`` is not locally constant or where the
    true source does not vanish at the local initial state; waves leave it
    at speed at most ``sup_du_f``.  Returns the smallest margin.
    """
    grid = u0.grid
    if grid.boundary == "periodic":
        return math.inf
    vals = u0.values
    scale = 1e-12 * (1.0 + float(np.max(np.abs(vals))))
    active = np.zeros(grid.shape, dtype=bool)
    for d in range(grid.ndim):
        jump = np.abs(np.diff(vals, axis=d)) > scale
        lo = [slice(None)] * grid.ndim
        hi = [slice(None)] * grid.ndim
        lo[d] = slice(0, -1)
        hi[d] = slice(1, None)
        active[tuple(lo)] |= jump
        active[tuple(hi)] |= jump
    src = true_source(spec)
    xc = grid.centers()
    for t in np.linspace(t0, T, 3):
        active |= np.abs(src(t, xc, vals)) > scale
    if not active.any():
        return math.inf
    need = sup_du_f * (T - t0)
    margin = math.inf
    for d in range(grid.ndim):
        idx = np.nonzero(np.any(active, axis=tuple(j for j in range(grid.ndim) if j != d)))[0]
        h = grid.cell_size[d]
        margin = min(margin, idx[0] * h, (grid.shape[d] - 1 - idx[-1]) * h)
    if margin < need:
        raise InsufficientPadding(f"padding margin {margin:.4g} < propagation distance {need:.4g}")
    return margin


def solve(spec: ProblemSpec, grid: UniformGrid, T: float, cfl: float = 0.5, snapshot_times=None,
          every_step: bool = False, extra_source: Callable | None = None, t0: float = 0.0,
          initial: GridFn | None = None, dt: float | None = None, u_range=None,
          check_padding_margin: bool = True, min_steps: int = 10) -> Trajectory:
    """Advance from ``t0`` to ``T`` with a fixed step, shortened only to land on snapshot times.

    ``extra_source(k, t)`` returns the frozen source for step ``k`` (used by
    the nonlocal Picard solver).  With ``every_step`` all intermediate
    states are kept, as needed by the entropy residual.  The step never
    exceeds ``(T - t0) / min_steps``, which matters when both wave speed
    and source derivative vanish.
    """
    u = spec.initial(grid) if initial is None else initial
    if u_range is None:
        u_range = spec.state_interval or default_state_interval(u.values)
    sup_f, sup_F = speed_bounds(spec, grid, t0, T, u_range)
    if dt is None:
        dt = min(cfl_dt(grid, sup_f, cfl, sup_F), (T - t0) / max(min_steps, 1))
    if check_padding_margin:
        check_padding(spec, u, t0, T, sup_f)

    stops = sorted({float(s) for s in (snapshot_times or []) if t0 < s < T} | {float(T)})
    times = [t0]
    states = [u]
    extras = [] if every_step else None
    dts = []
    t = t0
    k = 0
    for stop in stops:
        while t < stop:
            remaining = stop - t
            h_t = remaining if remaining <= dt * (1 + 1e-9) else dt
            s = extra_source(k, t) if extra_source is not None else None
            u = step(u, t, h_t, spec, s, u_range=u_range)
            t = stop if h_t == remaining else t + h_t
            dts.append(h_t)
            k += 1
            if every_step:
                times.append(t)
                states.append(u)
                extras.append(s)
        if not every_step:
            times.append(t)
            states.append(u)
    meta = {
        "numerical_flux": FLUX_NAME,
        "source_stage": "explicit_euler",
        "cfl": cfl,
        "dt": dt,
        "sup_du_f": sup_f,
        "sup_du_F": sup_F,
        "u_range": tuple(u_range),
        "every_step": every_step,
        "problem": spec.name,
        "steps": k,
    }
    return Trajectory(np.array(times), states, np.array(dts), meta, extras)
