"""Cell-wise discrete Kruzkov entropy residuals of solver output.

For a constant ``k`` the monotone scheme satisfies, cell by cell,

    (|u^{n+1} - k| - |u^n - k|) / dt + sum_d (Q_{i+1/2} - Q_{i-1/2}) / h_d
        + sign(u* - k) div f(t, x, k) - sign(u^{n+1} - k) S^n  <=  err_k,

where ``u*`` is the transported state before the source stage, ``S^n`` the
source applied in that stage, ``Q(a, b) = H(a v k, b v k) - H(a ^ k, b ^ k)``
the entropy flux induced by the numerical flux ``H``, and ``err_k`` the
difference between ``div f(t, x, k)`` and its discrete counterpart (zero
for ``x``-independent fluxes, ``O(h^2)`` otherwise).  The residual
reported is the left-hand side.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import SchemeMismatch
from .grid import GridFn, l1_distance_ball
from .model import ProblemSpec
from .solver import FLUX_NAME, Trajectory, hyperbolic_stage, interface_states, numerical_flux

__all__ = ["EntropyReport", "default_k_values", "entropy_residual", "initial_trace_check"]


@dataclass
class EntropyReport:
    """Maximum positive residual per ``(k, step)`` plus the affine-range (conservation) residual."""

    k_values: np.ndarray
    times: np.ndarray
    max_positive: np.ndarray
    conservation: float

    def max(self) -> float:
        return float(np.max(self.max_positive)) if self.max_positive.size else 0.0

    def per_k(self) -> np.ndarray:
        return np.max(self.max_positive, axis=1)

    def to_csv(self, path) -> None:
        """Columns ``k, t, max_positive_residual`` (``t`` is the step's start time)."""
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["k", "t", "max_positive_residual"])
            for i, k in enumerate(self.k_values):
                for j, t in enumerate(self.times):
                    w.writerow([repr(float(k)), repr(float(t)), repr(float(self.max_positive[i, j]))])


def default_k_values(traj: Trajectory, n: int = 9) -> np.ndarray:
    """``n`` equispaced constants over the state range widened by 5% on each side."""
    lo = min(float(np.min(s.values)) for s in traj.states)
    hi = max(float(np.max(s.values)) for s in traj.states)
    pad = 0.05 * max(hi - lo, 1e-12 * max(1.0, abs(hi)))
    return np.linspace(lo - pad, hi + pad, n)


def _interior(grid):
    if grid.boundary == "periodic":
        return (slice(None),) * grid.ndim
    return tuple(slice(1, -1) for _ in range(grid.ndim))


def _residuals(spec, grid, t, dt, un, un1, extra, kk, u_range=None):
    """Residual array of shape ``(len(kk), *grid.shape)`` for one step."""
    ustar, _ = hyperbolic_stage(un, grid, t, dt, spec, check_cfl=False, u_range=u_range)
    xc = grid.centers()
    S = spec.source.F(t, xc, ustar) * np.ones(grid.shape)
    if extra is not None:
        S = S + (extra.values if isinstance(extra, GridFn) else np.asarray(extra))
    kb = kk.reshape((-1,) + (1,) * grid.ndim)
    r = (np.abs(un1 - kb) - np.abs(un - kb)) / dt
    for d in range(grid.ndim):
        a, b = interface_states(un, grid, d)
        xf = grid.faces(d)
        hi = numerical_flux(spec, t, d, xf, np.maximum(a, kb), np.maximum(b, kb), u_range)
        lo = numerical_flux(spec, t, d, xf, np.minimum(a, kb), np.minimum(b, kb), u_range)
        r += np.diff(hi - lo, axis=d + 1) / grid.cell_size[d]
    divk = spec.flux.div_f(t, xc, kb * np.ones((1,) + grid.shape))
    r += np.sign(ustar - kb) * divk - np.sign(un1 - kb) * S
    return r


def entropy_residual(traj: Trajectory, spec: ProblemSpec, k_values=None) -> EntropyReport:
    """Discrete entropy residuals over every step of ``traj``.

    ``traj`` must keep every scheme step (``solve(..., every_step=True)``)
    and come from the local Lax-Friedrichs scheme.  On padded grids the
    boundary cells are excluded.  ``conservation`` is the largest
    ``|residual|`` at two constants outside the state range, where the
    entropy is affine and the residual reduces to the conservation defect.
    """
    meta = traj.metadata
    if meta.get("numerical_flux") != FLUX_NAME:
        raise SchemeMismatch(f"trajectory flux {meta.get('numerical_flux')!r} is not {FLUX_NAME!r}")
    if not meta.get("every_step"):
        raise SchemeMismatch("entropy residuals need every scheme step")
    kk = default_k_values(traj) if k_values is None else np.asarray(k_values, dtype=float)
    lo = min(float(np.min(s.values)) for s in traj.states)
    hi = max(float(np.max(s.values)) for s in traj.states)
    span = max(1.0, hi - lo)
    outside = np.array([lo - span, hi + span])
    allk = np.concatenate([kk, outside])
    grid = traj.grid
    inner = (slice(None),) + _interior(grid)
    extras = traj.extra_sources or [None] * (len(traj.states) - 1)
    maxpos = np.zeros((kk.size, len(traj.states) - 1))
    cons = 0.0
    for n in range(len(traj.states) - 1):
        t, dt = traj.times[n], traj.times[n + 1] - traj.times[n]
        r = _residuals(spec, grid, t, dt, traj.states[n].values, traj.states[n + 1].values, extras[n], allk,
                       meta.get("u_range"))[inner]
        flat = r.reshape(allk.size, -1)
        maxpos[:, n] = np.maximum(np.max(flat[: kk.size], axis=1), 0.0)
        cons = max(cons, float(np.max(np.abs(flat[kk.size:]))))
    return EntropyReport(kk, traj.times[:-1].copy(), maxpos, cons)


def initial_trace_check(traj: Trajectory, u0: GridFn, r: float = math.inf, x0=None, t1: float | None = None) -> float:
    """``int_{B(x0, r)} |u(t1) - u0| dx`` at the first positive snapshot (or at ``t1``)."""
    if t1 is None:
        if len(traj.times) < 2:
            return 0.0
        t1 = traj.times[1]
    return l1_distance_ball(traj.state_at(t1), u0, x0, r)
