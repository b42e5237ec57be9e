"""Problem definitions and sampled audits of the regularity hypotheses.

Vectorisation convention used throughout: a point set ``x`` is an array of
shape ``(N, *S)``, a state ``u`` has shape ``S`` (or broadcasts to it), and
``t`` is a scalar.  Vector-valued maps return a leading axis of length
``N``; ``grad_du_f`` returns shape ``(N, N, *S)`` with entry ``[i, j]``
equal to ``d/dx_j d/du f_i``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .constants import kappa as _kappa
from .constants import kappa0 as _kappa0
from .errors import DimensionMismatch, NonFiniteSample

__all__ = [
    "FluxField",
    "SourceField",
    "ProblemSpec",
    "SamplingBox",
    "HypothesisReport",
    "SpecDifference",
    "true_source",
    "audit_hypotheses",
    "difference_spec",
    "default_state_interval",
]

FD_SCALE = 1e-5


def _fd_u(func, t, x, u, scale):
    u = np.asarray(u, dtype=float)
    h = scale * (1.0 + np.abs(u))
    return (func(t, x, u + h) - func(t, x, u - h)) / (2.0 * h)


def _fd_x(func, t, x, u, j, scale):
    x = np.asarray(x, dtype=float)
    h = scale * (1.0 + np.abs(x[j]))
    xp = x.copy()
    xm = x.copy()
    xp[j] += h
    xm[j] -= h
    return (func(t, xp, u) - func(t, xm, u)) / (2.0 * h)


def _fd_t(func, t, x, u, scale):
    h = scale * (1.0 + abs(t))
    return (func(t + h, x, u) - func(t - h, x, u)) / (2.0 * h)


def _shape_of(x, u):
    return np.broadcast_shapes(np.shape(x)[1:], np.shape(u))


class FluxField:
    """Flux ``f(t, x, u)`` with optional analytic derivatives.

    Any derivative not supplied is replaced by a centred finite difference
    with step ``fd_scale * (1 + |argument|)``.
    """

    def __init__(self, f, du_f=None, grad_du_f=None, div_f=None, grad_div_f=None,
                 dim: int = 1, fd_scale: float = FD_SCALE):
        self._f = f
        self._du_f = du_f
        self._grad_du_f = grad_du_f
        self._div_f = div_f
        self._grad_div_f = grad_div_f
        self.dim = dim
        self.fd_scale = fd_scale

    def with_fd_scale(self, fd_scale: float, analytic: bool = True) -> "FluxField":
        if analytic:
            return FluxField(self._f, self._du_f, self._grad_du_f, self._div_f, self._grad_div_f,
                             self.dim, fd_scale)
        return FluxField(self._f, dim=self.dim, fd_scale=fd_scale)

    def _full(self, val, x, u):
        return np.broadcast_to(np.asarray(val, dtype=float), (self.dim,) + _shape_of(x, u))

    def f(self, t, x, u):
        return self._full(self._f(t, x, u), x, u)

    def du_f(self, t, x, u):
        if self._du_f is not None:
            return self._full(self._du_f(t, x, u), x, u)
        return _fd_u(self.f, t, x, u, self.fd_scale)

    def grad_du_f(self, t, x, u):
        if self._grad_du_f is not None:
            return np.broadcast_to(np.asarray(self._grad_du_f(t, x, u), dtype=float),
                                   (self.dim, self.dim) + _shape_of(x, u))
        return np.stack([_fd_x(self.du_f, t, x, u, j, self.fd_scale) for j in range(self.dim)], axis=1)

    def div_f(self, t, x, u):
        if self._div_f is not None:
            return np.broadcast_to(np.asarray(self._div_f(t, x, u), dtype=float), _shape_of(x, u))
        return sum(_fd_x(self.f, t, x, u, j, self.fd_scale)[j] for j in range(self.dim))

    def grad_div_f(self, t, x, u):
        if self._grad_div_f is not None:
            return self._full(self._grad_div_f(t, x, u), x, u)
        return np.stack([_fd_x(self.div_f, t, x, u, j, self.fd_scale) for j in range(self.dim)])

    # time derivatives only ever get sampled for finiteness
    def dt_du_f(self, t, x, u):
        return _fd_t(self.du_f, t, x, u, self.fd_scale)

    def dt_div_f(self, t, x, u):
        return _fd_t(self.div_f, t, x, u, self.fd_scale)


class SourceField:
    """Source ``F(t, x, u)`` with optional analytic derivatives."""

    def __init__(self, F=None, du_F=None, grad_F=None, dim: int = 1, fd_scale: float = FD_SCALE):
        self._F = F
        self._du_F = du_F
        self._grad_F = grad_F
        self.dim = dim
        self.fd_scale = fd_scale

    @property
    def is_zero(self) -> bool:
        return self._F is None

    def F(self, t, x, u):
        shape = _shape_of(x, u)
        if self._F is None:
            return np.zeros(shape)
        return np.broadcast_to(np.asarray(self._F(t, x, u), dtype=float), shape)

    def du_F(self, t, x, u):
        if self._F is None:
            return np.zeros(_shape_of(x, u))
        if self._du_F is not None:
            return np.broadcast_to(np.asarray(self._du_F(t, x, u), dtype=float), _shape_of(x, u))
        return _fd_u(self.F, t, x, u, self.fd_scale)

    def grad_F(self, t, x, u):
        shape = (self.dim,) + _shape_of(x, u)
        if self._F is None:
            return np.zeros(shape)
        if self._grad_F is not None:
            return np.broadcast_to(np.asarray(self._grad_F(t, x, u), dtype=float), shape)
        return np.stack([_fd_x(self.F, t, x, u, j, self.fd_scale) for j in range(self.dim)])

    def dt_F(self, t, x, u):
        return _fd_t(self.F, t, x, u, self.fd_scale)


@dataclass(frozen=True)
class ProblemSpec:
    """Cauchy problem ``u_t + Div f(t, x, u) = F(t, x, u)``, ``u(0) = u0``.

    ``u0`` is either a callable of ``x`` (averaged onto the grid when a
    grid is supplied) or a :class:`~balancelaw.grid.GridFn`.
    """

    flux: FluxField
    source: SourceField
    u0: object
    dim: int = 1
    name: str = "custom"
    state_interval: tuple | None = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.flux.dim != self.dim or self.source.dim != self.dim:
            raise DimensionMismatch(
                f"flux dim {self.flux.dim}, source dim {self.source.dim}, problem dim {self.dim}")

    def initial(self, grid):
        from .grid import GridFn

        if grid.ndim != self.dim:
            raise DimensionMismatch(f"grid dim {grid.ndim} vs problem dim {self.dim}")
        if isinstance(self.u0, GridFn):
            if not self.u0.grid.compatible(grid):
                from .errors import GridMismatch
                raise GridMismatch("initial datum lives on a different grid")
            return self.u0
        return grid.average(self.u0)

    def replace(self, **kw) -> "ProblemSpec":
        d = dict(flux=self.flux, source=self.source, u0=self.u0, dim=self.dim, name=self.name,
                 state_interval=self.state_interval, params=self.params)
        d.update(kw)
        return ProblemSpec(**d)


def true_source(spec: ProblemSpec) -> Callable:
    """``(t, x, u) -> F(t, x, u) - div_x f(t, x, u)``."""

    def s(t, x, u):
        return spec.source.F(t, x, u) - spec.flux.div_f(t, x, u)

    return s


def _grad_true_source(spec, t, x, u):
    return spec.source.grad_F(t, x, u) - spec.flux.grad_div_f(t, x, u)


def default_state_interval(values) -> tuple:
    """``[min - 0.1 range, max + 0.1 range]``; a flat datum gets ``+-0.1 max(1, |c|)``."""
    lo = float(np.min(values))
    hi = float(np.max(values))
    pad = 0.1 * (hi - lo) if hi > lo else 0.1 * max(1.0, abs(lo))
    return (lo - pad, hi + pad)


@dataclass(frozen=True)
class SamplingBox:
    """Bounded region ``[t0, t1] x prod [a_d, b_d] x [u_lo, u_hi]`` for audits."""

    t_range: tuple
    x_ranges: tuple
    u_range: tuple

    @property
    def dim(self) -> int:
        return len(self.x_ranges)

    @classmethod
    def for_grid(cls, grid, T: float, u_range):
        return cls((0.0, float(T)), tuple(zip(grid.origin, grid.upper)), tuple(u_range))


def _resolution(resolution):
    if np.ndim(resolution) == 0:
        r = int(resolution)
        res = (r, r, r)
    else:
        res = tuple(int(r) for r in resolution)
    if min(res) < 2:
        raise ValueError("resolution must be >= 2 samples per axis")
    return res


def _lattice(box: SamplingBox, nx: int, nu: int):
    axes = [np.linspace(a, b, nx) for a, b in box.x_ranges]
    xs = np.stack(np.meshgrid(*axes, indexing="ij"))
    weights = np.ones(xs.shape[1:])
    for d, ax in enumerate(axes):
        w = np.full(nx, ax[1] - ax[0])
        w[0] = w[-1] = 0.5 * (ax[1] - ax[0])
        shape = [1] * len(axes)
        shape[d] = nx
        weights = weights * w.reshape(shape)
    us = np.linspace(box.u_range[0], box.u_range[1], nu)
    X = np.broadcast_to(xs[..., None], xs.shape + (nu,)).copy()
    U = np.broadcast_to(us, xs.shape[1:] + (nu,)).copy()
    return xs, weights, X, U


def _finite(name, arr):
    if not np.all(np.isfinite(arr)):
        raise NonFiniteSample(f"{name} evaluated to a non-finite value")
    return arr


@dataclass(frozen=True)
class HypothesisReport:
    """Sampled sup-norms and space-time integrals consumed by the envelopes.

    ``grad_source_profile[i]`` is ``int sup_u |grad (F - div f)(times[i], x, u)| dx``
    and ``source_profile[i]`` the same without the gradient.
    """

    dim: int
    sup_du_f: float
    sup_grad_du_f: float
    sup_du_F: float
    sup_du_FG: float
    sup_du_fg: float
    int_grad_true_source: float
    int_true_source: float
    times: np.ndarray = field(repr=False)
    grad_source_profile: np.ndarray = field(repr=False)
    source_profile: np.ndarray = field(repr=False)
    box: SamplingBox | None = None
    resolution: tuple = ()
    sup_du_g: float = 0.0

    def kappa0(self) -> float:
        return _kappa0(self.dim, self.sup_grad_du_f, self.sup_du_F)

    def kappa(self) -> float:
        return _kappa(self.dim, self.sup_grad_du_f, self.sup_du_F, self.sup_du_FG)

    def as_dict(self) -> dict:
        return {
            "dim": self.dim,
            "sup_du_f": self.sup_du_f,
            "sup_grad_du_f": self.sup_grad_du_f,
            "sup_du_F": self.sup_du_F,
            "sup_du_FG": self.sup_du_FG,
            "sup_du_fg": self.sup_du_fg,
            "sup_du_g": self.sup_du_g,
            "int_grad_true_source": self.int_grad_true_source,
            "int_true_source": self.int_true_source,
            "box": None if self.box is None else {
                "t_range": list(self.box.t_range),
                "x_ranges": [list(r) for r in self.box.x_ranges],
                "u_range": list(self.box.u_range),
            },
            "resolution": list(self.resolution),
        }


def audit_hypotheses(spec: ProblemSpec, box: SamplingBox, resolution=33, other: ProblemSpec | None = None,
                     times: Sequence[float] | None = None) -> HypothesisReport:
    """Sample every norm the envelopes need over ``box``.

    Sup-norms are maxima over a lattice with ``resolution`` points per axis
    (an int, or ``(n_t, n_x, n_u)``); the x-integrals use the trapezoid
    rule on the same lattice and the time integrals the trapezoid rule over
    ``times`` (default: ``n_t`` equispaced instants).  Matrix norms are
    Frobenius norms, which dominate the operator norm.  With ``other`` the
    difference norms ``|d_u (f - g)|``, ``|d_u (F - G)|`` and the speed
    bound ``M = |d_u g|`` of the comparison problem are filled in.
    """
    if box.dim != spec.dim:
        raise DimensionMismatch(f"box dim {box.dim} vs problem dim {spec.dim}")
    if other is not None and other.dim != spec.dim:
        raise DimensionMismatch("comparison problem has a different dimension")
    nt, nx, nu = _resolution(resolution)
    ts = np.linspace(box.t_range[0], box.t_range[1], nt) if times is None else np.asarray(times, dtype=float)
    _, weights, X, U = _lattice(box, nx, nu)

    sup_du_f = sup_grad = sup_du_F = sup_FG = sup_fg = sup_g = 0.0
    g_prof = np.zeros(ts.size)
    s_prof = np.zeros(ts.size)
    for i, t in enumerate(ts):
        du_f = _finite("d_u f", spec.flux.du_f(t, X, U))
        sup_du_f = max(sup_du_f, float(np.max(np.sqrt(np.sum(du_f**2, axis=0)))))
        gdu = _finite("grad d_u f", spec.flux.grad_du_f(t, X, U))
        sup_grad = max(sup_grad, float(np.max(np.sqrt(np.sum(gdu**2, axis=(0, 1))))))
        sup_du_F = max(sup_du_F, float(np.max(np.abs(_finite("d_u F", spec.source.du_F(t, X, U))))))
        grad_s = _finite("grad(F - div f)", _grad_true_source(spec, t, X, U))
        g_prof[i] = float(np.sum(np.max(np.sqrt(np.sum(grad_s**2, axis=0)), axis=-1) * weights))
        s = _finite("F - div f", true_source(spec)(t, X, U))
        s_prof[i] = float(np.sum(np.max(np.abs(s), axis=-1) * weights))
        _finite("d_t d_u f", spec.flux.dt_du_f(t, X, U))
        _finite("d_t div f", spec.flux.dt_div_f(t, X, U))
        _finite("d_t F", spec.source.dt_F(t, X, U))
        if other is not None:
            du_g = _finite("d_u g", other.flux.du_f(t, X, U))
            sup_g = max(sup_g, float(np.max(np.sqrt(np.sum(du_g**2, axis=0)))))
            dfg = du_f - du_g
            sup_fg = max(sup_fg, float(np.max(np.sqrt(np.sum(_finite("d_u(f-g)", dfg) ** 2, axis=0)))))
            dFG = spec.source.du_F(t, X, U) - other.source.du_F(t, X, U)
            sup_FG = max(sup_FG, float(np.max(np.abs(_finite("d_u(F-G)", dFG)))))
    integ = (lambda p: float(np.trapezoid(p, ts))) if ts.size > 1 else (lambda p: 0.0)
    return HypothesisReport(
        dim=spec.dim,
        sup_du_f=sup_du_f,
        sup_grad_du_f=sup_grad,
        sup_du_F=sup_du_F,
        sup_du_FG=sup_FG,
        sup_du_fg=sup_fg,
        int_grad_true_source=integ(g_prof),
        int_true_source=integ(s_prof),
        times=ts,
        grad_source_profile=g_prof,
        source_profile=s_prof,
        box=box,
        resolution=(nt, nx, nu),
        sup_du_g=sup_g,
    )


@dataclass(frozen=True)
class SpecDifference:
    """Quantities built from the difference of two problems ``(f, F)`` and ``(g, G)``."""

    a: ProblemSpec
    b: ProblemSpec
    box: SamplingBox
    nx: int
    nu: int
    sup_du_fg: float
    sup_du_FG: float
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def _sup_u_diff(self, t):
        key = float(t)
        if key not in self._cache:
            _, weights, X, U = _lattice(self.box, self.nx, self.nu)
            d = true_source(self.a)(t, X, U) - true_source(self.b)(t, X, U)
            self._cache[key] = (np.max(np.abs(_finite("(F-G) - div(f-g)", d)), axis=-1), weights)
        return self._cache[key]

    def cone_profile(self, T: float, times, x0=None, R: float = math.inf, M: float = 0.0) -> np.ndarray:
        """``c(t) = int_{|x - x0| <= R + M (T - t)} sup_u |((F-G) - div(f-g))(t, x, u)| dx``."""
        axes = [np.linspace(a, b, self.nx) for a, b in self.box.x_ranges]
        xs = np.stack(np.meshgrid(*axes, indexing="ij"))
        x0 = np.zeros(self.a.dim) if x0 is None else np.atleast_1d(np.asarray(x0, dtype=float))
        dist = np.sqrt(np.sum((xs - x0.reshape((-1,) + (1,) * self.a.dim)) ** 2, axis=0))
        out = np.empty(len(times))
        for i, t in enumerate(times):
            vals, weights = self._sup_u_diff(t)
            inside = dist <= R + M * (T - t) if math.isfinite(R) else np.ones_like(dist, dtype=bool)
            out[i] = float(np.sum(vals * weights * inside))
        return out

    def int_true_source_diff(self, T: float, x0=None, R: float = math.inf, M: float = 0.0, nt: int = 65) -> float:
        ts = np.linspace(0.0, T, nt)
        return float(np.trapezoid(self.cone_profile(T, ts, x0, R, M), ts))


def difference_spec(a: ProblemSpec, b: ProblemSpec, box: SamplingBox, resolution=33) -> SpecDifference:
    """Sampled ``|d_u (f - g)|``, ``|d_u (F - G)|`` and the cone integrals of the source difference."""
    if a.dim != b.dim:
        raise DimensionMismatch(f"problems of dimension {a.dim} and {b.dim}")
    nt, nx, nu = _resolution(resolution)
    _, _, X, U = _lattice(box, nx, nu)
    sup_fg = sup_FG = 0.0
    for t in np.linspace(box.t_range[0], box.t_range[1], nt):
        dfg = a.flux.du_f(t, X, U) - b.flux.du_f(t, X, U)
        sup_fg = max(sup_fg, float(np.max(np.sqrt(np.sum(_finite("d_u(f-g)", dfg) ** 2, axis=0)))))
        dFG = a.source.du_F(t, X, U) - b.source.du_F(t, X, U)
        sup_FG = max(sup_FG, float(np.max(np.abs(_finite("d_u(F-G)", dFG)))))
    return SpecDifference(a, b, box, nx, nu, sup_fg, sup_FG)
