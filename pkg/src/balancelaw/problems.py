"""Built-in fluxes, sources and initial data.

Every factory returns a :class:`~balancelaw.model.ProblemSpec` whose
derivatives are analytic wherever that is cheap; the rest fall back to
finite differences.
"""
from __future__ import annotations

import numpy as np

from .constants import _smoothstep, _smoothstep_prime
from .model import FluxField, ProblemSpec, SourceField

__all__ = ["SmoothWindow", "PROBLEMS", "INITIAL_DATA", "make_problem", "make_initial"]


class SmoothWindow:
    """C-infinity cutoff equal to 1 on ``[a, b]`` and 0 outside ``[a - taper, b + taper]``."""

    def __init__(self, a: float, b: float, taper: float):
        if taper <= 0 or b < a:
            raise ValueError("need a <= b and taper > 0")
        self.a, self.b, self.taper = float(a), float(b), float(taper)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return _smoothstep((x - self.a + self.taper) / self.taper) * _smoothstep((self.b + self.taper - x) / self.taper)

    def d1(self, x):
        x = np.asarray(x, dtype=float)
        sl = (x - self.a + self.taper) / self.taper
        sr = (self.b + self.taper - x) / self.taper
        return (_smoothstep_prime(sl) * _smoothstep(sr) - _smoothstep(sl) * _smoothstep_prime(sr)) / self.taper

    def d2(self, x, h=1e-6):
        return (self.d1(np.asarray(x) + h) - self.d1(np.asarray(x) - h)) / (2 * h)

    def __repr__(self):
        return f"SmoothWindow({self.a}, {self.b}, {self.taper})"


def _bump(r):
    # exp(1 - 1/(1 - r^2)) on |r| < 1, peak value 1
    r = np.asarray(r, dtype=float)
    inside = np.abs(r) < 1
    rc = np.where(inside, r, 0.0)
    return np.where(inside, np.exp(1.0 - 1.0 / (1.0 - rc**2)), 0.0)


def _bump_prime(r):
    r = np.asarray(r, dtype=float)
    inside = np.abs(r) < 1
    rc = np.where(inside, r, 0.0)
    return np.where(inside, _bump(rc) * (-2.0 * rc / (1.0 - rc**2) ** 2), 0.0)


def _shape(x, u):
    return np.broadcast_shapes(np.shape(x)[1:], np.shape(u))


def _zeros_vec(dim):
    return lambda t, x, u: np.zeros((dim,) + np.broadcast_shapes(np.shape(x)[1:], np.shape(u)))


def burgers(dim: int = 1, eps: float = 0.0, **_) -> ProblemSpec:
    """``f_d(u) = u^2 / 2 + eps u`` in every direction, ``F = 0``."""

    def f(t, x, u):
        return np.broadcast_to(0.5 * u**2 + eps * u, (dim,) + _shape(x, u))

    def du_f(t, x, u):
        return np.broadcast_to(u + eps, (dim,) + _shape(x, u))

    flux = FluxField(f, du_f, grad_du_f=lambda t, x, u: 0.0, div_f=lambda t, x, u: 0.0,
                     grad_div_f=lambda t, x, u: 0.0, dim=dim)
    return ProblemSpec(flux, SourceField(dim=dim), None, dim, "burgers" if eps == 0 else "shifted_burgers",
                       params={"eps": eps})


def shifted_burgers(dim: int = 1, eps: float = 0.05, **_) -> ProblemSpec:
    return burgers(dim, eps)


def advection(dim: int = 1, velocity=1.0, **_) -> ProblemSpec:
    a = np.broadcast_to(np.asarray(velocity, dtype=float), (dim,)).copy()

    def f(t, x, u):
        shape = _shape(x, u)
        return a.reshape((dim,) + (1,) * len(shape)) * np.broadcast_to(u, shape)

    def du_f(t, x, u):
        shape = _shape(x, u)
        return np.broadcast_to(a.reshape((dim,) + (1,) * len(shape)), (dim,) + shape)

    flux = FluxField(f, du_f, grad_du_f=lambda t, x, u: 0.0, div_f=lambda t, x, u: 0.0,
                     grad_div_f=lambda t, x, u: 0.0, dim=dim)
    return ProblemSpec(flux, SourceField(dim=dim), None, dim, "advection", params={"velocity": a.tolist()})


def cosx_flux(dim: int = 1, amplitude: float = 1.0, window=None, **_) -> ProblemSpec:
    """State-independent flux ``f_1(x) = A w(x_1) cos(x_1)`` (other components 0), ``F = 0``.

    With ``u0 = 0`` this is the standard example whose total variation is
    created instantly by the flux itself.  ``window`` is ``(a, b, taper)``
    or None for an unwindowed flux.
    """
    w = SmoothWindow(*window) if window is not None else None

    def prof(x1):
        return amplitude * (w(x1) * np.cos(x1) if w is not None else np.cos(x1))

    def dprof(x1):
        if w is None:
            return -amplitude * np.sin(x1)
        return amplitude * (w.d1(x1) * np.cos(x1) - w(x1) * np.sin(x1))

    def d2prof(x1):
        if w is None:
            return -amplitude * np.cos(x1)
        return amplitude * (w.d2(x1) * np.cos(x1) - 2 * w.d1(x1) * np.sin(x1) - w(x1) * np.cos(x1))

    def f(t, x, u):
        out = np.zeros((dim,) + np.broadcast_shapes(np.shape(x)[1:], np.shape(u)))
        out[0] = prof(x[0])
        return out

    def grad_div_f(t, x, u):
        out = np.zeros((dim,) + np.broadcast_shapes(np.shape(x)[1:], np.shape(u)))
        out[0] = d2prof(x[0])
        return out

    flux = FluxField(f, du_f=_zeros_vec(dim), grad_du_f=lambda t, x, u: 0.0,
                     div_f=lambda t, x, u: dprof(x[0]) + 0.0 * u, grad_div_f=grad_div_f, dim=dim)
    return ProblemSpec(flux, SourceField(dim=dim), None, dim, "cosx_flux",
                       params={"amplitude": amplitude, "window": window})


def ode_source(dim: int = 1, amplitude: float = 1.0, center=0.0, width: float = 1.0,
               time_rate: float = 0.0, decay: float = 0.0, **_) -> ProblemSpec:
    """``f = 0`` and ``F(t, x, u) = A (1 + rate t) bump(|x - c| / width) - decay u``.

    Every cell evolves by its own ODE; ``bump`` is the smooth compactly
    supported profile ``exp(1 - 1 / (1 - r^2))``.
    """
    c = np.broadcast_to(np.asarray(center, dtype=float), (dim,)).copy()

    def radius(x):
        return np.sqrt(np.sum((np.asarray(x) - c.reshape((dim,) + (1,) * (np.ndim(x) - 1))) ** 2, axis=0)) / width

    def F(t, x, u):
        return amplitude * (1.0 + time_rate * t) * _bump(radius(x)) - decay * u

    def grad_F(t, x, u):
        r = radius(x)
        rs = np.where(r > 0, r, 1.0)
        diff = np.asarray(x) - c.reshape((dim,) + (1,) * (np.ndim(x) - 1))
        g = amplitude * (1.0 + time_rate * t) * _bump_prime(r) / (width**2 * rs) * diff
        return g + 0.0 * u

    src = SourceField(F, du_F=lambda t, x, u: -decay + 0.0 * u, grad_F=grad_F, dim=dim)
    flux = FluxField(lambda t, x, u: 0.0, du_f=lambda t, x, u: 0.0, grad_du_f=lambda t, x, u: 0.0,
                     div_f=lambda t, x, u: 0.0, grad_div_f=lambda t, x, u: 0.0, dim=dim)
    return ProblemSpec(flux, src, None, dim, "ode_source",
                       params={"amplitude": amplitude, "center": c.tolist(), "width": width,
                               "time_rate": time_rate, "decay": decay})


def radiating_gas(dim: int = 1, window=None, damping: float = 1.0, **_) -> ProblemSpec:
    """Windowed Burgers flux ``f_d = w(x_d) u^2 / 2`` with linear damping ``F = -damping u``.

    The nonlocal term ``K * u`` is supplied separately as a kernel.
    ``window`` of None gives the plain Burgers flux.
    """
    w = SmoothWindow(*window) if window is not None else None

    def wv(x):
        return w(x) if w is not None else np.ones_like(np.asarray(x, dtype=float))

    def wd(x):
        return w.d1(x) if w is not None else np.zeros_like(np.asarray(x, dtype=float))

    def wdd(x):
        return w.d2(x) if w is not None else np.zeros_like(np.asarray(x, dtype=float))

    def shape(x, u):
        return np.broadcast_shapes(np.shape(x)[1:], np.shape(u))

    def f(t, x, u):
        return np.stack([wv(x[d]) * 0.5 * u**2 * np.ones(shape(x, u)) for d in range(dim)])

    def du_f(t, x, u):
        return np.stack([wv(x[d]) * u * np.ones(shape(x, u)) for d in range(dim)])

    def grad_du_f(t, x, u):
        out = np.zeros((dim, dim) + shape(x, u))
        for d in range(dim):
            out[d, d] = wd(x[d]) * u
        return out

    def div_f(t, x, u):
        return sum(wd(x[d]) * 0.5 * u**2 for d in range(dim)) * np.ones(shape(x, u))

    def grad_div_f(t, x, u):
        return np.stack([wdd(x[d]) * 0.5 * u**2 * np.ones(shape(x, u)) for d in range(dim)])

    flux = FluxField(f, du_f, grad_du_f, div_f, grad_div_f, dim=dim)
    src = SourceField(lambda t, x, u: -damping * u, du_F=lambda t, x, u: -damping + 0.0 * u,
                      grad_F=lambda t, x, u: 0.0, dim=dim)
    return ProblemSpec(flux, src, None, dim, "radiating_gas", params={"window": window, "damping": damping})


PROBLEMS = {
    "burgers": burgers,
    "shifted_burgers": shifted_burgers,
    "advection": advection,
    "cosx_flux": cosx_flux,
    "ode_source": ode_source,
    "radiating_gas": radiating_gas,
}


# -- initial data: callables of x with shape (N, ...) --------------------------------------

def zero(**_):
    return lambda x: np.zeros(np.shape(x)[1:])


def constant(value=1.0, **_):
    return lambda x: np.full(np.shape(x)[1:], float(value))


def box(a=0.0, b=1.0, height=1.0, base=0.0, **_):
    """``height`` on the cube ``[a, b)^N``, ``base`` elsewhere."""

    def u0(x):
        x = np.asarray(x)
        inside = np.all((x >= a) & (x < b), axis=0)
        return np.where(inside, height, base).astype(float)

    return u0


def riemann(left=1.0, right=0.0, x0=0.0, **_):
    return lambda x: np.where(np.asarray(x)[0] < x0, float(left), float(right))


def bump(center=0.0, width=1.0, height=1.0, base=0.0, **_):
    def u0(x):
        x = np.asarray(x)
        c = np.broadcast_to(np.asarray(center, dtype=float), (x.shape[0],)).reshape((-1,) + (1,) * (x.ndim - 1))
        return base + height * _bump(np.sqrt(np.sum((x - c) ** 2, axis=0)) / width)

    return u0


def sine(amplitude=1.0, wavenumber=1.0, offset=0.0, **_):
    return lambda x: offset + amplitude * np.sin(wavenumber * np.asarray(x)[0])


def gaussian(center=0.0, sigma=1.0, height=1.0, **_):
    def u0(x):
        x = np.asarray(x)
        c = np.broadcast_to(np.asarray(center, dtype=float), (x.shape[0],)).reshape((-1,) + (1,) * (x.ndim - 1))
        return height * np.exp(-np.sum((x - c) ** 2, axis=0) / (2 * sigma**2))

    return u0


INITIAL_DATA = {
    "zero": zero,
    "constant": constant,
    "box": box,
    "riemann": riemann,
    "bump": bump,
    "sine": sine,
    "gaussian": gaussian,
}


def make_problem(name: str, u0=None, state_interval=None, **params) -> ProblemSpec:
    try:
        factory = PROBLEMS[name]
    except KeyError:
        raise KeyError(f"unknown problem {name!r}; choose from {sorted(PROBLEMS)}") from None
    spec = factory(**params)
    return spec.replace(u0=u0, state_interval=state_interval)


def make_initial(name: str, **params):
    try:
        return INITIAL_DATA[name](**params)
    except KeyError:
        raise KeyError(f"unknown initial datum {name!r}; choose from {sorted(INITIAL_DATA)}") from None
