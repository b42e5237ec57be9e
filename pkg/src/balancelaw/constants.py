"""Dimensional constants: Wallis integrals, unit-ball volumes, mollifier moments.

Everything here is a pure function of the space dimension ``n`` (and of a
radial mollifier profile for the moment constants).  The growth rates
``kappa0`` and ``kappa`` used by the envelope computations live here too.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate

from .errors import QuadratureFailure

__all__ = [
    "wallis",
    "ball_volume",
    "MollifierSpec",
    "plateau_mollifier",
    "default_mollifier",
    "DimConstants",
    "dim_constants",
    "mollifier_constants",
    "mollifier_identities",
    "MollifierIdentityReport",
    "kappa0",
    "kappa",
]

QUAD_RTOL = 1e-9


def wallis(n: int) -> float:
    """Wallis integral ``int_0^{pi/2} cos(theta)**n dtheta``.

    Uses the recurrence ``W_n = (n-1)/n * W_{n-2}`` started from
    ``W_0 = pi/2`` and ``W_1 = 1``.
    """
    if n < 0:
        raise ValueError(f"wallis: n must be >= 0, got {n}")
    w = math.pi / 2 if n % 2 == 0 else 1.0
    for j in range(2 + n % 2, n + 1, 2):
        w *= (j - 1) / j
    return w


def ball_volume(n: int) -> float:
    """Lebesgue measure of the unit ball of R^n, with ``ball_volume(0) == 1``."""
    if n < 0:
        raise ValueError(f"ball_volume: n must be >= 0, got {n}")
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


def _smoothstep(s):
    # C-infinity transition: 0 for s <= 0, 1 for s >= 1
    s = np.clip(np.asarray(s, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        a = np.where(s > 0, np.exp(-1.0 / np.where(s > 0, s, 1.0)), 0.0)
        b = np.where(s < 1, np.exp(-1.0 / np.where(s < 1, 1.0 - s, 1.0)), 0.0)
    return a / (a + b)


def _smoothstep_scalar(s: float) -> float:
    if s <= 0.0:
        return 0.0
    if s >= 1.0:
        return 1.0
    a = math.exp(-1.0 / s)
    b = math.exp(-1.0 / (1.0 - s))
    return a / (a + b)


def _smoothstep_prime_scalar(s: float) -> float:
    if s <= 0.0 or s >= 1.0:
        return 0.0
    a = math.exp(-1.0 / s)
    b = math.exp(-1.0 / (1.0 - s))
    return a * b * (1.0 / s**2 + 1.0 / (1.0 - s) ** 2) / (a + b) ** 2


def _smoothstep_prime(s):
    s = np.asarray(s, dtype=float)
    inside = (s > 0) & (s < 1)
    sc = np.where(inside, s, 0.5)
    a = np.exp(-1.0 / sc)
    b = np.exp(-1.0 / (1.0 - sc))
    d = a * b * (1.0 / sc**2 + 1.0 / (1.0 - sc) ** 2) / (a + b) ** 2
    return np.where(inside, d, 0.0)


@dataclass(frozen=True)
class MollifierSpec:
    """Radial mollifier profile ``mu_1`` normalised in dimension ``n``.

    ``shape`` is an unnormalised nonincreasing profile on ``[0, 1)``,
    constant on ``[0, flat_radius]``; the normalisation factor is chosen so
    that ``int_0^1 r**(n-1) mu_1(r) dr = 1 / (n * omega_n)``.
    """

    n: int
    shape: Callable[[np.ndarray], np.ndarray]
    shape_prime: Callable[[np.ndarray], np.ndarray]
    flat_radius: float
    name: str = "custom"
    scale: float = field(init=False)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("mollifier dimension must be >= 1")
        if not 0 < self.flat_radius < 1:
            raise ValueError("flat_radius must lie in (0, 1)")
        n = self.n
        raw = _quad(lambda r: r ** (n - 1) * float(self.shape(float(r))), 0.0, 1.0, [self.flat_radius])
        object.__setattr__(self, "scale", 1.0 / (n * ball_volume(n) * raw))

    def __call__(self, r):
        if isinstance(r, float):
            return self.scale * self.shape(r) if r < 1.0 else 0.0
        r = np.asarray(r, dtype=float)
        return self.scale * np.where(r < 1.0, self.shape(r), 0.0)

    def derivative(self, r):
        if isinstance(r, float):
            return self.scale * self.shape_prime(r) if r < 1.0 else 0.0
        r = np.asarray(r, dtype=float)
        return self.scale * np.where(r < 1.0, self.shape_prime(r), 0.0)

    def scaled(self, x_norm, lam: float):
        """Evaluate ``lam**-n * mu_1(|x| / lam)``."""
        return self(np.asarray(x_norm) / lam) / lam**self.n

    def in_dim(self, n: int) -> "MollifierSpec":
        return MollifierSpec(n, self.shape, self.shape_prime, self.flat_radius, self.name)


def plateau_mollifier(n: int, flat_radius: float = 0.5) -> MollifierSpec:
    """Profile equal to a constant on ``[0, flat_radius]`` and decaying smoothly to 0 at 1."""
    width = 1.0 - flat_radius

    def shape(r):
        if isinstance(r, float):
            return 1.0 - _smoothstep_scalar((r - flat_radius) / width)
        return 1.0 - _smoothstep((np.asarray(r, dtype=float) - flat_radius) / width)

    def shape_prime(r):
        if isinstance(r, float):
            return -_smoothstep_prime_scalar((r - flat_radius) / width) / width
        return -_smoothstep_prime((np.asarray(r, dtype=float) - flat_radius) / width) / width

    return MollifierSpec(n, shape, shape_prime, flat_radius, name=f"plateau({flat_radius:g})")


def default_mollifier(n: int) -> MollifierSpec:
    return plateau_mollifier(n, 0.5)


def _quad(func, a, b, points=None, rtol=QUAD_RTOL, atol=0.0):
    pts = [p for p in (points or []) if a < p < b]
    with warnings.catch_warnings():
        # convergence is judged below from the returned error estimate
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err = integrate.quad(func, a, b, points=pts or None, epsabs=atol, epsrel=rtol, limit=400)
    if not np.isfinite(val) or err > max(rtol * abs(val), atol):
        raise QuadratureFailure(f"quadrature on [{a}, {b}] did not reach rtol={rtol}: value={val}, err={err}")
    return val


def _radial_moment(m: MollifierSpec, power: int, derivative: bool = False) -> float:
    """``n*omega_n * int_0^1 r**power * mu_1(r) dr`` (or ``mu_1'``)."""
    prof = m.derivative if derivative else m
    return m.n * ball_volume(m.n) * _quad(lambda r: r**power * float(prof(float(r))), 0.0, 1.0, [m.flat_radius])


def _c1_slab(m: MollifierSpec) -> float:
    # int |x_1| mu_1(|x|) dx sliced along x_1; avoids any angular reduction
    n = m.n
    if n == 1:
        return 2.0 * _quad(lambda x: x * m(x), 0.0, 1.0, [m.flat_radius])
    sphere = (n - 1) * ball_volume(n - 1)
    a = m.flat_radius

    def inner(x):
        top = math.sqrt(max(1.0 - x * x, 0.0))
        if top == 0.0:
            return 0.0
        kink = [math.sqrt(a * a - x * x)] if x < a else None
        return _quad(lambda rho: rho ** (n - 2) * m(math.hypot(x, rho)), 0.0, top, kink, rtol=1e-11, atol=1e-15)

    return 2.0 * sphere * _quad(lambda x: x * inner(x), 0.0, 1.0, [a])


@dataclass(frozen=True)
class DimConstants:
    n: int
    wallis: float
    ball_volume: float
    c1: float
    m1: float

    @property
    def nwn(self) -> float:
        return self.n * self.wallis


def mollifier_constants(n: int, m: MollifierSpec | None = None) -> dict:
    """First moments ``c1 = int |x_1| mu_1`` and ``m1 = int |x| mu_1`` in dimension ``n``.

    The two are computed by unrelated quadratures (a slab decomposition for
    ``c1``, a radial one for ``m1``), so their ratio is an honest check of
    ``m1 / c1 == n * W_n``.
    """
    m = default_mollifier(n) if m is None else (m if m.n == n else m.in_dim(n))
    return {"c1": _c1_slab(m), "m1": _radial_moment(m, n)}


def dim_constants(n: int, m: MollifierSpec | None = None) -> DimConstants:
    mc = mollifier_constants(n, m)
    return DimConstants(n, wallis(n), ball_volume(n), mc["c1"], mc["m1"])


@dataclass(frozen=True)
class MollifierIdentityReport:
    n: int
    lam: float
    mass: float
    slab_vs_radial: float
    gradient_moment: float
    gradient_moment_unscaled: float
    second_moment: float

    def max(self) -> float:
        return max(self.mass, self.slab_vs_radial, self.gradient_moment,
                   self.gradient_moment_unscaled, self.second_moment)

    def as_dict(self) -> dict:
        return {
            "mass": self.mass,
            "slab_vs_radial": self.slab_vs_radial,
            "gradient_moment": self.gradient_moment,
            "gradient_moment_unscaled": self.gradient_moment_unscaled,
            "second_moment": self.second_moment,
        }


def mollifier_identities(n: int, m: MollifierSpec | None = None, lam: float = 1.0) -> MollifierIdentityReport:
    """Absolute residuals of the mollifier moment identities at scale ``lam``."""
    if lam <= 0:
        raise ValueError("lam must be positive")
    m = default_mollifier(n) if m is None else (m if m.n == n else m.in_dim(n))
    area = n * ball_volume(n)
    flat = [m.flat_radius * lam]

    mass = area * _quad(lambda r: r ** (n - 1) * m(float(r) / lam) / lam**n, 0.0, lam, flat)
    # |grad mu(x)| = lam**(-n-1) |mu_1'(|x|/lam)|
    grad = area * _quad(lambda r: r**n * abs(m.derivative(float(r) / lam)) / lam ** (n + 1), 0.0, lam, flat)
    m1 = _radial_moment(m, n)
    c1 = _c1_slab(m)
    d1 = _radial_moment(m, n, derivative=True)
    d2 = _radial_moment(m, n + 1, derivative=True)
    return MollifierIdentityReport(
        n=n,
        lam=lam,
        mass=abs(mass - 1.0),
        slab_vs_radial=abs(c1 - 2.0 / n * ball_volume(n - 1) / ball_volume(n) * m1),
        gradient_moment=abs(grad - n),
        gradient_moment_unscaled=abs(-d1 - n),
        second_moment=abs(d2 + (n + 1) * m1),
    )


def kappa0(n: int, norm_grad_du_f: float, norm_du_F: float) -> float:
    """TV growth rate ``n W_n ((2n+1) |grad d_u f| + |d_u F|)``."""
    if norm_grad_du_f < 0 or norm_du_F < 0:
        raise ValueError("norms must be nonnegative")
    return n * wallis(n) * ((2 * n + 1) * norm_grad_du_f + norm_du_F)


def kappa(n: int, norm_grad_du_f: float, norm_du_F: float, norm_du_FG: float = 0.0) -> float:
    """L1 stability growth rate ``2n |grad d_u f| + |d_u F| + |d_u (F - G)|``."""
    if min(norm_grad_du_f, norm_du_F, norm_du_FG) < 0:
        raise ValueError("norms must be nonnegative")
    return 2 * n * norm_grad_du_f + norm_du_F + norm_du_FG
