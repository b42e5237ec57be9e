"""Explicit a priori envelopes for total variation and L1 stability.

All functions take pre-audited constants (see
:func:`balancelaw.model.audit_hypotheses`) so one hypothesis report feeds
every bound.  Time integrands may be given as a callable ``g(t)``, a pair
``(times, values)`` of samples (linearly interpolated), or a constant.
Integrals use the composite trapezoid rule on a fine uniform grid (513
nodes) merged with the supplied sample times; the relative quadrature
error is ``O((kappa T / 512)^2)``.  The weaker closed forms are evaluated
on the same nodes so that they dominate the quadrature forms node by node.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .constants import wallis
from .errors import NegativeInput

__all__ = [
    "EnvelopeSeries",
    "phi",
    "expm1_ratio",
    "tv_envelope",
    "tv_envelope_weak",
    "stability_envelope",
    "stability_envelope_symmetric",
    "conservation_envelope",
    "reduction_conservation",
    "reduction_constant_speed",
    "reduction_static",
    "radiating_tv_envelope",
    "radiating_l1_bound",
    "kernel_stability_bound",
    "envelope_series",
]

SINGULAR_RTOL = 1e-10
QUAD_POINTS = 513


@dataclass
class EnvelopeSeries:
    """Certified bound values at a sequence of times, optionally with the measured functional."""

    times: np.ndarray
    values: np.ndarray
    constants_used: dict = field(default_factory=dict)
    branch: str = "generic"
    measured: np.ndarray | None = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.measured is not None:
            self.measured = np.asarray(self.measured, dtype=float)
        if not np.all(np.isfinite(self.values)):
            raise ValueError("envelope values must be finite")

    @property
    def margin(self) -> np.ndarray:
        if self.measured is None:
            raise ValueError("no measured series attached")
        return self.values - self.measured

    def holds(self, rel_slack: float = 0.0, abs_slack: float = 0.0) -> bool:
        return bool(np.all(self.measured <= self.values * (1 + rel_slack) + abs_slack))

    def to_csv(self, path) -> None:
        """Columns ``t, measured, envelope, margin``."""
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "measured", "envelope", "margin"])
            meas = self.measured if self.measured is not None else np.full(self.values.shape, np.nan)
            for t, m, v in zip(self.times, meas, self.values):
                w.writerow([repr(float(t)), repr(float(m)), repr(float(v)), repr(float(v - m))])


def _nonneg(**kw):
    for name, v in kw.items():
        if v < 0 or (isinstance(v, float) and math.isnan(v)):
            raise NegativeInput(f"{name} must be nonnegative, got {v}")


def _nwn(dim: int) -> float:
    return dim * wallis(dim)


def _profile(g, T: float, n: int = QUAD_POINTS):
    """Nodes on ``[0, T]`` and integrand samples; checks nonnegativity."""
    base = np.linspace(0.0, T, n)
    if callable(g):
        vals = np.array([float(g(t)) for t in base])
        ts = base
    elif isinstance(g, tuple) and len(g) == 2:
        st, sv = (np.asarray(a, dtype=float) for a in g)
        if st.size == 0:
            raise ValueError("empty sample set")
        inside = st[(st > 0) & (st < T)]
        ts = np.union1d(base, inside)
        vals = np.interp(ts, st, sv)
    else:
        ts = base
        vals = np.full(n, float(g))
    if np.any(vals < 0):
        raise NegativeInput("integrand samples must be nonnegative")
    if not np.all(np.isfinite(vals)):
        raise ValueError("integrand samples must be finite")
    return ts, vals


def _trap(y, x) -> float:
    return float(np.trapezoid(y, x)) if len(x) > 1 else 0.0


def expm1_ratio(rate: float, tau):
    """``(exp(rate tau) - 1) / rate`` with the value ``tau`` at ``rate = 0``."""
    tau = np.asarray(tau, dtype=float)
    if abs(rate) * float(np.max(np.abs(tau), initial=0.0)) < 1e-300 or rate == 0:
        return tau * 1.0
    return np.expm1(rate * tau) / rate


def phi(tau, kappa0: float, kappa: float):
    """``(exp(kappa0 tau) - exp(kappa tau)) / (kappa0 - kappa)``, continuous across ``kappa0 = kappa``.

    Evaluated as ``exp(kappa tau) expm1((kappa0 - kappa) tau) / (kappa0 - kappa)``,
    and as ``tau exp(kappa tau)`` when the rates agree to ``1e-10`` relative.
    """
    tau = np.asarray(tau, dtype=float)
    diff = kappa0 - kappa
    if abs(diff) < SINGULAR_RTOL * max(abs(kappa0), abs(kappa), 1.0):
        return tau * np.exp(kappa * tau)
    return np.exp(kappa * tau) * np.expm1(diff * tau) / diff


def _branch(kappa0, kappa):
    return "kappa_equal" if abs(kappa0 - kappa) < SINGULAR_RTOL * max(abs(kappa0), abs(kappa), 1.0) else "generic"


def tv_envelope(tv0: float, kappa0: float, source_grad_integral, T: float, dim: int = 1) -> float:
    """``tv0 e^{kappa0 T} + N W_N int_0^T e^{kappa0 (T - t)} g(t) dt``.

    ``g(t)`` is ``int |grad (F - div f)(t, x, .)|_inf dx``.
    """
    _nonneg(tv0=tv0, kappa0=kappa0, T=T)
    ts, g = _profile(source_grad_integral, T)
    return tv0 * math.exp(kappa0 * T) + _nwn(dim) * _trap(np.exp(kappa0 * (T - ts)) * g, ts)


def tv_envelope_weak(tv0: float, kappa0: float, source_grad_integral, T: float, dim: int = 1) -> float:
    """Weaker form ``tv0 e^{kappa0 T} + N W_N (e^{kappa0 T} - 1) / kappa0 sup_t g(t)``.

    The factor ``(e^{kappa0 T} - 1) / kappa0`` is integrated with the same
    nodes as :func:`tv_envelope`, so the result is never below it.
    """
    _nonneg(tv0=tv0, kappa0=kappa0, T=T)
    ts, g = _profile(source_grad_integral, T)
    return tv0 * math.exp(kappa0 * T) + _nwn(dim) * float(np.max(g)) * _trap(np.exp(kappa0 * (T - ts)), ts)


def stability_envelope(l1_0: float, tv0: float, kappa0: float, kappa: float, M: float, sup_du_fg: float,
                       source_grad_integral, cone_source_integral, T: float, dim: int = 1) -> float:
    """L1 distance bound between solutions of two balance laws on a ball.

    ``l1_0`` is the initial distance on the inflated ball ``|x - x0| <= R + M T``;
    ``cone_source_integral`` is ``c(t) = int_{|x - x0| <= R + M (T - t)}
    |(F - G) - div(f - g)|_inf dx`` for this ``T``.  ``M`` only enters
    through those two inputs and is accepted for bookkeeping.
    """
    _nonneg(l1_0=l1_0, tv0=tv0, kappa0=kappa0, kappa=kappa, M=M, sup_du_fg=sup_du_fg, T=T)
    ts, g = _profile(source_grad_integral, T)
    tc, c = _profile(cone_source_integral, T)
    return (math.exp(kappa * T) * l1_0
            + float(phi(T, kappa0, kappa)) * tv0 * sup_du_fg
            + _nwn(dim) * sup_du_fg * _trap(phi(T - ts, kappa0, kappa) * g, ts)
            + _trap(np.exp(kappa * (T - tc)) * c, tc))


def _accumulation(kappa0, a, b_t, b_v, s):
    # S(s) = (e^{k0 s} - 1)/k0 a + int_0^s (e^{k0 (s - t)} - 1)/k0 b(t) dt on the nodes s
    out = np.empty_like(s)
    for i, si in enumerate(s):
        m = b_t <= si
        out[i] = float(expm1_ratio(kappa0, si)) * a + _trap(expm1_ratio(kappa0, si - b_t[m]) * b_v[m], b_t[m])
    return out


def stability_envelope_symmetric(l1_0: float, tv0_u: float, tv0_v: float, kappa0_u: float, kappa0_v: float,
                                 kappa_u: float, kappa_v: float, M: float, sup_du_fg: float,
                                 source_grad_integral_u, source_grad_integral_v, cone_source_integral,
                                 T: float, dim: int = 1, n: int = 257) -> float:
    """Bound obtained by running the stability argument in both orderings.

    The distance ``A'`` obeys ``A'(T) <= A'(0) + min(kappa, kappa~) A(T) +
    max(S_u(T), S_v(T)) + int_0^T c`` with ``A = int_0^T A'``, where
    ``S_u(T) = (e^{kappa0 T} - 1)/kappa0 a + int_0^T (e^{kappa0 (T-t)} - 1)/kappa0 b(t) dt``
    and ``a = sup|d_u(f - g)| TV(u0)``, ``b = N W_N sup|d_u(f - g)| g_u(t)``
    (``S_v`` likewise with the data of the second problem).  Gronwall's
    lemma with the nondecreasing forcing ``max(S_u, S_v)`` gives the
    returned value.  When one accumulation dominates on the whole interval
    the closed form of :func:`stability_envelope` is used with that
    ordering's constants and rate ``min(kappa, kappa~)``.
    """
    _nonneg(l1_0=l1_0, tv0_u=tv0_u, tv0_v=tv0_v, kappa0_u=kappa0_u, kappa0_v=kappa0_v, kappa_u=kappa_u,
            kappa_v=kappa_v, M=M, sup_du_fg=sup_du_fg, T=T)
    km = min(kappa_u, kappa_v)
    s = np.linspace(0.0, T, n)
    nwn = _nwn(dim)
    tu, gu = _profile(source_grad_integral_u, T)
    tv, gv = _profile(source_grad_integral_v, T)
    S_u = _accumulation(kappa0_u, sup_du_fg * tv0_u, tu, nwn * sup_du_fg * gu, s)
    S_v = _accumulation(kappa0_v, sup_du_fg * tv0_v, tv, nwn * sup_du_fg * gv, s)
    tol = 1e-12 * max(1.0, float(np.max(np.abs(S_u))), float(np.max(np.abs(S_v))))
    if np.all(S_u >= S_v - tol):
        return stability_envelope(l1_0, tv0_u, kappa0_u, km, M, sup_du_fg, source_grad_integral_u,
                                  cone_source_integral, T, dim)
    if np.all(S_v >= S_u - tol):
        return stability_envelope(l1_0, tv0_v, kappa0_v, km, M, sup_du_fg, source_grad_integral_v,
                                  cone_source_integral, T, dim)
    # crossing accumulations: Stieltjes sum with left-point weights (an upper bound for km >= 0)
    S = np.maximum(S_u, S_v)
    forcing = float(np.sum(np.exp(km * (T - s[:-1])) * np.diff(S)))
    tc, c = _profile(cone_source_integral, T)
    return math.exp(km * T) * l1_0 + forcing + _trap(np.exp(km * (T - tc)) * c, tc)


def conservation_envelope(l1_0: float, tv0: float, kappa0: float, kappa: float, sup_du_fg: float,
                          sup_grad_div_f: float, sup_cone_div_diff: float, T: float, dim: int = 1) -> float:
    """Simpler (weaker) form of the stability bound for conservation laws (``F = G = 0``).

    ``e^{kappa T} l1_0 + T e^{kappa0 T} (tv0 sup_du_fg + N W_N T sup_t int |grad div f| sup_du_fg
    + sup_t int_cone |div(f - g)|)``.
    """
    _nonneg(l1_0=l1_0, tv0=tv0, kappa0=kappa0, kappa=kappa, sup_du_fg=sup_du_fg,
            sup_grad_div_f=sup_grad_div_f, sup_cone_div_diff=sup_cone_div_diff, T=T)
    e0 = math.exp(kappa0 * T)
    return (math.exp(kappa * T) * l1_0 + T * e0 * tv0 * sup_du_fg
            + _nwn(dim) * T**2 * e0 * sup_grad_div_f * sup_du_fg + T * e0 * sup_cone_div_diff)


def reduction_conservation(l1_0: float, tv0: float, sup_du_fg: float, T: float) -> float:
    """x-independent conservation laws: ``l1_0 + T tv0 sup|d_u(f - g)|``."""
    _nonneg(l1_0=l1_0, tv0=tv0, sup_du_fg=sup_du_fg, T=T)
    return l1_0 + T * tv0 * sup_du_fg


def reduction_constant_speed(l1_0: float, source_diff_l1, T: float) -> float:
    """State-independent speeds and sources: ``l1_0 + int_0^T |(F - G) - div(f - g)|_L1 dt``."""
    _nonneg(l1_0=l1_0, T=T)
    ts, c = _profile(source_diff_l1, T)
    return l1_0 + _trap(c, ts)


def reduction_static(l1_0: float, source_diff_l1: float, T: float) -> float:
    """Data depending on ``x`` only: ``l1_0 + T |(F - G) - div(f - g)|_L1``."""
    _nonneg(l1_0=l1_0, source_diff_l1=source_diff_l1, T=T)
    return l1_0 + T * source_diff_l1


def radiating_tv_envelope(tv0: float, kappa0: float, k: float, source_grad_integral, T: float,
                          dim: int = 1) -> float:
    """TV bound with the convolution term: rate ``kappa0 + N W_N k``."""
    _nonneg(k=k)
    return tv_envelope(tv0, kappa0 + _nwn(dim) * k, source_grad_integral, T, dim)


def radiating_l1_bound(l1_0: float, kappa: float, k: float, T: float) -> float:
    """``e^{(kappa + k) T} l1_0``, valid when zero solves the local problem."""
    return math.exp((kappa + k) * T) * l1_0


def kernel_stability_bound(l1_0: float, k: float, k_tilde: float, dK_l1: float, T: float) -> float:
    """``l1_0 (e^{kT} - e^{k~T}) / (k - k~) dK_l1`` with the limit ``T e^{kT}`` at ``k = k~``."""
    _nonneg(l1_0=l1_0, k=k, k_tilde=k_tilde, dK_l1=dK_l1, T=T)
    return l1_0 * float(phi(T, k, k_tilde)) * dK_l1


def envelope_series(times, bound: Callable[[float], float], measured=None, constants_used=None,
                    branch: str = "generic") -> EnvelopeSeries:
    """Evaluate ``bound(T)`` at every snapshot time."""
    times = np.asarray(times, dtype=float)
    vals = np.array([bound(float(t)) for t in times])
    return EnvelopeSeries(times, vals, dict(constants_used or {}), branch, measured)
