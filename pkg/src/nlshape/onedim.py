"""Two-interval analysis on the line.

The configuration is E = (0, 1/2) union (d, d + 1/2) with gap parameter
d > 1/2, total length 1. By the reflection symmetry of E about its midpoint,
the boundary combination zeta takes only two values on the four endpoints:
zeta(0) = zeta(d + 1/2) (outer pair) and zeta(1/2) = zeta(d) (inner pair).
E satisfies the critical-point condition exactly when the balance function

    f(d) = zeta(1/2) - zeta(0)
         = (2/s) [2 d^(-s) - (d - 1/2)^(-s) - (d + 1/2)^(-s)]
         + (c eps / (1 - alpha)) [2 d^(1-alpha) - (d-1/2)^(1-alpha) - (d+1/2)^(1-alpha)]

vanishes. Each bracket is a symmetric second difference
2 g(d) - g(d - 1/2) - g(d + 1/2); for large d these cancel to O(d^(b-2)) and
are evaluated through the series for (1+x)^b + (1-x)^b - 2 with x = 1/(2d),
never by subtracting nearly equal powers.

The large-d expansion gives f(d) = d^(-1-alpha) g(d) with

    g(d) = c alpha eps / 4 - (1+s) d^(-1-s+alpha) / 2 + lower order,

so g changes sign near d_eps = ((1+s)/(c alpha eps))^(1/(1+s-alpha)). The
root finder probes geometrically upward from d_eps and bisects; the sweep
fits the log-log slope of the critical diameter against 1/eps, which tends
to 1/(1+s-alpha) as eps -> 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import BracketError, ParamError
from .functionals import _potential_1d
from .quad import pv_pair_integral
from .sets import IntervalSet, Params

__all__ = [
    "TwoIntervalConfig", "SweepRecord", "two_interval_set", "zeta_endpoints",
    "f_closed_form", "g_and_d_eps", "solve_critical_d", "epsilon_sweep",
]

_PROBE_BUDGET = 64


@dataclass(frozen=True)
class TwoIntervalConfig:
    """Gap parameter plus problem parameters (n must be 1)."""

    d: float
    params: Params

    def __post_init__(self):
        if self.params.n != 1:
            raise ParamError(f"two-interval analysis is 1D; params have n = {self.params.n}")
        if not (self.d > 0.5):
            raise ParamError(f"gap parameter d must exceed 1/2, got {self.d!r}")
        if not (0.0 < self.params.alpha < 1.0):
            raise ParamError(
                f"two-interval analysis needs alpha in (0, 1), got {self.params.alpha!r}")


def two_interval_set(cfg: TwoIntervalConfig) -> IntervalSet:
    d = cfg.d
    return IntervalSet([(0.0, 0.5), (d, d + 0.5)])


def zeta_endpoints(cfg: TwoIntervalConfig) -> np.ndarray:
    """zeta at the four endpoints (0, 1/2, d, d+1/2), each evaluated through
    the generic PV closed form plus potential; nothing is mirrored by hand,
    so the symmetry equalities are genuine output properties."""
    S = two_interval_set(cfg)
    p = cfg.params
    out = np.empty(4)
    for i, x in enumerate((0.0, 0.5, cfg.d, cfg.d + 0.5)):
        k = pv_pair_integral(S, x, p.s)
        v = _potential_1d(S, x, p.alpha) if p.eps != 0.0 else 0.0
        out[i] = k + p.c_coupling * p.eps * v
    return out


def _sym_second_diff(b: float, x: float) -> float:
    """(1+x)^b + (1-x)^b - 2 without cancellation, 0 <= x < 1.

    For x below 1/2 the even binomial series
    2 sum_{k>=1} C(b, 2k) x^(2k) is summed with a term recurrence; the ratio
    of consecutive terms is bounded by x^2 * |(b-2k+1)(b-2k+2)| / ((2k-1)2k)
    which stays below ~x^2 for b in (-1, 1), so the truncation error is
    controlled by the first omitted term.
    """
    if x >= 0.5:
        return (1.0 + x) ** b + (1.0 - x) ** b - 2.0
    term = b * (b - 1.0) * 0.5 * x * x  # C(b, 2) x^2
    acc = term
    k = 1
    while abs(term) > 1e-18 * abs(acc) and k < 60:
        # C(b, 2k+2) = C(b, 2k) * (b-2k)(b-2k-1) / ((2k+1)(2k+2))
        term *= (b - 2 * k) * (b - 2 * k - 1.0) / ((2 * k + 1.0) * (2 * k + 2.0)) * x * x
        acc += term
        k += 1
    return 2.0 * acc


def _bracket(b: float, d: float) -> float:
    """2 d^b - (d - 1/2)^b - (d + 1/2)^b, cancellation-safe."""
    x = 0.5 / d
    return -(d ** b) * _sym_second_diff(b, x)


def f_closed_form(d: float, p: Params) -> float:
    """Balance function f(d) = zeta(inner) - zeta(outer)."""
    TwoIntervalConfig(d=d, params=p)  # validate
    s, alpha = p.s, p.alpha
    val = (2.0 / s) * _bracket(-s, d)
    if p.eps != 0.0:
        val += (p.c_coupling * p.eps / (1.0 - alpha)) * _bracket(1.0 - alpha, d)
    return val


def g_and_d_eps(p: Params):
    """The reduced function g with f(d) = d^(-1-alpha) g(d) + higher order,
    and the crossover scale d_eps.

    g(d) = c alpha eps / 4 - (1+s) d^(-1-s+alpha) / 2;
    d_eps = ((1+s) / (c alpha eps))^(1 / (1+s-alpha)). Requires eps > 0.
    """
    if p.n != 1:
        raise ParamError(f"1D analysis; params have n = {p.n}")
    if not (p.eps and p.eps > 0.0):
        raise ParamError("g and d_eps need eps > 0")
    s, alpha = p.s, p.alpha
    ce = p.c_coupling * p.eps

    def g(d):
        d = np.asarray(d, dtype=float)
        return ce * alpha / 4.0 - (1.0 + s) * d ** (-(1.0 + s - alpha)) / 2.0

    d_eps = ((1.0 + s) / (ce * alpha)) ** (1.0 / (1.0 + s - alpha))
    return g, d_eps


def solve_critical_d(p: Params, f_tol: float = 1e-10) -> float:
    """Root of f: probe d_eps * 2^k for a sign change, then bisect down to a
    machine-adjacent bracket. The returned root satisfies |f| <= f_tol and
    d > d_eps; failure to bracket raises BracketError."""
    _, d_eps = g_and_d_eps(p)
    lo = max(d_eps, 0.5 + 1e-9)
    f_lo = f_closed_form(lo, p)
    if f_lo >= 0.0:
        raise BracketError(
            f"f(d_eps) = {f_lo:g} is not negative; eps = {p.eps:g} may exceed "
            "the smallness threshold for a two-interval critical point")
    hi = None
    d = lo
    for _ in range(_PROBE_BUDGET):
        d *= 2.0
        if f_closed_form(d, p) > 0.0:
            hi = d
            break
        lo = d
    if hi is None:
        raise BracketError(
            f"no sign change of f within {_PROBE_BUDGET} doublings from d_eps")
    while True:
        mid = 0.5 * (lo + hi)
        if not (lo < mid < hi):
            break
        if f_closed_form(mid, p) > 0.0:
            hi = mid
        else:
            lo = mid
    root = hi  # side with f >= 0; adjacent to lo
    fr = f_closed_form(root, p)
    fl = f_closed_form(lo, p)
    if abs(fl) < abs(fr):
        root, fr = lo, fl
    if abs(fr) > f_tol:
        raise BracketError(
            f"bisection stalled with |f(d)| = {abs(fr):g} > f_tol = {f_tol:g}")
    return root


@dataclass(frozen=True)
class SweepRecord:
    """One eps sample of the sweep."""

    eps: float
    d_star: float
    d_eps: float
    diameter: float
    f_at_root: float
    zeta_spread: float  # max - min over the four endpoint zeta values


def epsilon_sweep(p: Params, eps_grid: Sequence[float], f_tol: float = 1e-10):
    """Solve the critical gap for each eps and fit the log-log growth law.

    Returns (records, fit) where fit maps:
      slope          - fitted d log(diam) / d log(1/eps)
      slope_target   - 1 / (1 + s - alpha)
      slope_rel_err  - relative deviation
      c_implied      - min over the grid of diam * eps^(1/(1+s-alpha))
    """
    if len(eps_grid) < 4:
        raise ParamError("sweep needs at least 4 eps values for a stable fit")
    records = []
    for e in sorted(eps_grid, reverse=True):
        pe = p.with_eps(float(e))
        _, d_eps = g_and_d_eps(pe)
        d_star = solve_critical_d(pe, f_tol=f_tol)
        cfg = TwoIntervalConfig(d=d_star, params=pe)
        zs = zeta_endpoints(cfg)
        records.append(SweepRecord(
            eps=float(e), d_star=d_star, d_eps=d_eps,
            diameter=d_star + 0.5,
            f_at_root=f_closed_form(d_star, pe),
            zeta_spread=float(zs.max() - zs.min())))
    x = np.log([1.0 / r.eps for r in records])
    y = np.log([r.diameter for r in records])
    slope = float(np.polyfit(x, y, 1)[0])
    target = 1.0 / (1.0 + p.s - p.alpha)
    fit = {
        "slope": slope,
        "slope_target": target,
        "slope_rel_err": abs(slope - target) / target,
        "c_implied": float(min(r.diameter * r.eps ** target for r in records)),
    }
    return records, fit
