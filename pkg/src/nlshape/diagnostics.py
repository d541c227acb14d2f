"""Rigidity diagnostics and integral-identity checks.

Quantities measured on a candidate critical set:

* delta: the Lipschitz defect of the curvature over boundary node pairs,
  sup |kappa(x) - kappa(y)| / |x - y|. On critical sets the boundary
  condition turns this into c*eps*sup |V(x)-V(y)|/|x-y|, so both routes are
  offered and agree there;
* eta: the scale-weighted version diam^(2n+s+1) * delta; the implied
  constant delta / eps is reported alongside, since the interesting bound
  is eta <= C * diam^(2n+s+1) * eps with C not known explicitly;
* rho: the annulus deficit inf_p (R - r) / diam over centers p with
  B_r(p) inside E inside B_R(p);
* lambda_hat: weighted boundary mean of zeta, with the sup-norm residual of
  the constant-zeta condition; a cross-estimate of the same multiplier comes
  from integral identities alone (no boundary sweep), see
  lambda_cross_estimate;
* named identity checks, each returning a relative residual with both sides
  computed by quadrature:
    Au1          int_E grad V . x dx = -(alpha/2) int_E V dx
    Au2          int_dE V x.nu dsigma = (n - alpha/2) int_E V dx
    Minkowski    int_dE kappa x.nu dsigma = (n - s)/c_var * P_s(E)
    Lal          max_x V_E(x) <= V_B(0), B the centered ball with |B| = |E|
    TangentialBall   sup |grad V . tau| scales linearly with the ball-map
                     size mu (ratio test against the half-amplitude shape)

calibrate_variation_constant pins down c_var on balls, where kappa is
constant and the curvature pairing has a closed value; the ratio is
radius-independent, which doubles as a self-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import minimize

from .errors import GeometryError, ParamError
from .functionals import (DEFAULT_NQ, DEFAULT_RESOLUTION, boundary_fields,
                          frac_perimeter, grad_potential_at_points,
                          potential_at_points, riesz_energy, set_integral_2d,
                          _as_star, _potential_1d, _grad_potential_1d)
from .quad import QuadTolerance, brute_oracle, pv_pair_integral
from .sets import (Ball, IntervalSet, Params, StarShape2D, boundary_mesh,
                   diameter, isodiametric_ratio, volume)

__all__ = [
    "DiagnosticsReport", "lipschitz_defect_delta", "eta", "annulus_deficit_rho",
    "lambda_hat_and_residual", "lambda_cross_estimate", "identity_check",
    "calibrate_variation_constant", "ball_map_mu", "diagnose", "IDENTITY_KINDS",
]

IDENTITY_KINDS = ("Au1", "Au2", "Minkowski", "Lal", "TangentialBall")
DEFAULT_MU_GATE = 0.5
_PROBE_SEED = 173001
_RESIDUAL_FLOOR = 1e-30


@dataclass(frozen=True)
class DiagnosticsReport:
    """One shape's diagnostic summary. implied_constants carries the
    empirical values of the constants that are only existential in the
    underlying estimates (bound constant for eta, cross-estimated multiplier,
    ball-map size)."""

    delta_s: float
    eta_s: float
    rho: Optional[float]
    iso_ratio: float
    lambda_hat: float
    el_residual: float
    identity_residuals: dict
    mesh_resolution: int
    error_estimates: dict = field(default_factory=dict)
    implied_constants: dict = field(default_factory=dict)

    def as_dict(self):
        from dataclasses import asdict
        return asdict(self)


def _pairwise_defect(points, values):
    d = points[:, None, :] - points[None, :, :]
    dist = np.sqrt((d * d).sum(-1))
    dv = np.abs(values[:, None] - values[None, :])
    iu = np.triu_indices(points.shape[0], k=1)
    return float((dv[iu] / dist[iu]).max())


def lipschitz_defect_delta(S, p: Params, resolution: int = DEFAULT_RESOLUTION,
                           nq: int = DEFAULT_NQ, route: str = "kappa") -> float:
    """sup over boundary node pairs of |kappa(x) - kappa(y)| / |x - y|.

    route="potential" instead computes c * eps * sup |V(x) - V(y)| / |x - y|,
    which equals the kappa route on sets satisfying the boundary condition
    (zeta constant makes the kappa differences -c*eps times the V
    differences). Comparing the two routes is itself a criticality check.
    """
    if route not in ("kappa", "potential"):
        raise ParamError(f"route must be 'kappa' or 'potential', got {route!r}")
    bf = boundary_fields(S, p, resolution, nq, want_grad_tau=False)
    if bf.mesh.points.shape[0] < 2:
        raise GeometryError("Lipschitz defect needs at least 2 boundary nodes")
    if route == "kappa":
        return _pairwise_defect(bf.mesh.points, bf.kappa)
    return p.c_coupling * p.eps * _pairwise_defect(bf.mesh.points, bf.pot)


def eta(S, p: Params, delta: float) -> float:
    """Scale-weighted defect diam^(2n+s+1) * delta."""
    if delta < 0.0:
        raise ParamError(f"delta must be nonnegative, got {delta!r}")
    return diameter(S) ** (2.0 * p.n + p.s + 1.0) * delta


def annulus_deficit_rho(S, samples: int = 512) -> float:
    """inf over centers of (circumradius - inradius) / diam.

    Balls score 0 exactly. For star shapes the center is found by pattern
    search with shrinking steps, restarted from a small deterministic grid;
    the minimizer is local (the sets of interest are near-balls, where the
    annulus width has a benign interior minimum).
    """
    if isinstance(S, Ball):
        if S.n < 2:
            raise GeometryError("annulus deficit excludes 1D sets")
        return 0.0
    if not isinstance(S, StarShape2D):
        raise GeometryError(
            f"annulus deficit needs a star shape or ball, got {type(S).__name__}")
    th = 2.0 * math.pi * np.arange(samples) / samples
    r = S.radius(th)
    bx = S.center[0] + r * np.cos(th)
    by = S.center[1] + r * np.sin(th)

    def width(pt):
        dist = np.hypot(bx - pt[0], by - pt[1])
        return float(dist.max() - dist.min())

    scale = float(r.mean())
    starts = [np.array(S.center, dtype=float)]
    for dx, dy in ((0.2, 0.0), (-0.1, 0.17), (-0.1, -0.17)):
        starts.append(np.array([S.center[0] + dx * scale,
                                S.center[1] + dy * scale]))
    best = math.inf
    for p0 in starts:
        res = minimize(width, p0, method="Nelder-Mead",
                       options={"xatol": 1e-10 * scale, "fatol": 1e-13 * scale,
                                "maxfev": 4000})
        best = min(best, float(res.fun))
    return best / diameter(S)


def lambda_hat_and_residual(S, p: Params, resolution: int = DEFAULT_RESOLUTION,
                            nq: int = DEFAULT_NQ):
    """Weighted boundary mean of zeta and the sup-norm residual against it.

    The mean is the orthogonal projection of zeta onto constants, so no
    other choice of the multiplier gives a smaller weighted-L2 defect.
    """
    bf = boundary_fields(S, p, resolution, nq, want_grad_tau=False)
    w = bf.mesh.weights
    lam = math.fsum(w * bf.zeta) / math.fsum(w)
    res = float(np.abs(bf.zeta - lam).max())
    return lam, res


def lambda_cross_estimate(S, p: Params, resolution: int = DEFAULT_RESOLUTION,
                          nq: int = DEFAULT_NQ) -> float:
    """The multiplier from integral identities alone.

    Pairing the boundary condition with x.nu and applying the Minkowski and
    Au2 identities gives

        lambda * n * |E| = (n-s)/c_var * P_s + c*eps*(n - alpha/2) * R_alpha

    (int_E V equals the Riesz double integral). Exact on critical sets, a
    consistency cross-check on candidates.
    """
    per = frac_perimeter(S, p.s, resolution, nq)
    rz = riesz_energy(S, p.alpha, resolution, nq)
    num = (p.n - p.s) / p.c_var * per \
        + p.c_coupling * p.eps * (p.n - 0.5 * p.alpha) * rz
    return num / (p.n * volume(S))


def ball_map_mu(S) -> float:
    """Size of S as a radial perturbation of its equal-volume centered ball:
    max over angles of |r(theta) - R| + |r'(theta)|, R = sqrt(area/pi)."""
    if isinstance(S, Ball):
        if S.n != 2:
            raise GeometryError("ball-map size is a planar diagnostic")
        return 0.0
    if not isinstance(S, StarShape2D):
        raise GeometryError(
            f"ball-map size needs a star shape, got {type(S).__name__}")
    R = math.sqrt(volume(S) / math.pi)
    m = max(1024, 8 * max(1, S.kmax))
    th = 2.0 * math.pi * np.arange(m) / m
    return float((np.abs(S.radius(th) - R) + np.abs(S.radius_deriv(th))).max())


def _rel_residual(lhs: float, rhs: float) -> float:
    return abs(lhs - rhs) / max(abs(lhs), abs(rhs), _RESIDUAL_FLOOR)


_VOL_TOL = QuadTolerance(rel_tol=1e-9, abs_tol=1e-12, max_subdivisions=6000)


def _interval_integral(S: IntervalSet, f) -> float:
    # int_E f for a pointwise f with (integrable) boundary singularities;
    # the adaptive engine grades into the endpoints on its own
    def vec(x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return np.array([f(float(v)) for v in x])
    return brute_oracle(vec, S, _VOL_TOL)


def _int_v_over_set(S, p: Params, resolution, nq) -> float:
    """int_E V dx by direct volume quadrature (not via the energy identity,
    so identity checks that involve it stay two-sided)."""
    if isinstance(S, IntervalSet):
        return _interval_integral(S, lambda x: _potential_1d(S, x, p.alpha))
    star = _as_star(S)
    return set_integral_2d(
        star, lambda pts, foci: potential_at_points(star, pts, foci, p.alpha, nq),
        resolution)


def _grad_self_moment(a: float, b: float, alpha: float) -> float:
    # int_a^b x [(x-a)^(-alpha) - (b-x)^(-alpha)] dx: the own-interval part
    # of int x V' is endpoint singular, so it goes in closed form
    return (b - a) ** (2.0 - alpha) * (2.0 / (2.0 - alpha) - 1.0 / (1.0 - alpha))


def _identity_au1(S, p: Params, resolution, nq) -> float:
    alpha = p.alpha
    if isinstance(S, IntervalSet):
        # split V' into the own-interval part (closed form above; the
        # quadrature must not sample the divergent endpoints) and the
        # cross-interval part, smooth on each interval of integration
        lhs_terms = []
        for a, b in S.intervals:
            lhs_terms.append(_grad_self_moment(a, b, alpha))
            others = IntervalSet([iv for iv in S.intervals if iv != (a, b)]) \
                if len(S.intervals) > 1 else None
            if others is not None:
                lhs_terms.append(brute_oracle(
                    lambda x: np.array([
                        _grad_potential_1d(others, float(v), alpha) * float(v)
                        for v in np.atleast_1d(x)]),
                    (a, b), _VOL_TOL))
        lhs = math.fsum(lhs_terms)
        int_v = _int_v_over_set(S, p, resolution, nq)
        return _rel_residual(lhs, -0.5 * alpha * int_v)
    star = _as_star(S)
    if not (0.0 < alpha < 1.0):
        raise ParamError(f"Au1 on planar sets needs alpha in (0, 1), got {alpha!r}")

    def gv_dot_x(pts, foci):
        g = grad_potential_at_points(star, pts, foci, alpha, nq)
        return (g * pts).sum(1)

    lhs = set_integral_2d(star, gv_dot_x, resolution)
    int_v = _int_v_over_set(star, p, resolution, nq)
    return _rel_residual(lhs, -0.5 * alpha * int_v)


def au2_sides(S, p: Params, resolution: int = DEFAULT_RESOLUTION,
              nq: int = DEFAULT_NQ):
    """(boundary pairing int_dE V x.nu, volume integral int_E V).

    The ratio of the two recovers the factor n - alpha/2; exposed separately
    so the factor can be fitted across alpha values.
    """
    if isinstance(S, IntervalSet):
        mesh = boundary_mesh(S, resolution)
        lhs = math.fsum(
            _potential_1d(S, float(x[0]), p.alpha) * float(x[0]) * float(nrm[0])
            for x, nrm in zip(mesh.points, mesh.normals))
    else:
        star = _as_star(S)
        bf = boundary_fields(star, p, resolution, nq, want_grad_tau=False)
        xdotnu = (bf.mesh.points * bf.mesh.normals).sum(1)
        lhs = math.fsum(bf.mesh.weights * bf.pot * xdotnu)
    return lhs, _int_v_over_set(S, p, resolution, nq)


def _identity_au2(S, p: Params, resolution, nq) -> float:
    lhs, int_v = au2_sides(S, p, resolution, nq)
    return _rel_residual(lhs, (p.n - 0.5 * p.alpha) * int_v)


def _identity_minkowski(S, p: Params, resolution, nq) -> float:
    if isinstance(S, IntervalSet):
        mesh = boundary_mesh(S, resolution)
        lhs = math.fsum(
            pv_pair_integral(S, float(x[0]), p.s) * float(x[0]) * float(nrm[0])
            for x, nrm in zip(mesh.points, mesh.normals))
        per = frac_perimeter(S, p.s)
    else:
        star = _as_star(S)
        bf = boundary_fields(star, p, resolution, nq, want_grad_tau=False)
        xdotnu = (bf.mesh.points * bf.mesh.normals).sum(1)
        lhs = math.fsum(bf.mesh.weights * bf.kappa * xdotnu)
        per = frac_perimeter(star, p.s, resolution, nq)
    rhs = (p.n - p.s) * per / p.c_var
    return _rel_residual(lhs, rhs)


def _probe_points(S, count, rng):
    """Probe cloud covering the set and a shell around it."""
    if isinstance(S, IntervalSet):
        lo = S.intervals[0][0]
        hi = S.intervals[-1][1]
        pad = 0.5 * (hi - lo)
        return rng.uniform(lo - pad, hi + pad, size=(count, 1))
    star = _as_star(S)
    c = np.asarray(star.center)
    rmax = float(star.samples(512).max())
    return c + rng.uniform(-1.5 * rmax, 1.5 * rmax, size=(count, 2))


def _identity_lal(S, p: Params, resolution, nq, probes: int = 50,
                  seed: int = _PROBE_SEED) -> float:
    """Positive part of max_x (V_E(x) - V_B(0)) / V_B(0) over probe points,
    B the centered ball of the same volume. The clamp makes 'no violation'
    read exactly 0."""
    alpha = p.alpha
    vol = volume(S)
    rng = np.random.default_rng(seed)
    if S.n == 1:
        half = 0.5 * vol
        vb0 = 2.0 * half ** (1.0 - alpha) / (1.0 - alpha)
        iv = S if isinstance(S, IntervalSet) else IntervalSet(
            [(S.center[0] - S.radius, S.center[0] + S.radius)])
        pts = _probe_points(iv, probes, rng)
        vmax = max(_potential_1d(iv, float(x[0]), alpha) for x in pts)
    else:
        R = (vol / math.pi) ** 0.5
        vb0 = 2.0 * math.pi * R ** (2.0 - alpha) / (2.0 - alpha)
        star = _as_star(S)
        pts = _probe_points(star, probes, rng)
        foci = np.arctan2(pts[:, 1] - star.center[1], pts[:, 0] - star.center[0])
        vmax = float(potential_at_points(star, pts, foci, alpha, nq).max())
    return max(0.0, (vmax - vb0) / vb0)


def _sup_tangential(S, p: Params, resolution, nq) -> float:
    bf = boundary_fields(S, p, resolution, nq, want_grad_tau=True)
    if bf.grad_tau is None:
        raise ParamError("tangential gradient needs alpha in (0, 1)")
    return float(np.abs(bf.grad_tau).max())


def _identity_tangential_ball(S, p: Params, resolution, nq) -> float:
    """Linearity of sup |grad V . tau| in the ball-map size mu: halve the
    radial deviation from the equal-area ball and compare the ratio of the
    sups with the ratio of the mus. The residual is their mismatch."""
    star = _as_star(S)
    if not (0.0 < p.alpha < 1.0):
        raise ParamError("tangential-gradient check needs alpha in (0, 1)")
    mu_full = ball_map_mu(star)
    if mu_full == 0.0:
        return 0.0
    R = math.sqrt(volume(star) / math.pi)
    half = StarShape2D(star.center, R + 0.5 * (star.r0 - R),
                       0.5 * star.a, 0.5 * star.b)
    mu_half = ball_map_mu(half)
    ratio_mu = mu_full / mu_half
    g_full = _sup_tangential(star, p, resolution, nq)
    g_half = _sup_tangential(half, p, resolution, nq)
    ratio_g = g_full / max(g_half, _RESIDUAL_FLOOR)
    return abs(ratio_g - ratio_mu) / ratio_mu


def identity_check(S, p: Params, kind: str, resolution: int = DEFAULT_RESOLUTION,
                   nq: int = DEFAULT_NQ) -> float:
    """Relative residual of one of the named integral identities."""
    if kind not in IDENTITY_KINDS:
        raise ParamError(
            f"unknown identity kind {kind!r}; choose from {IDENTITY_KINDS}")
    if kind == "TangentialBall":
        if isinstance(S, IntervalSet) or S.n != 2:
            raise GeometryError("TangentialBall is a planar check")
        return _identity_tangential_ball(S, p, resolution, nq)
    if kind == "Au1":
        return _identity_au1(S, p, resolution, nq)
    if kind == "Au2":
        return _identity_au2(S, p, resolution, nq)
    if kind == "Minkowski":
        return _identity_minkowski(S, p, resolution, nq)
    return _identity_lal(S, p, resolution, nq)


def calibrate_variation_constant(s: float, n: int = 2,
                                 resolution: int = DEFAULT_RESOLUTION,
                                 nq: int = DEFAULT_NQ, radii=(0.5, 1.0, 2.0),
                                 spread_tol: float = 1e-4) -> float:
    """c_var = (n - s) P_s(B) / int_dB kappa x.nu dsigma over balls of several
    radii, averaged; raises if the values disagree beyond spread_tol.

    Both sides scale like R^(n-s), so radius independence of the ratio is a
    built-in correctness check. In 1D everything is closed-form and the value
    is exactly 1 under the conventions used here.
    """
    vals = []
    if n == 1:
        for R in radii:
            iv = IntervalSet([(-R, R)])
            pairing = math.fsum(pv_pair_integral(iv, x, s) * x * nrm
                                for x, nrm in ((-R, -1.0), (R, 1.0)))
            vals.append((1.0 - s) * frac_perimeter(iv, s) / pairing)
    elif n == 2:
        from .functionals import _kappa_2d_batch
        for R in radii:
            star = _as_star(Ball((0.0, 0.0), R))
            mesh = boundary_mesh(star, resolution)
            kap = _kappa_2d_batch(star, s, mesh.thetas, nq)
            xdotnu = (mesh.points * mesh.normals).sum(1)
            pairing = math.fsum(mesh.weights * kap * xdotnu)
            vals.append((2.0 - s) * frac_perimeter(star, s, resolution, nq) / pairing)
    else:
        raise ParamError(f"calibration supports n in {{1, 2}}, got {n}")
    spread = (max(vals) - min(vals)) / abs(float(np.mean(vals)))
    if spread > spread_tol:
        raise ParamError(
            f"calibration is radius-dependent (spread {spread:g}); "
            "raise the quadrature resolution")
    return float(np.mean(vals))


def diagnose(S, p: Params, resolution: int = DEFAULT_RESOLUTION,
             nq: int = DEFAULT_NQ, with_identities: bool = True,
             mu_gate: float = DEFAULT_MU_GATE) -> DiagnosticsReport:
    """Full diagnostic sweep for one shape.

    The TangentialBall check only runs when the measured mu is positive and
    at most mu_gate: the underlying comparison is a small-perturbation
    statement and is out of regime for large deviations from a ball.
    """
    bf = boundary_fields(S, p, resolution, nq, want_grad_tau=False)
    w = bf.mesh.weights
    lam = math.fsum(w * bf.zeta) / math.fsum(w)
    el_res = float(np.abs(bf.zeta - lam).max())
    delta = _pairwise_defect(bf.mesh.points, bf.kappa)
    eta_v = eta(S, p, delta)
    two_d = not isinstance(S, IntervalSet) and S.n == 2
    rho = annulus_deficit_rho(S) if two_d else None

    implied = {"lambda_cross": lambda_cross_estimate(S, p, resolution, nq)}
    if p.eps > 0.0:
        implied["eta_bound_constant"] = delta / p.eps
    if two_d and isinstance(S, StarShape2D):
        implied["mu"] = ball_map_mu(S)

    identities = {}
    if with_identities:
        if 0.0 < p.alpha < 1.0:
            # the gradient route under Au1 needs the weak-singularity range;
            # for alpha >= 1 the boundary layer defeats the interior rule
            identities["Au1"] = _identity_au1(S, p, resolution, nq)
        identities["Au2"] = _identity_au2(S, p, resolution, nq)
        identities["Minkowski"] = _identity_minkowski(S, p, resolution, nq)
        identities["Lal"] = _identity_lal(S, p, resolution, nq)
        mu = implied.get("mu")
        if mu is not None and 0.0 < mu <= mu_gate and 0.0 < p.alpha < 1.0:
            identities["TangentialBall"] = _identity_tangential_ball(
                S, p, resolution, nq)

    errors = {}
    if two_d:
        _, per_err = frac_perimeter(S, p.s, resolution, nq, with_error=True)
        _, rz_err = riesz_energy(S, p.alpha, resolution, nq, with_error=True)
        errors["perimeter"] = per_err
        errors["riesz"] = rz_err
        bf2 = boundary_fields(S, p, resolution, 2 * nq, want_grad_tau=False)
        errors["kappa"] = float(np.abs(bf2.kappa - bf.kappa).max())
        errors["potential"] = float(np.abs(bf2.pot - bf.pot).max())

    return DiagnosticsReport(
        delta_s=delta, eta_s=eta_v, rho=rho,
        iso_ratio=isodiametric_ratio(S),
        lambda_hat=lam, el_residual=el_res,
        identity_residuals=identities,
        mesh_resolution=int(resolution) if two_d else bf.mesh.points.shape[0],
        error_estimates=errors,
        implied_constants=implied)
