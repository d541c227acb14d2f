"""Energy functionals and boundary fields.

The energy under study is

    F_eps(E) = P_s(E) + eps * R_alpha(E)

with the fractional perimeter P_s(E) = int_E int_{E^c} |x-y|^(-n-s) dx dy
and the Riesz repulsion R_alpha(E) = int_E int_E |x-y|^(-alpha) dx dy. The
boundary fields are the potential V(x) = int_E |x-y|^(-alpha) dy, its
gradient, the fractional curvature

    kappa(x) = PV int (chi_{E^c} - chi_E)(y) |x-y|^(-n-s) dy,

and the boundary condition combination zeta = kappa + c * eps * V.

1D values are closed forms built from kernel primitives. 2D values use the
divergence-reduced boundary quadrature from quad: with q = n + s resp.
q = alpha,

    kappa(x)  = (2/s)        PV int_dE (y-x).nu(y) |y-x|^(-2-s)   dsigma(y)
    V(x)      = 1/(2-alpha)     int_dE (y-x).nu(y) |y-x|^(-alpha) dsigma(y)
    grad V(x) = -               int_dE nu(y)       |y-x|^(-alpha) dsigma(y)
    P_s(E)    = 1/s^2      int int |x-y|^(-s)      nu(x).nu(y) dsigma dsigma
    R_alpha   = -1/(2-alpha)^2 int int |x-y|^(2-alpha) nu(x).nu(y) ...

Every 2D functional takes a mesh resolution and can report a refinement
error estimate (the change under doubling the per-node quadrature order).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import GeometryError, ParamError
from .quad import jacobi_half_rule, ladder_half_rule, kernel_primitive, pv_pair_integral
from .sets import (Ball, BoundaryMesh, IntervalSet, Params, StarShape2D,
                   boundary_mesh, volume)

__all__ = [
    "EnergyBreakdown", "frac_perimeter", "riesz_energy", "energy",
    "potential", "grad_potential", "tangential_grad_potential",
    "frac_curvature", "zeta", "zeta_nodes", "boundary_fields",
    "set_integral_2d", "potential_at_points", "grad_potential_at_points",
    "boundary_table", "DEFAULT_NQ", "DEFAULT_RESOLUTION",
]

DEFAULT_NQ = 48          # Gauss-Jacobi nodes per half-side
DEFAULT_RESOLUTION = 256
_ON_CURVE_RTOL = 1e-9


@dataclass(frozen=True)
class EnergyBreakdown:
    """Energy split into its two terms, with the eps weighting applied."""

    perimeter_term: float
    riesz_term: float
    eps: float

    @property
    def total(self) -> float:
        return self.perimeter_term + self.eps * self.riesz_term


# ---------------------------------------------------------------------------
# 1D closed forms


def _single_interval_perimeter(L: float, s: float) -> float:
    return 2.0 * L ** (1.0 - s) / (s * (1.0 - s))


def _cross_perimeter(i1, i2, s: float) -> float:
    # int_{i1} int_{i2} |x-y|^(-1-s), i1 entirely left of i2
    (a, b), (c, d) = i1, i2
    q = 1.0 - s
    return ((c - a) ** q - (c - b) ** q - (d - a) ** q + (d - b) ** q) / (s * q)


def _single_interval_riesz(L: float, alpha: float) -> float:
    return 2.0 * L ** (2.0 - alpha) / ((1.0 - alpha) * (2.0 - alpha))


def _cross_riesz(i1, i2, alpha: float) -> float:
    (a, b), (c, d) = i1, i2
    q = 2.0 - alpha
    return ((d - a) ** q - (d - b) ** q - (c - a) ** q + (c - b) ** q) / ((1.0 - alpha) * q)


def _perimeter_1d(S: IntervalSet, s: float) -> float:
    ivals = S.intervals
    total = math.fsum(_single_interval_perimeter(b - a, s) for a, b in ivals)
    cross = math.fsum(_cross_perimeter(ivals[i], ivals[j], s)
                      for i in range(len(ivals)) for j in range(i + 1, len(ivals)))
    return total - 2.0 * cross


def _riesz_1d(S: IntervalSet, alpha: float) -> float:
    if not (0.0 < alpha < 1.0):
        raise ParamError(f"1D Riesz energy needs alpha in (0, 1), got {alpha!r}")
    ivals = S.intervals
    total = math.fsum(_single_interval_riesz(b - a, alpha) for a, b in ivals)
    cross = math.fsum(_cross_riesz(ivals[i], ivals[j], alpha)
                      for i in range(len(ivals)) for j in range(i + 1, len(ivals)))
    return total + 2.0 * cross


def _potential_1d(S: IntervalSet, x: float, alpha: float) -> float:
    if not (0.0 < alpha < 1.0):
        raise ParamError(f"1D potential needs alpha in (0, 1), got {alpha!r}")
    q = 1.0 - alpha
    acc = []
    for a, b in S.intervals:
        if a < x < b:
            acc.append(((x - a) ** q + (b - x) ** q) / q)
        else:
            acc.append(kernel_primitive(a, b, x, alpha))
    return math.fsum(acc)


def _grad_potential_1d(S: IntervalSet, x: float, alpha: float) -> float:
    eps_pts = S.endpoints()
    scale = max(1.0, float(np.abs(eps_pts).max()))
    if np.any(np.abs(eps_pts - x) <= 1e-12 * scale):
        raise ParamError(
            "potential gradient diverges at a 1D boundary point for every "
            f"alpha > 0 (alpha = {alpha}); evaluate off the boundary")
    acc = []
    for a, b in S.intervals:
        if a < x < b:
            acc.append((x - a) ** (-alpha) - (b - x) ** (-alpha))
        elif x < a:
            acc.append((a - x) ** (-alpha) - (b - x) ** (-alpha))
        else:
            acc.append((x - a) ** (-alpha) - (x - b) ** (-alpha))
    return math.fsum(acc)


# ---------------------------------------------------------------------------
# 2D boundary-reduced quadrature


def _as_star(S) -> StarShape2D:
    if isinstance(S, StarShape2D):
        return S
    if isinstance(S, Ball) and S.n == 2:
        return StarShape2D(S.center, S.radius)
    raise GeometryError(
        f"2D boundary quadrature needs a star shape or planar ball, got {type(S).__name__}")


def _geo(star: StarShape2D, th):
    """Positions, outward unit normals and parameter speed at angles th."""
    r = star.radius(th)
    dr = star.radius_deriv(th)
    c, s = np.cos(th), np.sin(th)
    pos = np.stack([star.center[0] + r * c, star.center[1] + r * s], axis=-1)
    speed = np.sqrt(r * r + dr * dr)
    nu = np.stack([(r * c + dr * s) / speed, (r * s - dr * c) / speed], axis=-1)
    return pos, nu, speed


def _on_curve_angle(star: StarShape2D, x) -> Optional[float]:
    """Parameter angle of x if x lies on the curve, else None."""
    dx = x[0] - star.center[0]
    dy = x[1] - star.center[1]
    rr = math.hypot(dx, dy)
    th = math.atan2(dy, dx)
    r_curve = float(star.radius(np.array([th]))[0])
    if abs(rr - r_curve) <= _ON_CURVE_RTOL * max(1.0, r_curve):
        return th
    return None


def _around(star, theta0, beta, nq, on_curve):
    """Angles and weights for a two-sided integral centered at theta0.

    on_curve selects the Gauss-Jacobi rule carrying the u^beta factor; off
    the curve the integrand is smooth and the graded ladder handles the
    near-peak behaviour.
    """
    if on_curve:
        u, W = jacobi_half_rule(beta, nq)
    else:
        u, W = ladder_half_rule()
    th = np.concatenate([theta0 + u, theta0 - u])
    WW = np.concatenate([W, W])
    return th, WW


def _target_batch(star, targets_xy, focus_angles, beta, nq, on_curve, h_func):
    """Sum W_k h(u_k) for a batch of targets; h_func builds the integrand
    from (positions, normals, speeds, displacement from target)."""
    if on_curve:
        u, W = jacobi_half_rule(beta, nq)
    else:
        u, W = ladder_half_rule()
    th = np.concatenate([focus_angles[:, None] + u[None, :],
                         focus_angles[:, None] - u[None, :]], axis=1)
    pos, nu, speed = _geo(star, th)
    d = pos - targets_xy[:, None, :]
    vals = h_func(pos, nu, speed, d)
    WW = np.concatenate([W, W])
    # einsum keeps the contraction out of threaded BLAS: per-target sums come
    # out bitwise identical whatever the configured thread count
    return np.einsum("ij,j->i", vals, WW)


def _kappa_2d_batch(star, s, thetas, nq):
    x, _, _ = _geo(star, thetas)

    def h(pos, nu, speed, d):
        r2 = d[..., 0] ** 2 + d[..., 1] ** 2
        return (d * nu).sum(-1) * r2 ** (-(2.0 + s) / 2.0) * speed

    return (2.0 / s) * _target_batch(star, x, thetas, -s, nq, True, h)


def _potential_2d_batch(star, alpha, targets_xy, focus_angles, on_curve, nq):
    def h(pos, nu, speed, d):
        r2 = d[..., 0] ** 2 + d[..., 1] ** 2
        return (d * nu).sum(-1) * r2 ** (-alpha / 2.0) * speed

    return _target_batch(star, targets_xy, focus_angles, 2.0 - alpha, nq,
                         on_curve, h) / (2.0 - alpha)


def _grad_potential_2d_one(star, alpha, x, focus, on_curve, nq):
    out = np.zeros(2)
    for comp in range(2):
        def h(pos, nu, speed, d, comp=comp):
            r2 = d[..., 0] ** 2 + d[..., 1] ** 2
            return -nu[..., comp] * r2 ** (-alpha / 2.0) * speed
        out[comp] = _target_batch(star, x[None, :], np.array([focus]), -alpha,
                                  nq, on_curve, h)[0]
    return out


def _focus_angle(star, x) -> float:
    return math.atan2(x[1] - star.center[1], x[0] - star.center[0])


def _perimeter_2d(star, s, resolution, nq):
    mesh = boundary_mesh(star, resolution)
    th = mesh.thetas
    nus = mesh.normals

    def h(pos, nu, speed, d):
        r2 = d[..., 0] ** 2 + d[..., 1] ** 2
        return r2 ** (-s / 2.0) * (nu * nus[:, None, :]).sum(-1) * speed

    inner = _target_batch(star, mesh.points, th, -s, nq, True, h)
    return math.fsum(mesh.weights * inner) / (s * s)


def _riesz_2d(star, alpha, resolution, nq):
    mesh = boundary_mesh(star, resolution)
    th = mesh.thetas
    nus = mesh.normals

    def h(pos, nu, speed, d):
        r2 = d[..., 0] ** 2 + d[..., 1] ** 2
        return r2 ** ((2.0 - alpha) / 2.0) * (nu * nus[:, None, :]).sum(-1) * speed

    inner = _target_batch(star, mesh.points, th, 2.0 - alpha, nq, True, h)
    return -math.fsum(mesh.weights * inner) / (2.0 - alpha) ** 2


# ---------------------------------------------------------------------------
# public functionals


def frac_perimeter(S, s: float, resolution: int = DEFAULT_RESOLUTION,
                   nq: int = DEFAULT_NQ, with_error: bool = False):
    """Fractional perimeter P_s(E)."""
    if not (0.0 < s < 1.0):
        raise ParamError(f"s must lie in (0, 1), got {s!r}")
    if isinstance(S, IntervalSet):
        v = _perimeter_1d(S, s)
        return (v, 0.0) if with_error else v
    if isinstance(S, Ball) and S.n == 1:
        v = _single_interval_perimeter(2.0 * S.radius, s)
        return (v, 0.0) if with_error else v
    star = _as_star(S)
    v = _perimeter_2d(star, s, resolution, nq)
    if not with_error:
        return v
    v2 = _perimeter_2d(star, s, resolution, 2 * nq)
    return v2, abs(v2 - v)


def riesz_energy(S, alpha: float, resolution: int = DEFAULT_RESOLUTION,
                 nq: int = DEFAULT_NQ, with_error: bool = False):
    """Riesz repulsion int_E int_E |x - y|^(-alpha)."""
    if isinstance(S, IntervalSet):
        v = _riesz_1d(S, alpha)
        return (v, 0.0) if with_error else v
    if isinstance(S, Ball) and S.n == 1:
        v = _single_interval_riesz(2.0 * S.radius, alpha)
        return (v, 0.0) if with_error else v
    if not (0.0 < alpha < 2.0):
        raise ParamError(f"2D Riesz energy needs alpha in (0, 2), got {alpha!r}")
    star = _as_star(S)
    v = _riesz_2d(star, alpha, resolution, nq)
    if not with_error:
        return v
    v2 = _riesz_2d(star, alpha, resolution, 2 * nq)
    return v2, abs(v2 - v)


def energy(S, p: Params, resolution: int = DEFAULT_RESOLUTION,
           nq: int = DEFAULT_NQ) -> EnergyBreakdown:
    """Both energy terms. The riesz term is computed even at eps = 0 so the
    breakdown is informative; the total weights it by eps."""
    per = frac_perimeter(S, p.s, resolution, nq)
    rz = riesz_energy(S, p.alpha, resolution, nq)
    return EnergyBreakdown(perimeter_term=per, riesz_term=rz, eps=p.eps)


def potential(S, x, alpha: float, resolution: int = DEFAULT_RESOLUTION,
              nq: int = DEFAULT_NQ) -> float:
    """Riesz potential V_E(x) = int_E |x - y|^(-alpha) dy, any x."""
    if isinstance(S, IntervalSet):
        return _potential_1d(S, float(np.asarray(x).reshape(-1)[0]), alpha)
    if isinstance(S, Ball):
        if S.n == 1:
            iv = IntervalSet([(S.center[0] - S.radius, S.center[0] + S.radius)])
            return _potential_1d(iv, float(np.asarray(x).reshape(-1)[0]), alpha)
        if S.n >= 3:
            return _ball_potential_nd(S, np.asarray(x, dtype=float), alpha)
    star = _as_star(S)
    if not (0.0 < alpha < 2.0):
        raise ParamError(f"2D potential needs alpha in (0, 2), got {alpha!r}")
    x = np.asarray(x, dtype=float).reshape(2)
    th = _on_curve_angle(star, x)
    on_curve = th is not None
    focus = th if on_curve else _focus_angle(star, x)
    return float(_potential_2d_batch(star, alpha, x[None, :],
                                     np.array([focus]), on_curve, nq)[0])


def grad_potential(S, x, alpha: float, resolution: int = DEFAULT_RESOLUTION,
                   nq: int = DEFAULT_NQ) -> np.ndarray:
    """Gradient of the potential, as a vector. At boundary points this is the
    one-sided improper integral, which requires alpha < n - 1; outside that
    range the call is refused rather than regularized."""
    if isinstance(S, IntervalSet):
        return np.array([_grad_potential_1d(S, float(np.asarray(x).reshape(-1)[0]), alpha)])
    if isinstance(S, Ball) and S.n == 1:
        iv = IntervalSet([(S.center[0] - S.radius, S.center[0] + S.radius)])
        return np.array([_grad_potential_1d(iv, float(np.asarray(x).reshape(-1)[0]), alpha)])
    if isinstance(S, Ball) and S.n >= 3:
        x = np.asarray(x, dtype=float).reshape(S.n)
        if np.allclose(x, S.center, rtol=0.0, atol=1e-14):
            return np.zeros(S.n)  # exact by symmetry
        raise GeometryError("gradient for balls with n >= 3 is only provided at the center")
    star = _as_star(S)
    x = np.asarray(x, dtype=float).reshape(2)
    th = _on_curve_angle(star, x)
    on_curve = th is not None
    if on_curve and not (0.0 < alpha < 1.0):
        raise ParamError(
            f"boundary gradient needs alpha in (0, n-1) = (0, 1), got {alpha!r}")
    focus = th if on_curve else _focus_angle(star, x)
    return _grad_potential_2d_one(star, alpha, x, focus, on_curve, nq)


def tangential_grad_potential(S, x, alpha: float,
                              resolution: int = DEFAULT_RESOLUTION,
                              nq: int = DEFAULT_NQ) -> float:
    """grad V . tau at a boundary point of a planar shape."""
    if isinstance(S, (IntervalSet,)) or (isinstance(S, Ball) and S.n != 2):
        raise GeometryError("tangential gradient is defined for planar boundaries only")
    star = _as_star(S)
    x = np.asarray(x, dtype=float).reshape(2)
    th = _on_curve_angle(star, x)
    if th is None:
        raise GeometryError(f"x = {x.tolist()} is not on the boundary")
    g = grad_potential(star, x, alpha, resolution, nq)
    r = float(star.radius(np.array([th]))[0])
    dr = float(star.radius_deriv(np.array([th]))[0])
    sp = math.hypot(r, dr)
    tau = np.array([(dr * math.cos(th) - r * math.sin(th)) / sp,
                    (dr * math.sin(th) + r * math.cos(th)) / sp])
    return float(g @ tau)


def frac_curvature(S, x, s: float, resolution: int = DEFAULT_RESOLUTION,
                   nq: int = DEFAULT_NQ) -> float:
    """Fractional mean curvature at a boundary point x (PV integral).

    Sign convention: positive on boundaries of convex sets.
    """
    if not (0.0 < s < 1.0):
        raise ParamError(f"s must lie in (0, 1), got {s!r}")
    if isinstance(S, IntervalSet):
        return pv_pair_integral(S, float(np.asarray(x).reshape(-1)[0]), s)
    if isinstance(S, Ball) and S.n == 1:
        iv = IntervalSet([(S.center[0] - S.radius, S.center[0] + S.radius)])
        return pv_pair_integral(iv, float(np.asarray(x).reshape(-1)[0]), s)
    star = _as_star(S)
    x = np.asarray(x, dtype=float).reshape(2)
    th = _on_curve_angle(star, x)
    if th is None:
        raise GeometryError(f"x = {x.tolist()} is not on the boundary")
    return float(_kappa_2d_batch(star, s, np.array([th]), nq)[0])


def zeta(S, x, p: Params, resolution: int = DEFAULT_RESOLUTION,
         nq: int = DEFAULT_NQ) -> float:
    """Boundary combination kappa + c_coupling * eps * V at a boundary point."""
    k = frac_curvature(S, x, p.s, resolution, nq)
    if p.eps == 0.0:
        return k
    return k + p.c_coupling * p.eps * potential(S, x, p.alpha, resolution, nq)


# ---------------------------------------------------------------------------
# whole-boundary sweeps


@dataclass(frozen=True)
class BoundaryFields:
    """Per-node boundary data for one shape."""

    mesh: BoundaryMesh
    kappa: np.ndarray
    pot: np.ndarray
    zeta: np.ndarray
    grad_tau: Optional[np.ndarray]  # None when alpha >= n-1 or in 1D

    def __post_init__(self):
        for arr in (self.kappa, self.pot, self.zeta, self.grad_tau):
            if arr is not None:
                arr.flags.writeable = False


def boundary_fields(S, p: Params, resolution: int = DEFAULT_RESOLUTION,
                    nq: int = DEFAULT_NQ, want_grad_tau: bool = True) -> BoundaryFields:
    """kappa, V, zeta (and grad V . tau where defined) at every mesh node."""
    if isinstance(S, IntervalSet) or (isinstance(S, Ball) and S.n == 1):
        iv = S if isinstance(S, IntervalSet) else IntervalSet(
            [(S.center[0] - S.radius, S.center[0] + S.radius)])
        mesh = boundary_mesh(iv, resolution)
        xs = mesh.points[:, 0]
        kap = np.array([pv_pair_integral(iv, float(v), p.s) for v in xs])
        pot = np.array([_potential_1d(iv, float(v), p.alpha) for v in xs])
        zt = kap + p.c_coupling * p.eps * pot
        return BoundaryFields(mesh=mesh, kappa=kap, pot=pot, zeta=zt, grad_tau=None)

    star = _as_star(S)
    mesh = boundary_mesh(star, resolution)
    th = mesh.thetas
    kap = _kappa_2d_batch(star, p.s, th, nq)
    pot = _potential_2d_batch(star, p.alpha, mesh.points, th, True, nq)
    zt = kap + p.c_coupling * p.eps * pot
    gt = None
    if want_grad_tau and 0.0 < p.alpha < 1.0:
        g = np.empty((th.size, 2))
        for comp in range(2):
            def h(pos, nu, speed, d, comp=comp):
                r2 = d[..., 0] ** 2 + d[..., 1] ** 2
                return -nu[..., comp] * r2 ** (-p.alpha / 2.0) * speed
            g[:, comp] = _target_batch(star, mesh.points, th, -p.alpha, nq, True, h)
        gt = (g * mesh.tangents).sum(1)
    return BoundaryFields(mesh=mesh, kappa=kap, pot=pot, zeta=zt, grad_tau=gt)


def zeta_nodes(S, p: Params, resolution: int = DEFAULT_RESOLUTION,
               nq: int = DEFAULT_NQ):
    """(mesh, zeta values) without the tangential gradient (optimizer path)."""
    bf = boundary_fields(S, p, resolution, nq, want_grad_tau=False)
    return bf.mesh, bf.zeta


# ---------------------------------------------------------------------------
# interior integrals over 2D sets (identity checks)


def set_integral_2d(star, f_batch, resolution: int = DEFAULT_RESOLUTION,
                    q_radial: Optional[int] = None):
    """int_E f dx on a star shape via a polar tensor rule.

    f_batch(points, focus_angles) must accept (m, 2) points and return m
    values; focus_angles carries each point's ray angle so boundary-kernel
    evaluations can grade toward the nearest boundary patch.

    The radial Gauss order grows with the angular resolution by default, so
    refining the mesh refines the whole rule: integrands with algebraic
    boundary behaviour then converge at a fixed algebraic order in
    resolution instead of stalling on the radial error.
    """
    star = _as_star(star)
    if q_radial is None:
        q_radial = max(24, int(resolution) // 8)
    from numpy.polynomial.legendre import leggauss
    tq, wq = leggauss(q_radial)
    t = 0.5 * (tq + 1.0)
    wt = 0.5 * wq
    m = int(resolution)
    th = 2.0 * math.pi * np.arange(m) / m
    r = star.radius(th)
    cs, sn = np.cos(th), np.sin(th)
    # nodes: x = center + (t * r) e(theta); weight r^2 t dt dtheta
    pts = np.empty((m * q_radial, 2))
    foci = np.repeat(th, q_radial)
    rad = np.repeat(r, q_radial) * np.tile(t, m)
    pts[:, 0] = star.center[0] + rad * np.repeat(cs, q_radial)
    pts[:, 1] = star.center[1] + rad * np.repeat(sn, q_radial)
    vals = np.asarray(f_batch(pts, foci), dtype=float)
    w = (2.0 * math.pi / m) * np.repeat(r * r, q_radial) * np.tile(t * wt, m)
    return float(math.fsum(vals * w))


def potential_at_points(star, pts, foci, alpha: float, nq: int = DEFAULT_NQ):
    """V at interior/exterior points, batched (smooth ladder path)."""
    star = _as_star(star)
    pts = np.asarray(pts, dtype=float)
    return _potential_2d_batch(star, alpha, pts, np.asarray(foci, dtype=float),
                               False, nq)


def grad_potential_at_points(star, pts, foci, alpha: float, nq: int = DEFAULT_NQ):
    """grad V at off-boundary points, batched."""
    star = _as_star(star)
    pts = np.asarray(pts, dtype=float)
    foci = np.asarray(foci, dtype=float)
    out = np.empty_like(pts)
    for comp in range(2):
        def h(pos, nu, speed, d, comp=comp):
            r2 = d[..., 0] ** 2 + d[..., 1] ** 2
            return -nu[..., comp] * r2 ** (-alpha / 2.0) * speed
        out[:, comp] = _target_batch(star, pts, foci, -alpha, nq, False, h)
    return out


# ---------------------------------------------------------------------------
# balls in n >= 3: radial slicing with closed-form cap fractions


def _ball_potential_nd(B: Ball, x, alpha: float) -> float:
    from scipy.special import betainc
    n = B.n
    if not (0.0 < alpha < n):
        raise ParamError(f"potential needs alpha in (0, n), got {alpha!r}")
    x = np.asarray(x, dtype=float).reshape(n)
    dist = float(np.linalg.norm(x - np.asarray(B.center)))
    R = B.radius
    omega = 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)  # |S^{n-1}|
    if dist <= 1e-14 * R:
        return omega * R ** (n - alpha) / (n - alpha)

    def cap_fraction(rho):
        # fraction of the sphere of radius rho about x lying inside B
        c = (dist * dist + rho * rho - R * R) / (2.0 * rho * dist)
        c = np.clip(c, -1.0, 1.0)
        phi = np.arccos(c)
        z = np.sin(phi) ** 2
        half = 0.5 * betainc((n - 1) / 2.0, 0.5, z)
        return np.where(phi <= 0.5 * math.pi, half, 1.0 - half)

    lo = abs(R - dist)
    hi = R + dist
    inner = 0.0
    if dist < R:
        inner = omega * lo ** (n - alpha) / (n - alpha)
    # integrand is continuous on [lo, hi]; composite Gauss-Legendre
    from numpy.polynomial.legendre import leggauss
    t, w = leggauss(64)
    total = 0.0
    panels = np.linspace(lo, hi, 9)
    for p0, p1 in zip(panels, panels[1:]):
        mid, half_w = 0.5 * (p0 + p1), 0.5 * (p1 - p0)
        rho = mid + half_w * t
        total += half_w * float(w @ (rho ** (n - 1.0 - alpha) * cap_fraction(rho)))
    return inner + omega * total


def boundary_table(S, p: Params, resolution: int = DEFAULT_RESOLUTION,
                   nq: int = DEFAULT_NQ):
    """Rows (index, coordinates..., kappa, V, gradV.tau, zeta) per node, for
    the CSV batch entry point. gradV.tau is NaN where undefined."""
    bf = boundary_fields(S, p, resolution, nq)
    m = bf.mesh.points.shape[0]
    gt = bf.grad_tau if bf.grad_tau is not None else np.full(m, math.nan)
    rows = []
    for i in range(m):
        rows.append((i, *bf.mesh.points[i].tolist(), float(bf.kappa[i]),
                     float(bf.pot[i]), float(gt[i]), float(bf.zeta[i])))
    return rows
