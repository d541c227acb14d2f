"""Set geometries and the problem parameter block.

Three concrete geometries are supported: finite unions of disjoint open
intervals on the line, balls in R^n, and star-shaped planar domains given by
a trigonometric radius function

    r(theta) = r0 + sum_k a_k cos(k theta) + b_k sin(k theta)

about a center point. All geometry objects are frozen after construction;
derived quantities (volume, diameter, boundary meshes) are pure functions of
the stored data, so instances can be shared freely across threads.

Volumes and diameters accumulate with compensated summation (math.fsum) so
results do not depend on summation order.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .errors import GeometryError, ParamError

# Oversampling factor used when checking positivity of a trigonometric radius
# and when sampling for diameters. Positivity on this grid is a proxy for
# positivity everywhere; 8x the highest retained mode is comfortably dense.
_POSITIVITY_OVERSAMPLE = 8
_MIN_POSITIVITY_SAMPLES = 512


def _ball_volume_coeff(n: int) -> float:
    # Lebesgue measure of the unit ball in R^n.
    return math.pi ** (n / 2.0) / math.gamma(n / 2.0 + 1.0)


@dataclass(frozen=True)
class Params:
    """Problem parameters for the perimeter/repulsion energy.

    eps and mass are mutually derivable through
    eps = mass ** (1 - alpha/n + s/n); whichever one is omitted is filled in
    from the other. eps = 0 is the pure-perimeter problem and leaves mass
    unset.

    c_coupling is the constant multiplying eps*V in the boundary condition
    zeta = kappa + c_coupling * eps * V. The symmetric double-integral form of
    the repulsion term has first variation 2*V, so 2.0 is the default; it is
    configurable, never asserted.

    c_var is the first-variation normalization relating the curvature pairing
    to the perimeter (see diagnostics.calibrate_variation_constant). With the
    conventions used here it is 1 and that is the default.
    """

    n: int
    s: float
    alpha: float
    eps: Optional[float] = None
    mass: Optional[float] = None
    c_coupling: float = 2.0
    c_var: float = 1.0

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 1:
            raise ParamError(f"n must be a positive integer, got {self.n!r}")
        if not (0.0 < self.s < 1.0):
            raise ParamError(f"s must lie in (0, 1), got {self.s!r}")
        if not (0.0 < self.alpha < self.n):
            raise ParamError(
                f"alpha must lie in (0, n) = (0, {self.n}), got {self.alpha!r}"
            )
        if self.c_coupling <= 0.0:
            raise ParamError(f"c_coupling must be positive, got {self.c_coupling!r}")
        if self.c_var <= 0.0:
            raise ParamError(f"c_var must be positive, got {self.c_var!r}")

        e = self.mass_to_eps_exponent()
        if self.eps is None and self.mass is None:
            object.__setattr__(self, "eps", 0.0)
        elif self.eps is None:
            if self.mass <= 0.0:
                raise ParamError(f"mass must be positive, got {self.mass!r}")
            object.__setattr__(self, "eps", self.mass ** e)
        elif self.mass is None:
            if self.eps < 0.0:
                raise ParamError(f"eps must be nonnegative, got {self.eps!r}")
            if self.eps > 0.0:
                object.__setattr__(self, "mass", self.eps ** (1.0 / e))
        else:
            if self.eps < 0.0:
                raise ParamError(f"eps must be nonnegative, got {self.eps!r}")
            if self.mass <= 0.0:
                raise ParamError(f"mass must be positive, got {self.mass!r}")
            expect = self.mass ** e
            if abs(self.eps - expect) > 1e-9 * max(1.0, abs(expect)):
                raise ParamError(
                    "eps and mass are inconsistent: "
                    f"eps={self.eps!r} but mass**(1-alpha/n+s/n)={expect!r}"
                )

    def mass_to_eps_exponent(self) -> float:
        return 1.0 - self.alpha / self.n + self.s / self.n

    def with_eps(self, eps: float) -> "Params":
        """Copy with a new eps; mass is rederived."""
        return replace(self, eps=eps, mass=None)


@dataclass(frozen=True)
class IntervalSet:
    """Finite union of disjoint open intervals (a_i, b_i), a_i < b_i.

    Intervals are sorted on construction. Overlapping or touching intervals
    are rejected rather than merged: a touching pair has a genuinely
    different boundary than its union.
    """

    intervals: tuple

    def __init__(self, intervals: Sequence[Sequence[float]]):
        ivals = sorted((float(a), float(b)) for a, b in intervals)
        if not ivals:
            raise GeometryError("interval set must be nonempty")
        for a, b in ivals:
            if not (math.isfinite(a) and math.isfinite(b)):
                raise GeometryError(f"interval endpoints must be finite: ({a}, {b})")
            if not a < b:
                raise GeometryError(f"empty or inverted interval ({a}, {b})")
        for (a1, b1), (a2, b2) in zip(ivals, ivals[1:]):
            if b1 >= a2:
                raise GeometryError(
                    f"intervals ({a1}, {b1}) and ({a2}, {b2}) overlap or touch"
                )
        object.__setattr__(self, "intervals", tuple(ivals))

    @property
    def n(self) -> int:
        return 1

    def endpoints(self) -> np.ndarray:
        """All boundary points in increasing order: a_1, b_1, a_2, b_2, ..."""
        out = np.array([e for ab in self.intervals for e in ab], dtype=float)
        return out

    def contains(self, x: float) -> bool:
        return any(a < x < b for a, b in self.intervals)


@dataclass(frozen=True)
class Ball:
    """Euclidean ball in R^n."""

    center: tuple
    radius: float

    def __init__(self, center: Sequence[float], radius: float):
        c = tuple(float(v) for v in center)
        if len(c) < 1:
            raise GeometryError("ball center needs at least one coordinate")
        if not (radius > 0.0 and math.isfinite(radius)):
            raise GeometryError(f"ball radius must be positive and finite, got {radius!r}")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "radius", float(radius))

    @property
    def n(self) -> int:
        return len(self.center)


class StarShape2D:
    """Star-shaped planar domain with trigonometric radius about a center.

    The coefficient representation is the source of truth; sampled values are
    derived from it on demand (and agree with the coefficients exactly at the
    sample nodes, up to roundoff). Construction fails if the radius is not
    strictly positive on a dense check grid.
    """

    __slots__ = ("center", "r0", "a", "b", "_min_radius")

    def __init__(self, center: Sequence[float], r0: float,
                 a: Sequence[float] = (), b: Sequence[float] = ()):
        c = tuple(float(v) for v in center)
        if len(c) != 2:
            raise GeometryError("star shape center must have two coordinates")
        a = np.atleast_1d(np.asarray(a, dtype=float))
        b = np.atleast_1d(np.asarray(b, dtype=float))
        if a.size == 0:
            a = np.zeros(0)
        if b.size == 0:
            b = np.zeros(0)
        k = max(a.size, b.size)
        a = np.pad(a, (0, k - a.size))
        b = np.pad(b, (0, k - b.size))
        a.flags.writeable = False
        b.flags.writeable = False
        self.center = c
        self.r0 = float(r0)
        self.a = a
        self.b = b

        m = max(_MIN_POSITIVITY_SAMPLES, _POSITIVITY_OVERSAMPLE * max(1, k))
        rchk = self.radius(2.0 * math.pi * np.arange(m) / m)
        rmin = float(rchk.min())
        if not rmin > 0.0:
            raise GeometryError(
                f"radius function is not strictly positive (min {rmin:g} on check grid)"
            )
        self._min_radius = rmin

    @property
    def n(self) -> int:
        return 2

    @property
    def kmax(self) -> int:
        return int(self.a.size)

    def radius(self, theta):
        theta = np.asarray(theta, dtype=float)
        r = np.full_like(theta, self.r0)
        for k in range(self.a.size):
            r += self.a[k] * np.cos((k + 1) * theta) + self.b[k] * np.sin((k + 1) * theta)
        return r

    def radius_deriv(self, theta):
        theta = np.asarray(theta, dtype=float)
        dr = np.zeros_like(theta)
        for k in range(self.a.size):
            kk = k + 1
            dr += kk * (self.b[k] * np.cos(kk * theta) - self.a[k] * np.sin(kk * theta))
        return dr

    def samples(self, m: int) -> np.ndarray:
        """Radius values at the m uniform angles 2*pi*j/m."""
        return self.radius(2.0 * math.pi * np.arange(m) / m)

    @classmethod
    def from_samples(cls, center, values, k_max: Optional[int] = None) -> "StarShape2D":
        """Build from uniformly sampled radii via a real FFT.

        Modes above k_max (default: the largest alias-free order) are
        discarded, which doubles as the spectral smoothing step of the shape
        optimizer. The reconstruction agrees with the input samples exactly
        only when the input is band-limited to the retained modes.
        """
        v = np.asarray(values, dtype=float)
        m = v.size
        if m < 4:
            raise GeometryError("need at least 4 samples to build a star shape")
        kcap = (m - 1) // 2
        k = kcap if k_max is None else min(int(k_max), kcap)
        coef = np.fft.rfft(v)
        r0 = coef[0].real / m
        a = 2.0 * coef[1:k + 1].real / m
        b = -2.0 * coef[1:k + 1].imag / m
        return cls(center, r0, a, b)

    def __repr__(self):
        return (f"StarShape2D(center={self.center}, r0={self.r0:.6g}, "
                f"modes={self.kmax})")


SetGeometry = (IntervalSet, Ball, StarShape2D)


@dataclass(frozen=True)
class BoundaryMesh:
    """Discretized boundary: points, unit normals, tangents, weights.

    In 1D the mesh is the finite endpoint set with unit weights and signed
    normals -1/+1 (tangents are None). In 2D the nodes are uniform in the
    parameter angle and the weights are the arclength trapezoid weights
    |y'(theta_j)| * 2*pi/m, so the weights sum to the perimeter. thetas
    holds the parameter angles for 2D meshes.
    """

    points: np.ndarray
    normals: np.ndarray
    weights: np.ndarray
    tangents: Optional[np.ndarray] = None
    thetas: Optional[np.ndarray] = None

    def __post_init__(self):
        for arr in (self.points, self.normals, self.weights, self.tangents, self.thetas):
            if arr is not None:
                arr.flags.writeable = False


def volume(S) -> float:
    """Lebesgue measure: exact for intervals and balls, trigonometric
    quadrature of int r(theta)^2 / 2 dtheta for star shapes (exact for a
    band-limited radius)."""
    if isinstance(S, IntervalSet):
        return math.fsum(b - a for a, b in S.intervals)
    if isinstance(S, Ball):
        return _ball_volume_coeff(S.n) * S.radius ** S.n
    if isinstance(S, StarShape2D):
        # trapezoid on the uniform grid integrates trig polynomials of degree
        # < m exactly; r^2 has degree 2*kmax
        m = max(256, 4 * max(1, S.kmax))
        r = S.samples(m)
        return math.fsum(r * r) * math.pi / m
    raise GeometryError(f"unsupported geometry {type(S).__name__}")


def diameter(S) -> float:
    """sup |x - y| over the closure. Exact for intervals and balls; for star
    shapes the max over all pairs of densely sampled boundary points."""
    if isinstance(S, IntervalSet):
        eps_pts = S.endpoints()
        return float(eps_pts[-1] - eps_pts[0])
    if isinstance(S, Ball):
        return 2.0 * S.radius
    if isinstance(S, StarShape2D):
        m = max(512, _POSITIVITY_OVERSAMPLE * max(1, S.kmax))
        th = 2.0 * math.pi * np.arange(m) / m
        r = S.radius(th)
        x = S.center[0] + r * np.cos(th)
        y = S.center[1] + r * np.sin(th)
        dx = x[:, None] - x[None, :]
        dy = y[:, None] - y[None, :]
        return float(np.sqrt(dx * dx + dy * dy).max())
    raise GeometryError(f"unsupported geometry {type(S).__name__}")


def isodiametric_ratio(S) -> float:
    """|S|^(1/n) / diam(S); scale invariant, maximal for balls."""
    return volume(S) ** (1.0 / S.n) / diameter(S)


def beta_exponent(p: Params) -> float:
    """(n + s - alpha) / ((2n + s + 1) * n)."""
    return (p.n + p.s - p.alpha) / ((2.0 * p.n + p.s + 1.0) * p.n)


def scaled(S, lam: float):
    """Dilation x -> lam * x about the origin."""
    if lam <= 0.0:
        raise GeometryError(f"scale factor must be positive, got {lam!r}")
    if isinstance(S, IntervalSet):
        return IntervalSet([(lam * a, lam * b) for a, b in S.intervals])
    if isinstance(S, Ball):
        return Ball([lam * c for c in S.center], lam * S.radius)
    if isinstance(S, StarShape2D):
        return StarShape2D([lam * c for c in S.center], lam * S.r0,
                           lam * S.a, lam * S.b)
    raise GeometryError(f"unsupported geometry {type(S).__name__}")


def translated(S, shift):
    """Translation x -> x + shift."""
    if isinstance(S, IntervalSet):
        h = float(shift if np.isscalar(shift) else np.asarray(shift).reshape(-1)[0])
        return IntervalSet([(a + h, b + h) for a, b in S.intervals])
    h = np.asarray(shift, dtype=float).reshape(-1)
    if isinstance(S, Ball):
        if h.size != S.n:
            raise GeometryError("shift dimension does not match the ball")
        return Ball([c + v for c, v in zip(S.center, h)], S.radius)
    if isinstance(S, StarShape2D):
        if h.size != 2:
            raise GeometryError("shift dimension does not match the star shape")
        return StarShape2D((S.center[0] + h[0], S.center[1] + h[1]), S.r0, S.a, S.b)
    raise GeometryError(f"unsupported geometry {type(S).__name__}")


def unit_volume_rescale(S, p: Params):
    """Rescale S to unit volume and rewrite the parameters accordingly.

    Returns (S1, p1) where S1 = m^(-1/n) S has volume 1 and p1 carries
    mass = m and eps = m^(1 - alpha/n + s/n).
    """
    m = volume(S)
    if not m > 0.0:
        raise GeometryError("cannot rescale a set of nonpositive volume")
    S1 = scaled(S, m ** (-1.0 / p.n))
    p1 = replace(p, mass=m, eps=None)
    return S1, p1


def boundary_mesh(S, resolution: int) -> BoundaryMesh:
    """Boundary discretization used by every 2D quadrature consumer.

    resolution is ignored for 1D sets (the boundary is finite). Balls are
    meshed only in dimensions 1 and 2.
    """
    if isinstance(S, IntervalSet):
        pts = []
        nrm = []
        for a, b in S.intervals:
            pts.append([a])
            nrm.append([-1.0])
            pts.append([b])
            nrm.append([1.0])
        points = np.array(pts, dtype=float)
        normals = np.array(nrm, dtype=float)
        weights = np.ones(points.shape[0])
        return BoundaryMesh(points=points, normals=normals, weights=weights)

    if isinstance(S, Ball) and S.n == 1:
        c, r = S.center[0], S.radius
        return boundary_mesh(IntervalSet([(c - r, c + r)]), resolution)

    if isinstance(S, Ball) and S.n == 2:
        S = StarShape2D(S.center, S.radius)

    if isinstance(S, StarShape2D):
        m = int(resolution)
        if m < 8:
            raise GeometryError(f"2D mesh resolution must be >= 8, got {resolution}")
        th = 2.0 * math.pi * np.arange(m) / m
        r = S.radius(th)
        dr = S.radius_deriv(th)
        c, sn = np.cos(th), np.sin(th)
        points = np.stack([S.center[0] + r * c, S.center[1] + r * sn], axis=1)
        speed = np.sqrt(r * r + dr * dr)
        tangents = np.stack([(dr * c - r * sn) / speed, (dr * sn + r * c) / speed], axis=1)
        normals = np.stack([(r * c + dr * sn) / speed, (r * sn - dr * c) / speed], axis=1)
        weights = speed * (2.0 * math.pi / m)
        return BoundaryMesh(points=points, normals=normals, weights=weights,
                            tangents=tangents, thetas=th)

    raise GeometryError(
        f"no boundary mesh for {type(S).__name__} in dimension {getattr(S, 'n', '?')}"
    )


# ---------------------------------------------------------------------------
# JSON geometry files


def geometry_to_dict(S) -> dict:
    if isinstance(S, IntervalSet):
        return {"kind": "intervals", "intervals": [list(ab) for ab in S.intervals]}
    if isinstance(S, Ball):
        return {"kind": "ball", "center": list(S.center), "radius": S.radius}
    if isinstance(S, StarShape2D):
        return {"kind": "star", "center": list(S.center), "r0": S.r0,
                "cos": list(S.a), "sin": list(S.b)}
    raise GeometryError(f"unsupported geometry {type(S).__name__}")


def geometry_from_dict(d: dict):
    try:
        kind = d["kind"]
    except (KeyError, TypeError):
        raise GeometryError("geometry object needs a 'kind' field")
    if kind == "intervals":
        return IntervalSet(d["intervals"])
    if kind == "ball":
        return Ball(d["center"], d["radius"])
    if kind == "star":
        if "samples" in d:
            return StarShape2D.from_samples(d["center"], d["samples"],
                                            d.get("k_max"))
        return StarShape2D(d["center"], d["r0"], d.get("cos", ()), d.get("sin", ()))
    raise GeometryError(f"unknown geometry kind {kind!r}")


def load_geometry(path):
    with open(path, "r", encoding="utf-8") as fh:
        try:
            d = json.load(fh)
        except json.JSONDecodeError as exc:
            raise GeometryError(f"geometry file {path} is not valid JSON: {exc}")
    return geometry_from_dict(d)


def save_geometry(S, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(geometry_to_dict(S), fh, indent=2)
        fh.write("\n")
