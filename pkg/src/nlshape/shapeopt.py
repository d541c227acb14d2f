"""Volume-constrained critical-point search over planar star shapes.

Steepest descent on F_eps with the volume constraint handled by two
complementary devices: the applied normal velocity is the mean-zero field
-(zeta - lambda_hat), which preserves volume to first order, and every
candidate is radially rescaled back to unit area afterwards (exact).

One step:
  1. sweep zeta over the boundary mesh, lambda_hat = weighted mean;
  2. radial update dr = -step * (zeta - lambda_hat) * J / r at the mesh
     angles (J / r converts normal speed to radial speed);
  3. resample to Fourier coefficients, truncating above k_max -- the
     spectral smoothing that keeps quadrature noise from feeding
     high-frequency growth;
  4. rescale to unit area;
  5. accept only if F_eps did not increase, else halve the step and retry.

The iteration certifies criticality (small sup |zeta - lambda_hat|), not
minimality.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .diagnostics import DiagnosticsReport, diagnose
from .errors import GeometryError, ParamError, StalledError
from .functionals import (DEFAULT_NQ, DEFAULT_RESOLUTION, _as_star,
                          boundary_fields, energy)
from .sets import Params, StarShape2D, volume

__all__ = [
    "OptimizerState", "fourier_shape", "volume_project", "el_gradient_step",
    "find_critical_2d", "initial_state",
]

DEFAULT_K_MAX = 12
DEFAULT_STEP = 0.2
_STEP_GROWTH = 1.3
_STEP_CAP = 1.0
_MIN_STEP = 1e-14
# residual at or below this is quadrature noise: the step is a no-op rather
# than a fight against roundoff (exact critical points must be fixed points)
_NOOP_FLOOR = 1e-11


@dataclass(frozen=True)
class OptimizerState:
    """Immutable snapshot of one optimization trajectory."""

    shape: StarShape2D
    step_size: float
    iteration: int
    residual_history: tuple
    volume_drift: float
    mesh_resolution: int = DEFAULT_RESOLUTION
    k_max: int = DEFAULT_K_MAX
    energy: float = math.nan  # F_eps of shape; nan = not yet evaluated


def fourier_shape(coeffs, center=(0.0, 0.0), k_max: Optional[int] = None) -> StarShape2D:
    """Build a star shape from a mapping like {"r0": 1.0, "a3": 0.05}.

    Keys: r0, a<k>, b<k> for k >= 1. Modes above k_max (when given) are
    rejected rather than dropped, so a config cannot silently lose detail.
    """
    r0 = None
    amp = {}
    for key, val in dict(coeffs).items():
        v = float(val)
        if key == "r0":
            r0 = v
            continue
        mode = key[0]
        if mode not in ("a", "b") or not key[1:].isdigit():
            raise ParamError(f"unknown coefficient key {key!r} (want r0, a<k>, b<k>)")
        k = int(key[1:])
        if k < 1:
            raise ParamError(f"mode index must be >= 1 in {key!r}")
        if k_max is not None and k > k_max:
            raise ParamError(f"coefficient {key!r} exceeds k_max = {k_max}")
        amp[(mode, k)] = v
    if r0 is None:
        raise ParamError("coefficient mapping needs an r0 entry")
    kk = max((k for _, k in amp), default=0)
    a = np.zeros(kk)
    b = np.zeros(kk)
    for (mode, k), v in amp.items():
        (a if mode == "a" else b)[k - 1] = v
    return StarShape2D(center, r0, a, b)


def volume_project(S: StarShape2D) -> StarShape2D:
    """Uniform radial rescale about the shape's own center to unit area.

    All coefficients scale by the same factor, so the shape (and every
    scale-invariant diagnostic) is unchanged.
    """
    vol = volume(S)
    c = 1.0 / math.sqrt(vol)
    return StarShape2D(S.center, c * S.r0, c * S.a, c * S.b)


def initial_state(shape, resolution: int = DEFAULT_RESOLUTION,
                  k_max: int = DEFAULT_K_MAX,
                  step: float = DEFAULT_STEP) -> OptimizerState:
    if step <= 0.0:
        raise ParamError(f"step size must be positive, got {step!r}")
    shape = _as_star(shape)
    return OptimizerState(shape=shape, step_size=step, iteration=0,
                          residual_history=(), volume_drift=abs(volume(shape) - 1.0),
                          mesh_resolution=resolution, k_max=k_max)


def _zeta_sweep(shape, p, resolution, nq):
    """(mesh angles' radius, speed, zeta, lambda_hat, residual)."""
    bf = boundary_fields(shape, p, resolution, nq, want_grad_tau=False)
    mesh = bf.mesh
    wsum = math.fsum(mesh.weights)
    lam = math.fsum(mesh.weights * bf.zeta) / wsum
    v = bf.zeta - lam
    residual = float(np.abs(v).max())
    m = mesh.points.shape[0]
    speed = mesh.weights * m / (2.0 * math.pi)
    r = shape.radius(mesh.thetas)
    return r, speed, v, lam, residual


def el_gradient_step(state: OptimizerState, p: Params, nq: int = DEFAULT_NQ,
                     _sweep=None) -> OptimizerState:
    """One accepted descent step (or a certified no-op at the noise floor).

    Raises StalledError (carrying the state) when no energy-non-increasing
    candidate exists down to the minimal step size.
    """
    shape = state.shape
    res = state.mesh_resolution
    r, speed, v, lam, residual = (_sweep if _sweep is not None
                                  else _zeta_sweep(shape, p, res, nq))
    history = state.residual_history + (residual,)

    scale = max(1.0, abs(lam))
    if residual <= _NOOP_FLOOR * scale:
        return replace(state, iteration=state.iteration + 1,
                       residual_history=history)

    base = state.energy
    if math.isnan(base):
        base = energy(shape, p, res, nq).total

    step = state.step_size
    first_try = True
    while step >= _MIN_STEP:
        dr = -step * v * speed / r
        cand_samples = r + dr
        if cand_samples.min() > 0.0:
            cand = StarShape2D.from_samples(shape.center, cand_samples,
                                            state.k_max)
            cand = volume_project(cand)
            f_cand = energy(cand, p, res, nq).total
            if f_cand <= base:
                new_step = min(step * _STEP_GROWTH, _STEP_CAP) if first_try else step
                return replace(state, shape=cand, step_size=new_step,
                               iteration=state.iteration + 1,
                               residual_history=history,
                               volume_drift=abs(volume(cand) - 1.0),
                               energy=f_cand)
        step *= 0.5
        first_try = False
    raise StalledError(
        f"no energy-non-increasing step found above step={_MIN_STEP:g} "
        f"(residual {residual:g})",
        state=replace(state, residual_history=history))


def find_critical_2d(init: StarShape2D, p: Params, tol: float = 1e-3,
                     max_iter: int = 500,
                     resolution: int = DEFAULT_RESOLUTION,
                     nq: int = DEFAULT_NQ, k_max: int = DEFAULT_K_MAX,
                     step: float = DEFAULT_STEP,
                     with_identities: bool = False, full_output: bool = False):
    """Drive the boundary condition residual below tol from init.

    init must already have unit area (use volume_project). Returns
    (shape, DiagnosticsReport), or (shape, report, OptimizerState) with
    full_output. Hitting max_iter returns normally with the residual visible
    in the report; a stall with the residual still above tol raises
    StalledError.
    """
    if p.n != 2:
        raise ParamError(f"planar search needs n = 2, got n = {p.n}")
    init = _as_star(init)
    vol = volume(init)
    if abs(vol - 1.0) > 1e-8:
        raise GeometryError(
            f"initial shape must have unit area (got {vol!r}); "
            "apply volume_project first")
    state = initial_state(init, resolution=resolution, k_max=k_max, step=step)
    if math.isinf(tol):
        report = diagnose(init, p, resolution, nq,
                          with_identities=with_identities)
        return (init, report, state) if full_output else (init, report)
    while state.iteration < max_iter:
        sweep = _zeta_sweep(state.shape, p, resolution, nq)
        if sweep[4] <= tol:
            state = replace(state,
                            residual_history=state.residual_history + (sweep[4],))
            break
        try:
            state = el_gradient_step(state, p, nq, _sweep=sweep)
        except StalledError as exc:
            if exc.state.residual_history[-1] <= tol:
                state = exc.state
                break
            raise
    report = diagnose(state.shape, p, resolution, nq,
                      with_identities=with_identities)
    return (state.shape, report, state) if full_output else (state.shape, report)
