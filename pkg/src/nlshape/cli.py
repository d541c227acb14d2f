"""Command-line entry point.

Every run reads an optional flat key=value config file, applies command-line
flag overrides on top, executes one command, and writes its numeric output
as CSV next to a JSON metadata sidecar. The CSV bodies are deterministic:
fixed column order, floats printed with repr-faithful precision, newline
line endings, and no clocks or host information. Timestamps and wall time
live only in the sidecar, so reruns with the same config produce
byte-identical CSV files regardless of machine or configured thread count.

Exit codes: 0 success; 1 domain failure (no root found, stalled descent,
quadrature breakdown); 2 configuration or usage errors.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .diagnostics import calibrate_variation_constant, diagnose
from .errors import (ConfigError, ConfigNotFoundError, NlshapeError, ParamError)
from .functionals import boundary_fields, energy, potential
from .onedim import (TwoIntervalConfig, epsilon_sweep, g_and_d_eps,
                     solve_critical_d, two_interval_set, zeta_endpoints)
from .sets import (Ball, IntervalSet, Params, StarShape2D, geometry_to_dict,
                   load_geometry, volume)
from .shapeopt import find_critical_2d, volume_project

__all__ = ["main", "load_config", "run_command", "RunConfig"]

COMMANDS = ("energy", "curvature", "potential", "diagnose", "onedim-root",
            "onedim-sweep", "optimize2d", "calibrate")

# every key a config file or flag may set: name -> (caster, description)
_KEYS = {
    "command": (str, "command to run (overridden by the CLI subcommand)"),
    "n": (int, "ambient dimension"),
    "s": (float, "perimeter order in (0, 1)"),
    "alpha": (float, "repulsion exponent in (0, n)"),
    "eps": (float, "coupling strength (nonnegative)"),
    "mass": (float, "volume of the unscaled set (positive)"),
    "c_coupling": (float, "constant multiplying eps*V in the boundary condition"),
    "c_var": (float, "first-variation normalization"),
    "geometry": (str, "path to a geometry JSON file"),
    "out": (str, "output directory"),
    "prefix": (str, "basename for emitted files (default: command name)"),
    "resolution": (int, "2D boundary mesh size"),
    "nq": (int, "quadrature nodes per half-side"),
    "point": (str, "comma-separated coordinates for a single-point query"),
    "f_tol": (float, "residual bound certified at a 1D root"),
    "eps_grid": (str, "comma-separated eps values for the sweep"),
    "tol": (float, "target boundary-condition residual (optimize2d)"),
    "max_iter": (int, "iteration cap (optimize2d)"),
    "k_max": (int, "highest retained Fourier mode (optimize2d)"),
    "step": (float, "initial descent step (optimize2d)"),
    "radii": (str, "comma-separated ball radii for calibration"),
}

_DEFAULT_EPS_GRID = "1e-3,3.1623e-4,1e-4,3.1623e-5,1e-5,3.1623e-6,1e-6"


@dataclass
class RunConfig:
    """One command's fully merged settings (file, then flag overrides)."""

    command: Optional[str] = None
    values: dict = field(default_factory=dict)

    def get(self, key, default=None):
        return self.values.get(key, default)

    def require(self, key):
        if key not in self.values:
            raise ConfigError(f"missing required key: {key}")
        return self.values[key]

    def params(self, default_n: int) -> Params:
        kw = {"n": self.get("n", default_n)}
        for key in ("s", "alpha", "eps", "mass", "c_coupling", "c_var"):
            if key in self.values:
                kw[key] = self.values[key]
        if "s" not in kw:
            raise ConfigError("missing required key: s")
        if "alpha" not in kw:
            raise ConfigError("missing required key: alpha")
        try:
            return Params(**kw)
        except ParamError as exc:
            raise ConfigError(str(exc)) from exc


def _cast(key: str, raw: str, where: str):
    caster, _ = _KEYS[key]
    try:
        return caster(raw)
    except ValueError:
        raise ConfigError(f"{where}: invalid value for {key}: {raw!r}")


def load_config(path) -> RunConfig:
    """Parse a flat key=value file; '#' starts a comment, blank lines skip."""
    p = Path(path)
    if not p.exists():
        raise ConfigNotFoundError(f"config file not found: {path}")
    values = {}
    command = None
    for lineno, line in enumerate(p.read_text(encoding="utf-8").splitlines(), 1):
        text = line.split("#", 1)[0].strip()
        if not text:
            continue
        if "=" not in text:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {text!r}")
        key, raw = (part.strip() for part in text.split("=", 1))
        if key not in _KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        val = _cast(key, raw, f"{path}:{lineno}")
        if key == "command":
            if val not in COMMANDS:
                raise ConfigError(
                    f"{path}:{lineno}: unknown command {val!r} "
                    f"(choose from {', '.join(COMMANDS)})")
            command = val
        else:
            values[key] = val
    return RunConfig(command=command, values=values)


def _merged_config(args) -> RunConfig:
    config = getattr(args, "config", None)
    cfg = load_config(config) if config else RunConfig()
    if getattr(args, "command", None):
        cfg.command = args.command
    if cfg.command is None:
        raise ConfigError("no command given (subcommand or command= in the file)")
    for key in _KEYS:
        if key == "command":
            continue
        flag_val = getattr(args, key, None)
        if flag_val is not None:
            cfg.values[key] = _cast(key, str(flag_val), f"--{key.replace('_', '-')}")
    return cfg


# ---------------------------------------------------------------------------
# output helpers


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def _write_csv(path: Path, header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def _json_safe(obj):
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_json_safe(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer)):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def _write_json(path: Path, payload):
    path.write_text(json.dumps(_json_safe(payload), indent=2, sort_keys=True) + "\n",
                    encoding="utf-8", newline="\n")


def _params_dict(p: Params) -> dict:
    return {"n": p.n, "s": p.s, "alpha": p.alpha, "eps": p.eps, "mass": p.mass,
            "c_coupling": p.c_coupling, "c_var": p.c_var}


class _Emitter:
    """Collects output files and writes the metadata sidecar at the end."""

    def __init__(self, cfg: RunConfig):
        self.out_dir = Path(cfg.get("out", "."))
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.prefix = cfg.get("prefix", cfg.command)
        self.cfg = cfg
        self.files = []
        self.meta = {}
        self._t0 = time.monotonic()
        self._started = datetime.now(timezone.utc).isoformat()

    def path(self, suffix: str) -> Path:
        p = self.out_dir / f"{self.prefix}{suffix}"
        self.files.append(p.name)
        return p

    def csv(self, suffix, header, rows):
        _write_csv(self.path(suffix), header, rows)

    def json(self, suffix, payload):
        _write_json(self.path(suffix), payload)

    def finish(self):
        sidecar = {
            "command": self.cfg.command,
            "version": __version__,
            "settings": {k: self.cfg.values[k] for k in sorted(self.cfg.values)},
            "files": self.files,
            "started": self._started,
            "wall_seconds": time.monotonic() - self._t0,
        }
        sidecar.update(self.meta)
        _write_json(self.out_dir / f"{self.prefix}.meta.json", sidecar)


def _load_geometry_for(cfg: RunConfig):
    path = cfg.require("geometry")
    if not Path(path).exists():
        raise ConfigError(f"geometry file not found: {path}")
    return load_geometry(path)


def _parse_point(raw: str, n: int):
    parts = [p for p in raw.split(",") if p.strip()]
    if len(parts) != n:
        raise ConfigError(f"point needs {n} coordinates, got {raw!r}")
    try:
        return [float(p) for p in parts]
    except ValueError:
        raise ConfigError(f"invalid point coordinates: {raw!r}")


def _coord_header(S):
    return ["x"] if S.n == 1 else ["x", "y"]


# ---------------------------------------------------------------------------
# command implementations


def _run_energy(cfg, emit):
    S = _load_geometry_for(cfg)
    p = cfg.params(default_n=S.n)
    res = cfg.get("resolution", 256)
    nq = cfg.get("nq", 48)
    br = energy(S, p, res, nq)
    emit.csv(".csv", ["perimeter_term", "riesz_term", "eps", "total"],
             [(br.perimeter_term, br.riesz_term, br.eps, br.total)])
    emit.meta["params"] = _params_dict(p)


def _run_curvature(cfg, emit):
    S = _load_geometry_for(cfg)
    p = cfg.params(default_n=S.n)
    res = cfg.get("resolution", 256)
    nq = cfg.get("nq", 48)
    bf = boundary_fields(S, p, res, nq, want_grad_tau=False)
    rows = [(i, *bf.mesh.points[i].tolist(), float(bf.kappa[i]))
            for i in range(bf.mesh.points.shape[0])]
    emit.csv(".csv", ["index", *_coord_header(S), "kappa"], rows)
    emit.meta["params"] = _params_dict(p)


def _run_potential(cfg, emit):
    S = _load_geometry_for(cfg)
    p = cfg.params(default_n=S.n)
    res = cfg.get("resolution", 256)
    nq = cfg.get("nq", 48)
    if "point" in cfg.values:
        x = _parse_point(cfg.values["point"], S.n)
        v = potential(S, x, p.alpha, res, nq)
        emit.csv(".csv", [*_coord_header(S), "potential"], [(*x, v)])
    else:
        bf = boundary_fields(S, p, res, nq, want_grad_tau=False)
        rows = [(i, *bf.mesh.points[i].tolist(), float(bf.pot[i]))
                for i in range(bf.mesh.points.shape[0])]
        emit.csv(".csv", ["index", *_coord_header(S), "potential"], rows)
    emit.meta["params"] = _params_dict(p)


_REPORT_COLS = ["delta_s", "eta_s", "rho", "iso_ratio", "lambda_hat",
                "el_residual", "mesh_resolution"]
_REPORT_IDS = ["Au1", "Au2", "Minkowski", "Lal", "TangentialBall"]


def _report_row(report):
    row = [getattr(report, c) for c in _REPORT_COLS]
    row += [report.identity_residuals.get(k) for k in _REPORT_IDS]
    return row


def _report_header():
    return _REPORT_COLS + [f"res_{k.lower()}" for k in _REPORT_IDS]


def _run_diagnose(cfg, emit):
    S = _load_geometry_for(cfg)
    p = cfg.params(default_n=S.n)
    res = cfg.get("resolution", 256)
    nq = cfg.get("nq", 48)
    report = diagnose(S, p, res, nq)
    emit.json(".report.json", report.as_dict())
    emit.csv(".csv", _report_header(), [_report_row(report)])
    emit.meta["params"] = _params_dict(p)


def _run_onedim_root(cfg, emit):
    p = cfg.params(default_n=1)
    if p.n != 1:
        raise ConfigError(f"onedim commands need n = 1, got n = {p.n}")
    f_tol = cfg.get("f_tol", 1e-10)
    d_star = solve_critical_d(p, f_tol=f_tol)
    _, d_eps = g_and_d_eps(p)
    cfgd = TwoIntervalConfig(d=d_star, params=p)
    zs = zeta_endpoints(cfgd)
    from .onedim import f_closed_form
    emit.csv(".csv",
             ["eps", "d_star", "d_eps", "diameter", "f_at_root", "residual"],
             [(p.eps, d_star, d_eps, d_star + 0.5, f_closed_form(d_star, p),
               float(zs.max() - zs.min()))])
    emit.meta["params"] = _params_dict(p)


def _run_onedim_sweep(cfg, emit):
    p = cfg.params(default_n=1)
    if p.n != 1:
        raise ConfigError(f"onedim commands need n = 1, got n = {p.n}")
    raw = cfg.get("eps_grid", _DEFAULT_EPS_GRID)
    try:
        grid = [float(v) for v in raw.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"invalid eps_grid: {raw!r}")
    records, fit = epsilon_sweep(p, grid, f_tol=cfg.get("f_tol", 1e-10))
    emit.csv(".csv",
             ["eps", "d_star", "d_eps", "diameter", "f_at_root", "residual"],
             [(r.eps, r.d_star, r.d_eps, r.diameter, r.f_at_root,
               r.zeta_spread) for r in records])
    emit.json(".summary.json", fit)
    emit.meta["params"] = _params_dict(p)


def _run_optimize2d(cfg, emit):
    p = cfg.params(default_n=2)
    if p.n != 2:
        raise ConfigError(f"optimize2d needs n = 2, got n = {p.n}")
    if "geometry" in cfg.values:
        init = _load_geometry_for(cfg)
        if isinstance(init, IntervalSet):
            raise ConfigError("optimize2d needs a planar geometry")
    else:
        init = StarShape2D((0.0, 0.0), 1.0)
    init = volume_project(init if isinstance(init, StarShape2D)
                          else StarShape2D(init.center, init.radius))
    shape, report, state = find_critical_2d(
        init, p,
        tol=cfg.get("tol", 1e-3),
        max_iter=cfg.get("max_iter", 500),
        resolution=cfg.get("resolution", 256),
        nq=cfg.get("nq", 48),
        k_max=cfg.get("k_max", 12),
        step=cfg.get("step", 0.2),
        full_output=True)
    emit.json(".shape.json", geometry_to_dict(shape))
    emit.csv(".history.csv", ["iteration", "residual"],
             list(enumerate(state.residual_history)))
    emit.json(".report.json", report.as_dict())
    emit.csv(".csv", _report_header(), [_report_row(report)])
    emit.meta["params"] = _params_dict(p)
    emit.meta["iterations"] = state.iteration
    emit.meta["final_volume"] = volume(shape)


def _run_calibrate(cfg, emit):
    s = cfg.require("s")
    n = cfg.get("n", 2)
    kwargs = {}
    if "radii" in cfg.values:
        try:
            kwargs["radii"] = tuple(float(v) for v in
                                    cfg.values["radii"].split(",") if v.strip())
        except ValueError:
            raise ConfigError(f"invalid radii: {cfg.values['radii']!r}")
    if "resolution" in cfg.values:
        kwargs["resolution"] = cfg.values["resolution"]
    if "nq" in cfg.values:
        kwargs["nq"] = cfg.values["nq"]
    try:
        c = calibrate_variation_constant(s, n, **kwargs)
    except ParamError as exc:
        # out-of-range s reads as a config problem, not a runtime failure
        if "must lie in" in str(exc) or "supports n in" in str(exc):
            raise ConfigError(str(exc)) from exc
        raise
    emit.csv(".csv", ["n", "s", "c_var"], [(n, s, c)])


_RUNNERS = {
    "energy": _run_energy,
    "curvature": _run_curvature,
    "potential": _run_potential,
    "diagnose": _run_diagnose,
    "onedim-root": _run_onedim_root,
    "onedim-sweep": _run_onedim_sweep,
    "optimize2d": _run_optimize2d,
    "calibrate": _run_calibrate,
}


def run_command(cfg: RunConfig) -> int:
    """Execute one fully merged configuration. Returns 0; raises on failure."""
    if cfg.command not in _RUNNERS:
        raise ConfigError(f"unknown command {cfg.command!r}")
    emit = _Emitter(cfg)
    _RUNNERS[cfg.command](cfg, emit)
    emit.finish()
    return 0


# ---------------------------------------------------------------------------
# argument parsing


def _add_common(sp):
    # SUPPRESS: an absent subcommand-level --config must not clobber one
    # given before the subcommand
    sp.add_argument("--config", default=argparse.SUPPRESS,
                    help="flat key=value config file")
    sp.add_argument("--out", help="output directory (default: current)")
    sp.add_argument("--prefix", help="basename for emitted files")
    sp.add_argument("--n", type=int, help="ambient dimension")
    sp.add_argument("--s", type=float, help="perimeter order in (0, 1)")
    sp.add_argument("--alpha", type=float, help="repulsion exponent in (0, n)")
    sp.add_argument("--eps", type=float, help="coupling strength")
    sp.add_argument("--mass", type=float, help="volume of the unscaled set")
    sp.add_argument("--c-coupling", dest="c_coupling", type=float,
                    help="boundary-condition coupling constant")
    sp.add_argument("--c-var", dest="c_var", type=float,
                    help="first-variation normalization")
    sp.add_argument("--resolution", type=int, help="2D boundary mesh size")
    sp.add_argument("--nq", type=int, help="quadrature nodes per half-side")


def _build_parser():
    ap = argparse.ArgumentParser(
        prog="nlshape",
        description="Nonlocal perimeter/repulsion energies, boundary fields, "
                    "rigidity diagnostics, and critical-point searches.")
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("--config", help="flat key=value config file; its "
                    "command= entry runs when no subcommand is given")
    sub = ap.add_subparsers(dest="command")

    for name in ("energy", "curvature", "diagnose"):
        sp = sub.add_parser(name)
        _add_common(sp)
        sp.add_argument("--geometry", help="geometry JSON file")

    sp = sub.add_parser("potential")
    _add_common(sp)
    sp.add_argument("--geometry", help="geometry JSON file")
    sp.add_argument("--point", help="evaluate at one point: x[,y]")

    sp = sub.add_parser("onedim-root")
    _add_common(sp)
    sp.add_argument("--f-tol", dest="f_tol", type=float,
                    help="residual bound certified at the root")

    sp = sub.add_parser("onedim-sweep")
    _add_common(sp)
    sp.add_argument("--f-tol", dest="f_tol", type=float)
    sp.add_argument("--eps-grid", dest="eps_grid",
                    help="comma-separated eps values")

    sp = sub.add_parser("optimize2d")
    _add_common(sp)
    sp.add_argument("--init", dest="geometry",
                    help="initial geometry JSON (default: unit-area disk)")
    sp.add_argument("--modes", dest="k_max", type=int,
                    help="highest retained Fourier mode")
    sp.add_argument("--tol", type=float, help="target residual")
    sp.add_argument("--max-iter", dest="max_iter", type=int)
    sp.add_argument("--step", type=float, help="initial descent step")

    sp = sub.add_parser("calibrate")
    _add_common(sp)
    return ap


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _merged_config(args)
        return run_command(cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NlshapeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
