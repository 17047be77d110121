"""Command line front end.

    minsurf catalog
    minsurf solve --k 2 --alpha 1.0          (or --x 0.6)
    minsurf gen --surface catenoid --res 64 --out c.obj
    minsurf diag --surface neg_lopezros_attempt --r 1.0
    minsurf index --surface n_noid --n 4

Every command prints one JSON report.  Exit status is 0 on success, 2 when
the surface fails in an expected way (nonzero period, eigenvalue too close
to the threshold) and 1 for anything else.  Relative output paths of
``gen`` are resolved against $MINSURF_OUT_DIR when it is set.
"""
from __future__ import annotations

import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import click
import numpy as np

from . import catalog, mesh as meshmod, periods, report, spectral
from .errors import MinsurfError, NonzeroPeriod, ParamOutOfRange

OUT_DIR_ENV = "MINSURF_OUT_DIR"
TOLERANCE_KEYS = ("quad_tol", "weld_tol", "guard", "end_tilt")
SURFACE_PARAMS = ("k", "alpha", "x", "n", "r", "theta", "rho", "a")


@dataclass
class RunConfig:
    command: str
    surface: str | None = None
    params: dict = field(default_factory=dict)
    resolution: int | None = None
    truncation: dict = field(default_factory=dict)
    out: str | None = None
    tolerances: dict = field(default_factory=dict)
    format_version: str = report.SCHEMA

    def __post_init__(self):
        bad = set(self.tolerances) - set(TOLERANCE_KEYS)
        if bad:
            raise ParamOutOfRange(f"unknown tolerance keys {sorted(bad)}", keys=sorted(bad))
        for k, v in self.tolerances.items():
            if not (isinstance(v, (int, float)) and v > 0 and math.isfinite(v)):
                raise ParamOutOfRange(f"tolerance {k} must be positive", key=k)
        for k, v in self.truncation.items():
            if not (v > 0 and math.isfinite(v)):
                raise ParamOutOfRange(f"truncation {k} must be positive", key=k)


def _pairs(items, what) -> dict:
    out = {}
    for it in items:
        if "=" not in it:
            raise ParamOutOfRange(f"{what} must look like key=value", value=it)
        k, v = it.split("=", 1)
        try:
            out[k.strip()] = float(v)
        except ValueError:
            raise ParamOutOfRange(f"{what} value must be a number", value=it)
    return out


def _surface_params(kw: dict, extra) -> dict:
    params = {k: kw[k] for k in SURFACE_PARAMS if kw.get(k) is not None}
    params.update(_pairs(extra, "--param"))
    for k in ("k", "n"):
        if k in params and float(params[k]).is_integer():
            params[k] = int(params[k])
    return params


def _emit(rec):
    click.echo(report.dumps(rec), nl=False)


def _run(cfg: RunConfig, fn):
    """Run ``fn`` and print its result; map errors to exit codes."""
    meta = {"surface": cfg.surface, "params": cfg.params} if cfg.surface else {}
    try:
        result, status, error = fn()
    except MinsurfError as exc:
        _emit(report.envelope(cfg.command, None, exc.to_dict(), **meta))
        sys.exit(exc.exit_status)
    except Exception as exc:  # noqa: BLE001 - reported as a JSON error object
        _emit(report.envelope(cfg.command, None,
                              {"error": type(exc).__name__, "message": str(exc)}, **meta))
        sys.exit(1)
    _emit(report.envelope(cfg.command, result, error, **meta))
    if status:
        sys.exit(status)


def surface_options(f):
    f = click.option("--param", "extra", multiple=True, help="extra surface parameter key=value")(f)
    for name in reversed(SURFACE_PARAMS):
        typ = float
        f = click.option(f"--{name}", name, type=typ, default=None,
                         help=f"surface parameter {name}")(f)
    f = click.option("--surface", required=True, help="catalog name")(f)
    return f


def tol_option(f):
    return click.option("--tol", "tol", multiple=True,
                        help=f"tolerance override key=value, keys {', '.join(TOLERANCE_KEYS)}")(f)


@click.group()
def cli():
    """Complete embedded minimal surfaces of finite total curvature."""


@cli.command("catalog")
def cmd_catalog():
    """List the surface catalog with expected invariants."""
    cfg = RunConfig("catalog")
    _run(cfg, lambda: ([e.to_dict() for e in catalog.list_catalog()], 0, None))


@cli.command("solve")
@click.option("--k", "k", type=int, required=True)
@click.option("--alpha", type=float, default=None)
@click.option("--x", "x", type=float, default=None, help="x = cot(alpha) in (0, 1]")
def cmd_solve(k, alpha, x):
    """Solve the period problem of the three-ended family."""
    cfg = RunConfig("solve", params={"k": k, "alpha": alpha, "x": x})

    def go():
        a = catalog.mkx_alpha({"alpha": alpha, "x": x})
        sol = periods.solve_family(k, a)
        return {"input": {"k": k, "alpha": a, "x": 1.0 / math.tan(a)}, "solution": sol}, 0, None

    _run(cfg, go)


@cli.command("gen")
@surface_options
@click.option("--res", "res", type=int, default=64, show_default=True)
@click.option("--out", "out", required=True, help="mesh path (.obj or .ply)")
@click.option("--format", "fmt", type=click.Choice(["obj", "ply"]), default=None)
@click.option("--trunc", "trunc", multiple=True, help="end cutoff puncture_id=value")
@click.option("--allow-multivalued", is_flag=True, help="mesh a cut domain ignoring periods")
@click.option("--report", "report_path", default=None, help="sidecar JSON path")
@tol_option
def cmd_gen(surface, extra, res, out, fmt, trunc, allow_multivalued, report_path, tol, **kw):
    """Write a mesh and a JSON sidecar report."""
    params = _surface_params(kw, extra)
    base = os.environ.get(OUT_DIR_ENV)
    path = Path(out)
    if base and not path.is_absolute():
        path = Path(base) / path
    cfg = RunConfig("gen", surface, params, res, _pairs(trunc, "--trunc"), str(path),
                    _pairs(tol, "--tol"))

    def go():
        b = catalog.make_surface(surface, params)
        fm = fmt or (path.suffix[1:].lower() if path.suffix else "obj")
        kwargs = {}
        if "weld_tol" in cfg.tolerances:
            kwargs["weld_tol"] = cfg.tolerances["weld_tol"]
        if "end_tilt" in cfg.tolerances:
            kwargs["end_tilt"] = cfg.tolerances["end_tilt"]
        m = meshmod.tessellate(b, res, cfg.truncation or None,
                               allow_multivalued=allow_multivalued, **kwargs)
        path.parent.mkdir(parents=True, exist_ok=True)
        meshmod.export_mesh(m, fm, path)
        tc = meshmod.total_curvature(m)
        si = meshmod.self_intersection(m)
        pr = periods.period_report(b, cfg.tolerances.get("quad_tol", 1e-10), with_torque=False)
        fits = {}
        for s in m.specials:
            if s.kind != "puncture" or s.pid is None:
                continue
            try:
                fits[s.pid] = meshmod.end_fit(m, s.pid)
            except MinsurfError as exc:
                fits[s.pid] = exc.to_dict()
        result = {"mesh": {"path": str(path), "format": fm, **meshmod.mesh_summary(m)},
                  "total_curvature": tc,
                  "self_intersection": si,
                  "periods": [{"label": c.label, "period": c.period} for c in pr.cycles],
                  "ends": [{"puncture": e.puncture, "residue": e.residue, "growth": e.growth}
                           for e in pr.ends],
                  "end_fits": fits,
                  "expected": b.info.get("expected")}
        rp = Path(report_path) if report_path else path.with_suffix(path.suffix + ".json")
        rp.write_text(report.dumps(report.envelope("gen", result, None, surface=surface,
                                                   params=params)))
        result["report_path"] = str(rp)
        return result, 0, None

    _run(cfg, go)


@cli.command("diag")
@surface_options
@tol_option
def cmd_diag(surface, extra, tol, **kw):
    """Periods, residues, flux, torque and balance checks."""
    params = _surface_params(kw, extra)
    cfg = RunConfig("diag", surface, params, tolerances=_pairs(tol, "--tol"))

    def go():
        b = catalog.make_surface(surface, params)
        pr = periods.period_report(b, cfg.tolerances.get("quad_tol", 1e-10))
        checks = {"residue_sum": abs(pr.residue_sum), "growth_sum": pr.growth_sum,
                  "max_period": pr.max_period, "period_free": pr.period_free}
        if pr.axis_balance is not None:
            checks["axis_balance"] = float(np.linalg.norm(pr.axis_balance))
        result = {"report": pr, "checks": checks}
        if not pr.period_free:
            err = NonzeroPeriod("surface has a nonzero period", max_period=pr.max_period)
            return result, err.exit_status, err.to_dict()
        return result, 0, None

    _run(cfg, go)


@cli.command("index")
@surface_options
@click.option("--res", "res", type=int, default=64, show_default=True,
              help="octahedron subdivision at the finest level")
@click.option("--levels", "levels", type=int, default=3, show_default=True)
@tol_option
def cmd_index(surface, extra, res, levels, tol, **kw):
    """Stability index from the Gauss map spectrum."""
    params = _surface_params(kw, extra)
    cfg = RunConfig("index", surface, params, res, tolerances=_pairs(tol, "--tol"))

    def go():
        if surface == "identity":
            obj = spectral.RationalMap.identity()
        else:
            obj = catalog.make_surface(surface, params)
        guard = cfg.tolerances.get("guard", spectral.THRESHOLD_GUARD)
        rep = spectral.index_estimate(obj, res, levels, guard)
        return rep, 0, None

    _run(cfg, go)


def main(argv=None):
    args = list(sys.argv[1:] if argv is None else argv)
    try:
        cli.main(args=args, standalone_mode=False)
    except click.exceptions.Abort:
        sys.exit(1)
    except click.ClickException as exc:
        exc.show()
        sys.exit(1)
    except MinsurfError as exc:
        # bad option values rejected before a command body runs
        command = next((a for a in args if not a.startswith("-")), None)
        _emit(report.envelope(command, None, exc.to_dict()))
        sys.exit(exc.exit_status)


if __name__ == "__main__":
    main()
