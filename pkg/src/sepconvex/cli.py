"""Command-line entry point.

Exit codes: 0 pass, 1 verification failure, 2 precondition or refusal,
3 configuration error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import DEFAULT_SEED, assemble, diagnostics, envelope, kernels, verify
from .func1d import Function1D, catalog_get, load_function
from .reproduce import BUNDLES, reproduce

log = logging.getLogger("sepconvex")

EXIT_OK, EXIT_FAIL, EXIT_REFUSED, EXIT_CONFIG = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    function: str | None = None
    grid: tuple[float, float, int] | None = None
    method: str | None = None
    tolerances: dict[str, float] = field(default_factory=dict)
    outputs: dict[str, str] = field(default_factory=dict)
    seed: int = DEFAULT_SEED

    def validate(self) -> None:
        if self.grid is not None:
            lo, hi, n = self.grid
            if not (verify.MIN_NODES <= n <= verify.MAX_NODES):
                raise ConfigError(f"grid: n={n} outside [{verify.MIN_NODES}, {verify.MAX_NODES}]")
            if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                raise ConfigError(f"grid: need finite xmin < xmax, got {lo}, {hi}")
        for name, tol in self.tolerances.items():
            if tol is not None and not tol > 0:
                raise ConfigError(f"{name}: tolerance must be > 0, got {tol}")
        for name, path in self.outputs.items():
            if path is None:
                continue
            parent = Path(path).resolve().parent
            if not parent.is_dir() or not os.access(parent, os.W_OK):
                raise ConfigError(f"{name}: directory {parent} is not writable")


# ---------------------------------------------------------------------------
# I/O


def read_function(spec: str) -> Function1D:
    """A JSON file, an inline JSON object, or a bare catalog name."""
    try:
        if spec.lstrip().startswith("{"):
            data = json.loads(spec)
        elif Path(spec).is_file():
            data = json.loads(Path(spec).read_text())
        else:
            return catalog_get(spec)
        return load_function(data)
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"function spec {spec!r}: {exc}") from exc


def write_field_csv(path: str | Path, xs: np.ndarray, ys: np.ndarray, values: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "f"])
        for j, y in enumerate(ys):
            for i, x in enumerate(xs):
                w.writerow([f"{x:.17g}", f"{y:.17g}", f"{values[j, i]:.17g}"])


def read_field_csv(path: str | Path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"field {path}: {exc}") from exc
    with open(path) as fh:
        header = fh.readline().strip()
    if header != "x,y,f" or data.shape[1] != 3:
        raise ConfigError(f"field {path}: expected header 'x,y,f' and three columns")
    xs = np.unique(data[:, 0])
    ys = np.unique(data[:, 1])
    if xs.size * ys.size != data.shape[0]:
        raise ConfigError(f"field {path}: nodes do not form a full grid")
    order = np.lexsort((data[:, 0], data[:, 1]))
    return xs, ys, data[order, 2].reshape(ys.size, xs.size)


def write_json(path: str | Path | None, payload: dict) -> None:
    text = json.dumps(payload, indent=2, default=_jsonable, allow_nan=True)
    if path is None:
        print(text)
    else:
        Path(path).write_text(text + "\n")


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.bool_):
        return bool(obj)
    return repr(obj)


def _sample(f: kernels.Field2D, grid: tuple[float, float, int]):
    xs = np.linspace(grid[0], grid[1], grid[2])
    X, Y = np.meshgrid(xs, xs)
    return xs, np.asarray(f(X, Y), dtype=float)


# ---------------------------------------------------------------------------
# commands


def cmd_diagnose(args, cfg: RunConfig) -> int:
    g = read_function(args.function)
    rows = []
    for x in args.x:
        row = {"x": x}
        row["integral_star"] = diagnostics.necessary_integral_star(g, x, args.T).as_dict()
        if not args.skip_plain:
            row["integral_plain"] = diagnostics.necessary_integral_plain(g, x, args.T).as_dict()
        row["liminf_check"] = diagnostics.diagonal_liminf_check(g, x, args.T * args.liminf_ratio, args.T).as_dict()
        w = diagnostics.chain_search(g, x)
        row["chain_best"] = {"value": w.best, "family": w.family}
        rows.append(row)
    if args.profile:
        p = diagnostics.difference_profile(g, args.x[0], args.T)
        np.savetxt(args.profile, np.column_stack((p.ts, p.omega, p.omega_star)), delimiter=",",
                   header="t,omega,omega_star", comments="", fmt="%.17g")
    write_json(args.report, {"command": "diagnose", "T": args.T, "points": rows})
    return EXIT_OK


def cmd_envelope(args, cfg: RunConfig) -> int:
    g = read_function(args.function)
    prof = envelope.phi_profile(g, args.u, tuple(args.window), n=args.n)
    env = envelope.parabolic_envelope(prof)
    lhs, rhs, holds = envelope.envelope_integral_bound_check(prof, env)
    if args.out:
        ys = prof.ys
        coeffs = np.array([env.coeff(y) for y in ys])
        np.savetxt(args.out, np.column_stack((ys, env.alpha(ys), coeffs, prof.phi)), delimiter=",",
                   header="x,alpha,a_x,c_x,phi", comments="", fmt="%.17g")
    write_json(args.report, {"command": "envelope", "u": args.u, "window": args.window, "r": prof.r,
                             "flat_value": prof.flat_value, "segments": int(env.alpha.knots.size),
                             "integral": lhs, "bound": rhs, "bound_holds": holds})
    return EXIT_OK


def cmd_extend(args, cfg: RunConfig) -> int:
    h = read_function(args.function)
    if args.kernel == "parabolic":
        f = kernels.parabolic_kernel(h, radius=args.radius)
    elif args.kernel == "smooth":
        f = kernels.smooth_kernel(h, radius=args.radius)
    else:
        f = kernels.log_kernel(h, c=args.c)
    return _emit_field(f, None, cfg, args, {"command": "extend", "kernel": args.kernel})


def cmd_assemble(args, cfg: RunConfig) -> int:
    g = read_function(args.function)
    window = tuple(args.window)
    m = args.method
    if m == "touching":
        f = assemble.touching_extension(g, window, args.D)
    elif m == "concave":
        f = assemble.extend_concave(g, window, args.D)
    elif m == "semiconcave":
        if not args.smooth:
            raise ConfigError("semiconcave: --smooth is required")
        f = assemble.extend_semiconcave(g, read_function(args.smooth), window, args.D)
    elif m == "modulus":
        if not args.omega:
            raise ConfigError("modulus: --omega is required")
        f = assemble.extend_with_modulus(g, read_function(args.omega), window, seed=cfg.seed)
    else:
        builder = lambda gg, w: assemble.extend_concave(gg, w, args.D)
        f = assemble.glue_local(g, builder, assemble.GlueSpec(levels=args.levels))
    return _emit_field(f, g, cfg, args, {"command": "assemble", "method": m, "window": list(window)})


def _emit_field(f: kernels.Field2D, g: Function1D | None, cfg: RunConfig, args, head: dict) -> int:
    grid = cfg.grid
    if args.out:
        xs, vals = _sample(f, grid)
        write_field_csv(args.out, xs, xs, vals)
    rep = verify.verify_field(f, g, grid, trace_tol=cfg.tolerances.get("trace_tol") or 1e-3,
                              tol=cfg.tolerances.get("tol"))
    prov = {k: v for k, v in f.provenance.items() if isinstance(v, (int, float, str, list, bool))}
    write_json(args.report, {**head, "provenance": prov, "verify": rep.as_dict()})
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_verify(args, cfg: RunConfig) -> int:
    xs, ys, vals = read_field_csv(args.field)
    if xs.size != ys.size or not np.array_equal(xs, ys):
        raise ConfigError("verify: the field grid must be square with identical x and y nodes")
    n = xs.size
    if not np.allclose(np.diff(xs), (xs[-1] - xs[0]) / (n - 1), rtol=1e-9, atol=0.0):
        raise ConfigError("verify: the field grid must be equispaced")
    f = verify.grid_field(xs, ys, vals, exact=not args.numeric, provenance={"path": args.field})
    g = read_function(args.trace) if args.trace else None
    grid = verify.GridSpec(float(xs[0]), float(xs[-1]), int(n))
    rep = verify.verify_field(f, g, grid, trace_tol=cfg.tolerances.get("trace_tol") or 1e-6,
                              tol=cfg.tolerances.get("tol"))
    write_json(args.report, {"command": "verify", "field": args.field, **rep.as_dict()})
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_reproduce(args, cfg: RunConfig) -> int:
    b = reproduce(args.name)
    print(b.table())
    if args.report:
        write_json(args.report, b.as_dict())
    return EXIT_OK if b.passed else EXIT_FAIL


# ---------------------------------------------------------------------------
# parser


def _grid_arg(p: argparse.ArgumentParser, default=(-1.0, 1.0, 201)) -> None:
    p.add_argument("--grid", nargs=3, metavar=("XMIN", "XMAX", "N"), default=list(default),
                   help="square sampling grid")


def _tol_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--trace-tol", type=float, default=None)
    p.add_argument("--tol", type=float, default=None, help="override the convexity tolerance")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sepconvex",
                                 description="Traces of separately convex functions.")
    ap.add_argument("--seed", type=lambda s: int(s, 0), default=DEFAULT_SEED)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("diagnose", help="necessary-condition integrals at points")
    p.add_argument("--function", required=True)
    p.add_argument("--x", type=float, nargs="+", default=[0.0])
    p.add_argument("--T", type=float, default=0.5)
    p.add_argument("--skip-plain", action="store_true")
    p.add_argument("--liminf-ratio", type=float, default=1e-9,
                   help="smallest t of the liminf check as a fraction of T")
    p.add_argument("--profile", help="CSV dump of t, omega, omega_star at the first x")
    p.add_argument("--report")
    p.set_defaults(run=cmd_diagnose)

    p = sub.add_parser("envelope", help="parabolic envelope of the tangent-gap profile")
    p.add_argument("--function", required=True)
    p.add_argument("--u", type=float, required=True)
    p.add_argument("--window", type=float, nargs=2, default=[-1.0, 1.0])
    p.add_argument("--n", type=int, default=2049)
    p.add_argument("--out")
    p.add_argument("--report")
    p.set_defaults(run=cmd_envelope)

    p = sub.add_parser("extend", help="explicit kernel extension")
    p.add_argument("--kernel", choices=("parabolic", "smooth", "log"), required=True)
    p.add_argument("--function", required=True)
    p.add_argument("--radius", type=float, default=2.0)
    p.add_argument("--c", type=float, default=0.0)
    _grid_arg(p)
    _tol_args(p)
    p.add_argument("--out")
    p.add_argument("--report")
    p.set_defaults(run=cmd_extend)

    p = sub.add_parser("assemble", help="build an extension from a trace")
    p.add_argument("--method", choices=("touching", "concave", "semiconcave", "modulus", "glue"),
                   required=True)
    p.add_argument("--function", required=True)
    p.add_argument("--window", type=float, nargs=2, default=[-1.0, 1.0])
    p.add_argument("--D", type=int, default=201)
    p.add_argument("--smooth")
    p.add_argument("--omega")
    p.add_argument("--levels", type=int, default=2)
    _grid_arg(p)
    _tol_args(p)
    p.add_argument("--out")
    p.add_argument("--report")
    p.set_defaults(run=cmd_assemble)

    p = sub.add_parser("verify", help="certify a field stored as CSV")
    p.add_argument("--field", required=True)
    p.add_argument("--trace", help="function spec of the expected trace")
    p.add_argument("--numeric", action="store_true", help="use the looser numeric tolerance")
    _tol_args(p)
    p.add_argument("--report")
    p.set_defaults(run=cmd_verify)

    p = sub.add_parser("reproduce", help="run a worked example")
    p.add_argument("name", choices=sorted(BUNDLES))
    p.add_argument("--report")
    p.set_defaults(run=cmd_reproduce)
    return ap


def _config(args) -> RunConfig:
    grid = None
    if getattr(args, "grid", None) is not None:
        try:
            grid = (float(args.grid[0]), float(args.grid[1]), int(args.grid[2]))
        except ValueError as exc:
            raise ConfigError(f"grid: {exc}") from exc
    tols = {"trace_tol": getattr(args, "trace_tol", None), "tol": getattr(args, "tol", None)}
    outs = {k: getattr(args, k) for k in ("out", "report", "profile") if getattr(args, k, None)}
    cfg = RunConfig(args.command, getattr(args, "function", None), grid,
                    getattr(args, "method", None) or getattr(args, "kernel", None),
                    tols, outs, args.seed)
    cfg.validate()
    if getattr(args, "D", 3) < 3:
        raise ConfigError("D: need at least 3 centers")
    return cfg


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _config(args)
        return args.run(args, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (assemble.BudgetError, assemble.NotATraceError, assemble.GlueError,
            kernels.KernelPreconditionError) as exc:
        print(f"refused ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_REFUSED
    except ValueError as exc:
        print(f"precondition failed in {args.command}: {exc}", file=sys.stderr)
        return EXIT_REFUSED


if __name__ == "__main__":
    sys.exit(main())
