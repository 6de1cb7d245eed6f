"""Command line entry point: ``lievf {simulate,check,gen-curve,field-grid,bench}``."""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import fields
from pathlib import Path
from typing import Optional

import numpy as np

from . import generators
from .bench import bench_distance_kernels, bench_field_eval
from .curve import CurveError, ec_distance, load_curve, save_curve
from .field import FieldConfig, GainSchedule, escape_policy, evaluate_field
from .groups import MEMBERSHIP_TOL, GroupError, group_from_name, membership_residual
from .properties import run_property_suite
from .simulator import ManifoldDriftError, SimulationConfig, SimulationError, run

EXIT_OK, EXIT_DRIFT, EXIT_CONFIG, EXIT_IMPROPER = 0, 2, 3, 4

SIM_KEYS = {"dt", "duration", "initial_state", "gains", "curve", "seed", "escape_magnitude",
            "on_curve_tolerance", "eps", "scheme", "refine", "parallel", "workers"}
CONFIG_KEYS = SIM_KEYS | {"generate", "check"}
GAIN_KEYS = {f.name for f in fields(GainSchedule)}
CURVE_KINDS = ("circle_T2", "screw_SE3", "composed_SE3")
GENERATE_KEYS = {"kind", "n_samples", "radius", "center", "zeta", "start", "closed"}
CHECK_KEYS = {"groups", "trials", "seed"}


class ConfigError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse would exit 2, which is reserved for manifold drift.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _reject_unknown(data: dict, allowed: set, where: str) -> None:
    if not isinstance(data, dict):
        raise ConfigError(f"{where} must be an object")
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")


def read_config(path) -> tuple[dict, Path]:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    _reject_unknown(data, CONFIG_KEYS, "config")
    if "gains" in data:
        _reject_unknown(data["gains"], GAIN_KEYS, "gains")
    if "generate" in data:
        _reject_unknown(data["generate"], GENERATE_KEYS, "generate")
    if "check" in data:
        _reject_unknown(data["check"], CHECK_KEYS, "check")
    return data, path.resolve().parent


def _resolve(base: Path, p: str) -> Path:
    q = Path(p)
    return q if q.is_absolute() else base / q


def simulation_config(data: dict, base: Path, overrides: Optional[dict] = None) -> SimulationConfig:
    kw = {k: v for k, v in data.items() if k in SIM_KEYS - {"curve", "gains", "initial_state"}}
    if "gains" in data:
        kw["gains"] = GainSchedule(**data["gains"])
    if data.get("initial_state") is not None:
        kw["initial_state"] = np.asarray(data["initial_state"], dtype=float)
    if "curve" in data:
        kw["curve_ref"] = str(_resolve(base, data["curve"]))
    kw.update({k: v for k, v in (overrides or {}).items() if v is not None})
    try:
        return SimulationConfig(**kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def generate_curve(kind: str, params: dict):
    """Build one of the sample curves; raises CurveError on an improper result."""
    _reject_unknown(params, GENERATE_KEYS - {"kind"}, "generate")
    if kind == "circle_T2":
        return generators.circle_t2(int(params.get("n_samples", 360)), float(params.get("radius", 1.0)),
                                    tuple(params.get("center", (0.0, 0.0))))
    if kind == "screw_SE3":
        zeta = np.asarray(params.get("zeta", generators.DEFAULT_SCREW), dtype=float)
        start = params.get("start")
        H0 = generators.DEFAULT_SCREW_START if start is None else np.asarray(start, dtype=float)
        return generators.screw_se3(zeta, H0, int(params.get("n_samples", 5000)), params.get("closed"))
    if kind == "composed_SE3":
        return generators.composed_se3(int(params.get("n_samples", 5000)))
    raise ConfigError(f"unknown curve kind {kind!r}; expected one of {', '.join(CURVE_KINDS)}")


def _fmt(x: float) -> str:
    return "" if math.isnan(x) else format(float(x), ".17g")


# --- commands -------------------------------------------------------------------

def cmd_simulate(args) -> int:
    try:
        data, base = read_config(args.config)
        overrides = {"seed": args.seed, "workers": args.workers}
        if args.parallel is not None:
            overrides["parallel"] = args.parallel == "on"
        cfg = simulation_config(data, base, overrides)
        if cfg.curve_ref is None:
            raise ConfigError("config needs a 'curve' path")
        curve = load_curve(cfg.curve_ref)
    except (ConfigError, CurveError, GroupError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        trace = run(cfg, curve)
    except ManifoldDriftError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_DRIFT
    except SimulationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    trace.write_csv(args.out)
    print(f"wrote {len(trace)} rows to {args.out}; final D = {trace.D[-1]:.3e}, "
          f"escapes = {trace.escape_count}")
    return EXIT_OK


def cmd_check(args) -> int:
    groups, trials, seed = args.group, args.trials, args.seed
    if args.config:
        try:
            data, _ = read_config(args.config)
        except ConfigError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        sel = data.get("check", {})
        groups = groups or sel.get("groups")
        trials = trials if trials is not None else sel.get("trials")
        seed = seed if seed is not None else sel.get("seed")
    groups = groups or ["SE3"]
    trials = 1000 if trials is None else trials
    seed = 0 if seed is None else seed
    if trials == 0:
        print("warning: 0 trials requested, the property suite passes vacuously", file=sys.stderr)
        return EXIT_OK
    ok = True
    for name in groups:
        try:
            g = group_from_name(name)
        except (GroupError, ValueError) as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        print(f"{g.name}: {trials} trials, seed {seed}")
        for r in run_property_suite(g, trials, seed):
            ok = ok and r.passed
            print(f"  {r.name:<20} max residual {r.max_residual:.3e}  (tol {r.tolerance:.0e})  "
                  f"{'ok' if r.passed else 'FAIL'}")
    return EXIT_OK if ok else 1


def cmd_gen_curve(args) -> int:
    params = {}
    if args.config:
        try:
            data, _ = read_config(args.config)
        except ConfigError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        params = dict(data.get("generate", {}))
    kind = args.kind or params.pop("kind", None)
    params.pop("kind", None)
    if args.n_samples is not None:
        params["n_samples"] = args.n_samples
    if args.zeta is not None:
        params["zeta"] = args.zeta
    if args.radius is not None:
        params["radius"] = args.radius
    if kind is None:
        print("config error: no curve kind given", file=sys.stderr)
        return EXIT_CONFIG
    try:
        curve = generate_curve(kind, params)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (CurveError, GroupError) as exc:
        print(f"improper curve: {exc}", file=sys.stderr)
        return EXIT_IMPROPER
    save_curve(curve, args.out)
    print(f"wrote {kind} with {curve.n_samples} samples ({'closed' if curve.closed else 'open'}) to {args.out}")
    return EXIT_OK


def grid_states(curve, xlim, ylim, shape, base=None):
    """Grid over the first two translation coordinates, rotation held at ``base``."""
    g = curve.group
    n = g.matrix_order
    if g.name == "SO3":
        raise ConfigError("field grids need a translation part")
    if base is None:
        base = np.eye(n) if g.name.startswith("T") else curve.samples[0]
    xs = np.linspace(xlim[0], xlim[1], shape[0])
    ys = np.linspace(ylim[0], ylim[1], shape[1])
    for y in ys:
        for x in xs:
            H = np.array(base, dtype=float, copy=True)
            H[0, -1], H[1, -1] = x, y
            yield H


def cmd_field_grid(args) -> int:
    try:
        curve = load_curve(args.curve)
        if args.base is not None:
            base = np.asarray(args.base, dtype=float).reshape(curve.group.matrix_order, -1)
            if not membership_residual(curve.group, base) <= MEMBERSHIP_TOL:
                raise ConfigError("base pose is not on the group")
        else:
            base = None
        states = list(grid_states(curve, args.xlim, args.ylim, args.shape, base))
    except (ConfigError, CurveError, GroupError, OSError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    g = curve.group
    m, n = g.algebra_dim, g.matrix_order
    cfg = FieldConfig(parallel=args.parallel == "on", workers=args.workers)
    header = ([f"H{i}{j}" for i in range(n) for j in range(n)] + [f"psi{j}" for j in range(m)]
              + [f"xi_N{j}" for j in range(m)] + [f"xi_T{j}" for j in range(m)] + ["D", "near_tie"])
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for H in states:
            q = ec_distance(curve, H, **cfg.search_kwargs())
            if q.near_tie:
                # flagged, not fatal: the escape twist stands in for psi
                psi = escape_policy(curve, H, q, cfg.escape_magnitude)
                xi_N = xi_T = np.full(m, math.nan)
            else:
                ev = evaluate_field(curve, H, cfg, q)
                psi, xi_N, xi_T = ev.xi, ev.xi_N, ev.xi_T
            w.writerow([_fmt(x) for x in H.ravel()] + [_fmt(x) for x in psi] + [_fmt(x) for x in xi_N]
                       + [_fmt(x) for x in xi_T] + [_fmt(q.distance), int(q.near_tie)])
    print(f"wrote {len(states)} rows to {args.out}")
    return EXIT_OK


def cmd_bench(args) -> int:
    workers = args.workers_list or ([1, args.workers] if args.workers else [1, 2, 4, 8])
    report = bench_field_eval(args.n_samples, args.trials, workers, seed=args.seed or 0)
    kernels = bench_distance_kernels(max(args.trials, 1) * 10, seed=args.seed or 0)
    print(report.table())
    print(kernels.table())
    if args.out:
        Path(args.out).write_text(json.dumps({"field": json.loads(report.to_json()),
                                              "kernels": json.loads(kernels.to_json())}, indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="lievf", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, out_required=True):
        sp.add_argument("--config")
        sp.add_argument("--out", required=out_required)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--workers", type=int, help="search threads (default: $FIELD_WORKERS or cpu count)")
        sp.add_argument("--parallel", choices=("on", "off"))
        sp.add_argument("--trials", type=int)

    sp = sub.add_parser("simulate", help="integrate the closed loop and write a CSV trace")
    common(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("check", help="run the seeded property suite")
    common(sp, out_required=False)
    sp.add_argument("--group", action="append", help="SE3, SO3 or Tm (repeatable)")
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("gen-curve", help="write a sample curve as JSON")
    common(sp)
    sp.add_argument("--kind", choices=CURVE_KINDS)
    sp.add_argument("--n-samples", type=int)
    sp.add_argument("--radius", type=float)
    sp.add_argument("--zeta", type=float, nargs=6)
    sp.set_defaults(func=cmd_gen_curve)

    sp = sub.add_parser("field-grid", help="evaluate the field over a planar grid")
    common(sp)
    sp.add_argument("--curve", required=True)
    sp.add_argument("--xlim", type=float, nargs=2, default=(-2.0, 2.0))
    sp.add_argument("--ylim", type=float, nargs=2, default=(-2.0, 2.0))
    sp.add_argument("--shape", type=int, nargs=2, default=(10, 10))
    sp.add_argument("--base", type=float, nargs="+", help="pose the grid is laid around (row-major)")
    sp.set_defaults(func=cmd_field_grid)

    sp = sub.add_parser("bench", help="time the field evaluation and distance kernels")
    common(sp, out_required=False)
    sp.add_argument("--n-samples", type=int, default=5000)
    sp.add_argument("--workers-list", type=int, nargs="+")
    sp.set_defaults(func=cmd_bench, trials=None)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "bench" and args.trials is None:
        args.trials = 200
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
