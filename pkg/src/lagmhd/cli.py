"""``lagmhd`` command line: run, presets, converge, check."""
from __future__ import annotations

import argparse
import sys

from .config import load_config
from .errors import ConfigError, SolverError, ValidationError
from .io import dumps, read_ndjson
from .presets import PRESETS, presets
from .runner import (
    EXIT_CONFIG,
    EXIT_INVARIANT,
    EXIT_PASS,
    EXIT_SOLVER,
    convergence_study,
    evaluate_invariants,
    run,
)


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    code, summary = run(cfg, output_dir=args.output_dir)
    for name, res in summary["invariants"].items():
        print(f"{name:24s} {'PASS' if res['pass'] else 'FAIL'}")
    print(f"status: {summary['status']}  steps: {summary['n_steps']}  "
          f"max energy drift: {summary['max_energy_drift']:.3e}  "
          f"wall time: {summary['wall_time_s']:.2f}s")
    if "error" in summary["invariants"]["completed"]:
        print(f"error: {summary['invariants']['completed']['error']}", file=sys.stderr)
    return code


def _cmd_presets(args) -> int:
    for name in presets():
        p = PRESETS[name]
        print(f"{name:20s} [{p.y_min:g}, {p.y_max:g}] n={p.n_cells:<5d} {p.description}")
    return EXIT_PASS


def _cmd_converge(args) -> int:
    cfg = load_config(args.config)
    res = convergence_study(cfg, args.levels, min_order=args.min_order)
    for name, q in res["quantities"].items():
        vals = " ".join(f"{v:.3e}" for v in q["values"])
        orders = " ".join(o if isinstance(o, str) else f"{o:.2f}" for o in q["orders"])
        print(f"{name:16s} {'PASS' if q['pass'] else 'FAIL'}  values: {vals}  orders: {orders}")
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            fh.write(dumps(res) + "\n")
    return EXIT_PASS if res["pass"] else EXIT_INVARIANT


def _cmd_check(args) -> int:
    records = read_ndjson(args.ndjson)
    inv = evaluate_invariants(records, energy_tol=args.energy_tol, bound_tol=args.bound_tol)
    for name, res in inv.items():
        print(f"{name:24s} {'PASS' if res['pass'] else 'FAIL'}")
    return EXIT_PASS if all(r["pass"] for r in inv.values()) else EXIT_INVARIANT


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lagmhd",
                                 description="Planar Lagrangian MHD solver and invariant suite")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a config and write reports, snapshots and a summary")
    p.add_argument("config")
    p.add_argument("--output-dir", default=None,
                   help="overrides LAGMHD_OUTPUT_DIR and the config's output_dir")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("presets", help="list initial-data presets")
    p.set_defaults(func=_cmd_presets)

    p = sub.add_parser("converge", help="refinement study with observed orders")
    p.add_argument("config")
    p.add_argument("--levels", type=int, default=3)
    p.add_argument("--min-order", type=float, default=1.0)
    p.add_argument("--json", default=None, help="also write the full report here")
    p.set_defaults(func=_cmd_converge)

    p = sub.add_parser("check", help="re-validate invariants from a reports.ndjson file")
    p.add_argument("ndjson")
    p.add_argument("--energy-tol", type=float, default=1e-3)
    p.add_argument("--bound-tol", type=float, default=1e-2)
    p.set_defaults(func=_cmd_check)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValidationError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as exc:
        print(f"solver abort: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
