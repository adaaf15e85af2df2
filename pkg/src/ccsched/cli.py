"""Command-line front end: a thin adapter over the core library.

Exit codes: 0 success, 2 invalid scenario, 3 enumeration cap exceeded.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from . import fair_solver, harness, rate_enum
from .rate_enum import EnumerationCapExceeded
from .scenario import ScenarioError, load_scenario, resolve_trial

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_CAP = 3


def _cmd_enumerate(args) -> int:
    sc = load_scenario(args.scenario)
    rt = resolve_trial(sc, args.trial)
    atoms = rate_enum.enumerate_rate_vectors(
        rt.topology, rt.profiles, rt.cfg, cap=sc.enumeration_cap
    )
    harness.write_atoms_csv(args.out, atoms)
    print(f"wrote {len(atoms)} maximal rate vectors to {args.out}")
    return EXIT_OK


def _cmd_solve(args) -> int:
    atoms = harness.read_atoms_csv(args.atoms)
    if not atoms:
        raise ScenarioError(f"no atoms in {args.atoms}")
    solution = fair_solver.solve(atoms, args.objective)
    doc = harness.solution_to_dict(solution)
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
    print(
        f"{args.objective} utility {doc['utility']:.6f}, "
        f"geo mean {doc['geometric_mean']:.4f}, min rate {doc['min_rate']:.4f}"
    )
    return EXIT_OK


def _cmd_simulate(args) -> int:
    sc = load_scenario(args.scenario)
    if args.out:
        sc = replace(sc, record_trace=True)
    results = harness.run_scenario(sc)
    if args.summary:
        harness.write_summary_json(args.summary, results)
    if args.out:
        run = results[0].run
        if run is None:
            raise ScenarioError("static scenarios produce no trace; drop --out")
        harness.write_trace_csv(args.out, run)
    print(harness.summarize(results))
    return EXIT_OK


def _parse_values(var: str, raw: str) -> list:
    parts = [p.strip() for p in raw.split(",") if p.strip()]
    if var == "L":
        return [int(p) for p in parts]
    if var == "V":
        return [float(p) for p in parts]
    return parts


def _cmd_sweep(args) -> int:
    sc = load_scenario(args.scenario)
    rows = harness.sweep(sc, args.var, _parse_values(args.var, args.values))
    harness.write_sweep_csv(args.out, rows)
    errors = [r for r in rows if "error" in r]
    print(f"wrote {len(rows)} sweep rows to {args.out} ({len(errors)} invalid cells)")
    return EXIT_OK


def _cmd_report(args) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for summary in args.summary or []:
        with open(summary, "r", encoding="utf-8") as fh:
            docs = json.load(fh)
        if isinstance(docs, dict):
            docs = [docs]
        for doc in docs:
            goodput = doc.get("goodput")
            values = (
                list(goodput.values()) if isinstance(goodput, dict) else goodput
            )
            stem = Path(summary).stem
            trial = doc.get("trial", 0)
            harness.write_cdf_csv(out_dir / f"{stem}_trial{trial}_cdf.csv", values)
            print(
                f"{stem} trial {trial}: utility={doc.get('utility'):.4f} "
                f"geo_mean={doc.get('geometric_mean'):.4f} "
                f"min_rate={doc.get('min_rate'):.4f}"
            )
    for trace in args.trace or []:
        stem = Path(trace).stem
        harness.trajectory_from_trace_csv(trace, out_dir / f"{stem}_trajectory.csv")
        print(f"wrote trajectories for {trace}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ccsched",
        description="Coded-caching multicast scheduling simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("enumerate", help="enumerate maximal rate vectors")
    p.add_argument("--scenario", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--trial", type=int, default=0)
    p.set_defaults(func=_cmd_enumerate)

    p = sub.add_parser("solve", help="solve the static fairness program")
    p.add_argument("--atoms", required=True)
    p.add_argument("--objective", choices=["pf", "hf"], required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("simulate", help="run the dynamic scheduler")
    p.add_argument("--scenario", required=True)
    p.add_argument("--out", help="per-slot trace CSV (trial 0)")
    p.add_argument("--summary", help="summary JSON for all trials")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("sweep", help="paired parameter sweep")
    p.add_argument("--scenario", required=True)
    p.add_argument("--var", choices=list(harness.SWEEP_VARS), required=True)
    p.add_argument("--values", required=True, help="comma-separated values")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("report", help="plot-ready CSVs from summaries/traces")
    p.add_argument("--summary", action="append")
    p.add_argument("--trace", action="append")
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=_cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(f"invalid scenario: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except EnumerationCapExceeded as exc:
        print(f"{exc}; use the reduced or heuristic scheduler", file=sys.stderr)
        return EXIT_CAP
    except FileNotFoundError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
