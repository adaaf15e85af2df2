"""Monte Carlo experiment driver, metric aggregation, and plot-ready output.

Trials are independent: each derives its own child seeds from the master seed
so any one of them can be rerun in isolation.  ``CCSCHED_THREADS`` controls
how many trials run concurrently; outputs are collected by trial index, so
results do not depend on the degree of parallelism.
"""
from __future__ import annotations

import csv
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from . import baselines, dpp, fair_solver, rate_enum
from .coded_cache import CacheConfig
from .dpp import DppRun
from .fair_solver import FairnessSolution
from .rate_enum import Decision, EnumerationCapExceeded, RateAtom
from .scenario import Scenario, ScenarioError, resolve_trial
from .topology import Topology

THREADS_ENV = "CCSCHED_THREADS"


@dataclass
class TrialResult:
    """Aggregated outcome of one trial."""

    trial: int
    objective: str
    scheduler: str
    user_ids: tuple[int, ...]
    goodput: dict[int, float]
    utility: float
    geometric_mean: float
    min_rate: float
    cdf: list[tuple[float, float]]
    wall_time: float
    run: DppRun | None = None
    solution: FairnessSolution | None = None
    bitrates: dict[int, float] | None = None

    def goodput_vector(self) -> np.ndarray:
        return np.array([self.goodput[u] for u in self.user_ids], dtype=float)


def utility_of(goodput: np.ndarray, objective: str) -> float:
    if objective == "pf":
        return fair_solver.pf_utility(goodput)
    if objective == "hf":
        return float(np.min(goodput)) if goodput.size else 0.0
    raise ValueError(f"unknown objective {objective!r}")


def make_provider_factory(
    scheduler: str,
    cfg: CacheConfig,
    sched_rng: np.random.Generator,
    cap: int,
    reuse_factor: int,
):
    """Bind a scheduler name to a provider constructor usable across events."""

    def factory(topology: Topology, profiles: tuple[int, ...], ids: tuple[int, ...]):
        if scheduler == "exact":
            return rate_enum.ExactWsrmProvider(topology, profiles, cfg, cap=cap)
        if scheduler == "reduced":
            return rate_enum.ReducedWsrmProvider(topology, profiles, cfg)
        if scheduler == "heuristic":
            return dpp.VirtualQueueHeuristicProvider(topology, profiles, cfg, sched_rng)
        if scheduler == "reuse":
            return baselines.ReuseProvider(topology, profiles, cfg, reuse_factor)
        if scheduler == "csma":
            return baselines.CsmaProvider(topology, profiles, cfg, sched_rng)
        raise ValueError(f"no provider for scheduler {scheduler!r}")

    return factory


def run_trial(sc: Scenario, trial: int) -> TrialResult:
    rt = resolve_trial(sc, trial)
    start = time.perf_counter()
    run = None
    solution = None
    if sc.scheduler == "static":
        atoms = rate_enum.enumerate_rate_vectors(
            rt.topology, rt.profiles, rt.cfg, cap=sc.enumeration_cap
        )
        solution = fair_solver.solve(atoms, sc.objective)
        user_ids = tuple(range(rt.topology.user_count))
        goodput = {u: float(g) for u, g in zip(user_ids, solution.goodput)}
    else:
        factory = make_provider_factory(
            sc.scheduler, rt.cfg, rt.sched_rng, sc.enumeration_cap, sc.reuse_factor
        )
        run = dpp.run_dpp(
            rt.topology.ap_count,
            rt.user_specs,
            rt.cfg,
            sc.objective,
            factory,
            v_param=sc.v_param,
            slots=sc.slots,
            a_max=sc.a_max,
            events=rt.events,
            record_trace=sc.record_trace,
        )
        user_ids = tuple(run.alive_ids())
        goodput = {u: run.goodput[u] for u in user_ids}
    vec = np.array([goodput[u] for u in user_ids], dtype=float)
    stats = fair_solver.metrics(vec) if user_ids else {
        "geometric_mean": 0.0, "min_rate": 0.0, "cdf": []
    }
    bitrates = None
    if sc.capacity is not None:
        bitrates = {u: sc.capacity * g for u, g in goodput.items()}
    return TrialResult(
        trial=trial,
        objective=sc.objective,
        scheduler=sc.scheduler,
        user_ids=user_ids,
        goodput=goodput,
        utility=utility_of(vec, sc.objective),
        geometric_mean=stats["geometric_mean"],
        min_rate=stats["min_rate"],
        cdf=stats["cdf"],
        wall_time=time.perf_counter() - start,
        run=run,
        solution=solution,
        bitrates=bitrates,
    )


def run_scenario(sc: Scenario) -> list[TrialResult]:
    """Run all trials of the scenario, optionally in parallel."""
    sc.validate()
    threads = int(os.environ.get(THREADS_ENV, "1"))
    trials = range(sc.trials)
    if threads > 1 and sc.trials > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(lambda k: run_trial(sc, k), trials))
    return [run_trial(sc, k) for k in trials]


SWEEP_VARS = ("L", "V", "scheduler")


def _sweep_cell(sc: Scenario, var: str, value) -> Scenario:
    if var == "L":
        cache = dict(sc.cache)
        cache["profiles"] = int(value)
        return replace(sc, cache=cache)
    if var == "V":
        return replace(sc, v_param=float(value))
    if var == "scheduler":
        return replace(sc, scheduler=str(value))
    raise ValueError(f"sweep variable must be one of {SWEEP_VARS}")


def sweep(sc: Scenario, var: str, values: Sequence) -> list[dict]:
    """Paired sweep: every cell reuses the same per-trial user realization.

    Invalid cells (e.g. a profile count that breaks the integer-replication
    constraint) produce an error row and the sweep continues.
    """
    rows: list[dict] = []
    for value in values:
        try:
            cell = _sweep_cell(sc, var, value)
            results = run_scenario(cell)
        except (ScenarioError, EnumerationCapExceeded, ValueError) as exc:
            rows.append({"variable": var, "value": value, "error": str(exc)})
            continue
        for res in results:
            rows.append(
                {
                    "variable": var,
                    "value": value,
                    "scheduler": res.scheduler,
                    "trial": res.trial,
                    "utility": res.utility,
                    "geometric_mean": res.geometric_mean,
                    "min_rate": res.min_rate,
                }
            )
    return rows


# --- file formats --------------------------------------------------------------

def write_atoms_csv(path, atoms: Sequence[RateAtom]) -> None:
    """Rate vectors as exact fractions, one row per decision."""
    n_users = len(atoms[0].rates) if atoms else 0
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["pattern_index", "decision_index"]
            + [f"rate_{k + 1}" for k in range(n_users)]
        )
        for atom in atoms:
            writer.writerow(
                [atom.decision.pattern, atom.decision.index]
                + [f"{r.numerator}/{r.denominator}" for r in atom.rates]
            )


def read_atoms_csv(path) -> list[RateAtom]:
    atoms = []
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            return []
        for row in reader:
            pattern, index = int(row[0]), int(row[1])
            rates = tuple(Fraction(cell) for cell in row[2:])
            atoms.append(RateAtom(Decision(pattern, index, ()), rates))
    return atoms


def solution_to_dict(sol: FairnessSolution) -> dict:
    return {
        "objective": sol.objective,
        "utility": sol.utility,
        "goodput": [float(g) for g in sol.goodput],
        "support": [
            {"pattern": p, "decision": s, "prob": prob}
            for p, s, prob in sol.support()
        ],
        "converged": sol.converged,
        "iterations": sol.iterations,
        "gap": sol.gap,
        "geometric_mean": fair_solver.metrics(sol.goodput)["geometric_mean"],
        "min_rate": float(np.min(sol.goodput)),
    }


def result_summary(res: TrialResult) -> dict:
    doc = {
        "trial": res.trial,
        "objective": res.objective,
        "scheduler": res.scheduler,
        "user_ids": list(res.user_ids),
        "goodput": {str(u): res.goodput[u] for u in res.user_ids},
        "utility": res.utility,
        "geometric_mean": res.geometric_mean,
        "min_rate": res.min_rate,
        "wall_time": res.wall_time,
    }
    if res.bitrates is not None:
        doc["bitrates"] = {str(u): b for u, b in res.bitrates.items()}
    return doc


def write_summary_json(path, results: Sequence[TrialResult]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump([result_summary(r) for r in results], fh, indent=2)


def write_trace_csv(path, run: DppRun) -> None:
    """Long-format per-slot trace; rows exist only while a user is present."""
    if run.trace is None:
        raise ValueError("run was executed without record_trace")
    tr = run.trace
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["slot", "user_id", "inst_rate", "goodput", "queue"])
        for slot in range(tr.inst_rate.shape[0]):
            for col, user in enumerate(tr.user_ids):
                if math.isnan(tr.inst_rate[slot, col]):
                    continue
                writer.writerow(
                    [
                        slot,
                        user,
                        f"{tr.inst_rate[slot, col]:.9g}",
                        f"{tr.goodput[slot, col]:.9g}",
                        f"{tr.queue[slot, col]:.9g}",
                    ]
                )


def write_trajectory_csv(path, run: DppRun) -> None:
    """Wide-format goodput trajectories: zero before a user joins, frozen
    at the departure average afterwards."""
    if run.trace is None:
        raise ValueError("run was executed without record_trace")
    tr = run.trace
    slots = tr.goodput.shape[0]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["slot"] + [f"u{u}" for u in tr.user_ids])
        frozen = {u: 0.0 for u in tr.user_ids}
        for slot in range(slots):
            row = [slot]
            for col, user in enumerate(tr.user_ids):
                value = tr.goodput[slot, col]
                if math.isnan(value):
                    value = frozen[user] if slot >= run.join_slot[user] else 0.0
                else:
                    frozen[user] = float(value)
                row.append(f"{value:.9g}")
            writer.writerow(row)


def write_cdf_csv(path, goodput: Iterable[float]) -> None:
    stats = fair_solver.metrics(np.asarray(list(goodput), dtype=float))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["rate", "fraction"])
        for rate, frac in stats["cdf"]:
            writer.writerow([f"{rate:.9g}", f"{frac:.9g}"])


def write_sweep_csv(path, rows: Sequence[dict]) -> None:
    fields = ["variable", "value", "scheduler", "trial", "utility",
              "geometric_mean", "min_rate", "error"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row.get(k, "") for k in fields})


def summarize(results: Sequence[TrialResult]) -> str:
    lines = []
    for res in results:
        lines.append(
            f"trial {res.trial} [{res.scheduler}/{res.objective}] "
            f"utility={res.utility:.4f} geo_mean={res.geometric_mean:.4f} "
            f"min_rate={res.min_rate:.4f} ({res.wall_time:.2f}s)"
        )
    return "\n".join(lines)


def trajectory_from_trace_csv(trace_path, out_path) -> None:
    """Pivot a long-format trace file into wide goodput trajectories."""
    per_slot: dict[int, dict[int, float]] = {}
    users: list[int] = []
    with open(trace_path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            slot = int(row["slot"])
            user = int(row["user_id"])
            if user not in users:
                users.append(user)
            per_slot.setdefault(slot, {})[user] = float(row["goodput"])
    slots = sorted(per_slot)
    with open(out_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["slot"] + [f"u{u}" for u in users])
        seen: dict[int, bool] = {u: False for u in users}
        frozen: dict[int, float] = {u: 0.0 for u in users}
        for slot in slots:
            row = [slot]
            for u in users:
                if u in per_slot[slot]:
                    frozen[u] = per_slot[slot][u]
                    seen[u] = True
                row.append(f"{frozen[u] if seen[u] else 0.0:.9g}")
            writer.writerow(row)
