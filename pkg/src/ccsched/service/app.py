"""FastAPI service exposing enumeration, fairness solves, runs, and sweeps.

Run with: uvicorn ccsched.service.app:app
"""
from __future__ import annotations

from fractions import Fraction

from fastapi import FastAPI, HTTPException

from .. import fair_solver, harness, rate_enum
from ..rate_enum import Decision, EnumerationCapExceeded, RateAtom
from ..scenario import ScenarioError, scenario_from_dict, resolve_trial
from .schemas import (
    AtomModel,
    EnumerateRequest,
    EnumerateResponse,
    HealthResponse,
    ScenarioModel,
    SimulateRequest,
    SimulateResponse,
    SolveRequest,
    SolveResponse,
    SweepRequest,
    SweepResponse,
    TrialSummary,
)

app = FastAPI(
    title="ccsched",
    description="Coded-caching multicast scheduling over multi-AP WLANs",
)


def _scenario(model: ScenarioModel):
    try:
        return scenario_from_dict(model.as_document())
    except ScenarioError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc


def _guard_cap(fn):
    try:
        return fn()
    except EnumerationCapExceeded as exc:
        raise HTTPException(status_code=409, detail=str(exc)) from exc
    except ScenarioError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc


@app.get("/health", response_model=HealthResponse)
def health() -> HealthResponse:
    from .. import __version__

    return HealthResponse(status="ok", version=__version__)


@app.post("/enumerate", response_model=EnumerateResponse)
def enumerate_atoms(request: EnumerateRequest) -> EnumerateResponse:
    sc = _scenario(request.scenario)
    rt = _guard_cap(lambda: resolve_trial(sc, request.trial))
    atoms = _guard_cap(
        lambda: rate_enum.enumerate_rate_vectors(
            rt.topology, rt.profiles, rt.cfg, cap=sc.enumeration_cap
        )
    )
    return EnumerateResponse(
        user_count=rt.topology.user_count,
        atoms=[
            AtomModel(
                pattern=a.decision.pattern,
                decision=a.decision.index,
                rates=[f"{r.numerator}/{r.denominator}" for r in a.rates],
            )
            for a in atoms
        ],
    )


@app.post("/solve", response_model=SolveResponse)
def solve(request: SolveRequest) -> SolveResponse:
    if request.objective not in ("pf", "hf"):
        raise HTTPException(status_code=422, detail="objective must be pf or hf")
    if request.atoms:
        atoms = [
            RateAtom(
                Decision(a.pattern, a.decision, ()),
                tuple(Fraction(r) for r in a.rates),
            )
            for a in request.atoms
        ]
    elif request.scenario is not None:
        sc = _scenario(request.scenario)
        rt = _guard_cap(lambda: resolve_trial(sc, request.trial))
        atoms = _guard_cap(
            lambda: rate_enum.enumerate_rate_vectors(
                rt.topology, rt.profiles, rt.cfg, cap=sc.enumeration_cap
            )
        )
    else:
        raise HTTPException(status_code=422, detail="provide atoms or a scenario")
    try:
        solution = fair_solver.solve(atoms, request.objective)
    except fair_solver.UnreachableUserError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc
    doc = harness.solution_to_dict(solution)
    return SolveResponse(
        objective=doc["objective"],
        utility=doc["utility"],
        goodput=doc["goodput"],
        support=doc["support"],
        geometric_mean=doc["geometric_mean"],
        min_rate=doc["min_rate"],
        converged=doc["converged"],
        iterations=doc["iterations"],
    )


@app.post("/simulate", response_model=SimulateResponse)
def simulate(request: SimulateRequest) -> SimulateResponse:
    sc = _scenario(request.scenario)
    results = _guard_cap(lambda: harness.run_scenario(sc))
    return SimulateResponse(
        results=[TrialSummary(**harness.result_summary(r)) for r in results]
    )


@app.post("/sweep", response_model=SweepResponse)
def run_sweep(request: SweepRequest) -> SweepResponse:
    sc = _scenario(request.scenario)
    if request.variable not in harness.SWEEP_VARS:
        raise HTTPException(
            status_code=422,
            detail=f"variable must be one of {harness.SWEEP_VARS}",
        )
    rows = harness.sweep(sc, request.variable, request.values)
    return SweepResponse(rows=rows)
