"""Request and response models for the scheduling service."""
from __future__ import annotations

from typing import Any

from pydantic import BaseModel, ConfigDict, Field


class ScenarioModel(BaseModel):
    """Mirror of the scenario JSON document accepted by the CLI."""

    model_config = ConfigDict(extra="forbid")

    topology: dict[str, Any]
    cache: dict[str, Any] | None = None
    users: dict[str, Any] | None = None
    profile_assignment: list[int] | str = "random"
    objective: str = "pf"
    scheduler: str = "exact"
    v_param: float = 50.0
    slots: int = 20_000
    a_max: float | None = None
    events: list[dict[str, Any]] = Field(default_factory=list)
    master_seed: int = 0
    trials: int = 1
    reuse_factor: int = 3
    enumeration_cap: int = 10_000_000
    capacity: float | None = None
    record_trace: bool = False
    name: str | None = None

    def as_document(self) -> dict:
        return self.model_dump(exclude_none=True, exclude_defaults=True) | {
            "topology": self.topology
        }


class AtomModel(BaseModel):
    pattern: int
    decision: int
    rates: list[str]  # exact fractions "p/q"


class EnumerateRequest(BaseModel):
    scenario: ScenarioModel
    trial: int = 0


class EnumerateResponse(BaseModel):
    user_count: int
    atoms: list[AtomModel]


class SolveRequest(BaseModel):
    objective: str
    atoms: list[AtomModel] | None = None
    scenario: ScenarioModel | None = None
    trial: int = 0


class SupportEntry(BaseModel):
    pattern: int
    decision: int
    prob: float


class SolveResponse(BaseModel):
    objective: str
    utility: float
    goodput: list[float]
    support: list[SupportEntry]
    geometric_mean: float
    min_rate: float
    converged: bool
    iterations: int


class SimulateRequest(BaseModel):
    scenario: ScenarioModel


class TrialSummary(BaseModel):
    trial: int
    scheduler: str
    objective: str
    user_ids: list[int]
    goodput: dict[str, float]
    utility: float
    geometric_mean: float
    min_rate: float
    wall_time: float
    bitrates: dict[str, float] | None = None


class SimulateResponse(BaseModel):
    results: list[TrialSummary]


class SweepRequest(BaseModel):
    scenario: ScenarioModel
    variable: str
    values: list[Any]


class SweepResponse(BaseModel):
    rows: list[dict[str, Any]]


class HealthResponse(BaseModel):
    status: str
    version: str
