"""Experiment descriptions: topology sources, cache setup, schedulers, events.

Scenario files are plain JSON.  Child RNG seeds are derived from the master
seed as SeedSequence((master, trial, stream)), so any trial is reproducible in
isolation; stream constants keep user placement, profile draws and scheduler
randomness independent.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

import numpy as np

from .coded_cache import CacheConfig, cache_config, parse_fraction
from .dpp import NetworkEvent, UserSpec
from .topology import (
    Topology,
    adjacency_topology,
    build_hex_grid,
    density_for_expected_users,
    geometric_topology,
    sample_users_ppp,
    topology_from_dict,
)

OBJECTIVES = ("pf", "hf")
SCHEDULERS = ("exact", "reduced", "heuristic", "reuse", "csma", "static")

# seed streams
_USERS = 11
_PROFILES = 13
_SCHED = 17


class ScenarioError(ValueError):
    """The scenario document is malformed or inconsistent."""


def child_rng(master_seed: int, trial: int, stream: int, extra: int = 0):
    return np.random.default_rng(
        np.random.SeedSequence((master_seed, trial, stream, extra))
    )


@dataclass
class Scenario:
    """Declarative description of one experiment."""

    topology: dict
    cache: dict = field(default_factory=lambda: {"profiles": 1, "gamma": 0})
    users: dict | None = None
    profile_assignment: list[int] | str = "random"
    objective: str = "pf"
    scheduler: str = "exact"
    v_param: float = 50.0
    slots: int = 20_000
    a_max: float | None = None
    events: list[dict] = field(default_factory=list)
    master_seed: int = 0
    trials: int = 1
    reuse_factor: int = 3
    enumeration_cap: int = 10_000_000
    capacity: float | None = None
    record_trace: bool = False
    name: str | None = None

    def cache_cfg(self) -> CacheConfig:
        try:
            return cache_config(
                int(self.cache["profiles"]), parse_fraction(self.cache["gamma"])
            )
        except (KeyError, ValueError, TypeError) as exc:
            raise ScenarioError(f"bad cache section: {exc}") from exc

    def validate(self) -> None:
        if self.objective not in OBJECTIVES:
            raise ScenarioError(f"objective must be one of {OBJECTIVES}")
        if self.scheduler not in SCHEDULERS:
            raise ScenarioError(f"scheduler must be one of {SCHEDULERS}")
        if self.trials < 1:
            raise ScenarioError("trials must be >= 1")
        if self.slots < 0:
            raise ScenarioError("slots must be >= 0")
        if self.v_param <= 0:
            raise ScenarioError("v_param must be > 0")
        slots_seen = [e.get("slot") for e in self.events]
        if any(s is None for s in slots_seen):
            raise ScenarioError("every event needs a slot")
        if any(b <= a for a, b in zip(slots_seen, slots_seen[1:])):
            raise ScenarioError("event slots must be strictly increasing")
        self.cache_cfg()

    def to_dict(self) -> dict:
        doc = {
            "topology": self.topology,
            "cache": self.cache,
            "profile_assignment": self.profile_assignment,
            "objective": self.objective,
            "scheduler": self.scheduler,
            "v_param": self.v_param,
            "slots": self.slots,
            "events": self.events,
            "master_seed": self.master_seed,
            "trials": self.trials,
            "reuse_factor": self.reuse_factor,
            "enumeration_cap": self.enumeration_cap,
            "record_trace": self.record_trace,
        }
        if self.users is not None:
            doc["users"] = self.users
        if self.a_max is not None:
            doc["a_max"] = self.a_max
        if self.capacity is not None:
            doc["capacity"] = self.capacity
        if self.name is not None:
            doc["name"] = self.name
        return doc


_FIELDS = {f for f in Scenario.__dataclass_fields__}


def scenario_from_dict(doc: Mapping) -> Scenario:
    if not isinstance(doc, Mapping):
        raise ScenarioError("scenario must be a JSON object")
    unknown = set(doc) - _FIELDS
    if unknown:
        raise ScenarioError(f"unknown scenario fields: {sorted(unknown)}")
    data = dict(doc)
    topo = data.get("topology")
    if topo is None:
        raise ScenarioError("scenario needs a topology section")
    if topo.get("builtin") == "two_ap":
        data.setdefault("cache", {"profiles": 3, "gamma": "1/3"})
        if "profile_assignment" not in data:
            data["profile_assignment"] = list(TWO_AP_PROFILES)
    elif "cache" not in data:
        raise ScenarioError("scenario needs a cache section")
    try:
        sc = Scenario(**data)
    except TypeError as exc:
        raise ScenarioError(str(exc)) from exc
    sc.validate()
    return sc


def load_scenario(path) -> Scenario:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"invalid JSON: {exc}") from exc
    return scenario_from_dict(doc)


def save_scenario(sc: Scenario, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(sc.to_dict(), fh, indent=2)


# --- built-in two-AP fixture -------------------------------------------------
#
# The running six-user example network: AP0 alone reaches users 0-2, AP1
# reaches users 2-5, user 1 additionally sits in AP1's interference ring and
# user 2 in both transmission disks.  Users 4 and 5 are equivalent.

TWO_AP_TRANS = ({0}, {0}, {0, 1}, {1}, {1}, {1})
TWO_AP_INTER = ({0}, {0, 1}, {0, 1}, {1}, {1}, {1})
TWO_AP_PROFILES = (1, 3, 3, 1, 2, 2)


def two_ap_topology() -> Topology:
    return adjacency_topology(2, TWO_AP_TRANS, TWO_AP_INTER)


def two_ap_cache() -> CacheConfig:
    return cache_config(3, Fraction(1, 3))


def two_ap_user_specs() -> list[UserSpec]:
    return [
        UserSpec(k, frozenset(t), frozenset(i), p)
        for k, (t, i, p) in enumerate(zip(TWO_AP_TRANS, TWO_AP_INTER, TWO_AP_PROFILES))
    ]


def two_ap_churn_events() -> list[dict]:
    """The dynamic showcase: user 5 leaves at slot 400, a new user with
    profile 1 joins at slot 601 inside both transmission radii."""
    return [
        {"slot": 400, "remove_user": 5},
        {"slot": 601, "add_user": {"profile": 1, "trans": [0, 1], "inter": [0, 1]}},
    ]


# --- resolution ---------------------------------------------------------------

@dataclass
class ResolvedTrial:
    """Concrete network realization for one trial."""

    trial: int
    topology: Topology
    cfg: CacheConfig
    profiles: tuple[int, ...]
    user_specs: list[UserSpec]
    events: list[NetworkEvent]
    sched_rng: np.random.Generator


def _resolve_topology(sc: Scenario, rng: np.random.Generator) -> Topology:
    doc = sc.topology
    if doc.get("builtin") == "two_ap":
        return two_ap_topology()
    mode = doc.get("mode")
    if mode == "hex":
        topo = build_hex_grid(
            int(doc.get("rings", 1)),
            float(doc.get("radius", 1.0)),
            r_trans=float(doc.get("r_trans", 1.0)),
            r_inter=float(doc.get("r_inter", 1.2)),
            max_aps=doc.get("max_aps"),
        )
        if isinstance(doc.get("users"), list):
            topo = geometric_topology(
                topo.ap_positions, doc["users"], topo.r_trans, topo.r_inter,
                hex_axial=topo.hex_axial,
            )
    else:
        try:
            topo = topology_from_dict(doc)
        except (KeyError, ValueError) as exc:
            raise ScenarioError(f"bad topology section: {exc}") from exc
    if sc.users is not None:
        if topo.mode != "geometric":
            raise ScenarioError("PPP user sampling needs a geometric topology")
        if "ppp_density" in sc.users:
            density = float(sc.users["ppp_density"])
        elif "ppp_expected" in sc.users:
            density = density_for_expected_users(topo, float(sc.users["ppp_expected"]))
        else:
            raise ScenarioError("users section needs ppp_density or ppp_expected")
        topo = sample_users_ppp(topo, density, rng)
    return topo


def _resolve_events(sc: Scenario, topology: Topology) -> list[NetworkEvent]:
    events = []
    next_id = topology.user_count
    for doc in sc.events:
        slot = int(doc["slot"])
        if "remove_user" in doc:
            events.append(NetworkEvent(slot=slot, remove=int(doc["remove_user"])))
        elif "add_user" in doc:
            add = doc["add_user"]
            if "position" in add:
                if topology.mode != "geometric":
                    raise ScenarioError("positional add_user needs a geometric topology")
                x, y = add["position"]
                trans, inter = set(), set()
                for i, (ax, ay) in enumerate(topology.ap_positions):
                    d = ((ax - x) ** 2 + (ay - y) ** 2) ** 0.5
                    if d <= topology.r_trans:
                        trans.add(i)
                    if d <= topology.r_inter:
                        inter.add(i)
                pos = (float(x), float(y))
            else:
                try:
                    trans, inter = set(add["trans"]), set(add["inter"])
                except KeyError as exc:
                    raise ScenarioError("add_user needs trans/inter or position") from exc
                pos = None
            events.append(
                NetworkEvent(
                    slot=slot,
                    add=UserSpec(
                        next_id, frozenset(trans), frozenset(inter),
                        int(add["profile"]), pos,
                    ),
                )
            )
            next_id += 1
        else:
            raise ScenarioError("event must carry remove_user or add_user")
    return events


def resolve_trial(sc: Scenario, trial: int) -> ResolvedTrial:
    """Realize topology, users and profiles for one trial of the scenario."""
    cfg = sc.cache_cfg()
    topo = _resolve_topology(sc, child_rng(sc.master_seed, trial, _USERS))
    n = topo.user_count
    if sc.profile_assignment == "random":
        rng = child_rng(sc.master_seed, trial, _PROFILES, cfg.profile_count)
        profiles = tuple(int(x) for x in rng.integers(1, cfg.profile_count + 1, size=n))
    else:
        profiles = tuple(int(p) for p in sc.profile_assignment)
        if len(profiles) != n:
            raise ScenarioError(
                f"profile_assignment has {len(profiles)} entries for {n} users"
            )
        if any(not 1 <= p <= cfg.profile_count for p in profiles):
            raise ScenarioError("profile labels out of range")
    specs = [
        UserSpec(
            k,
            topo.trans_sets[k],
            topo.inter_sets[k],
            profiles[k],
            topo.user_positions[k] if topo.user_positions else None,
        )
        for k in range(n)
    ]
    return ResolvedTrial(
        trial=trial,
        topology=topo,
        cfg=cfg,
        profiles=profiles,
        user_specs=specs,
        events=_resolve_events(sc, topo),
        sched_rng=child_rng(sc.master_seed, trial, _SCHED),
    )
