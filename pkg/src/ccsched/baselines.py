"""Collision-avoidance baseline schedulers.

Both baselines run inside the unchanged drift-plus-penalty loop and only
replace the rate-selection step.  By construction they never let a served
user fall inside a second active AP's interference radius, so the weighted
sum-rate maximization decouples into independent per-AP group selections.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .coded_cache import CacheConfig, group_rate
from .rate_enum import best_group
from .topology import ColoringResult, Topology, reuse_coloring


def _assemble(topology: Topology, cfg: CacheConfig, groups: dict) -> np.ndarray:
    rates = np.zeros(topology.user_count, dtype=float)
    for members in groups.values():
        r = float(group_rate(cfg, len(members)))
        rates[list(members)] = r
    return rates


def reuse_step(
    topology: Topology,
    profiles: Sequence[int],
    cfg: CacheConfig,
    queues: np.ndarray,
    colors: Sequence[int],
    factor: int,
    slot: int,
):
    """One slot of round-robin channel reuse.

    All APs of the current color are on; each serves the best group among the
    users it reaches that no other same-phase AP interferes with.
    """
    color_now = slot % factor + 1
    phase_aps = [ap for ap in range(topology.ap_count) if colors[ap] == color_now]
    on = set(phase_aps)
    groups: dict[int, tuple[int, ...]] = {}
    for ap in phase_aps:
        others = on - {ap}
        cand = [
            u
            for u in range(topology.user_count)
            if ap in topology.trans_sets[u] and not (topology.inter_sets[u] & others)
        ]
        group, _ = best_group(cand, profiles, queues, cfg)
        if group:
            groups[ap] = group
    return groups, _assemble(topology, cfg, groups)


class ReuseProvider:
    """Reuse-with-queue-update baseline: color phases cycle with the slot index."""

    name = "reuse"

    def __init__(
        self,
        topology: Topology,
        profiles: Sequence[int],
        cfg: CacheConfig,
        factor: int = 3,
        coloring: ColoringResult | None = None,
    ):
        if coloring is None:
            coloring = reuse_coloring(topology, factor)
        if not coloring.ok:
            raise ValueError(
                f"greedy coloring needs {coloring.colors_used} colors; "
                f"raise the reuse factor above {factor}"
            )
        self.topology = topology
        self.profiles = tuple(profiles)
        self.cfg = cfg
        self.factor = factor
        self.colors = coloring.colors

    def select(self, queues: np.ndarray, slot: int = 0):
        return reuse_step(
            self.topology, self.profiles, self.cfg, queues, self.colors,
            self.factor, slot,
        )


def csma_step(
    topology: Topology,
    profiles: Sequence[int],
    cfg: CacheConfig,
    queues: np.ndarray,
    rng: np.random.Generator,
):
    """One slot of the idealized CSMA contention.

    Each AP draws an exponential timer; APs wake in timer order and activate
    only if doing so would not place an already-served user inside their
    interference radius.  An AP with no eligible users leaves the channel
    alone.  Groups are fixed at activation time.
    """
    timers = rng.exponential(1.0, size=topology.ap_count)
    active: set[int] = set()
    protected: set[int] = set()
    groups: dict[int, tuple[int, ...]] = {}
    for ap in np.argsort(timers, kind="stable"):
        ap = int(ap)
        if any(ap in topology.inter_sets[u] for u in protected):
            continue
        cand = [
            u
            for u in range(topology.user_count)
            if ap in topology.trans_sets[u]
            and not (topology.inter_sets[u] & active)
        ]
        group, _ = best_group(cand, profiles, queues, cfg)
        if not group:
            continue
        groups[ap] = group
        active.add(ap)
        protected.update(group)
    return groups, _assemble(topology, cfg, groups)


class CsmaProvider:
    """CSMA-inspired queue update: fresh timers each slot from the trial RNG."""

    name = "csma"

    def __init__(self, topology: Topology, profiles: Sequence[int],
                 cfg: CacheConfig, rng: np.random.Generator):
        self.topology = topology
        self.profiles = tuple(profiles)
        self.cfg = cfg
        self.rng = rng

    def select(self, queues: np.ndarray, slot: int = 0):
        return csma_step(self.topology, self.profiles, self.cfg, queues, self.rng)
