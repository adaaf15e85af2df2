"""Drift-plus-penalty dynamic scheduling with virtual queues.

Each slot runs three steps against the pre-update backlogs: a closed-form
virtual arrival for the chosen fairness objective, a weighted sum-rate
selection supplied by a pluggable provider (exact scan, reduced per-AP
construction, queue-order heuristic, or a collision-avoidance baseline), and
the backlog update Q <- max(Q - R, 0) + A.  Long-run averages of the served
rates approach the static fairness optimum with an O(1/V) utility gap.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Protocol, Sequence

import numpy as np

from .coded_cache import CacheConfig, group_rate
from .topology import Topology, adjacency_topology

PF = "pf"
HF = "hf"


def a_max_for(cfg: CacheConfig) -> float:
    """Smallest arrival cap whose hypercube contains every rate vector."""
    if cfg.replication is None:
        return float(math.ceil(1 / (1 - cfg.cache_fraction)))
    return float(cfg.subpacket_count)


def arrival_pf(queues: np.ndarray, v_param: float, a_max: float) -> np.ndarray:
    """Closed-form arrivals for the log utility: min(V / Q, A_max) per user."""
    queues = np.asarray(queues, dtype=float)
    ratio = np.full_like(queues, np.inf)
    np.divide(v_param, queues, out=ratio, where=queues > 0)
    return np.minimum(ratio, a_max)


def arrival_hf(queues: np.ndarray, v_param: float, a_max: float) -> np.ndarray:
    """Closed-form arrivals for max-min: all A_max iff V exceeds the backlog sum."""
    if v_param > float(queues.sum()):
        return np.full(queues.shape, a_max, dtype=float)
    return np.zeros_like(queues, dtype=float)


def arrival(objective: str, queues, v_param, a_max) -> np.ndarray:
    if objective == PF:
        return arrival_pf(queues, v_param, a_max)
    if objective == HF:
        return arrival_hf(queues, v_param, a_max)
    raise ValueError(f"unknown objective {objective!r}")


def queue_update(queues: np.ndarray, rates: np.ndarray, arrivals: np.ndarray) -> np.ndarray:
    return np.maximum(queues - rates, 0.0) + arrivals


class RateProvider(Protocol):
    def select(self, queues: np.ndarray, slot: int = 0):
        """Return (decision label, per-user rate array) for these backlogs."""


def dpp_step(
    queues: np.ndarray,
    provider: RateProvider,
    objective: str,
    v_param: float,
    a_max: float,
    slot: int = 0,
):
    """One scheduler iteration; returns (arrivals, decision, rates, new queues)."""
    arrivals = arrival(objective, queues, v_param, a_max)
    decision, rates = provider.select(queues, slot)
    return arrivals, decision, rates, queue_update(queues, rates, arrivals)


# --- virtual-queue heuristic -------------------------------------------------

def vq_heuristic_step(
    topology: Topology,
    profiles: Sequence[int],
    cfg: CacheConfig,
    queues: np.ndarray,
    rng: np.random.Generator,
):
    """Greedy user-to-AP assignment in descending backlog order.

    Users are visited from the largest virtual queue down (ties by index).  A
    user blocked by two or more active APs is skipped.  With exactly one
    active AP in reach, the user joins it only when its profile slot is free
    and the AP's weighted sum-rate does not decrease.  With no active AP in
    interference range, a uniformly random candidate AP that can serve the
    user is switched on.  Every kept assignment removes the user's other
    interfering APs from the candidate pool, so no later activation can
    collide with a scheduled transmission.
    """
    n_users = topology.user_count
    order = sorted(range(n_users), key=lambda u: (-queues[u], u))
    candidates = set(range(topology.ap_count))
    active: set[int] = set()
    pops: dict[int, dict[int, int]] = {}
    wtemp: dict[int, float] = {}
    rate_f: dict[int, float] = {}

    def rate(v: int) -> float:
        if v not in rate_f:
            rate_f[v] = float(group_rate(cfg, v))
        return rate_f[v]

    def wsr(ap: int) -> float:
        members = pops[ap]
        return rate(len(members)) * float(sum(queues[u] for u in members.values()))

    for u in order:
        blockers = [ap for ap in topology.inter_sets[u] if ap in active]
        if len(blockers) == 1:
            ap = blockers[0]
            prof = profiles[u]
            if ap in topology.trans_sets[u] and prof not in pops[ap]:
                pops[ap][prof] = u
                w = wsr(ap)
                if w < wtemp[ap]:
                    del pops[ap][prof]
                else:
                    wtemp[ap] = w
                    for other in topology.inter_sets[u]:
                        if other != ap:
                            candidates.discard(other)
        elif not blockers:
            reach = sorted(topology.trans_sets[u] & candidates)
            if reach:
                ap = reach[int(rng.integers(len(reach)))]
                pops[ap] = {profiles[u]: u}
                wtemp[ap] = wsr(ap)
                active.add(ap)
                for other in topology.inter_sets[u]:
                    if other != ap:
                        candidates.discard(other)

    rates = np.zeros(n_users, dtype=float)
    groups = {}
    for ap in sorted(active):
        members = tuple(sorted(pops[ap].values()))
        groups[ap] = members
        rates[list(members)] = rate(len(members))
    return groups, rates


class VirtualQueueHeuristicProvider:
    """Per-slot rate selection via :func:`vq_heuristic_step`."""

    name = "heuristic"

    def __init__(self, topology: Topology, profiles: Sequence[int],
                 cfg: CacheConfig, rng: np.random.Generator):
        self.topology = topology
        self.profiles = tuple(profiles)
        self.cfg = cfg
        self.rng = rng

    def select(self, queues: np.ndarray, slot: int = 0):
        return vq_heuristic_step(self.topology, self.profiles, self.cfg,
                                 queues, self.rng)


# --- dynamic per-slot loop ----------------------------------------------------

@dataclass(frozen=True)
class UserSpec:
    """A streaming user: reachability sets, profile, optional position."""

    user_id: int
    trans: frozenset[int]
    inter: frozenset[int]
    profile: int
    position: tuple[float, float] | None = None


@dataclass(frozen=True)
class NetworkEvent:
    """User churn applied before the given slot is scheduled."""

    slot: int
    add: UserSpec | None = None
    remove: int | None = None


@dataclass
class SegmentStats:
    """Per-user average rate over one stationary stretch between events."""

    start: int
    end: int
    averages: dict[int, float]


@dataclass
class TraceData:
    user_ids: tuple[int, ...]
    inst_rate: np.ndarray   # slots x users, NaN while absent
    goodput: np.ndarray     # running average since join, NaN before join
    queue: np.ndarray


@dataclass
class DppRun:
    slots: int
    user_ids: tuple[int, ...]
    join_slot: dict[int, int]
    leave_slot: dict[int, int | None]
    goodput: dict[int, float]
    segments: list[SegmentStats]
    final_queues: dict[int, float]
    trace: TraceData | None = None

    def alive_ids(self) -> list[int]:
        return [u for u in self.user_ids if self.leave_slot[u] is None]


ProviderFactory = Callable[[Topology, tuple[int, ...], tuple[int, ...]], RateProvider]


def run_dpp(
    ap_count: int,
    users: Sequence[UserSpec],
    cfg: CacheConfig,
    objective: str,
    provider_factory: ProviderFactory,
    *,
    v_param: float = 50.0,
    slots: int = 20_000,
    a_max: float | None = None,
    events: Sequence[NetworkEvent] = (),
    record_trace: bool = False,
) -> DppRun:
    """Run the scheduler for ``slots`` slots, applying user churn events.

    Joining users start from an empty backlog and their goodput is averaged
    from the join slot; leaving users keep the average accumulated up to the
    departure.  The provider is rebuilt after every event.
    """
    if a_max is None:
        a_max = a_max_for(cfg)
    events = sorted(events, key=lambda e: e.slot)
    for prev, nxt in zip(events, events[1:]):
        if nxt.slot <= prev.slot:
            raise ValueError("event slots must be strictly increasing")

    specs: dict[int, UserSpec] = {}
    join: dict[int, int] = {}
    leave: dict[int, int | None] = {}
    cum: dict[int, float] = {}
    seg_base: dict[int, float] = {}
    order: list[int] = []
    all_ids: list[int] = []

    def admit(spec: UserSpec, slot: int) -> None:
        if spec.user_id in specs:
            raise ValueError(f"user {spec.user_id} already present")
        specs[spec.user_id] = spec
        join[spec.user_id] = slot
        leave[spec.user_id] = None
        cum[spec.user_id] = 0.0
        seg_base[spec.user_id] = 0.0
        all_ids.append(spec.user_id)

    for spec in users:
        admit(spec, 0)

    trace = None
    if record_trace:
        width = len(users) + sum(1 for e in events if e.add is not None)
        trace = TraceData(
            user_ids=(),
            inst_rate=np.full((slots, width), np.nan),
            goodput=np.full((slots, width), np.nan),
            queue=np.full((slots, width), np.nan),
        )

    segments: list[SegmentStats] = []
    seg_start = 0
    queues = np.zeros(len(specs), dtype=float)
    provider: RateProvider | None = None
    pending = list(events)

    def rebuild() -> RateProvider:
        nonlocal order
        order = sorted(specs)
        topo = adjacency_topology(
            ap_count,
            [specs[u].trans for u in order],
            [specs[u].inter for u in order],
        )
        profs = tuple(specs[u].profile for u in order)
        return provider_factory(topo, profs, tuple(order))

    def close_segment(end: int) -> None:
        nonlocal seg_start
        if end > seg_start:
            averages = {
                u: (cum[u] - seg_base[u]) / (end - seg_start) for u in order
            }
            segments.append(SegmentStats(seg_start, end, averages))
        seg_start = end
        for u in order:
            seg_base[u] = cum[u]

    provider = rebuild()
    for slot in range(slots):
        changed = False
        while pending and pending[0].slot == slot:
            event = pending.pop(0)
            close_segment(slot)
            if event.remove is not None:
                if event.remove not in specs:
                    raise ValueError(f"cannot remove absent user {event.remove}")
                leave[event.remove] = slot
                del specs[event.remove]
            if event.add is not None:
                admit(event.add, slot)
            changed = True
        if changed:
            old_q = {u: q for u, q in zip(order, queues)}
            provider = rebuild()
            queues = np.array([old_q.get(u, 0.0) for u in order], dtype=float)

        arrivals, _, rates, new_q = dpp_step(
            queues, provider, objective, v_param, a_max, slot
        )
        for idx, u in enumerate(order):
            cum[u] += float(rates[idx])
        if trace is not None:
            col_of = {u: i for i, u in enumerate(all_ids)}
            for idx, u in enumerate(order):
                col = col_of[u]
                trace.inst_rate[slot, col] = rates[idx]
                trace.goodput[slot, col] = cum[u] / (slot - join[u] + 1)
                trace.queue[slot, col] = queues[idx]
        queues = new_q

    close_segment(slots)
    if trace is not None:
        trace.user_ids = tuple(all_ids)

    goodput = {}
    for u in all_ids:
        end = leave[u] if leave[u] is not None else slots
        lifetime = end - join[u]
        goodput[u] = cum[u] / lifetime if lifetime else 0.0
    return DppRun(
        slots=slots,
        user_ids=tuple(all_ids),
        join_slot=join,
        leave_slot=leave,
        goodput=goodput,
        segments=segments,
        final_queues={u: float(q) for u, q in zip(order, queues)},
        trace=trace,
    )
