"""Scheduling decisions, their instantaneous rate vectors, and wsrm selection.

A scheduling decision pairs an AP activation pattern with one feasible
multicast group per active AP (pairwise distinct profiles within a group).
Every member of a group of size v is delivered at the exact rational rate
returned by :func:`ccsched.coded_cache.group_rate`, everyone else gets zero.

Decision ordering convention (the built-in fixture's frozen labels depend on
it): within a
pattern, per-AP groups are ordered by size descending then lexicographically
by their sorted user tuple, and joint decisions run through the Cartesian
product with the lowest-index AP varying slowest.  After dominance pruning the
survivors are renumbered consecutively inside each pattern.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations, product
from typing import Iterable, Mapping, Sequence

import numpy as np

from .coded_cache import CacheConfig, group_rate
from .topology import Topology, active_aps, pattern_count, served_users


class EnumerationCapExceeded(RuntimeError):
    """Decision space too large to enumerate under the configured cap."""

    def __init__(self, estimate: int, cap: int):
        super().__init__(
            f"estimated {estimate} scheduling decisions exceeds cap {cap}"
        )
        self.estimate = estimate
        self.cap = cap


@dataclass(frozen=True)
class Decision:
    """Activation pattern plus one feasible group per active AP."""

    pattern: int
    index: int
    groups: tuple[tuple[int, tuple[int, ...]], ...]  # (ap, users) sorted by ap

    @property
    def label(self) -> tuple[int, int]:
        return (self.pattern, self.index)


@dataclass(frozen=True)
class RateAtom:
    """A decision together with its exact per-user rate vector."""

    decision: Decision
    rates: tuple[Fraction, ...]


def count_decisions_per_ap(group_sizes: Iterable[int]) -> int:
    """Number of nonempty feasible groups one AP can form.

    ``group_sizes`` are the per-profile counts of servable users; each profile
    contributes its users plus the skip option, minus the all-skip selection.
    """
    total = 1
    for n in group_sizes:
        total *= n + 1
    return total - 1


def _profile_buckets(users: Sequence[int], profiles: Sequence[int]) -> dict[int, list[int]]:
    buckets: dict[int, list[int]] = {}
    for u in users:
        buckets.setdefault(profiles[u], []).append(u)
    return buckets


def estimate_decision_count(
    topology: Topology, profiles: Sequence[int], per_pattern: bool = False
):
    """Exact count of joint decisions, before any size pruning."""
    totals = []
    for pattern in range(1, pattern_count(topology.ap_count) + 1):
        n = 1
        for ap in active_aps(pattern, topology.ap_count):
            buckets = _profile_buckets(served_users(topology, pattern, ap), profiles)
            n *= count_decisions_per_ap(len(v) for v in buckets.values())
            if n == 0:
                break
        totals.append(n)
    return totals if per_pattern else sum(totals)


def _ap_group_options(
    buckets: Mapping[int, Sequence[int]], cfg: CacheConfig, prune_sizes: bool
) -> list[tuple[int, ...]]:
    """Feasible groups for one AP, size-descending then lexicographic.

    With pruning, sizes v with L-t <= v < (number of nonempty profiles) are
    skipped: their rate equals the plateau rate, so the full-width group
    dominates them.
    """
    labels = sorted(buckets)
    max_v = len(labels)
    sizes = list(range(max_v, 0, -1))
    if prune_sizes and cfg.replication is not None:
        plateau = cfg.profile_count - cfg.replication
        sizes = [v for v in sizes if not (plateau <= v < max_v)]
    options: list[tuple[int, ...]] = []
    for v in sizes:
        of_size = [
            tuple(sorted(choice))
            for combo in combinations(labels, v)
            for choice in product(*(buckets[p] for p in combo))
        ]
        of_size.sort()
        options.extend(of_size)
    return options


def enumerate_rate_vectors(
    topology: Topology,
    profiles: Sequence[int],
    cfg: CacheConfig,
    *,
    prune_redundant_sizes: bool = True,
    prune_dominated: bool = True,
    cap: int = 10_000_000,
) -> list[RateAtom]:
    """All (maximal) instantaneous rate vectors of the network.

    Patterns in which some active AP can serve nobody are skipped: each of
    their decisions yields the identical vector under the sub-pattern without
    that AP, which carries a lower index.  With ``prune_dominated`` only
    component-wise maximal vectors are kept, deduplicated exactly, the first
    (pattern, position) occurrence winning.
    """
    if len(profiles) != topology.user_count:
        raise ValueError("one profile per user required")
    estimate = estimate_decision_count(topology, profiles)
    if estimate > cap:
        raise EnumerationCapExceeded(estimate, cap)

    n_users = topology.user_count
    zero = Fraction(0)
    rate_of: dict[int, Fraction] = {}

    def rate(v: int) -> Fraction:
        if v not in rate_of:
            rate_of[v] = group_rate(cfg, v)
        return rate_of[v]

    raw: list[tuple[int, tuple[tuple[int, tuple[int, ...]], ...], tuple[Fraction, ...]]] = []
    for pattern in range(1, pattern_count(topology.ap_count) + 1):
        per_ap: list[tuple[int, list[tuple[int, ...]]]] = []
        for ap in active_aps(pattern, topology.ap_count):
            users = served_users(topology, pattern, ap)
            if not users:
                per_ap = []
                break
            per_ap.append(
                (ap, _ap_group_options(_profile_buckets(users, profiles), cfg,
                                       prune_redundant_sizes))
            )
        if not per_ap:
            continue
        aps = [ap for ap, _ in per_ap]
        for combo in product(*(opts for _, opts in per_ap)):
            rates = [zero] * n_users
            for group in combo:
                r = rate(len(group))
                for u in group:
                    rates[u] = r
            raw.append((pattern, tuple(zip(aps, combo)), tuple(rates)))

    # exact dedupe, first occurrence wins
    seen: dict[tuple[Fraction, ...], int] = {}
    unique: list[tuple[int, tuple, tuple[Fraction, ...]]] = []
    for entry in raw:
        if entry[2] not in seen:
            seen[entry[2]] = len(unique)
            unique.append(entry)

    if prune_dominated and unique:
        keep = _maximal_mask([e[2] for e in unique])
        unique = [e for e, k in zip(unique, keep) if k]

    atoms: list[RateAtom] = []
    counter: dict[int, int] = {}
    for pattern, groups, rates in unique:
        counter[pattern] = counter.get(pattern, 0) + 1
        atoms.append(RateAtom(Decision(pattern, counter[pattern], groups), rates))
    return atoms


def _maximal_mask(vectors: Sequence[tuple[Fraction, ...]]) -> np.ndarray:
    """Component-wise maximality over exact rationals.

    Each coordinate takes values from a small set of rationals, so vectors are
    re-coded as ranks into the sorted value list; integer comparisons are then
    exact, unlike floats.
    """
    values = sorted({x for vec in vectors for x in vec})
    rank = {x: i for i, x in enumerate(values)}
    coded = np.array([[rank[x] for x in vec] for vec in vectors], dtype=np.int32)
    n = len(vectors)
    keep = np.ones(n, dtype=bool)
    for i in range(n):
        geq = (coded >= coded[i]).all(axis=1)
        geq[i] = False
        if geq.any():  # deduped, so any dominator is strictly better somewhere
            keep[i] = False
    return keep


# --- equivalence reduction / expansion --------------------------------------

def reduce_by_equivalence(atoms: Sequence[RateAtom], classes) -> list[RateAtom]:
    """Collapse each equivalence class to one coordinate.

    At most one member of a class is served per decision, so the class entry
    is the sum of member entries.  Duplicate reduced vectors merge, keeping
    the first label; survivors are renumbered inside each pattern.
    """
    seen: dict[tuple[Fraction, ...], int] = {}
    reduced: list[tuple[int, tuple, tuple[Fraction, ...]]] = []
    for atom in atoms:
        vec = tuple(
            sum((atom.rates[u] for u in cls), Fraction(0)) for cls in classes.classes
        )
        if vec not in seen:
            seen[vec] = len(reduced)
            reduced.append((atom.decision.pattern, atom.decision.groups, vec))
    out: list[RateAtom] = []
    counter: dict[int, int] = {}
    for pattern, groups, vec in reduced:
        counter[pattern] = counter.get(pattern, 0) + 1
        out.append(RateAtom(Decision(pattern, counter[pattern], groups), vec))
    return out


def expand_by_equivalence(atoms: Sequence[RateAtom], classes) -> list[RateAtom]:
    """Spread each class entry uniformly over the class members.

    A class of size m with representative rate r becomes m equal entries r/m;
    decision labels are preserved.
    """
    total = sum(classes.sizes)
    out = []
    for atom in atoms:
        rates = [Fraction(0)] * total
        for cls, value in zip(classes.classes, atom.rates):
            share = value / len(cls)
            for u in cls:
                rates[u] = share
        out.append(RateAtom(atom.decision, tuple(rates)))
    return out


def atoms_matrix(atoms: Sequence[RateAtom]) -> np.ndarray:
    """Float view of the atom rate vectors, one row per atom."""
    return np.array([[float(x) for x in a.rates] for a in atoms], dtype=float)


# --- weighted sum-rate maximization -----------------------------------------

def best_group(
    candidates: Sequence[int],
    profiles: Sequence[int] | Mapping[int, int],
    weights,
    cfg: CacheConfig,
) -> tuple[tuple[int, ...], object]:
    """Best feasible group of one AP for the given queue weights.

    Keeps the heaviest user per profile, sorts them by weight, and compares
    the prefix groups of each distinct rate level: sizes 1..z-1 plus the full
    candidate set, where z = min(#profiles present, L - t).  For nonnegative
    weights (queues always are) this scan attains the maximum weighted
    sum-rate over *all* feasible subsets of the candidates.  Ties prefer the
    larger group.  Exact when weights are exact.
    """
    heaviest: dict[int, int] = {}
    for u in candidates:
        p = profiles[u]
        cur = heaviest.get(p)
        if cur is None or (weights[u], -u) > (weights[cur], -cur):
            heaviest[p] = u
    cand = sorted(heaviest.values(), key=lambda u: (-weights[u], u))
    if not cand:
        return (), 0
    if cfg.replication is None:
        z = 1
    else:
        z = min(len(cand), cfg.profile_count - cfg.replication)
    sizes = list(range(1, z)) + [len(cand)]
    best: tuple[int, ...] = ()
    best_w = None
    for g in sizes:
        members = cand[:g]
        w = group_rate(cfg, g) * sum(weights[u] for u in members)
        if best_w is None or w > best_w or (w == best_w and g > len(best)):
            best, best_w = tuple(sorted(members)), w
    return best, best_w


def wsrm_scan(atoms: Sequence[RateAtom], weights) -> tuple[RateAtom, object]:
    """Argmax of the weighted sum-rate over an atom list, first max winning."""
    best = None
    best_v = None
    for atom in atoms:
        v = sum(w * r for w, r in zip(weights, atom.rates) if r)
        if best_v is None or v > best_v:
            best, best_v = atom, v
    if best is None:
        raise ValueError("empty atom list")
    return best, best_v


class ExactWsrmProvider:
    """Per-slot wsrm by scanning the enumerated maximal rate vectors.

    Atoms are listed in (pattern, index) order, so taking the first argmax
    realizes the lowest-pattern then lowest-decision tie-break.
    """

    name = "exact"

    def __init__(self, topology: Topology, profiles: Sequence[int],
                 cfg: CacheConfig, cap: int = 10_000_000):
        self.user_count = topology.user_count
        self.atoms = enumerate_rate_vectors(topology, profiles, cfg, cap=cap)
        self.matrix = (
            atoms_matrix(self.atoms)
            if self.atoms
            else np.zeros((0, self.user_count))
        )

    def select(self, queues: np.ndarray, slot: int = 0):
        if not self.atoms:  # nobody servable
            return None, np.zeros(self.user_count)
        scores = self.matrix @ queues
        i = int(np.argmax(scores))
        return self.atoms[i].decision, self.matrix[i]

    def select_exact(self, weights) -> tuple[RateAtom, object]:
        return wsrm_scan(self.atoms, weights)


class ReducedWsrmProvider:
    """Queue-driven wsrm via per-AP best groups, one candidate per pattern.

    Produces the same weighted sum-rate value as the exact scan whenever both
    are feasible; per pattern the work is linear in the active AP count.
    """

    name = "reduced"

    def __init__(self, topology: Topology, profiles: Sequence[int], cfg: CacheConfig):
        self.topology = topology
        self.profiles = tuple(profiles)
        self.cfg = cfg
        self._served: dict[tuple[int, int], tuple[int, ...]] = {}
        for pattern in range(1, pattern_count(topology.ap_count) + 1):
            for ap in active_aps(pattern, topology.ap_count):
                self._served[(pattern, ap)] = served_users(topology, pattern, ap)

    def _pick(self, weights) -> tuple[int, tuple[tuple[int, tuple[int, ...]], ...], object]:
        best_pattern = 1
        best_groups: tuple = ()
        best_value = None
        for pattern in range(1, pattern_count(self.topology.ap_count) + 1):
            value = 0
            groups = []
            for ap in active_aps(pattern, self.topology.ap_count):
                cand = self._served[(pattern, ap)]
                if not cand:
                    continue
                group, w = best_group(cand, self.profiles, weights, self.cfg)
                if group:
                    groups.append((ap, group))
                    value = w + value
            if best_value is None or value > best_value:
                best_pattern, best_groups, best_value = pattern, tuple(groups), value
        return best_pattern, best_groups, best_value

    def _rates(self, groups) -> list[Fraction]:
        rates = [Fraction(0)] * self.topology.user_count
        for _, group in groups:
            r = group_rate(self.cfg, len(group))
            for u in group:
                rates[u] = r
        return rates

    def select(self, queues: np.ndarray, slot: int = 0):
        pattern, groups, _ = self._pick(queues)
        rates = self._rates(groups)
        return (
            Decision(pattern, 1, groups),
            np.array([float(r) for r in rates], dtype=float),
        )

    def select_exact(self, weights):
        pattern, groups, value = self._pick(weights)
        return Decision(pattern, 1, groups), tuple(self._rates(groups)), value
