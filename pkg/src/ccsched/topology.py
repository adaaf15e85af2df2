"""Multi-AP network layout and collision-model reachability.

A user decodes an AP's transmission only if it sits within that AP's
transmission radius and no *other* active AP covers it within its interference
radius.  Topologies can be geometric (positions plus radii) or purely
adjacency-based (explicit per-user AP sets), the latter letting fixture
networks be encoded exactly from their reachability behaviour.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

GEOMETRIC = "geometric"
ADJACENCY = "adjacency"


@dataclass(frozen=True)
class Topology:
    """Immutable AP/user layout with precomputed reachability sets.

    For every user the set of APs that can serve it (``trans_sets``) is
    contained in the set of APs whose activity blocks it (``inter_sets``).
    Boundary distances count as inside.
    """

    ap_count: int
    trans_sets: tuple[frozenset[int], ...]
    inter_sets: tuple[frozenset[int], ...]
    mode: str = ADJACENCY
    ap_positions: tuple[tuple[float, float], ...] | None = None
    user_positions: tuple[tuple[float, float], ...] | None = None
    r_trans: float | None = None
    r_inter: float | None = None
    hex_axial: tuple[tuple[int, int], ...] | None = None

    def __post_init__(self):
        if len(self.trans_sets) != len(self.inter_sets):
            raise ValueError("per-user set lists must have equal length")
        for k, (ts, its) in enumerate(zip(self.trans_sets, self.inter_sets)):
            if not ts <= its:
                raise ValueError(f"user {k}: trans_set must be a subset of inter_set")
            for ap in its:
                if not 0 <= ap < self.ap_count:
                    raise ValueError(f"user {k}: AP index {ap} out of range")

    @property
    def user_count(self) -> int:
        return len(self.trans_sets)

    def trans_set(self, user: int) -> frozenset[int]:
        return self.trans_sets[user]

    def inter_set(self, user: int) -> frozenset[int]:
        return self.inter_sets[user]


def _reach_sets(ap_positions, user_positions, r_trans, r_inter):
    trans, inter = [], []
    for ux, uy in user_positions:
        ts, its = set(), set()
        for i, (ax, ay) in enumerate(ap_positions):
            d = math.hypot(ax - ux, ay - uy)
            if d <= r_trans:
                ts.add(i)
            if d <= r_inter:
                its.add(i)
        trans.append(frozenset(ts))
        inter.append(frozenset(its))
    return tuple(trans), tuple(inter)


def geometric_topology(
    ap_positions: Sequence[Sequence[float]],
    user_positions: Sequence[Sequence[float]],
    r_trans: float,
    r_inter: float,
    hex_axial: Sequence[tuple[int, int]] | None = None,
) -> Topology:
    if r_trans <= 0 or r_inter < r_trans:
        raise ValueError("need 0 < r_trans <= r_inter")
    aps = tuple((float(x), float(y)) for x, y in ap_positions)
    users = tuple((float(x), float(y)) for x, y in user_positions)
    trans, inter = _reach_sets(aps, users, r_trans, r_inter)
    return Topology(
        ap_count=len(aps),
        trans_sets=trans,
        inter_sets=inter,
        mode=GEOMETRIC,
        ap_positions=aps,
        user_positions=users,
        r_trans=float(r_trans),
        r_inter=float(r_inter),
        hex_axial=tuple(hex_axial) if hex_axial is not None else None,
    )


def adjacency_topology(
    ap_count: int,
    trans_sets: Sequence[Iterable[int]],
    inter_sets: Sequence[Iterable[int]],
) -> Topology:
    return Topology(
        ap_count=ap_count,
        trans_sets=tuple(frozenset(s) for s in trans_sets),
        inter_sets=tuple(frozenset(s) for s in inter_sets),
        mode=ADJACENCY,
    )


def to_adjacency(topology: Topology) -> Topology:
    """Forget positions, keeping only the reachability sets."""
    return Topology(
        ap_count=topology.ap_count,
        trans_sets=topology.trans_sets,
        inter_sets=topology.inter_sets,
        mode=ADJACENCY,
    )


def build_hex_grid(
    rings: int,
    hex_radius: float,
    *,
    r_trans: float = 1.0,
    r_inter: float = 1.2,
    max_aps: int | None = None,
) -> Topology:
    """APs at the centers of a hexagonal grid, no users yet.

    ``rings`` counts the rings around the central hexagon (0 gives a single
    AP); neighbouring centers sit at distance hex_radius * sqrt(3).  Cells are
    ordered by ring then angle so ``max_aps`` truncates deterministically from
    the center outwards.
    """
    if rings < 0:
        raise ValueError("rings must be >= 0")
    if hex_radius <= 0:
        raise ValueError("hex_radius must be > 0")
    step = hex_radius * math.sqrt(3.0)
    v1 = (step, 0.0)
    v2 = (step / 2.0, step * math.sqrt(3.0) / 2.0)
    cells = []
    for a in range(-rings, rings + 1):
        for b in range(-rings, rings + 1):
            if max(abs(a), abs(b), abs(a + b)) > rings:
                continue
            x = a * v1[0] + b * v2[0]
            y = a * v1[1] + b * v2[1]
            ring = max(abs(a), abs(b), abs(a + b))
            angle = math.atan2(y, x) % (2 * math.pi) if ring else 0.0
            cells.append((ring, angle, (a, b), (x, y)))
    cells.sort(key=lambda c: (c[0], c[1]))
    if max_aps is not None:
        cells = cells[:max_aps]
    return geometric_topology(
        [c[3] for c in cells], [], r_trans, r_inter, hex_axial=[c[2] for c in cells]
    )


def union_disk_area(topology: Topology, resolution: int = 600) -> float:
    """Grid estimate of the area covered by the transmission disks."""
    if topology.mode != GEOMETRIC or not topology.ap_positions:
        raise ValueError("geometric topology with APs required")
    aps = np.asarray(topology.ap_positions)
    r = topology.r_trans
    lo = aps.min(axis=0) - r
    hi = aps.max(axis=0) + r
    xs = np.linspace(lo[0], hi[0], resolution)
    ys = np.linspace(lo[1], hi[1], resolution)
    gx, gy = np.meshgrid(xs, ys)
    covered = np.zeros(gx.shape, dtype=bool)
    for ax, ay in aps:
        covered |= (gx - ax) ** 2 + (gy - ay) ** 2 <= r * r
    cell = (xs[1] - xs[0]) * (ys[1] - ys[0])
    return float(covered.sum() * cell)


def density_for_expected_users(topology: Topology, expected_users: float) -> float:
    """Point-process density giving the requested mean user count."""
    return expected_users / union_disk_area(topology)


def sample_users_ppp(
    topology: Topology, density: float, rng: np.random.Generator | int
) -> Topology:
    """Homogeneous Poisson user placement restricted to the transmission area.

    Implemented by thinning a PPP over the bounding box of the disks, so the
    expected count is density times the union area.  Deterministic for a given
    generator state.
    """
    if topology.mode != GEOMETRIC:
        raise ValueError("PPP sampling needs a geometric topology")
    if density < 0:
        raise ValueError("density must be >= 0")
    if isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(int(rng))
    aps = np.asarray(topology.ap_positions)
    r = topology.r_trans
    lo = aps.min(axis=0) - r
    hi = aps.max(axis=0) + r
    box_area = float((hi[0] - lo[0]) * (hi[1] - lo[1]))
    n = int(rng.poisson(density * box_area)) if density > 0 else 0
    pts = lo + rng.random((n, 2)) * (hi - lo)
    if n:
        inside = np.zeros(n, dtype=bool)
        for ax, ay in aps:
            inside |= (pts[:, 0] - ax) ** 2 + (pts[:, 1] - ay) ** 2 <= r * r
        pts = pts[inside]
    return geometric_topology(
        topology.ap_positions,
        [tuple(p) for p in pts],
        topology.r_trans,
        topology.r_inter,
        hex_axial=topology.hex_axial,
    )


def with_explicit_users(topology: Topology, user_positions) -> Topology:
    if topology.mode != GEOMETRIC:
        raise ValueError("explicit user positions need a geometric topology")
    return geometric_topology(
        topology.ap_positions, user_positions, topology.r_trans, topology.r_inter,
        hex_axial=topology.hex_axial,
    )


# --- activation patterns -------------------------------------------------
#
# Pattern j in [1, 2^H - 1]; bit i of j set means AP i transmits.  With H=2
# this makes j=1 the first-AP-only pattern, j=2 the second, j=3 both.

def pattern_count(ap_count: int) -> int:
    return (1 << ap_count) - 1


def active_aps(pattern: int, ap_count: int) -> tuple[int, ...]:
    if not 1 <= pattern <= pattern_count(ap_count):
        raise ValueError(f"pattern {pattern} out of range for {ap_count} APs")
    return tuple(i for i in range(ap_count) if pattern >> i & 1)


def pattern_of(aps: Iterable[int]) -> int:
    bits = 0
    for i in aps:
        bits |= 1 << i
    if not bits:
        raise ValueError("at least one AP must be active")
    return bits


def served_users(topology: Topology, pattern: int, ap: int) -> tuple[int, ...]:
    """Users AP ``ap`` can serve under the pattern: reachable and unblocked."""
    active = frozenset(active_aps(pattern, topology.ap_count))
    if ap not in active:
        raise ValueError(f"AP {ap} is not active in pattern {pattern}")
    out = []
    for u in range(topology.user_count):
        if ap in topology.trans_sets[u] and not (
            topology.inter_sets[u] & active - {ap}
        ):
            out.append(u)
    return tuple(out)


# --- equivalence classes --------------------------------------------------

@dataclass(frozen=True)
class EquivalenceClasses:
    """Partition of users interchangeable in every scheduling decision."""

    classes: tuple[tuple[int, ...], ...]

    @property
    def representatives(self) -> tuple[int, ...]:
        return tuple(c[0] for c in self.classes)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(len(c) for c in self.classes)

    def class_of(self) -> dict[int, int]:
        return {u: i for i, cls in enumerate(self.classes) for u in cls}


def equivalence_classes(
    topology: Topology, profiles: Sequence[int]
) -> EquivalenceClasses:
    """Group users with identical profile, trans_set and inter_set."""
    if len(profiles) != topology.user_count:
        raise ValueError("one profile per user required")
    buckets: dict[tuple, list[int]] = {}
    for u in range(topology.user_count):
        key = (profiles[u], topology.trans_sets[u], topology.inter_sets[u])
        buckets.setdefault(key, []).append(u)
    classes = sorted((tuple(sorted(v)) for v in buckets.values()), key=lambda c: c[0])
    return EquivalenceClasses(tuple(classes))


# --- spatial reuse coloring ------------------------------------------------

@dataclass(frozen=True)
class ColoringResult:
    colors: tuple[int, ...]  # 1-based color per AP
    ok: bool
    colors_used: int


def ap_conflict_pairs(topology: Topology) -> set[tuple[int, int]]:
    """AP pairs that may not share a reuse color.

    Geometric mode uses disk overlap (some user position could fall within the
    interference radius of both); adjacency mode uses the users actually
    present.
    """
    pairs: set[tuple[int, int]] = set()
    if topology.mode == GEOMETRIC and topology.ap_positions:
        limit = 2.0 * topology.r_inter
        for i in range(topology.ap_count):
            for j in range(i + 1, topology.ap_count):
                xi, yi = topology.ap_positions[i]
                xj, yj = topology.ap_positions[j]
                if math.hypot(xi - xj, yi - yj) <= limit:
                    pairs.add((i, j))
    else:
        for its in topology.inter_sets:
            aps = sorted(its)
            for a in range(len(aps)):
                for b in range(a + 1, len(aps)):
                    pairs.add((aps[a], aps[b]))
    return pairs


def reuse_coloring(topology: Topology, factor: int) -> ColoringResult:
    """Color APs so conflicting ones never share a color, using <= factor colors.

    Hexagonal grids take the canonical lattice 3-coloring whenever it is valid
    for the interference radius; otherwise a greedy pass in AP order is used
    and failure is reported if it needs more than ``factor`` colors.
    """
    if factor < 1:
        raise ValueError("reuse factor must be >= 1")
    if topology.hex_axial is not None and factor >= 3 and topology.r_inter is not None:
        # canonical lattice coloring: same-color cells sit >= 3 * hex_radius apart
        hex_radius = None
        if len(topology.hex_axial) >= 2 and topology.ap_positions:
            (x0, y0), (x1, y1) = topology.ap_positions[0], topology.ap_positions[1]
            hex_radius = math.hypot(x1 - x0, y1 - y0) / math.sqrt(3.0)
        if hex_radius is None or 3.0 * hex_radius > 2.0 * topology.r_inter:
            colors = tuple((a - b) % 3 + 1 for a, b in topology.hex_axial)
            return ColoringResult(colors, True, len(set(colors)))

    conflicts = ap_conflict_pairs(topology)
    neighbors: dict[int, set[int]] = {i: set() for i in range(topology.ap_count)}
    for i, j in conflicts:
        neighbors[i].add(j)
        neighbors[j].add(i)
    colors = [0] * topology.ap_count
    for i in range(topology.ap_count):
        taken = {colors[j] for j in neighbors[i] if colors[j]}
        c = 1
        while c in taken:
            c += 1
        colors[i] = c
    used = max(colors) if colors else 0
    return ColoringResult(tuple(colors), used <= factor, used)


# --- JSON ------------------------------------------------------------------

def topology_to_dict(topology: Topology) -> dict:
    if topology.mode == GEOMETRIC:
        return {
            "mode": GEOMETRIC,
            "aps": [list(p) for p in topology.ap_positions or ()],
            "users": [list(p) for p in topology.user_positions or ()],
            "r_trans": topology.r_trans,
            "r_inter": topology.r_inter,
        }
    return {
        "mode": ADJACENCY,
        "aps": topology.ap_count,
        "users": {
            "trans": [sorted(s) for s in topology.trans_sets],
            "inter": [sorted(s) for s in topology.inter_sets],
        },
    }


def topology_from_dict(doc: Mapping) -> Topology:
    mode = doc.get("mode", GEOMETRIC)
    if mode == GEOMETRIC:
        return geometric_topology(
            doc["aps"], doc.get("users", []), doc["r_trans"], doc["r_inter"]
        )
    if mode == ADJACENCY:
        users = doc.get("users", {"trans": [], "inter": []})
        aps = doc["aps"]
        ap_count = aps if isinstance(aps, int) else len(aps)
        return adjacency_topology(ap_count, users["trans"], users["inter"])
    raise ValueError(f"unknown topology mode {mode!r}")


def load_topology(path) -> Topology:
    with open(path, "r", encoding="utf-8") as fh:
        return topology_from_dict(json.load(fh))


def save_topology(topology: Topology, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(topology_to_dict(topology), fh, indent=2)
