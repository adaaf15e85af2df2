"""Cache profiles, subpacketization combinatorics, and XOR codeword construction.

Every video chunk is split into equal subpackets indexed by fixed-size subsets
of the profile labels.  A user storing profile ``l`` caches exactly the
subpackets whose index contains ``l``.  A multicast group of users with
pairwise distinct profiles is then served by XOR codewords, each one subpacket
long, built over the group extended with phantom placeholders for the missing
profiles.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Mapping, Sequence

import numpy as np


def parse_fraction(value) -> Fraction:
    """Coerce ints, strings like ``"1/3"`` or ``"0.2"``, and floats to Fraction.

    Floats are read through their decimal repr, so 0.2 becomes exactly 1/5.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(str(value))
    if isinstance(value, str):
        return Fraction(value)
    raise TypeError(f"cannot interpret {value!r} as a fraction")


@dataclass(frozen=True)
class CacheConfig:
    """Placement parameters for the decentralized profile scheme.

    profile_count   number of distinct cache profiles (users pick one each)
    cache_fraction  fraction of every chunk each user stores
    replication     how many profiles cache each subpacket; None for the
                    uncoded single-profile case, where subset machinery is
                    bypassed entirely
    subpacket_count chunks are split into this many equal subpackets
    """

    profile_count: int
    cache_fraction: Fraction
    replication: int | None
    subpacket_count: int


def cache_config(profile_count: int, cache_fraction) -> CacheConfig:
    """Validate and build a :class:`CacheConfig`.

    For two or more profiles the cache fraction times the profile count must
    be an integer (memory sharing between neighbouring integer points is out
    of scope).  A single profile accepts any rational fraction below 1.
    """
    gamma = parse_fraction(cache_fraction)
    if profile_count < 1:
        raise ValueError("profile_count must be >= 1")
    if not 0 <= gamma <= 1:
        raise ValueError("cache_fraction must lie in [0, 1]")
    if profile_count == 1:
        if gamma == 1:
            raise ValueError("cache_fraction must be < 1 for a single profile")
        return CacheConfig(1, gamma, None, 1)
    replication = gamma * profile_count
    if replication.denominator != 1:
        raise ValueError(
            f"cache_fraction * profile_count = {replication} is not an integer"
        )
    t = int(replication)
    return CacheConfig(profile_count, gamma, t, math.comb(profile_count, t))


def all_subpacket_indices(cfg: CacheConfig) -> list[frozenset[int]]:
    """All subpacket indices in canonical (lexicographic) order."""
    if cfg.replication is None:
        return [frozenset()]
    labels = range(1, cfg.profile_count + 1)
    return [frozenset(s) for s in combinations(labels, cfg.replication)]


def build_profile(cfg: CacheConfig, profile: int) -> set[frozenset[int]]:
    """Subpacket indices cached under the given profile label.

    Returns every index containing ``profile``; the cached share per chunk is
    exactly the configured cache fraction.
    """
    if not 1 <= profile <= cfg.profile_count:
        raise ValueError(f"profile {profile} out of range")
    if cfg.replication is None:
        raise ValueError("single-profile placement has no subpacket structure")
    return {s for s in all_subpacket_indices(cfg) if profile in s}


def uncoded_rate(cache_fraction) -> Fraction:
    """Per-slot delivery rate of one unicast user missing a (1 - gamma) share."""
    gamma = parse_fraction(cache_fraction)
    if not 0 <= gamma < 1:
        raise ValueError("cache_fraction must lie in [0, 1)")
    return 1 / (1 - gamma)


def transmissions_needed(cfg: CacheConfig, group_size: int) -> int:
    """Codeword transmissions serving a whole multicast group of this size.

    Counts the subsets of the phantom-extended group that contain at least one
    real user: C(L, t+1) - C(L-v, t+1).
    """
    if cfg.replication is None:
        raise ValueError("undefined for single-profile placement")
    L, t = cfg.profile_count, cfg.replication
    if not 1 <= group_size <= L:
        raise ValueError(f"group size {group_size} out of range")
    if t >= L:
        raise ValueError("full caching needs no transmissions")
    return math.comb(L, t + 1) - math.comb(L - group_size, t + 1)


def group_rate(cfg: CacheConfig, group_size: int) -> Fraction:
    """Exact chunks-per-slot rate of each member of a multicast group.

    The rate is the subpacket count divided by the transmissions needed; it is
    constant once the group size reaches profile_count - replication.
    """
    if cfg.replication is None:
        if group_size != 1:
            raise ValueError("single-profile placement serves one user at a time")
        return uncoded_rate(cfg.cache_fraction)
    return Fraction(cfg.subpacket_count, transmissions_needed(cfg, group_size))


def assign_profiles_random(
    cfg: CacheConfig, user_count: int, rng: np.random.Generator
) -> tuple[int, ...]:
    """Independently pick one profile per user, uniformly at random."""
    draw = rng.integers(1, cfg.profile_count + 1, size=user_count)
    return tuple(int(x) for x in draw)


@dataclass(frozen=True)
class CodewordPart:
    """One real user's share of a codeword: which subpacket of which chunk."""

    user: int
    chunk: int
    subpacket: frozenset[int]


@dataclass(frozen=True)
class Codeword:
    """XOR of one subpacket per listed user; one subpacket long on air."""

    parts: tuple[CodewordPart, ...]

    @property
    def users(self) -> tuple[int, ...]:
        return tuple(p.user for p in self.parts)


def build_codewords(
    cfg: CacheConfig, group: Sequence[tuple[int, int, int]]
) -> list[Codeword]:
    """Codewords serving a feasible multicast group.

    ``group`` lists (user, profile, requested chunk) with pairwise distinct
    profiles.  The group is extended with phantom users for the missing
    profiles, one preliminary codeword is formed per (replication+1)-subset of
    the extended group, phantom-only codewords are dropped and phantom
    contributions are stripped from the rest.  Codewords are emitted in
    lexicographic order of their profile subsets (all orders are
    rate-equivalent).
    """
    if cfg.replication is None:
        raise ValueError("single-profile placement sends plain unicast subpackets")
    L, t = cfg.profile_count, cfg.replication
    if not 1 <= len(group) <= L:
        raise ValueError("group must contain between 1 and profile_count users")
    by_profile: dict[int, tuple[int, int]] = {}
    for user, profile, chunk in group:
        if not 1 <= profile <= L:
            raise ValueError(f"profile {profile} out of range")
        if profile in by_profile:
            raise ValueError(f"duplicate profile {profile} in multicast group")
        by_profile[profile] = (user, chunk)

    codewords = []
    for label_subset in combinations(range(1, L + 1), t + 1):
        labels = frozenset(label_subset)
        parts = []
        for label in label_subset:
            if label in by_profile:
                user, chunk = by_profile[label]
                parts.append(CodewordPart(user, chunk, labels - {label}))
        if parts:
            codewords.append(Codeword(tuple(parts)))
    return codewords


def synthetic_chunks(
    cfg: CacheConfig, chunk_ids: Iterable[int], chunk_size: int, seed: int = 0
) -> dict[int, bytes]:
    """Deterministic random chunk contents for bit-level decoding checks."""
    if chunk_size % cfg.subpacket_count:
        raise ValueError("chunk size must be divisible by the subpacket count")
    rng = np.random.default_rng(seed)
    return {c: rng.integers(0, 256, size=chunk_size, dtype=np.uint8).tobytes()
            for c in chunk_ids}


def _xor(a: bytes, b: bytes) -> bytes:
    return np.bitwise_xor(
        np.frombuffer(a, dtype=np.uint8), np.frombuffer(b, dtype=np.uint8)
    ).tobytes()


def _subpacket_bytes(
    cfg: CacheConfig, chunks: Mapping[int, bytes], chunk: int, subpacket: frozenset[int]
) -> bytes:
    order = {s: i for i, s in enumerate(all_subpacket_indices(cfg))}
    data = chunks[chunk]
    sub_len = len(data) // cfg.subpacket_count
    pos = order[subpacket]
    return data[pos * sub_len:(pos + 1) * sub_len]


def codeword_payload(
    cfg: CacheConfig, codeword: Codeword, chunks: Mapping[int, bytes]
) -> bytes:
    """On-air bytes of a codeword: XOR of its parts' subpackets."""
    payload = None
    for part in codeword.parts:
        piece = _subpacket_bytes(cfg, chunks, part.chunk, part.subpacket)
        payload = piece if payload is None else _xor(payload, piece)
    assert payload is not None
    return payload


def verify_decodability(
    cfg: CacheConfig,
    codewords: Sequence[Codeword],
    profile_of: Mapping[int, int],
    demand_of: Mapping[int, int],
    chunks: Mapping[int, bytes],
    payloads: Sequence[bytes] | None = None,
) -> bool:
    """Bit-exact decoding check over synthetic chunk bytes.

    True iff every user appearing in the codewords, XOR-ing each received
    codeword with its cached subpackets, recovers exactly the set of missing
    subpackets of its requested chunk.  ``payloads`` may override the on-air
    bytes (e.g. to model corruption); by default they are recomputed from the
    chunks.
    """
    sizes = {len(data) for data in chunks.values()}
    if len(sizes) != 1:
        raise ValueError("all chunks must have equal size")
    (chunk_size,) = sizes
    if chunk_size % cfg.subpacket_count:
        raise ValueError("chunk size must be divisible by the subpacket count")
    if payloads is None:
        payloads = [codeword_payload(cfg, cw, chunks) for cw in codewords]
    if len(payloads) != len(codewords):
        raise ValueError("one payload per codeword required")

    users = {p.user for cw in codewords for p in cw.parts}
    for user in users:
        profile = profile_of[user]
        demand = demand_of[user]
        recovered: dict[frozenset[int], bytes] = {}
        for cw, payload in zip(codewords, payloads):
            mine = [p for p in cw.parts if p.user == user]
            if not mine:
                continue
            (target,) = mine
            if target.chunk != demand:
                return False
            data = payload
            for other in cw.parts:
                if other.user == user:
                    continue
                if profile not in other.subpacket:
                    return False  # not cached: structurally undecodable
                data = _xor(data, _subpacket_bytes(cfg, chunks, other.chunk,
                                                   other.subpacket))
            if target.subpacket in recovered:
                if recovered[target.subpacket] != data:
                    return False
            recovered[target.subpacket] = data
        missing = {s for s in all_subpacket_indices(cfg) if profile not in s}
        if set(recovered) != missing:
            return False
        for subset, data in recovered.items():
            if data != _subpacket_bytes(cfg, chunks, demand, subset):
                return False
    return True
