"""Shared fixtures: the built-in two-AP network and random instance helpers."""
from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest

from ccsched import coded_cache as cc
from ccsched import scenario as sn
from ccsched.topology import geometric_topology


@pytest.fixture(scope="session")
def two_ap():
    """(topology, cache config, profiles) of the built-in fixture network."""
    return sn.two_ap_topology(), sn.two_ap_cache(), sn.TWO_AP_PROFILES


def random_instance(rng: np.random.Generator, h_max=3, k_max=8, l_max=5):
    """Small random geometric network with every user inside some AP disk."""
    h = int(rng.integers(1, h_max + 1))
    ap_pos = rng.random((h, 2)) * 3.0
    k = int(rng.integers(1, k_max + 1))
    users = []
    for _ in range(k):
        ax, ay = ap_pos[int(rng.integers(h))]
        angle = rng.random() * 2 * np.pi
        radius = np.sqrt(rng.random())
        users.append((ax + radius * np.cos(angle), ay + radius * np.sin(angle)))
    topo = geometric_topology(ap_pos, users, 1.0, 1.2)
    profile_count = int(rng.integers(2, l_max + 1))
    t = int(rng.integers(1, profile_count))
    cfg = cc.cache_config(profile_count, Fraction(t, profile_count))
    profiles = tuple(int(x) for x in rng.integers(1, profile_count + 1, size=k))
    return topo, cfg, profiles
