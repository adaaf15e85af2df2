"""Reachability, hex grids, PPP sampling, equivalence, and reuse coloring."""
import math

import numpy as np
import pytest

from ccsched import topology as tp
from ccsched import scenario as sn
from conftest import random_instance


def test_hex_grid_sizes_and_spacing():
    single = tp.build_hex_grid(0, 1.0)
    assert single.ap_count == 1
    assert single.ap_positions[0] == (0.0, 0.0)

    seven = tp.build_hex_grid(1, 1.0)
    assert seven.ap_count == 7
    center = np.array(seven.ap_positions[0])
    for pos in seven.ap_positions[1:]:
        assert math.dist(center, pos) == pytest.approx(math.sqrt(3.0))

    assert tp.build_hex_grid(2, 0.5).ap_count == 19
    assert tp.build_hex_grid(2, 1.0, max_aps=10).ap_count == 10


def test_geometric_boundary_counts_as_inside():
    topo = tp.geometric_topology([(0, 0)], [(1.0, 0.0), (1.2, 0.0)], 1.0, 1.2)
    assert topo.trans_sets[0] == frozenset({0})
    assert topo.trans_sets[1] == frozenset()
    assert topo.inter_sets[1] == frozenset({0})


def test_trans_subset_of_inter_enforced():
    with pytest.raises(ValueError):
        tp.adjacency_topology(2, [{0, 1}], [{0}])


def test_ppp_density_zero_and_determinism():
    grid = tp.build_hex_grid(1, 1.0)
    assert tp.sample_users_ppp(grid, 0.0, 1).user_count == 0
    a = tp.sample_users_ppp(grid, 3.0, 123)
    b = tp.sample_users_ppp(grid, 3.0, 123)
    assert a.user_positions == b.user_positions


def test_ppp_users_lie_in_transmission_area():
    grid = tp.build_hex_grid(2, 1.0, max_aps=10)
    density = tp.density_for_expected_users(grid, 200)
    topo = tp.sample_users_ppp(grid, density, 7)
    assert topo.user_count > 0
    assert all(ts for ts in topo.trans_sets)
    # mean count roughly matches the requested expectation
    counts = [tp.sample_users_ppp(grid, density, seed).user_count for seed in range(30)]
    assert abs(np.mean(counts) - 200) < 20


def test_served_users_two_ap(two_ap):
    topo, _, _ = two_ap
    assert tp.served_users(topo, 0b11, 0) == (0,)
    assert tp.served_users(topo, 0b10, 1) == (2, 3, 4, 5)
    assert tp.served_users(topo, 0b01, 0) == (0, 1, 2)
    with pytest.raises(ValueError):
        tp.served_users(topo, 0b01, 1)


def test_single_active_ap_serves_whole_disk():
    rng = np.random.default_rng(0)
    for _ in range(20):
        topo, _, _ = random_instance(rng)
        for ap in range(topo.ap_count):
            pattern = 1 << ap
            expected = tuple(
                u for u in range(topo.user_count) if ap in topo.trans_sets[u]
            )
            assert tp.served_users(topo, pattern, ap) == expected


def test_served_users_exclusive_per_pattern():
    rng = np.random.default_rng(1)
    for _ in range(30):
        topo, _, _ = random_instance(rng)
        for pattern in range(1, tp.pattern_count(topo.ap_count) + 1):
            seen = set()
            for ap in tp.active_aps(pattern, topo.ap_count):
                served = tp.served_users(topo, pattern, ap)
                assert not (seen & set(served))
                seen |= set(served)


def test_geometric_adjacency_round_trip():
    rng = np.random.default_rng(2)
    for _ in range(30):
        topo, _, _ = random_instance(rng)
        flat = tp.to_adjacency(topo)
        for pattern in range(1, tp.pattern_count(topo.ap_count) + 1):
            for ap in tp.active_aps(pattern, topo.ap_count):
                assert tp.served_users(topo, pattern, ap) == tp.served_users(
                    flat, pattern, ap
                )


def test_interference_is_monotone():
    rng = np.random.default_rng(3)
    for _ in range(30):
        topo, _, _ = random_instance(rng)
        full = tp.pattern_count(topo.ap_count)
        for pattern in range(1, full + 1):
            for extra in range(topo.ap_count):
                bigger = pattern | (1 << extra)
                if bigger == pattern:
                    continue
                for ap in tp.active_aps(pattern, topo.ap_count):
                    before = set(tp.served_users(topo, pattern, ap))
                    after = set(tp.served_users(topo, bigger, ap))
                    assert after <= before


def test_equivalence_classes_two_ap(two_ap):
    topo, _, profiles = two_ap
    classes = tp.equivalence_classes(topo, profiles)
    assert classes.classes == ((0,), (1,), (2,), (3,), (4, 5))
    assert classes.representatives == (0, 1, 2, 3, 4)
    assert classes.sizes == (1, 1, 1, 1, 2)


def test_equivalence_all_distinct_profiles():
    topo = sn.two_ap_topology()
    classes = tp.equivalence_classes(topo, (1, 2, 3, 4, 5, 6))
    assert all(size == 1 for size in classes.sizes)


def test_equivalence_colocated_users():
    topo = tp.geometric_topology([(0, 0)], [(0.1, 0), (0.1, 0)], 1.0, 1.2)
    classes = tp.equivalence_classes(topo, (2, 2))
    assert classes.classes == ((0, 1),)


def test_reuse_coloring_hex():
    grid = tp.build_hex_grid(1, 1.0)
    result = tp.reuse_coloring(grid, 3)
    assert result.ok and result.colors_used <= 3
    conflicts = tp.ap_conflict_pairs(grid)
    for i, j in conflicts:
        assert result.colors[i] != result.colors[j]
    # the center conflicts with all six neighbours
    assert all(result.colors[0] != result.colors[i] for i in range(1, 7))


def test_reuse_coloring_trivial_cases():
    one = tp.build_hex_grid(0, 1.0)
    assert tp.reuse_coloring(one, 1).colors == (1,)
    far = tp.geometric_topology([(0, 0), (10, 0)], [], 1.0, 1.2)
    result = tp.reuse_coloring(far, 1)
    assert result.ok and result.colors == (1, 1)


def test_reuse_coloring_reports_failure():
    # three mutually conflicting APs cannot take two colors
    tight = tp.geometric_topology([(0, 0), (1, 0), (0.5, 0.8)], [], 1.0, 1.2)
    result = tp.reuse_coloring(tight, 2)
    assert not result.ok and result.colors_used == 3


def test_topology_json_round_trip(tmp_path, two_ap):
    topo, _, _ = two_ap
    path = tmp_path / "topo.json"
    tp.save_topology(topo, path)
    loaded = tp.load_topology(path)
    assert loaded.trans_sets == topo.trans_sets
    assert loaded.inter_sets == topo.inter_sets

    geo = tp.build_hex_grid(1, 1.0)
    geo = tp.sample_users_ppp(geo, 1.0, 5)
    tp.save_topology(geo, path)
    loaded = tp.load_topology(path)
    assert loaded.trans_sets == geo.trans_sets
    assert np.allclose(loaded.user_positions, geo.user_positions)
