"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines and timings.
"""
import time
from contextlib import contextmanager
from fractions import Fraction
from itertools import combinations

import numpy as np
import pytest

from ccsched import baselines, coded_cache as cc, dpp, fair_solver as fs
from ccsched import rate_enum as re_, scenario as sn
from ccsched import topology as tp
from conftest import random_instance
from test_rate_enum import TWO_AP_EXPANDED, TWO_AP_MAXIMAL, TWO_AP_REDUCED

TWO_AP_PF_GOODPUT = np.array([0.62, 0.25, 0.42, 0.83, 0.42, 0.42])


@contextmanager
def criterion(number: int, limit_s: float, description: str):
    start = time.perf_counter()
    try:
        yield
    except BaseException:
        elapsed = time.perf_counter() - start
        print(f"ACCEPTANCE {number:2d} FAIL  ({elapsed:6.2f}s) {description}")
        raise
    elapsed = time.perf_counter() - start
    verdict = "PASS" if elapsed < limit_s else "FAIL"
    print(
        f"ACCEPTANCE {number:2d} {verdict}  ({elapsed:6.2f}s, limit {limit_s:g}s) "
        f"{description}"
    )
    assert elapsed < limit_s, f"criterion {number} exceeded its {limit_s}s budget"


def two_ap_atoms():
    topo, cfg, profiles = sn.two_ap_topology(), sn.two_ap_cache(), sn.TWO_AP_PROFILES
    return topo, cfg, profiles, re_.enumerate_rate_vectors(topo, profiles, cfg)


def expanded_two_ap_atoms():
    topo, cfg, profiles, atoms = two_ap_atoms()
    classes = tp.equivalence_classes(topo, profiles)
    return re_.expand_by_equivalence(re_.reduce_by_equivalence(atoms, classes), classes)


def test_criterion_1_table_enumeration():
    with criterion(1, 1.0, "fixture enumeration matches the frozen vectors"):
        topo, cfg, profiles, atoms = two_ap_atoms()
        assert {a.decision.label: a.rates for a in atoms} == TWO_AP_MAXIMAL
        classes = tp.equivalence_classes(topo, profiles)
        reduced = re_.reduce_by_equivalence(atoms, classes)
        assert {a.decision.label: a.rates for a in reduced} == TWO_AP_REDUCED
        expanded = re_.expand_by_equivalence(reduced, classes)
        assert {a.decision.label: a.rates for a in expanded} == TWO_AP_EXPANDED


def test_criterion_2_pf_fixture():
    with criterion(2, 1.0, "static proportional fairness on the fixture"):
        solution = fs.solve_pf(expanded_two_ap_atoms())
        assert np.allclose(solution.goodput, TWO_AP_PF_GOODPUT, atol=0.01)
        geo = fs.metrics(solution.goodput)["geometric_mean"]
        assert abs(geo - 0.46) <= 0.01


def test_criterion_3_hf_fixture():
    with criterion(3, 1.0, "static hard fairness on the fixture"):
        solution = fs.solve_hf(expanded_two_ap_atoms())
        assert np.allclose(solution.goodput, 3 / 7, atol=0.005)
        support = {(p, s): prob for p, s, prob in solution.support()}
        assert set(support) == {(1, 3), (2, 1), (3, 3)}
        assert abs(support[(1, 3)] - 2 / 7) <= 0.005
        assert abs(support[(2, 1)] - 3 / 7) <= 0.005
        assert abs(support[(3, 3)] - 2 / 7) <= 0.005


def _exact_factory(cfg):
    def factory(topology, profiles, ids):
        return re_.ExactWsrmProvider(topology, profiles, cfg)
    return factory


def test_criterion_4_dpp_convergence():
    with criterion(4, 10.0, "drift-plus-penalty converges with an O(1/V) gap"):
        topo, cfg, profiles, atoms = two_ap_atoms()
        optimum = fs.solve_pf(atoms)
        gaps = []
        for v_param in (10, 50, 200):
            run = dpp.run_dpp(
                2, sn.two_ap_user_specs(), cfg, "pf", _exact_factory(cfg),
                v_param=v_param, slots=20_000, record_trace=True,
            )
            if v_param == 200:
                goodput = np.array([run.goodput[u] for u in range(6)])
                assert np.all(np.abs(goodput - optimum.goodput) <= 0.02)
            # steady-state utility over the post-transient half isolates the
            # O(1/V) bound from the warmup bias
            steady = run.trace.inst_rate[10_000:].mean(axis=0)
            gaps.append(optimum.utility - fs.pf_utility(steady))
        assert all(a >= b - 1e-9 for a, b in zip(gaps, gaps[1:]))


def test_criterion_5_dynamic_events():
    with criterion(5, 20.0, "user churn reconverges to the modified optima"):
        cfg = sn.two_ap_cache()
        joiner = dpp.UserSpec(6, frozenset({0, 1}), frozenset({0, 1}), 1)

        # the headline churn scenario: departure at 400, join at 601
        run = dpp.run_dpp(
            2, sn.two_ap_user_specs(), cfg, "pf", _exact_factory(cfg),
            v_param=200, slots=601 + 10_000,
            events=[dpp.NetworkEvent(slot=400, remove=5),
                    dpp.NetworkEvent(slot=601, add=joiner)],
            record_trace=True,
        )
        col = run.trace.user_ids.index(6)
        assert np.isnan(run.trace.inst_rate[:601, col]).all()  # silent before join
        specs3 = sn.two_ap_user_specs()[:5] + [joiner]
        topo3 = tp.adjacency_topology(2, [s.trans for s in specs3],
                                      [s.inter for s in specs3])
        atoms3 = re_.enumerate_rate_vectors(topo3, [s.profile for s in specs3], cfg)
        opt3 = fs.solve_pf(atoms3)
        seg = run.segments[-1]
        assert (seg.start, seg.end) == (601, 10_601)
        averages = np.array([seg.averages[u] for u in (0, 1, 2, 3, 4, 6)])
        assert np.all(np.abs(averages - opt3.goodput) <= 0.03)

        # departure measured over its own 10^4-slot window (the join would cut
        # the window short, so it is exercised in a companion run)
        run2 = dpp.run_dpp(
            2, sn.two_ap_user_specs(), cfg, "pf", _exact_factory(cfg),
            v_param=200, slots=400 + 10_000,
            events=[dpp.NetworkEvent(slot=400, remove=5)],
        )
        specs2 = sn.two_ap_user_specs()[:5]
        topo2 = tp.adjacency_topology(2, [s.trans for s in specs2],
                                      [s.inter for s in specs2])
        atoms2 = re_.enumerate_rate_vectors(topo2, [s.profile for s in specs2], cfg)
        opt2 = fs.solve_pf(atoms2)
        seg2 = run2.segments[-1]
        assert (seg2.start, seg2.end) == (400, 10_400)
        averages2 = np.array([seg2.averages[u] for u in range(5)])
        assert np.all(np.abs(averages2 - opt2.goodput) <= 0.03)


def test_criterion_6_reduced_wsrm_optimality():
    with criterion(6, 30.0, "reduced wsrm equals exhaustive wsrm exactly"):
        rng = np.random.default_rng(2024)
        instances = 0
        while instances < 1000:
            topo, cfg, profiles = random_instance(rng, h_max=3, k_max=8, l_max=5)
            exact = re_.ExactWsrmProvider(topo, profiles, cfg)
            reduced = re_.ReducedWsrmProvider(topo, profiles, cfg)
            for _ in range(4):
                weights = [int(x) for x in rng.integers(0, 100, size=topo.user_count)]
                _, exact_value = exact.select_exact(weights)
                _, _, reduced_value = reduced.select_exact(weights)
                assert exact_value == reduced_value
                instances += 1


def test_criterion_7_combinatorics_oracle():
    with criterion(7, 5.0, "closed-form transmission counts match brute force"):
        for profile_count in range(2, 9):
            for t in range(0, profile_count):
                cfg = cc.cache_config(profile_count, Fraction(t, profile_count))
                for v in range(1, profile_count + 1):
                    real = range(v)
                    extended = list(real) + list(range(v, profile_count))
                    oracle = sum(
                        1
                        for subset in combinations(extended, t + 1)
                        if any(m in real for m in subset)
                    )
                    assert cc.transmissions_needed(cfg, v) == oracle
        for profile_count in range(2, 13):
            for t in range(0, profile_count):
                cfg = cc.cache_config(profile_count, Fraction(t, profile_count))
                gamma = Fraction(t, profile_count)
                assert cc.group_rate(cfg, 1) == 1 / (1 - gamma)


def test_criterion_8_decodability():
    with criterion(8, 10.0, "bit-exact decoding on random groups; corruption fails"):
        rng = np.random.default_rng(8)
        for case in range(500):
            profile_count = int(rng.integers(2, 7))
            t = int(rng.integers(0, profile_count))
            cfg = cc.cache_config(profile_count, Fraction(t, profile_count))
            size = int(rng.integers(1, profile_count + 1))
            labels = sorted(int(x) + 1 for x in
                            rng.choice(profile_count, size=size, replace=False))
            group = [(u, p, 1000 + u) for u, p in enumerate(labels)]
            words = cc.build_codewords(cfg, group)
            chunks = cc.synthetic_chunks(
                cfg, [c for _, _, c in group],
                chunk_size=cfg.subpacket_count * 4, seed=case,
            )
            profile_of = {u: p for u, p, _ in group}
            demand_of = {u: c for u, _, c in group}
            assert cc.verify_decodability(cfg, words, profile_of, demand_of, chunks)
            if case % 10 == 0:
                payloads = [cc.codeword_payload(cfg, w, chunks) for w in words]
                victim = int(rng.integers(len(payloads)))
                corrupted = bytearray(payloads[victim])
                corrupted[int(rng.integers(len(corrupted)))] ^= 0x5A
                payloads[victim] = bytes(corrupted)
                assert not cc.verify_decodability(
                    cfg, words, profile_of, demand_of, chunks, payloads=payloads
                )


def _green_instance():
    rng = np.random.default_rng(42)
    ap_pos = [(0.0, 0.0), (10.0, 0.0), (20.0, 0.0)]
    users = []
    for ax, ay in ap_pos:
        for _ in range(3):
            angle = rng.random() * 2 * np.pi
            radius = 0.5 * np.sqrt(rng.random())
            users.append((ax + radius * np.cos(angle), ay + radius * np.sin(angle)))
    topo = tp.geometric_topology(ap_pos, users, 1.0, 1.2)
    cfg = cc.cache_config(5, "0.2")
    profiles = tuple(int(x) for x in rng.integers(1, 6, size=9))
    return topo, cfg, profiles


def _run_scheduler(name, topo, cfg, profiles, v_param=200, slots=20_000, seed=5):
    def factory(t_, p_, ids):
        if name == "exact":
            return re_.ExactWsrmProvider(t_, p_, cfg)
        if name == "heuristic":
            return dpp.VirtualQueueHeuristicProvider(
                t_, p_, cfg, np.random.default_rng(seed)
            )
        if name == "reuse":
            return baselines.ReuseProvider(t_, p_, cfg, 3)
        if name == "csma":
            return baselines.CsmaProvider(t_, p_, cfg, np.random.default_rng(seed))
        raise ValueError(name)

    specs = [
        dpp.UserSpec(k, topo.trans_sets[k], topo.inter_sets[k], profiles[k])
        for k in range(topo.user_count)
    ]
    return dpp.run_dpp(topo.ap_count, specs, cfg, "pf", factory,
                       v_param=v_param, slots=slots)


def test_criterion_9_green_user_agreement():
    with criterion(9, 30.0, "isolated cells: CSMA matches optimum, reuse is a third"):
        topo, cfg, profiles = _green_instance()
        geo = {}
        for name in ("exact", "csma", "reuse"):
            run = _run_scheduler(name, topo, cfg, profiles)
            goodput = [run.goodput[u] for u in run.user_ids]
            geo[name] = fs.metrics(goodput)["geometric_mean"]
        assert abs(geo["csma"] - geo["exact"]) <= 1e-2
        assert abs(geo["reuse"] - geo["exact"] / 3) <= 0.10 * (geo["exact"] / 3)


@pytest.fixture(scope="module")
def seeded_instances():
    """Twenty reproducible small networks with profile count 5, gamma 1/5."""
    instances = []
    for index in range(20):
        rng = np.random.default_rng(5000 + index)
        h = int(rng.integers(1, 4))
        ap_pos = rng.random((h, 2)) * 3.0
        k = int(rng.integers(3, 9))
        users = []
        for _ in range(k):
            ax, ay = ap_pos[int(rng.integers(h))]
            angle = rng.random() * 2 * np.pi
            radius = np.sqrt(rng.random())
            users.append((ax + radius * np.cos(angle), ay + radius * np.sin(angle)))
        topo = tp.geometric_topology(ap_pos, users, 1.0, 1.2)
        cfg = cc.cache_config(5, "1/5")
        profiles = tuple(int(x) for x in rng.integers(1, 6, size=k))
        instances.append((topo, cfg, profiles))
    return instances


def test_criterion_10_optimum_dominance(seeded_instances):
    with criterion(10, 120.0, "exact scheduler dominates baselines; caching helps"):
        for index, (topo, cfg, profiles) in enumerate(seeded_instances):
            utilities = {}
            for name in ("exact", "heuristic", "csma", "reuse"):
                run = _run_scheduler(name, topo, cfg, profiles, seed=index)
                goodput = np.array([run.goodput[u] for u in run.user_ids])
                utilities[name] = fs.pf_utility(goodput)
            for name in ("heuristic", "csma", "reuse"):
                assert utilities["exact"] >= utilities[name] - 1e-2, (index, name)

            # paired sweep over the cache design: coded vs single-profile
            coded = fs.solve_pf(re_.enumerate_rate_vectors(topo, profiles, cfg))
            uncoded_cfg = cc.cache_config(1, "1/5")
            uncoded = fs.solve_pf(
                re_.enumerate_rate_vectors(
                    topo, tuple(1 for _ in profiles), uncoded_cfg
                )
            )
            assert coded.utility >= uncoded.utility - 1e-9, index


def test_criterion_11_hf_improves_minimum(seeded_instances):
    with criterion(11, 120.0, "hard fairness never lowers the minimum goodput"):
        cases = [two_ap_atoms()[3]] + [
            re_.enumerate_rate_vectors(topo, profiles, cfg)
            for topo, cfg, profiles in seeded_instances
        ]
        for atoms in cases:
            pf = fs.solve_pf(atoms)
            hf = fs.solve_hf(atoms)
            assert hf.utility >= float(np.min(pf.goodput)) - 1e-6
