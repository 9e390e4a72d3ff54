import random
from fractions import Fraction as F

import pytest

from reqgossip.analysis import (
    ClaimError,
    check_rate,
    first_round_gap,
    lib_property_check,
    product_distance_to_average,
    rate_bound,
    track_rounds,
    verify_bound,
)
from reqgossip.engine import IterationRecord, Protocol, init_sim, run, step
from reqgossip.graph import GraphKind, build_graph, generate
from reqgossip.matrices import reconstruct_consistent_sequence, repetitive_completeness_period


def test_round_n2():
    g = build_graph(2, [(1, 2)])
    s = run(init_sim(g, 2, [1, 0]), 1)
    assert track_rounds(s.trace, g).completions[1] == [0]


def test_round_star_protocol_iii(star3):
    s = init_sim(star3, 3, [5, 1, 5], {1: [2, 3], 2: [1], 3: [1]})
    step(s)
    assert track_rounds(s.trace, star3).completions[1] == [0]


def test_rounds_all_equal_protocol_iii():
    g = generate(GraphKind("random-connected", 8, p=0.4, seed=3))
    s = init_sim(g, 3, [F(2)] * 8, queue_seed=4)
    for _ in range(max(g.degree(i) for i in g.vertices)):
        step(s)
    rt = track_rounds(s.trace, g)
    for i in g.vertices:
        assert rt.completions[i] and rt.completions[i][0] < g.degree(i)


def _rec(t, gossips=(), virtual=()):
    return IterationRecord(t, {}, (), (), tuple(gossips), tuple(virtual), 0, ())


def test_first_round_gap_brute(path3):
    rng = random.Random(0)
    pairs = [(1, 2), (2, 3)]
    for _ in range(200):
        trace = [_rec(t, [p for p in pairs if rng.random() < 0.4]) for t in range(12)]
        for length in range(1, 13):
            brute = None
            for s in range(0, 12 - length + 1):
                seen = {i: set() for i in path3.vertices}
                for rec in trace[s:s + length]:
                    for a, b in rec.gossips:
                        seen[a].add(b)
                        seen[b].add(a)
                missing = [i for i in path3.vertices if seen[i] != set(path3.neighbors[i])]
                if missing:
                    brute = s
                    break
            got = first_round_gap(trace, path3, length)
            assert (got[0] if got else None) == brute


def test_verify_protocol_iii_path3(path3):
    s = run(init_sim(path3, 3, [9, 0, 4], queue_seed=1), 40)
    rep = verify_bound(s.trace, path3, "period_edges_m", 3, s.x0)
    assert rep.passed and rep.window == 2 and rep.windows_checked == 39


def test_verify_tree_protocol_ii():
    for seed in range(100):
        g = generate(GraphKind("random-tree", 10, seed=seed))
        rng = random.Random(seed)
        s = run(init_sim(g, 2, [rng.randint(0, 30) for _ in range(10)], queue_seed=seed), 60)
        rep = verify_bound(s.trace, g, "tree_period_n_minus_1", 2, s.x0)
        assert rep.passed, rep.counterexample


def test_verify_contraction_k4():
    g = generate(GraphKind("complete", 4))
    s = run(init_sim(g, 3, [7, 1, 4, 0], queue_seed=2), 60)
    assert verify_bound(s.trace, g, "contraction_4_over_n2", 3, s.x0).passed


def test_verify_claim_protocol_mismatch(path3):
    s = run(init_sim(path3, 2, [1, 2, 3]), 5)
    with pytest.raises(ClaimError):
        verify_bound(s.trace, path3, "lemma_pizza", 2, s.x0)
    with pytest.raises(ClaimError):
        verify_bound(s.trace, path3, "no_such_claim", 2, s.x0)


def test_verify_reports_counterexample(path3):
    # a hand-made trace with an idle iteration fails the progress claim
    trace = [_rec(0, virtual=[(1, 2)]), _rec(1)]
    rep = verify_bound(trace, path3, "lemma_pizza", 3, [F(0)] * 3)
    assert not rep.passed and rep.counterexample == {"t": 1}
    assert rep.to_json()["pass"] is False


def test_rate_bound_values():
    rb = rate_bound(generate(GraphKind("path", 3)))
    assert (rb.rho, rb.m) == (F(5, 9), 2)
    assert rb.per_step == pytest.approx(0.745, abs=1e-3)
    rb = rate_bound(generate(GraphKind("complete", 4)))
    assert (rb.rho, rb.m) == (F(3, 4), 6)
    assert rb.per_step == pytest.approx(0.9532, abs=1e-4)
    g2 = build_graph(2, [(1, 2)])
    assert rate_bound(g2).rho == 0
    s = run(init_sim(g2, 3, [5, 1]), 3)
    assert check_rate(s.trace, g2, s.x0) is None


def test_lib_property_reduces_to_progress():
    rng = random.Random(9)
    for k in range(100):
        g = generate(GraphKind("random-connected", rng.randint(2, 8), p=0.5, seed=k))
        x = [rng.randint(0, 3) for _ in g.vertices]
        queues = {i: rng.sample(g.neighbors[i], len(g.neighbors[i])) for i in g.vertices}
        assert lib_property_check(g, g.edges, x, queues)


def test_lib_property_single_edge():
    rng = random.Random(2)
    for k in range(200):
        g = generate(GraphKind("random-connected", rng.randint(2, 8), p=0.5, seed=k))
        u, v = rng.choice(sorted(g.edges))
        queues = {}
        for i in g.vertices:
            rest = [j for j in g.neighbors[i] if {i, j} != {u, v}]
            rng.shuffle(rest)
            front = [v] if i == u else [u] if i == v else []
            queues[i] = front + rest
        x = [rng.randint(0, 3) for _ in g.vertices]
        assert lib_property_check(g, [(u, v)], x, queues)


def test_lib_property_contract(path3):
    with pytest.raises(ValueError):
        lib_property_check(path3, [], [0, 1, 2], {1: [2], 2: [1, 3], 3: [2]})
    with pytest.raises(ValueError):
        lib_property_check(path3, [(2, 3)], [0, 1, 2], {1: [2], 2: [1, 3], 3: [2]})


def test_products_approach_average():
    # repetitively complete sequences drive P_t...P_1 to (1/n) 11^T
    for seed in range(10):
        g = generate(GraphKind("random-connected", 6, p=0.5, seed=seed))
        s = init_sim(g, 3, [random.Random(seed).randint(0, 9) for _ in range(6)], queue_seed=seed)
        for _ in range(200):
            step(s)
        seq = reconstruct_consistent_sequence(s.trace, g, s.x0)
        assert repetitive_completeness_period(seq, g) <= len(g.edges)
        dist = product_distance_to_average(seq, g.n)
        assert dist[-1] < 1e-6
