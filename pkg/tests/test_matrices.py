import itertools
from fractions import Fraction as F

import pytest
from hypothesis import given, settings

from reqgossip.engine import IterationRecord, Protocol, init_sim, run, step
from reqgossip.graph import GraphKind, build_graph, generate
from reqgossip.matrices import (
    ConsistencyError,
    NotACliqueError,
    NotAdjacentError,
    OverlapError,
    generalized_primitive,
    identity,
    identity_primitive,
    induced_graph,
    is_complete,
    is_doubly_stochastic,
    iteration_matrix,
    matmul,
    matvec,
    multi_primitive,
    reconstruct_consistent_sequence,
    repetitive_completeness_period,
    sequence_product,
    single_primitive,
)

from conftest import gossip_instances

H = F(1, 2)


def brute_period(seq, g):
    # scan every T and every window; independent of the bisection
    for T in range(1, len(seq) + 1):
        if all(is_complete(seq[s:s + T], g) for s in range(len(seq) - T + 1)):
            return T
    return None


def test_single_primitive_entries(path3):
    p = single_primitive(path3, 1, 2)
    assert p.entries == ((H, H, 0), (H, H, 0), (0, 0, 1))
    assert is_doubly_stochastic(p.entries)
    assert matmul(p.entries, p.entries) == p.entries


def test_identity_primitive(path3):
    assert identity_primitive(path3).entries == identity(3)
    assert induced_graph(identity_primitive(path3), path3).edges == frozenset()


def test_single_primitive_rejects_non_edge(path3):
    with pytest.raises(NotAdjacentError):
        single_primitive(path3, 1, 3)


def test_generalized_primitive():
    k3 = generate(GraphKind("complete", 3))
    assert generalized_primitive(k3, {1, 2}).entries == single_primitive(k3, 1, 2).entries
    t = generalized_primitive(k3, {1, 2, 3})
    assert all(v == F(1, 3) for row in t.entries for v in row)
    assert matvec(t.entries, [F(5)] * 3) == (5, 5, 5)
    assert induced_graph(t, k3).edges == k3.edges
    assert matmul(t.entries, t.entries) == t.entries


def test_generalized_primitive_errors(path3):
    with pytest.raises(NotACliqueError):
        generalized_primitive(path3, {1, 3})
    with pytest.raises(NotACliqueError):
        generalized_primitive(path3, {1})


def test_multi_primitive():
    c4 = generate(GraphKind("cycle", 4))
    m = multi_primitive(c4, [{1, 2}, {3, 4}])
    assert m.entries == ((H, H, 0, 0), (H, H, 0, 0), (0, 0, H, H), (0, 0, H, H))
    direct = matmul(single_primitive(c4, 1, 2).entries, single_primitive(c4, 3, 4).entries)
    assert m.entries == direct
    assert multi_primitive(c4, [{3, 4}, {1, 2}]).entries == m.entries
    with pytest.raises(OverlapError):
        multi_primitive(c4, [{1, 2}, {2, 3}])


def test_disjoint_factors_commute():
    k5 = generate(GraphKind("complete", 5))
    a = generalized_primitive(k5, {1, 2, 3}).entries
    b = single_primitive(k5, 4, 5).entries
    assert matmul(a, b) == matmul(b, a)


def test_induced_graph_single(path3):
    assert induced_graph(single_primitive(path3, 1, 2), path3).edges == {(1, 2)}


def test_completeness_examples(path3):
    k2 = build_graph(2, [(1, 2)])
    assert is_complete([single_primitive(k2, 1, 2)], k2)
    p12, p23 = single_primitive(path3, 1, 2), single_primitive(path3, 2, 3)
    assert not is_complete([p12], path3)
    assert is_complete([p12, p23], path3)


def test_period_examples(path3):
    p12, p23 = single_primitive(path3, 1, 2), single_primitive(path3, 2, 3)
    alt = [p12, p23] * 5
    assert repetitive_completeness_period(alt, path3) == 2
    assert repetitive_completeness_period([identity_primitive(path3)] * 6, path3) is None
    seq = [p12, identity_primitive(path3), identity_primitive(path3), p23]
    assert repetitive_completeness_period(seq, path3) == 4


def _record(gossips=(), virtual=(), x=()):
    return IterationRecord(0, {}, (), (), tuple(gossips), tuple(virtual), 0, tuple(x))


def test_iteration_matrix_gossip_only(path3):
    m = iteration_matrix(_record(gossips=[(1, 2)]), path3)
    assert m.is_primitive and m.entries == single_primitive(path3, 1, 2).entries


def test_iteration_matrix_virtual_only(path3):
    m = iteration_matrix(_record(virtual=[(1, 2)]), path3)
    assert m.entries == single_primitive(path3, 1, 2).entries


def test_iteration_matrix_overlap_layers(path3):
    rec = _record(gossips=[(1, 2)], virtual=[(2, 3), (3, 2)])
    strict = iteration_matrix(rec, path3, strict=True)
    assert strict.is_primitive and strict.neighborhoods == (frozenset({1, 2}),)
    full = iteration_matrix(rec, path3)
    assert not full.is_primitive
    assert set(full.neighborhoods) == {frozenset({1, 2}), frozenset({2, 3})}
    # virtual layer acts first: P12 @ P23
    expected = matmul(single_primitive(path3, 1, 2).entries, single_primitive(path3, 2, 3).entries)
    assert full.entries == expected
    assert is_doubly_stochastic(full.entries)


def test_example_a_reconstruction():
    g = build_graph(3, [(1, 2), (2, 3)])
    s = init_sim(g, 2, [4, 2, 0], {1: [2], 2: [1, 3], 3: [2]})
    run(s, 2)
    seq = reconstruct_consistent_sequence(s.trace, g, s.x0)
    prod = sequence_product(seq, 3)
    assert matvec(prod, s.x0) == (3, F(3, 2), F(3, 2))


def test_consistency_error_detected(path3):
    bad = [_record(gossips=[(1, 2)], x=(F(9), F(9), F(0)))]
    with pytest.raises(ConsistencyError):
        reconstruct_consistent_sequence(bad, path3, [F(4), F(2), F(0)])


@settings(max_examples=40, deadline=None)
@given(gossip_instances(max_n=6))
def test_dense_product_matches_trace(inst):
    g, x0, seed = inst
    for p in Protocol:
        s = run(init_sim(g, p, x0, queue_seed=seed), 12)
        for strict in (False, True):
            seq = reconstruct_consistent_sequence(s.trace, g, s.x0, strict=strict)
            prod = identity(g.n)
            for m, rec in zip(seq, s.trace):
                assert is_doubly_stochastic(m.entries)
                prod = matmul(m.entries, prod)
                assert matvec(prod, s.x0) == rec.x_after
            ones = [F(1)] * g.n
            assert matvec(prod, ones) == tuple(ones)
            assert is_doubly_stochastic(prod)


@settings(max_examples=30, deadline=None)
@given(gossip_instances(max_n=6))
def test_period_bisection_matches_brute(inst):
    g, x0, seed = inst
    s = run(init_sim(g, Protocol.III, x0, queue_seed=seed), 15)
    seq = reconstruct_consistent_sequence(s.trace, g)
    assert repetitive_completeness_period(seq, g) == brute_period(seq, g)


def test_primitives_idempotent_on_k4():
    k4 = generate(GraphKind("complete", 4))
    for r in (2, 3, 4):
        for L in itertools.combinations(range(1, 5), r):
            p = generalized_primitive(k4, L).entries
            assert matmul(p, p) == p and is_doubly_stochastic(p)
