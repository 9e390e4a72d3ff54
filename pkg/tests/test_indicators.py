import itertools
import random
from fractions import Fraction as F

import pytest
from hypothesis import given
from hypothesis import strategies as st

from reqgossip.graph import GraphKind, build_graph, generate
from reqgossip.indicators import (
    IndicatorSpec,
    check_gossip_decrease,
    gossip,
    indicator_value,
    is_indicator,
    is_instantaneous,
    neighbor_closure_condition,
    noninstantaneous_witness,
)

K3 = IndicatorSpec.complete(3)


def test_values():
    assert indicator_value(K3, [F(5)] * 3) == 0
    assert indicator_value(K3, [F(4), F(2), F(0)]) == 8
    assert indicator_value(K3, [F(3), F(3), F(0)]) == 6


def test_spec_validation():
    with pytest.raises(ValueError):
        IndicatorSpec.from_pairs(3, [(1, 1)])
    with pytest.raises(ValueError):
        IndicatorSpec.from_pairs(3, [(1, 2), (2, 1)])


def test_is_indicator(path3):
    assert is_indicator(IndicatorSpec.of_graph(path3), path3)
    assert not is_indicator(IndicatorSpec.from_pairs(3, [(1, 2)]), path3)
    assert is_indicator(K3, path3)
    # pairs need not be allowable edges
    assert is_indicator(IndicatorSpec.from_pairs(3, [(1, 3), (3, 2)]), path3)


def test_is_indicator_matches_zero_set(path3):
    # V(x) = 0 without consensus is possible exactly when the pair graph is disconnected
    for pairs in itertools.chain.from_iterable(
        itertools.combinations([(1, 2), (1, 3), (2, 3)], r) for r in range(4)
    ):
        spec = IndicatorSpec.from_pairs(3, pairs)
        witness_exists = any(
            indicator_value(spec, x) == 0 and len(set(x)) > 1
            for x in itertools.product([F(0), F(1)], repeat=3)
        )
        assert is_indicator(spec, path3) == (not witness_exists)


def test_is_instantaneous(path3):
    assert is_instantaneous(IndicatorSpec.complete(5), generate(GraphKind("path", 5)))
    assert not is_instantaneous(IndicatorSpec.of_graph(path3), path3)
    k2 = build_graph(2, [(1, 2)])
    assert is_instantaneous(IndicatorSpec.from_pairs(2, [(1, 2)]), k2)


def test_witness_path3_edges_only(path3):
    # every allowable edge is in V, so the witness breaks the unit decrease
    # without V increasing: V drops by exactly half the gossip distance
    w = noninstantaneous_witness(IndicatorSpec.of_graph(path3), path3)
    assert w.violates_unit_decrease()
    assert w.v_after - w.v_before == -w.distance / 2


def test_witness_missing_edge_is_nondecreasing(path3):
    spec = IndicatorSpec.from_pairs(3, [(1, 3), (2, 3)])
    w = noninstantaneous_witness(spec, path3)
    assert w.pair == (1, 2)
    assert w.nondecreasing and w.violates_unit_decrease()


def test_no_witness_for_complete(path3):
    assert noninstantaneous_witness(K3, path3) is None


def test_check_gossip_decrease_examples():
    x = [F(4), F(2), F(0)]
    after = gossip(x, 1, 2)
    assert indicator_value(K3, after) == 6
    assert check_gossip_decrease(K3, x, after, (1, 2))
    after13 = gossip(x, 1, 3)
    # the pair average equals the third value, so V collapses to zero
    assert list(after13) == [F(2)] * 3 and indicator_value(K3, after13) == 0
    assert check_gossip_decrease(K3, x, after13, (1, 3))
    eq = [F(1), F(1), F(7)]
    assert check_gossip_decrease(K3, eq, gossip(eq, 1, 2), (1, 2))


rationals = st.fractions(min_value=-50, max_value=50, max_denominator=16)


@given(st.lists(rationals, min_size=2, max_size=7), st.data())
def test_unit_decrease_for_complete_specs(x, data):
    n = len(x)
    i, j = data.draw(st.sampled_from([(a, b) for a in range(1, n + 1) for b in range(a + 1, n + 1)]))
    assert check_gossip_decrease(IndicatorSpec.complete(n), x, gossip(x, i, j), (i, j))


@given(rationals, rationals, rationals)
def test_third_agent_distance_sum(xi, xj, xk):
    m = (xi + xj) / 2
    assert abs(xk - m) * 2 <= abs(xk - xi) + abs(xk - xj)


def _random_spec_over(g, rng):
    extra = [(i, j) for i in g.vertices for j in g.vertices if i < j and not g.has_edge(i, j)]
    keep = [e for e in extra if rng.random() < rng.choice([0.3, 0.7, 1.0])]
    return IndicatorSpec(g.n, frozenset(g.edges) | frozenset(keep))


def test_closure_condition_agrees_with_completeness():
    rng = random.Random(5)
    for k in range(150):
        g = generate(GraphKind("random-connected", rng.randint(2, 7), p=0.4, seed=k))
        spec = _random_spec_over(g, rng)
        assert neighbor_closure_condition(spec, g) == is_instantaneous(spec, g)
        w = noninstantaneous_witness(spec, g)
        if is_instantaneous(spec, g):
            assert w is None
        else:
            assert w.violates_unit_decrease()
            i, j = w.pair
            assert g.has_edge(i, j)
