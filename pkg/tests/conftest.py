import random
from fractions import Fraction

import pytest
from hypothesis import strategies as st

from reqgossip.graph import GraphKind, build_graph, generate


@pytest.fixture
def path3():
    return build_graph(3, [(1, 2), (2, 3)])


@pytest.fixture
def star3():
    return build_graph(3, [(1, 2), (1, 3)])


@st.composite
def gossip_instances(draw, max_n=8, value_hi=6):
    """(graph, x0, queue_seed) over a mix of graph families."""
    kind = draw(st.sampled_from(["path", "cycle", "star", "complete", "random-tree", "random-connected"]))
    n = draw(st.integers(min_value=3 if kind == "cycle" else 2, max_value=max_n))
    seed = draw(st.integers(min_value=0, max_value=10_000))
    g = generate(GraphKind(kind, n, p=0.4, seed=seed))
    x0 = [Fraction(draw(st.integers(0, value_hi))) for _ in range(n)]
    return g, x0, seed


def random_instance(seed, kinds=("path", "cycle", "star", "complete", "random-tree", "random-connected"),
                    n_range=(2, 10), value_hi=20):
    rng = random.Random(seed)
    kind = rng.choice(kinds)
    n = rng.randint(max(n_range[0], 3 if kind == "cycle" else 2), n_range[1])
    g = generate(GraphKind(kind, n, p=rng.choice([0.2, 0.4, 0.7]), seed=seed))
    x0 = [Fraction(rng.randint(0, value_hi)) for _ in range(n)]
    return g, x0
