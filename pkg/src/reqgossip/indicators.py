"""Multi-distance indicator functions V(x) = sum over a pair set of |x_i - x_j|."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import networkx as nx

from .graph import Graph


@dataclass(frozen=True)
class IndicatorSpec:
    n: int
    pairs: frozenset[tuple[int, int]]

    @classmethod
    def from_pairs(cls, n: int, pairs: Iterable[Iterable[int]]) -> "IndicatorSpec":
        out: set[tuple[int, int]] = set()
        for p in pairs:
            i, j = (int(a) for a in p)
            if i == j:
                raise ValueError(f"self-pair ({i}, {i})")
            if not (1 <= i <= n and 1 <= j <= n):
                raise ValueError(f"pair ({i}, {j}) outside 1..{n}")
            e = (min(i, j), max(i, j))
            if e in out:
                raise ValueError(f"duplicate pair {e}")
            out.add(e)
        return cls(n, frozenset(out))

    @classmethod
    def complete(cls, n: int) -> "IndicatorSpec":
        return cls(n, frozenset((i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)))

    @classmethod
    def of_graph(cls, g: Graph) -> "IndicatorSpec":
        return cls(g.n, g.edges)

    def has(self, i: int, j: int) -> bool:
        return (min(i, j), max(i, j)) in self.pairs

    def graph(self) -> nx.Graph:
        h = nx.Graph()
        h.add_nodes_from(range(1, self.n + 1))
        h.add_edges_from(self.pairs)
        return h


def indicator_value(spec: IndicatorSpec, x: Sequence[Fraction]) -> Fraction:
    if len(x) != spec.n:
        raise ValueError(f"state has length {len(x)}, spec has n={spec.n}")
    return sum((abs(x[i - 1] - x[j - 1]) for i, j in spec.pairs), Fraction(0))


def is_indicator(spec: IndicatorSpec, g: Graph) -> bool:
    """V vanishes only at consensus iff the pair graph connects all n vertices."""
    return nx.is_connected(spec.graph())


def is_instantaneous(spec: IndicatorSpec, g: Graph) -> bool:
    return len(spec.pairs) == spec.n * (spec.n - 1) // 2


def neighbor_closure_condition(spec: IndicatorSpec, g: Graph) -> bool:
    """Every allowable edge is a pair of V, and whenever (i, k) is a pair of
    V and (i, j) an allowable edge, (j, k) is a pair of V as well."""
    if not all(spec.has(*e) for e in g.edges):
        return False
    for i, k in spec.pairs:
        for a, b in ((i, k), (k, i)):
            for j in g.neighbors[a]:
                if j != b and not spec.has(j, b):
                    return False
    return True


def gossip(x: Sequence[Fraction], i: int, j: int) -> tuple[Fraction, ...]:
    out = list(x)
    mid = (x[i - 1] + x[j - 1]) / 2
    out[i - 1] = out[j - 1] = mid
    return tuple(out)


def check_gossip_decrease(
    spec: IndicatorSpec, x_before: Sequence[Fraction], x_after: Sequence[Fraction], pair
) -> bool:
    """Does V(after) - V(before) <= -|x_i - x_j| hold for the gossip ``pair``?"""
    i, j = pair
    drop = indicator_value(spec, x_after) - indicator_value(spec, x_before)
    return drop <= -abs(x_before[i - 1] - x_before[j - 1])


@dataclass(frozen=True)
class Witness:
    """A state and allowable gossip for which V decreases by less than the
    pair distance. ``nondecreasing`` marks the stronger V(after) >= V(before)."""

    x: tuple[Fraction, ...]
    pair: tuple[int, int]
    v_before: Fraction
    v_after: Fraction

    @property
    def distance(self) -> Fraction:
        i, j = self.pair
        return abs(self.x[i - 1] - self.x[j - 1])

    @property
    def nondecreasing(self) -> bool:
        return self.v_after >= self.v_before

    def violates_unit_decrease(self) -> bool:
        return self.distance > 0 and self.v_after - self.v_before > -self.distance


def _place(spec: IndicatorSpec, n: int, i: int, j: int) -> tuple[Fraction, ...]:
    # x_i = 0 < x_j = 1; agents tied to exactly one of i, j sit on the far
    # side of that endpoint so the gossip pulls the endpoint away from them;
    # agents tied to both sit outside [0, 1] (no change); the rest are inert.
    x = [Fraction(0)] * n
    x[j - 1] = Fraction(1)
    for k in range(1, n + 1):
        if k in (i, j):
            continue
        ti, tj = spec.has(i, k), spec.has(j, k)
        if ti and not tj:
            x[k - 1] = Fraction(-1)
        elif tj and not ti:
            x[k - 1] = Fraction(2)
        elif ti and tj:
            x[k - 1] = Fraction(2)
        else:
            x[k - 1] = Fraction(5)
    return tuple(x)


def noninstantaneous_witness(spec: IndicatorSpec, g: Graph) -> Witness | None:
    """Construct a gossip that breaks the unit-decrease inequality, or None
    when V's pair graph is complete (no such gossip exists).

    An allowable edge missing from V is preferred: gossiping across it can
    never lower V, which gives a non-decreasing witness. Otherwise an edge
    (i, j) together with a pair (i, k) whose partner (j, k) is missing is
    used; V then drops by at most half the distance per such k.
    """
    if is_instantaneous(spec, g):
        return None
    candidates = [e for e in g.sorted_edges() if not spec.has(*e)]
    if not candidates:
        best = None
        for i, j in g.sorted_edges():
            single = sum(
                1
                for k in range(1, spec.n + 1)
                if k not in (i, j) and spec.has(i, k) != spec.has(j, k)
            )
            if single and (best is None or single > best[0]):
                best = (single, (i, j))
        if best is None:
            return None
        candidates = [best[1]]
    i, j = candidates[0]
    x = _place(spec, spec.n, i, j)
    return Witness(x, (i, j), indicator_value(spec, x), indicator_value(spec, gossip(x, i, j)))
