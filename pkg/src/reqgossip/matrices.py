"""Primitive gossip matrices, consistent matrix sequences and completeness."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

import networkx as nx

from .engine import IterationRecord, format_rational
from .graph import Graph

Matrix = tuple[tuple[Fraction, ...], ...]


class MatrixError(ValueError):
    pass


class NotAdjacentError(MatrixError):
    pass


class NotACliqueError(MatrixError):
    pass


class OverlapError(MatrixError):
    pass


class ConsistencyError(AssertionError):
    """Reconstructed matrices do not reproduce the simulated state."""


def identity(n: int) -> Matrix:
    return tuple(tuple(Fraction(int(r == c)) for c in range(n)) for r in range(n))


def matmul(a: Matrix, b: Matrix) -> Matrix:
    n = len(a)
    cols = list(zip(*b))
    return tuple(
        tuple(sum((ar[k] * col[k] for k in range(n)), Fraction(0)) for col in cols) for ar in a
    )


def matvec(a: Matrix, x: Sequence[Fraction]) -> tuple[Fraction, ...]:
    return tuple(sum((r[k] * x[k] for k in range(len(x))), Fraction(0)) for r in a)


def is_doubly_stochastic(a: Matrix) -> bool:
    one = Fraction(1)
    return all(v >= 0 for r in a for v in r) and all(sum(r) == one for r in a) and all(
        sum(c) == one for c in zip(*a)
    )


@dataclass(frozen=True)
class GossipMatrix:
    """A primitive gossip matrix, described by its disjoint neighborhoods.

    Dense entries are built on first access; applying the matrix to a vector
    only needs the neighborhoods (each block jumps to its own average).
    """

    n: int
    neighborhoods: tuple[frozenset[int], ...] = ()

    @cached_property
    def entries(self) -> Matrix:
        rows = [[Fraction(int(r == c)) for c in range(self.n)] for r in range(self.n)]
        for nb in self.neighborhoods:
            w = Fraction(1, len(nb))
            for r in nb:
                rows[r - 1][r - 1] = Fraction(0)
                for c in nb:
                    rows[r - 1][c - 1] = w
        return tuple(tuple(r) for r in rows)

    def apply(self, x: Sequence[Fraction]) -> tuple[Fraction, ...]:
        out = list(x)
        for nb in self.neighborhoods:
            avg = sum((x[i - 1] for i in nb), Fraction(0)) / len(nb)
            for i in nb:
                out[i - 1] = avg
        return tuple(out)

    @property
    def is_identity(self) -> bool:
        return not self.neighborhoods

    def to_json(self) -> list[list[str]]:
        return [[format_rational(v) for v in row] for row in self.entries]


def _check_clique(g: Graph, labels: Iterable[int]) -> frozenset[int]:
    nb = frozenset(labels)
    if len(nb) < 2:
        raise NotACliqueError(f"a neighborhood needs at least two labels, got {sorted(nb)}")
    for i in nb:
        if not 1 <= i <= g.n:
            raise MatrixError(f"label {i} outside 1..{g.n}")
    for i in nb:
        for j in nb:
            if i < j and not g.has_edge(i, j):
                raise NotACliqueError(f"{sorted(nb)} is not a clique: ({i}, {j}) missing")
    return nb


def single_primitive(g: Graph, i: int, j: int) -> GossipMatrix:
    if i == j or not g.has_edge(i, j):
        raise NotAdjacentError(f"({i}, {j}) is not an edge of the allowable graph")
    return GossipMatrix(g.n, (frozenset((i, j)),))


def identity_primitive(g: Graph) -> GossipMatrix:
    return GossipMatrix(g.n, ())


def generalized_primitive(g: Graph, labels: Iterable[int]) -> GossipMatrix:
    """Every agent in the clique ``labels`` jumps to the clique average (weight 1/|L|)."""
    return GossipMatrix(g.n, (_check_clique(g, labels),))


def multi_primitive(g: Graph, parts: Iterable[Iterable[int]]) -> GossipMatrix:
    nbs = [_check_clique(g, p) for p in parts]
    used: set[int] = set()
    for nb in nbs:
        if used & nb:
            raise OverlapError(f"neighborhood {sorted(nb)} overlaps another part")
        used |= nb
    return GossipMatrix(g.n, tuple(sorted(nbs, key=min)))


def induced_graph(m, g: Graph) -> Graph:
    """Spanning subgraph of ``g`` with the edges lying inside one neighborhood."""
    edges = {e for e in g.edges for nb in m.neighborhoods if e[0] in nb and e[1] in nb}
    return Graph(g.n, frozenset(edges))


@dataclass(frozen=True)
class IterationMatrix:
    """Update matrix of one iteration as an ordered product of primitives.

    ``factors[0]`` acts first. With a single factor the matrix is itself
    primitive.
    """

    n: int
    factors: tuple[GossipMatrix, ...]

    @property
    def neighborhoods(self) -> tuple[frozenset[int], ...]:
        return tuple(nb for f in self.factors for nb in f.neighborhoods)

    @property
    def is_primitive(self) -> bool:
        return len(self.factors) <= 1

    def apply(self, x: Sequence[Fraction]) -> tuple[Fraction, ...]:
        for f in self.factors:
            x = f.apply(x)
        return tuple(x)

    @cached_property
    def entries(self) -> Matrix:
        prod = identity(self.n)
        for f in self.factors:
            prod = matmul(f.entries, prod)
        return prod


MatrixSequence = list[IterationMatrix]


def iteration_matrix(rec: IterationRecord, g: Graph, *, strict: bool = False) -> IterationMatrix:
    """Matrix for one iteration of a trace.

    The head factor holds the gossip pairs plus every virtual pair disjoint
    from all factors chosen before it (trace order). Remaining virtual pairs
    (an agent gossiping and virtually gossiping at once, or two virtual pairs
    sharing an agent) are packed greedily into further disjoint layers that
    act before the head; they fix x(t) because their members are equal at t.
    ``strict=True`` drops them instead, keeping the matrix primitive.
    """
    for i, j in list(rec.gossips) + list(rec.virtual_gossips):
        if not g.has_edge(i, j):
            raise NotAdjacentError(f"trace pair ({i}, {j}) is not an edge")
    head = [frozenset(p) for p in rec.gossips]
    used = set().union(*head) if head else set()
    leftover: list[frozenset[int]] = []
    seen: set[frozenset[int]] = set(head)
    for i, j in rec.virtual_gossips:
        pair = frozenset((i, j))
        if pair in seen:
            continue
        seen.add(pair)
        if i not in used and j not in used:
            head.append(pair)
            used |= pair
        else:
            leftover.append(pair)
    layers: list[list[frozenset[int]]] = []
    if not strict:
        for pair in leftover:
            for layer in layers:
                if all(not (pair & other) for other in layer):
                    layer.append(pair)
                    break
            else:
                layers.append([pair])
    factors = [GossipMatrix(g.n, tuple(layer)) for layer in layers]
    factors.append(GossipMatrix(g.n, tuple(head)))
    return IterationMatrix(g.n, tuple(factors))


def reconstruct_consistent_sequence(
    trace: Sequence[IterationRecord],
    g: Graph,
    x0: Sequence[Fraction] | None = None,
    *,
    strict: bool = False,
) -> MatrixSequence:
    """Rebuild ``P_1, P_2, ...`` from a trace.

    When ``x0`` is given, ``x(t) = P_t ... P_1 x(0)`` is checked exactly at
    every ``t`` and :class:`ConsistencyError` raised on the first mismatch.
    """
    seq = [iteration_matrix(rec, g, strict=strict) for rec in trace]
    if x0 is not None:
        x = tuple(Fraction(v) for v in x0)
        for p, rec in zip(seq, trace):
            x = p.apply(x)
            if x != tuple(rec.x_after):
                raise ConsistencyError(f"reconstructed state differs from trace at t={rec.t}")
    return seq


def sequence_product(seq: Sequence[IterationMatrix], n: int) -> Matrix:
    """Dense ``P_t ... P_1`` (rightmost factor applied first)."""
    prod = identity(n)
    for p in seq:
        prod = matmul(p.entries, prod)
    return prod


def _window_edges(seq: Sequence[IterationMatrix], g: Graph) -> list[frozenset[tuple[int, int]]]:
    return [induced_graph(p, g).edges for p in seq]


def _spanning_connected(n: int, edges: Iterable[tuple[int, int]]) -> bool:
    h = nx.Graph()
    h.add_nodes_from(range(1, n + 1))
    h.add_edges_from(edges)
    return nx.is_connected(h)


def is_complete(seq: Sequence[IterationMatrix], g: Graph) -> bool:
    edges: set[tuple[int, int]] = set()
    for es in _window_edges(seq, g):
        edges |= es
    return _spanning_connected(g.n, edges)


def first_incomplete_window(
    seq: Sequence[IterationMatrix], g: Graph, length: int, *, edge_sets=None
) -> int | None:
    """Start of the first length-``length`` window that is not complete, or None."""
    es = edge_sets if edge_sets is not None else _window_edges(seq, g)
    if length < 1 or length > len(es):
        raise ValueError(f"window length {length} outside 1..{len(es)}")
    counts: Counter = Counter()
    for k in range(length):
        counts.update(es[k])
    for s in range(len(es) - length + 1):
        if s > 0:
            counts.subtract(es[s - 1])
            counts.update(es[s + length - 1])
        if not _spanning_connected(g.n, (e for e, c in counts.items() if c > 0)):
            return s
    return None


def repetitive_completeness_period(seq: Sequence[IterationMatrix], g: Graph) -> int | None:
    """Smallest T such that every length-T window of ``seq`` is complete.

    Completeness of all windows is monotone in T, so T is found by bisection.
    """
    if not seq or not is_complete(seq, g):
        return None
    es = _window_edges(seq, g)
    lo, hi = 1, len(seq)
    while lo < hi:
        mid = (lo + hi) // 2
        if first_incomplete_window(seq, g, mid, edge_sets=es) is None:
            hi = mid
        else:
            lo = mid + 1
    return lo
