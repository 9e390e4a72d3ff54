"""Allowable gossip graphs: validation, metrics, generators and file formats."""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import Iterable

import networkx as nx


class GraphError(ValueError):
    """Base class for graph validation failures."""


class SelfLoopError(GraphError):
    pass


class DuplicateEdgeError(GraphError):
    pass


class LabelRangeError(GraphError):
    pass


class DisconnectedGraphError(GraphError):
    pass


class VertexCountError(GraphError):
    pass


def _edge(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph on vertices labelled ``1..n``.

    Edges are stored as sorted pairs ``(i, j)`` with ``i < j``. Construct
    through :func:`build_graph` to get validation.
    """

    n: int
    edges: frozenset[tuple[int, int]] = field(default_factory=frozenset)

    @cached_property
    def neighbors(self) -> dict[int, tuple[int, ...]]:
        adj: dict[int, list[int]] = {i: [] for i in range(1, self.n + 1)}
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        return {i: tuple(sorted(js)) for i, js in adj.items()}

    def degree(self, i: int) -> int:
        return len(self.neighbors[i])

    def has_edge(self, u: int, v: int) -> bool:
        return _edge(u, v) in self.edges

    @property
    def vertices(self) -> range:
        return range(1, self.n + 1)

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(self.vertices)
        g.add_edges_from(self.edges)
        return g

    def is_connected(self) -> bool:
        return nx.is_connected(self.to_networkx())

    def is_tree(self) -> bool:
        return len(self.edges) == self.n - 1 and self.is_connected()


def build_graph(n: int, edge_list: Iterable[Iterable[int]], *, allowable: bool = True) -> Graph:
    """Validate an edge list and return a :class:`Graph`.

    With ``allowable=True`` (the default) the graph must also be connected,
    as required of an allowable gossip graph. Induced subgraphs pass
    ``allowable=False``.
    """
    if n < 2:
        raise VertexCountError(f"need n >= 2, got {n}")
    seen: set[tuple[int, int]] = set()
    for pair in edge_list:
        u, v = (int(a) for a in pair)
        if not (1 <= u <= n and 1 <= v <= n):
            raise LabelRangeError(f"edge ({u}, {v}) has a label outside 1..{n}")
        if u == v:
            raise SelfLoopError(f"self-loop at vertex {u}")
        e = _edge(u, v)
        if e in seen:
            raise DuplicateEdgeError(f"duplicate edge {e}")
        seen.add(e)
    g = Graph(n, frozenset(seen))
    if allowable and not g.is_connected():
        raise DisconnectedGraphError(f"graph on {n} vertices with {len(seen)} edges is not connected")
    return g


@dataclass(frozen=True)
class GraphMetrics:
    m: int
    d: int
    d_avg: Fraction
    diameter: int | None
    connected: bool


def metrics(g: Graph) -> GraphMetrics:
    """Edge count, max degree, exact average degree, diameter, connectivity.

    The diameter is ``None`` for a disconnected graph.
    """
    degrees = [g.degree(i) for i in g.vertices]
    connected = g.is_connected()
    diameter = None
    if connected:
        lengths = dict(nx.all_pairs_shortest_path_length(g.to_networkx()))
        diameter = max(max(row.values()) for row in lengths.values())
    return GraphMetrics(
        m=len(g.edges),
        d=max(degrees),
        d_avg=Fraction(sum(degrees), g.n),
        diameter=diameter,
        connected=connected,
    )


def broadcast_cheaper(g: Graph) -> bool:
    """True when a broadcast iteration (n * d_avg messages) costs no more
    than the 5n/2 worst case of a request-based iteration."""
    return metrics(g).d_avg <= Fraction(5, 2)


GRAPH_KINDS = ("path", "cycle", "star", "complete", "grid", "random-tree", "random-connected")


@dataclass(frozen=True)
class GraphKind:
    """Recipe for a generated graph; identical recipes give identical graphs.

    ``n`` is the vertex count, except for ``grid`` where ``n`` is the number
    of rows and ``cols`` the number of columns.
    """

    kind: str
    n: int
    p: float | None = None
    seed: int = 0
    cols: int | None = None

    def __post_init__(self):
        if self.kind not in GRAPH_KINDS:
            raise GraphError(f"unknown graph kind {self.kind!r}; expected one of {GRAPH_KINDS}")


def _random_tree_edges(n: int, rng: random.Random) -> list[tuple[int, int]]:
    # Prufer sequence over 0..n-1, shifted to 1..n
    if n == 2:
        return [(1, 2)]
    seq = [rng.randrange(n) for _ in range(n - 2)]
    tree = nx.from_prufer_sequence(seq)
    return [(u + 1, v + 1) for u, v in tree.edges()]


def generate(spec: GraphKind) -> Graph:
    """Build a connected graph of the requested family.

    ``random-connected`` draws each pair independently with probability
    ``p``; if the draw is disconnected, edges of a seeded random spanning
    tree are added until it is connected, so the call never fails for a
    small ``p``.
    """
    n, kind = spec.n, spec.kind
    if kind == "grid":
        rows, cols = n, spec.cols if spec.cols is not None else n
        if rows * cols < 2:
            raise GraphError("grid needs at least two vertices")
        label = lambda r, c: r * cols + c + 1  # noqa: E731
        edges = []
        for r in range(rows):
            for c in range(cols):
                if c + 1 < cols:
                    edges.append((label(r, c), label(r, c + 1)))
                if r + 1 < rows:
                    edges.append((label(r, c), label(r + 1, c)))
        return build_graph(rows * cols, edges)
    if n < 2:
        raise VertexCountError(f"need n >= 2, got {n}")
    rng = random.Random(spec.seed)
    if kind == "path":
        edges = [(i, i + 1) for i in range(1, n)]
    elif kind == "cycle":
        if n < 3:
            raise GraphError("cycle needs n >= 3")
        edges = [(i, i + 1) for i in range(1, n)] + [(1, n)]
    elif kind == "star":
        edges = [(1, i) for i in range(2, n + 1)]
    elif kind == "complete":
        edges = [(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)]
    elif kind == "random-tree":
        edges = _random_tree_edges(n, rng)
    else:
        if spec.p is None or not 0.0 <= spec.p <= 1.0:
            raise GraphError(f"random-connected needs 0 <= p <= 1, got {spec.p}")
        chosen = {
            (i, j)
            for i in range(1, n + 1)
            for j in range(i + 1, n + 1)
            if rng.random() < spec.p
        }
        probe = Graph(n, frozenset(chosen))
        if not probe.is_connected():
            for e in _random_tree_edges(n, rng):
                chosen.add(_edge(*e))
        edges = sorted(chosen)
    return build_graph(n, edges)


def union_induced(gs: list[Graph]) -> Graph:
    """Union of edge sets over graphs that share one vertex set."""
    if not gs:
        raise GraphError("union of an empty list is undefined")
    n = gs[0].n
    if any(g.n != n for g in gs):
        raise GraphError("graphs have different vertex counts")
    edges: set[tuple[int, int]] = set()
    for g in gs:
        edges |= g.edges
    return Graph(n, frozenset(edges))


# --- file formats -----------------------------------------------------------

def parse_edge_list(text: str, *, allowable: bool = True) -> Graph:
    """Parse the ``n m`` header + ``u v`` lines format."""
    lines = [ln.split() for ln in text.splitlines() if ln.strip()]
    if not lines or len(lines[0]) != 2:
        raise GraphError("first line must be 'n m'")
    n, m = int(lines[0][0]), int(lines[0][1])
    body = lines[1:]
    if len(body) != m:
        raise GraphError(f"header promises {m} edges, found {len(body)}")
    pairs = []
    for row in body:
        if len(row) != 2:
            raise GraphError(f"bad edge line: {' '.join(row)!r}")
        pairs.append((int(row[0]), int(row[1])))
    return build_graph(n, pairs, allowable=allowable)


def format_edge_list(g: Graph) -> str:
    out = [f"{g.n} {len(g.edges)}"]
    out += [f"{u} {v}" for u, v in g.sorted_edges()]
    return "\n".join(out) + "\n"


def graph_to_json(g: Graph) -> dict:
    return {"n": g.n, "edges": [list(e) for e in g.sorted_edges()]}


def graph_from_json(obj: dict, *, allowable: bool = True) -> Graph:
    return build_graph(int(obj["n"]), obj["edges"], allowable=allowable)


def load_graph(path: str | Path) -> Graph:
    path = Path(path)
    text = path.read_text()
    if path.suffix == ".json":
        return graph_from_json(json.loads(text))
    return parse_edge_list(text)
