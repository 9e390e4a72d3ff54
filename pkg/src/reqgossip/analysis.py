"""Round tracking and runtime checks of the protocols' quantitative claims."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .engine import IterationRecord, Protocol, SimState, complete_disagreement, init_sim, step
from .graph import Graph, metrics
from .matrices import (
    first_incomplete_window,
    reconstruct_consistent_sequence,
    repetitive_completeness_period,
)


class ClaimError(ValueError):
    pass


CLAIMS = {
    "lemma_gossip": (Protocol.II,),
    "lemma_dstep_2d": (Protocol.II,),
    "lemma_pizza": (Protocol.III,),
    "tree_period_n_minus_1": (Protocol.II,),
    "period_edges_m": (Protocol.III,),
    "contraction_4_over_n2": (Protocol.III,),
    "transmissions_5n_over_2": (Protocol.I, Protocol.II, Protocol.III),
}


def credits(rec: IterationRecord) -> dict[int, set[int]]:
    """Neighbors each agent gossiped or virtually gossiped with in ``rec``."""
    out: dict[int, set[int]] = {}
    for i, j in rec.gossips:
        out.setdefault(i, set()).add(j)
        out.setdefault(j, set()).add(i)
    for i, j in rec.virtual_gossips:
        out.setdefault(i, set()).add(j)
    return out


@dataclass
class RoundTracker:
    pending: dict[int, set[int]]
    completions: dict[int, list[int]]


def track_rounds(trace: Sequence[IterationRecord], g: Graph) -> RoundTracker:
    """All rounds start at t=0; a round ends at the iteration in which the
    agent has covered its whole neighbor set, and the next begins empty."""
    rt = RoundTracker({i: set() for i in g.vertices}, {i: [] for i in g.vertices})
    for rec in trace:
        for i, js in credits(rec).items():
            got = rt.pending[i]
            got |= js
            if got >= set(g.neighbors[i]):
                rt.completions[i].append(rec.t)
                rt.pending[i] = set()
    return rt


def first_round_gap(trace: Sequence[IterationRecord], g: Graph, length: int) -> tuple[int, int] | None:
    """First (window start, agent) such that the agent does not complete a
    round within iterations ``[start, start + length)``; None if every full
    window is covered."""
    horizon = len(trace)
    if length > horizon:
        return None
    hits: dict[tuple[int, int], list[int]] = {(i, j): [] for i in g.vertices for j in g.neighbors[i]}
    for k, rec in enumerate(trace):
        for i, js in credits(rec).items():
            for j in js:
                hits[(i, j)].append(k)
    worst: tuple[int, int] | None = None
    for (i, j), times in hits.items():
        # earliest window start that misses (i, j)
        prev = -1
        bad = None
        for k in times + [horizon]:
            if k - prev - 1 >= length:
                bad = prev + 1
                break
            prev = k
        if bad is not None and bad + length <= horizon and (worst is None or bad < worst[0]):
            worst = (bad, i)
    return worst


@dataclass
class BoundReport:
    claim: str
    protocol: str
    graph: dict
    windows_checked: int
    passed: bool
    counterexample: dict | None = None
    seeds: list = field(default_factory=list)
    window: int | None = None

    def to_json(self) -> dict:
        d = asdict(self)
        d["pass"] = d.pop("passed")
        if d["counterexample"] is None:
            d.pop("counterexample")
        return d


def _states(x0: Sequence[Fraction], trace: Sequence[IterationRecord]) -> list[tuple[Fraction, ...]]:
    return [tuple(Fraction(v) for v in x0)] + [tuple(r.x_after) for r in trace]


def consensus_time(x0, trace) -> int | None:
    for t, x in enumerate(_states(x0, trace)):
        if all(v == x[0] for v in x):
            return t
    return None


def verify_bound(
    trace: Sequence[IterationRecord],
    g: Graph,
    claim: str,
    protocol,
    x0: Sequence[Fraction],
) -> BoundReport:
    """Scan every relevant window of ``trace`` for a counterexample to ``claim``."""
    protocol = Protocol.parse(protocol)
    if claim not in CLAIMS:
        raise ClaimError(f"unknown claim {claim!r}; expected one of {sorted(CLAIMS)}")
    if protocol not in CLAIMS[claim]:
        raise ClaimError(f"claim {claim} addresses protocol(s) "
                         f"{[p.name for p in CLAIMS[claim]]}, trace is Protocol {protocol.name}")
    gm = metrics(g)
    states = _states(x0, trace)
    report = BoundReport(claim, protocol.name, {"n": g.n, "edges": [list(e) for e in g.sorted_edges()]},
                         0, True)

    def fail(**info):
        report.passed = False
        report.counterexample = info
        return report

    if claim == "lemma_gossip":
        for rec in trace:
            x = states[rec.t]
            report.windows_checked += 1
            tie = any(x[i - 1] == x[j - 1] for i, j in rec.preferred.items())
            real = any(x[i - 1] != x[j - 1] for i, j in rec.gossips)
            if not (tie or real):
                return fail(t=rec.t)
    elif claim == "lemma_pizza":
        for rec in trace:
            report.windows_checked += 1
            if not rec.gossips and not rec.virtual_gossips:
                return fail(t=rec.t)
    elif claim == "transmissions_5n_over_2":
        cap = 2 * g.n + g.n // 2
        for rec in trace:
            report.windows_checked += 1
            if rec.transmissions != 2 * g.n + len(rec.acceptances) or rec.transmissions > cap:
                return fail(t=rec.t, transmissions=rec.transmissions, cap=cap)
    elif claim == "lemma_dstep_2d":
        width = 2 * gm.d
        report.window = width
        stop = consensus_time(x0, trace)
        usable = len(trace) if stop is None else stop
        gossip_at = [bool(r.gossips) for r in trace[:usable]]
        for s in range(0, usable - width + 1):
            report.windows_checked += 1
            if not any(gossip_at[s:s + width]):
                return fail(window_start=s, width=width)
    elif claim in ("tree_period_n_minus_1", "period_edges_m"):
        if claim == "tree_period_n_minus_1":
            if not g.is_tree():
                raise ClaimError("tree_period_n_minus_1 needs a tree")
            bound = g.n - 1
        else:
            bound = gm.m
        report.window = bound
        if len(trace) < bound:
            return report
        report.windows_checked = len(trace) - bound + 1
        gap = first_round_gap(trace, g, bound)
        if gap is not None:
            return fail(route="rounds", window_start=gap[0], agent=gap[1], window=bound)
        seq = reconstruct_consistent_sequence(trace, g, x0)
        bad = first_incomplete_window(seq, g, bound)
        if bad is not None:
            return fail(route="matrices", window_start=bad, window=bound,
                        measured_period=repetitive_completeness_period(seq, g))
    elif claim == "contraction_4_over_n2":
        m = gm.m
        rho = Fraction(1) - Fraction(4, g.n * g.n)
        report.window = m
        vs = [complete_disagreement(x) for x in states]
        for t in range(0, len(vs) - m):
            report.windows_checked += 1
            if vs[t + m] > rho * vs[t]:
                return fail(t=t, v_t=str(vs[t]), v_t_plus_m=str(vs[t + m]))
    return report


@dataclass(frozen=True)
class RateBound:
    rho: Fraction
    m: int

    @property
    def per_step(self) -> float:
        return float(self.rho) ** (1.0 / self.m)


def rate_bound(g: Graph) -> RateBound:
    """Worst-case contraction ``1 - 4/n^2`` per ``m`` iterations (m = edge count)."""
    return RateBound(Fraction(1) - Fraction(4, g.n * g.n), len(g.edges))


def check_rate(trace: Sequence[IterationRecord], g: Graph, x0) -> int | None:
    """First t with V(t) > rho^floor(t/m) V(0), or None if the bound holds throughout."""
    rb = rate_bound(g)
    states = _states(x0, trace)
    v0 = complete_disagreement(states[0])
    for t, x in enumerate(states):
        if complete_disagreement(x) > rb.rho ** (t // rb.m) * v0:
            return t
    return None


def lib_property_check(g: Graph, sub_edges, x: Sequence, queues: dict[int, Sequence[int]]) -> bool:
    """One Protocol III iteration from a state whose queues list every
    subgraph neighbor ahead of the other neighbors; True iff some gossip or
    virtual gossip happens across an edge of the subgraph."""
    sub = {(min(u, v), max(u, v)) for u, v in sub_edges}
    if not sub:
        raise ValueError("the subgraph needs at least one edge")
    if not sub <= g.edges:
        raise ValueError("the subgraph must be a spanning subgraph of the allowable graph")
    for i in g.vertices:
        q = list(queues[i])
        inside = [(min(i, j), max(i, j)) in sub for j in q]
        if any(inside[k + 1] and not inside[k] for k in range(len(q) - 1)):
            raise ValueError(f"queue of agent {i} does not list subgraph neighbors first")
    s = init_sim(g, Protocol.III, x, queues)
    rec = step(s)
    pairs = {tuple(sorted(p)) for p in rec.gossips} | {tuple(sorted(p)) for p in rec.virtual_gossips}
    return bool(pairs & sub)


def product_distance_to_average(seq, n: int) -> list[float]:
    """Max-entry distance of ``P_t ... P_1`` from (1/n) * ones, for every t (float view)."""
    prod = np.eye(n)
    target = np.full((n, n), 1.0 / n)
    out = []
    for p in seq:
        for nb in (nb for f in p.factors for nb in f.neighborhoods):
            idx = [i - 1 for i in nb]
            prod[idx, :] = prod[idx, :].mean(axis=0)
        out.append(float(np.abs(prod - target).max()))
    return out

