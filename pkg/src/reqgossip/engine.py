"""Synchronous execution of the three request-based gossip protocols.

Every iteration runs four barrier-separated steps:

1. each agent sends ``x_i`` to its preferred neighbor (queue front);
2. each agent sends ``x_i`` back to every neighbor that prefers it;
3. acceptances are decided from the values learned in steps 1-2;
4. values and queues are updated.

Values are :class:`fractions.Fraction` throughout. Value equality drives
virtual gossips and queue rotation, so floating point is never used inside
a step.
"""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .graph import Graph


class Protocol(enum.Enum):
    I = 1
    II = 2
    III = 3

    @classmethod
    def parse(cls, tag) -> "Protocol":
        """Accept ``1``/``"1"``/``"I"``/``"II"``/... ."""
        if isinstance(tag, Protocol):
            return tag
        s = str(tag).strip().upper()
        for p in cls:
            if s == p.name or s == str(p.value):
                return p
        raise ValueError(f"unknown protocol {tag!r}; expected 1, 2 or 3")


class QueueError(ValueError):
    pass


@dataclass
class AgentState:
    id: int
    x: Fraction
    queue: list[int]

    @property
    def preferred(self) -> int:
        return self.queue[0]


@dataclass(frozen=True)
class IterationRecord:
    t: int
    preferred: dict[int, int]
    requests: tuple[tuple[int, int], ...]
    acceptances: tuple[tuple[int, int], ...]
    gossips: tuple[tuple[int, int], ...]
    virtual_gossips: tuple[tuple[int, int], ...]
    transmissions: int
    x_after: tuple[Fraction, ...]

    def to_json(self) -> dict:
        return {
            "t": self.t,
            "preferred": {str(i): j for i, j in sorted(self.preferred.items())},
            "requests": [list(p) for p in self.requests],
            "acceptances": [list(p) for p in self.acceptances],
            "gossips": [list(p) for p in self.gossips],
            "virtual_gossips": [list(p) for p in self.virtual_gossips],
            "transmissions": self.transmissions,
            "x": [format_rational(v) for v in self.x_after],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "IterationRecord":
        return cls(
            t=int(obj["t"]),
            preferred={int(k): int(v) for k, v in obj["preferred"].items()},
            requests=tuple(tuple(p) for p in obj["requests"]),
            acceptances=tuple(tuple(p) for p in obj["acceptances"]),
            gossips=tuple(tuple(p) for p in obj["gossips"]),
            virtual_gossips=tuple(tuple(p) for p in obj["virtual_gossips"]),
            transmissions=int(obj["transmissions"]),
            x_after=tuple(parse_rational(s) for s in obj["x"]),
        )


def format_rational(v: Fraction) -> str:
    return f"{v.numerator}/{v.denominator}"


def parse_rational(s) -> Fraction:
    return Fraction(s) if not isinstance(s, Fraction) else s


@dataclass
class SimState:
    graph: Graph
    protocol: Protocol
    agents: list[AgentState]
    x0: tuple[Fraction, ...]
    t: int = 0
    trace: list[IterationRecord] = field(default_factory=list)

    @property
    def x(self) -> tuple[Fraction, ...]:
        return tuple(a.x for a in self.agents)

    @property
    def queues(self) -> dict[int, tuple[int, ...]]:
        return {a.id: tuple(a.queue) for a in self.agents}

    def agent(self, i: int) -> AgentState:
        return self.agents[i - 1]

    def key(self) -> tuple:
        """Exact, hashable snapshot of the global state."""
        return tuple((a.x, tuple(a.queue)) for a in self.agents)

    @property
    def y_avg(self) -> Fraction:
        return sum(self.x0, Fraction(0)) / self.graph.n


def seeded_queues(g: Graph, seed: int) -> dict[int, list[int]]:
    rng = random.Random(seed)
    out = {}
    for i in g.vertices:
        q = list(g.neighbors[i])
        rng.shuffle(q)
        out[i] = q
    return out


def init_sim(
    g: Graph,
    protocol,
    x0: Sequence,
    queues: dict[int, Sequence[int]] | Sequence[Sequence[int]] | None = None,
    *,
    queue_seed: int | None = None,
) -> SimState:
    """Create a simulation at ``t = 0``.

    ``queues`` may be a mapping ``label -> list`` or a list indexed by
    ``label - 1``. Without explicit queues, ``queue_seed`` shuffles each
    neighbor set deterministically; with neither, queues are sorted.
    """
    protocol = Protocol.parse(protocol)
    if len(x0) != g.n:
        raise ValueError(f"x0 has length {len(x0)}, graph has {g.n} vertices")
    if queues is None:
        if queue_seed is not None:
            queues = seeded_queues(g, queue_seed)
        else:
            queues = {i: list(g.neighbors[i]) for i in g.vertices}
    elif not isinstance(queues, dict):
        if len(queues) != g.n:
            raise QueueError(f"expected {g.n} queues, got {len(queues)}")
        queues = {i + 1: q for i, q in enumerate(queues)}
    agents = []
    for i in g.vertices:
        q = [int(j) for j in queues.get(i, ())]
        if len(q) != len(set(q)) or set(q) != set(g.neighbors[i]):
            raise QueueError(
                f"queue of agent {i} must be a permutation of {list(g.neighbors[i])}, got {q}"
            )
        agents.append(AgentState(i, parse_rational(x0[i - 1]), q))
    xs = tuple(a.x for a in agents)
    return SimState(g, protocol, agents, xs)


def _move_to_end(queue: list[int], labels: Iterable[int]) -> list[int]:
    """Move ``labels`` to the back, keeping their current relative order."""
    moved = set(labels)
    return [j for j in queue if j not in moved] + [j for j in queue if j in moved]


def step(s: SimState) -> IterationRecord:
    """Advance one iteration in place and return its record."""
    g, proto = s.graph, s.protocol
    n = g.n
    x = {a.id: a.x for a in s.agents}
    pref = {a.id: a.queue[0] for a in s.agents}

    # steps 1-2: i learns x of pref[i] and of every j with pref[j] == i
    preferred_by: dict[int, list[int]] = {i: [] for i in g.vertices}
    for j, i in pref.items():
        preferred_by[i].append(j)

    requested = {i: x[i] > x[pref[i]] for i in g.vertices}
    requests = tuple((i, pref[i]) for i in g.vertices if requested[i])
    requesters: dict[int, list[int]] = {i: [] for i in g.vertices}
    for i, j in requests:
        requesters[j].append(i)

    # step 3
    acceptances = []
    for i in g.vertices:
        if not requesters[i]:
            continue
        if proto is Protocol.I:
            ok = not requested[i]
        else:
            ok = x[i] < x[pref[i]]
        if ok:
            queue = s.agent(i).queue
            chosen = min(requesters[i], key=queue.index)
            acceptances.append((i, chosen))

    partner: dict[int, int] = {}
    for a, r in acceptances:
        partner[a] = r
        partner[r] = a
    gossips = tuple(sorted((min(a, r), max(a, r)) for a, r in acceptances))

    # step 4
    virtual: list[tuple[int, int]] = []
    for agent in s.agents:
        i = agent.id
        j = partner.get(i)
        if proto is Protocol.III:
            receivers = [k for k in agent.queue if k == pref[i] or pref[k] == i]
            equal = [k for k in receivers if x[k] == x[i] and k != j]
            virtual.extend((i, k) for k in equal)
            block = equal + ([j] if j is not None else [])
            if block:
                agent.queue = _move_to_end(agent.queue, block)
        elif j is not None:
            agent.queue = _move_to_end(agent.queue, [j])
        elif x[i] == x[pref[i]]:
            virtual.append((i, pref[i]))
            agent.queue = _move_to_end(agent.queue, [pref[i]])
        if j is not None:
            agent.x = (x[i] + x[j]) / 2

    rec = IterationRecord(
        t=s.t,
        preferred=pref,
        requests=requests,
        acceptances=tuple(acceptances),
        gossips=gossips,
        virtual_gossips=tuple(virtual),
        transmissions=2 * n + len(acceptances),
        x_after=s.x,
    )
    s.trace.append(rec)
    s.t += 1
    return rec


def complete_disagreement(x: Sequence[Fraction]) -> Fraction:
    """Sum of |x_i - x_j| over all unordered pairs, via the sorted-order identity."""
    xs = sorted(x)
    n = len(xs)
    return sum(((2 * k - n + 1) * v for k, v in enumerate(xs)), Fraction(0))


def run(s: SimState, max_iters: int, stop_ratio: Fraction | None = None) -> SimState:
    """Step until ``max_iters`` more iterations, exact consensus, or
    ``V(t) / V(0) < stop_ratio`` with V the all-pairs disagreement."""
    if max_iters < 0:
        raise ValueError("max_iters must be >= 0")
    v0 = complete_disagreement(s.x0)
    for _ in range(max_iters):
        v = complete_disagreement(s.x)
        if v == 0:
            break
        if stop_ratio is not None and v < Fraction(stop_ratio) * v0:
            break
        step(s)
    return s


def queue_leaders(s: SimState, i: int) -> list[int]:
    """Chain of preferred neighbors from ``i`` up to and including the first repeat."""
    chain = [i]
    seen = {i}
    while True:
        nxt = s.agent(chain[-1]).queue[0]
        chain.append(nxt)
        if nxt in seen:
            return chain
        seen.add(nxt)


@dataclass(frozen=True)
class CycleReport:
    start: int
    length: int
    disagreement: Fraction


def detect_cycle(s: SimState, horizon: int) -> CycleReport | None:
    """Step up to ``horizon`` times, watching for an exact global state repeat.

    Determinism means a repeat is a perpetual cycle. ``start`` is the first
    time the repeated state was seen and ``length`` the cycle period.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    seen = {s.key(): s.t}
    for _ in range(horizon):
        step(s)
        k = s.key()
        if k in seen:
            return CycleReport(seen[k], s.t - seen[k], complete_disagreement(s.x))
        seen[k] = s.t
    return None
