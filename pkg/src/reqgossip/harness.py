"""Experiment configuration, batch runs, protocol comparison and the
Protocol I failure search."""

from __future__ import annotations

import csv
import io
import itertools
import json
import random
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Iterator, Sequence

from .analysis import CLAIMS, BoundReport, verify_bound
from .engine import (
    IterationRecord,
    Protocol,
    SimState,
    complete_disagreement,
    detect_cycle,
    format_rational,
    init_sim,
    run,
    seeded_queues,
)
from .graph import (
    Graph,
    GraphError,
    GraphKind,
    generate,
    graph_from_json,
    graph_to_json,
    load_graph,
    metrics,
)
from .matrices import reconstruct_consistent_sequence, repetitive_completeness_period


class ConfigError(ValueError):
    """Invalid experiment configuration; ``field`` names the offending entry."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


@dataclass
class ExperimentConfig:
    protocol: int | str = 2
    graph_file: str | None = None
    graph_kind: dict | None = None
    graph: dict | None = None
    x0: list[str] | None = None
    x0_seed: int | None = None
    x0_range: tuple[int, int] = (0, 100)
    queues: list[list[int]] | None = None
    queue_seed: int | None = None
    max_iters: int = 100
    stop_ratio: str | None = None
    claims: list[str] = field(default_factory=list)
    out_dir: str | None = None

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise ConfigError(sorted(extra)[0], "unknown configuration field")
        cfg = cls(**d)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        try:
            Protocol.parse(self.protocol)
        except ValueError as e:
            raise ConfigError("protocol", str(e)) from None
        sources = [s for s in (self.graph_file, self.graph_kind, self.graph) if s is not None]
        if len(sources) != 1:
            raise ConfigError("graph", "give exactly one of graph_file, graph_kind, graph")
        if self.x0 is None and self.x0_seed is None:
            raise ConfigError("x0", "give explicit x0 values or x0_seed")
        lo, hi = self.x0_range
        if lo > hi:
            raise ConfigError("x0_range", f"empty range {lo}:{hi}")
        if self.max_iters < 0:
            raise ConfigError("max_iters", "must be >= 0")
        if self.stop_ratio is not None:
            try:
                r = Fraction(self.stop_ratio)
            except (ValueError, ZeroDivisionError):
                raise ConfigError("stop_ratio", f"not a rational: {self.stop_ratio!r}") from None
            if r <= 0:
                raise ConfigError("stop_ratio", "must be positive")
        for c in self.claims:
            if c not in CLAIMS:
                raise ConfigError("claims", f"unknown claim {c!r}")

    def build_graph(self) -> Graph:
        try:
            if self.graph_file is not None:
                return load_graph(self.graph_file)
            if self.graph is not None:
                return graph_from_json(self.graph)
            return generate(GraphKind(**self.graph_kind))
        except (GraphError, TypeError, KeyError) as e:
            raise ConfigError("graph", str(e)) from None

    def build_x0(self, n: int) -> list[Fraction]:
        if self.x0 is not None:
            try:
                xs = [Fraction(v) for v in self.x0]
            except (ValueError, ZeroDivisionError) as e:
                raise ConfigError("x0", str(e)) from None
            if len(xs) != n:
                raise ConfigError("x0", f"expected {n} values, got {len(xs)}")
            return xs
        return random_x0(n, self.x0_seed, *self.x0_range)

    def build_sim(self) -> SimState:
        g = self.build_graph()
        x0 = self.build_x0(g.n)
        try:
            return init_sim(g, self.protocol, x0, self.queues, queue_seed=self.queue_seed)
        except ValueError as e:
            raise ConfigError("queues", str(e)) from None


def random_x0(n: int, seed: int, lo: int, hi: int) -> list[Fraction]:
    rng = random.Random(seed)
    return [Fraction(rng.randint(lo, hi)) for _ in range(n)]


# --- output formats ------------------------------------------------------------

def trace_jsonl(trace: Sequence[IterationRecord]) -> str:
    return "".join(json.dumps(r.to_json(), separators=(",", ":")) + "\n" for r in trace)


def read_trace(text: str) -> list[IterationRecord]:
    return [IterationRecord.from_json(json.loads(ln)) for ln in text.splitlines() if ln.strip()]


def metrics_csv(x0: Sequence[Fraction], trace: Sequence[IterationRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "V", "gossips", "virtual_gossips", "transmissions"])
    w.writerow([0, float(complete_disagreement(x0)), 0, 0, 0])
    for r in trace:
        w.writerow([r.t + 1, float(complete_disagreement(r.x_after)), len(r.gossips),
                    len(r.virtual_gossips), r.transmissions])
    return buf.getvalue()


@dataclass
class ExperimentResult:
    sim: SimState
    reports: list[BoundReport]
    files: dict[str, Path]

    @property
    def all_passed(self) -> bool:
        return all(r.passed for r in self.reports)


def resolved_config(cfg: ExperimentConfig, s: SimState) -> dict:
    """Config with the graph, x0 and queues written out explicitly."""
    d = asdict(cfg)
    d.update(
        graph_file=None,
        graph_kind=None,
        graph=graph_to_json(s.graph),
        x0=[format_rational(v) for v in s.x0],
        x0_seed=None,
        queues=[list(q) for q in _initial_queues(cfg, s)],
        queue_seed=None,
        protocol=s.protocol.value,
        out_dir=None,
    )
    return d


def _initial_queues(cfg: ExperimentConfig, s: SimState) -> list[tuple[int, ...]]:
    if cfg.queues is not None:
        return [tuple(q) for q in cfg.queues]
    if cfg.queue_seed is not None:
        qs = seeded_queues(s.graph, cfg.queue_seed)
    else:
        qs = {i: list(s.graph.neighbors[i]) for i in s.graph.vertices}
    return [tuple(qs[i]) for i in s.graph.vertices]


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """Simulate, check matrix consistency, run verifiers, write outputs.

    Files written to ``cfg.out_dir`` (when set): ``trace.jsonl``,
    ``metrics.csv``, ``reports.json`` and ``config.json``, the last holding
    the fully resolved initial state so the run can be replayed.
    """
    cfg.validate()
    s = cfg.build_sim()
    init = resolved_config(cfg, s)
    stop = Fraction(cfg.stop_ratio) if cfg.stop_ratio is not None else None
    run(s, cfg.max_iters, stop)
    reconstruct_consistent_sequence(s.trace, s.graph, s.x0)
    reports = [verify_bound(s.trace, s.graph, c, s.protocol, s.x0) for c in cfg.claims]
    files: dict[str, Path] = {}
    if cfg.out_dir is not None:
        out = Path(cfg.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        payloads = {
            "trace.jsonl": trace_jsonl(s.trace),
            "metrics.csv": metrics_csv(s.x0, s.trace),
            "reports.json": json.dumps([r.to_json() for r in reports], indent=2) + "\n",
            "config.json": json.dumps(init, indent=2) + "\n",
        }
        for name, text in payloads.items():
            files[name] = out / name
            files[name].write_text(text)
    return ExperimentResult(s, reports, files)


# --- protocol comparison -------------------------------------------------------

@dataclass
class ProtocolSummary:
    protocol: str
    iterations: int
    reached_stop: bool
    total_transmissions: int
    max_transmissions: int
    total_gossips: int
    total_virtual_gossips: int
    completeness_period: int | None


@dataclass
class ComparisonReport:
    n: int
    d_avg: str
    broadcast_per_iteration: str
    request_cap_per_iteration: int
    broadcast_cheaper: bool
    stop_ratio: str
    protocols: dict[str, ProtocolSummary]

    def to_json(self) -> dict:
        return asdict(self)


def summarize(s: SimState, stop_ratio: Fraction) -> ProtocolSummary:
    """Derived from the trace only."""
    v0 = complete_disagreement(s.x0)
    last = s.trace[-1].x_after if s.trace else s.x0
    vl = complete_disagreement(last)
    seq = reconstruct_consistent_sequence(s.trace, s.graph)
    return ProtocolSummary(
        protocol=s.protocol.name,
        iterations=len(s.trace),
        reached_stop=vl == 0 or vl < stop_ratio * v0,
        total_transmissions=sum(r.transmissions for r in s.trace),
        max_transmissions=max((r.transmissions for r in s.trace), default=0),
        total_gossips=sum(len(r.gossips) for r in s.trace),
        total_virtual_gossips=sum(len(r.virtual_gossips) for r in s.trace),
        completeness_period=repetitive_completeness_period(seq, s.graph),
    )


def compare_protocols(
    g: Graph,
    x0: Sequence,
    queues=None,
    *,
    queue_seed: int | None = None,
    stop_ratio: Fraction = Fraction(1, 10**6),
    max_iters: int = 10_000,
    protocols: Iterable = (Protocol.II, Protocol.III),
) -> ComparisonReport:
    stop_ratio = Fraction(stop_ratio)
    gm = metrics(g)
    summaries = {}
    for p in protocols:
        s = init_sim(g, p, x0, queues, queue_seed=queue_seed)
        run(s, max_iters, stop_ratio)
        summaries[s.protocol.name] = summarize(s, stop_ratio)
    broadcast = g.n * gm.d_avg
    return ComparisonReport(
        n=g.n,
        d_avg=str(gm.d_avg),
        broadcast_per_iteration=str(broadcast),
        request_cap_per_iteration=2 * g.n + g.n // 2,
        broadcast_cheaper=gm.d_avg <= Fraction(5, 2),
        stop_ratio=str(stop_ratio),
        protocols=summaries,
    )


# --- Protocol I failure search -------------------------------------------------

@dataclass(frozen=True)
class FailureCertificate:
    """An exact state cycle with positive disagreement, replayable from its fields."""

    protocol: int
    graph: dict
    x0: list[str]
    queues: list[list[int]]
    cycle_start: int
    cycle_length: int
    disagreement: str

    def to_json(self) -> dict:
        return asdict(self)

    def replay(self, horizon: int | None = None):
        g = graph_from_json(self.graph)
        s = init_sim(g, self.protocol, [Fraction(v) for v in self.x0], self.queues)
        h = horizon if horizon is not None else self.cycle_start + self.cycle_length
        return detect_cycle(s, h), s


@dataclass(frozen=True)
class SearchSpace:
    """Graphs, initial value vectors and queue assignments to enumerate.

    ``queue_limit`` caps how many queue assignments per (graph, x0) are
    tried; assignments are enumerated in lexicographic product order.
    """

    graphs: tuple[Graph, ...]
    values: tuple[int, ...] = (0, 1, 2)
    queue_limit: int | None = 64
    x0_limit: int | None = None

    def instances(self) -> Iterator[tuple[Graph, tuple[Fraction, ...], dict[int, list[int]]]]:
        for g in self.graphs:
            x0s = itertools.product(self.values, repeat=g.n)
            for k, xs in enumerate(x0s):
                if self.x0_limit is not None and k >= self.x0_limit:
                    break
                if len(set(xs)) == 1:
                    continue
                perms = [list(itertools.permutations(g.neighbors[i])) for i in g.vertices]
                for q, combo in enumerate(itertools.product(*perms)):
                    if self.queue_limit is not None and q >= self.queue_limit:
                        break
                    yield g, tuple(Fraction(v) for v in xs), {
                        i: list(combo[i - 1]) for i in g.vertices
                    }


def small_graph_family(max_n: int = 6, seeds: Iterable[int] = range(3)) -> tuple[Graph, ...]:
    out = []
    for n in range(2, max_n + 1):
        kinds = ["path", "star", "complete"] + (["cycle"] if n >= 3 else [])
        out += [generate(GraphKind(k, n)) for k in kinds]
        out += [generate(GraphKind("random-connected", n, p=0.5, seed=sd)) for sd in seeds]
    unique = {(g.n, g.edges): g for g in out}
    return tuple(unique.values())


def search_failure(space: SearchSpace, horizon: int, protocol=Protocol.I) -> FailureCertificate | None:
    """First enumerated instance whose exact global state repeats with V > 0."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    protocol = Protocol.parse(protocol)
    for g, x0, queues in space.instances():
        s = init_sim(g, protocol, x0, queues)
        rep = detect_cycle(s, horizon)
        if rep is not None and rep.disagreement > 0:
            return FailureCertificate(
                protocol=protocol.value,
                graph=graph_to_json(g),
                x0=[format_rational(v) for v in x0],
                queues=[queues[i] for i in g.vertices],
                cycle_start=rep.start,
                cycle_length=rep.length,
                disagreement=format_rational(rep.disagreement),
            )
    return None


def search_protocol1_failure(space: SearchSpace, horizon: int) -> FailureCertificate | None:
    return search_failure(space, horizon, Protocol.I)
