"""Deterministic request-based gossip protocols with exact arithmetic."""

from .engine import IterationRecord, Protocol, SimState, init_sim, run, step
from .graph import Graph, GraphKind, build_graph, generate, metrics

__all__ = [
    "Graph",
    "GraphKind",
    "IterationRecord",
    "Protocol",
    "SimState",
    "build_graph",
    "generate",
    "init_sim",
    "metrics",
    "run",
    "step",
]
