"""Command line entry point: ``reqgossip {run,verify,compare,search-failure,gen-graph}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from fractions import Fraction
from pathlib import Path

from .analysis import verify_bound
from .graph import GraphError, GraphKind, format_edge_list, generate, graph_from_json, graph_to_json
from .harness import (
    ConfigError,
    ExperimentConfig,
    SearchSpace,
    compare_protocols,
    read_trace,
    run_experiment,
    search_failure,
    small_graph_family,
)

log = logging.getLogger("reqgossip")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _parse_gen(text: str, seed: int) -> dict:
    parts = text.split(",")
    if len(parts) not in (2, 3):
        raise ConfigError("gen", f"expected KIND,n[,p], got {text!r}")
    d = {"kind": parts[0], "n": int(parts[1]), "seed": seed}
    if len(parts) == 3:
        d["p"] = float(parts[2])
    return d


def _parse_queues(text: str) -> list[list[int]]:
    # "2;1,3;2" -> [[2], [1, 3], [2]]
    return [[int(v) for v in chunk.split(",") if v.strip()] for chunk in text.split(";")]


def _parse_range(text: str) -> tuple[int, int]:
    lo, _, hi = text.partition(":")
    try:
        return int(lo), int(hi)
    except ValueError:
        raise ConfigError("x0-range", f"expected LO:HI, got {text!r}") from None


def _add_setup_flags(p: argparse.ArgumentParser, with_protocol: bool = True) -> None:
    src = p.add_mutually_exclusive_group()
    src.add_argument("--graph", metavar="FILE", help="edge-list or .json graph file")
    src.add_argument("--gen", metavar="KIND,n[,p]", help="generate a graph")
    p.add_argument("--graph-seed", type=int, default=0, help="seed for random graph kinds")
    if with_protocol:
        p.add_argument("--protocol", default="2", help="1, 2 or 3")
    p.add_argument("--x0", help="comma-separated initial values, e.g. 4,2,0 or 1/2,3")
    p.add_argument("--x0-seed", type=int)
    p.add_argument("--x0-range", default="0:100", help="LO:HI for random integer values")
    p.add_argument("--queues", help="per-agent queues separated by ';', e.g. '2;1,3;2'")
    p.add_argument("--queue-seed", type=int)
    p.add_argument("--max-iters", type=int, default=100)
    p.add_argument("--stop-ratio", help="stop once V(t)/V(0) falls below P/Q")


def _config_from_args(a: argparse.Namespace, protocol=None) -> ExperimentConfig:
    if a.graph is None and a.gen is None:
        raise ConfigError("graph", "give --graph FILE or --gen KIND,n[,p]")
    cfg = ExperimentConfig(
        protocol=protocol if protocol is not None else a.protocol,
        graph_file=a.graph,
        graph_kind=_parse_gen(a.gen, a.graph_seed) if a.gen else None,
        x0=a.x0.split(",") if a.x0 else None,
        x0_seed=a.x0_seed,
        x0_range=_parse_range(a.x0_range),
        queues=_parse_queues(a.queues) if a.queues else None,
        queue_seed=a.queue_seed,
        max_iters=a.max_iters,
        stop_ratio=a.stop_ratio,
        claims=[c for c in (getattr(a, "claims", None) or "").split(",") if c],
        out_dir=getattr(a, "out", None),
    )
    cfg.validate()
    return cfg


def _print_reports(reports) -> None:
    for r in reports:
        status = "PASS" if r.passed else "FAIL"
        extra = f" counterexample={json.dumps(r.counterexample)}" if r.counterexample else ""
        print(f"{status} {r.claim} (protocol {r.protocol}, windows={r.windows_checked}){extra}")


def cmd_run(a) -> int:
    if a.config:
        cfg = ExperimentConfig.from_dict(json.loads(Path(a.config).read_text()))
        if a.out:
            cfg.out_dir = a.out
    else:
        cfg = _config_from_args(a)
    res = run_experiment(cfg)
    s = res.sim
    print(f"protocol {s.protocol.name}: {len(s.trace)} iterations, "
          f"x = [{', '.join(f'{float(v):.6g}' for v in s.x)}]")
    for name, path in res.files.items():
        log.info("wrote %s", path)
    _print_reports(res.reports)
    return EXIT_OK if res.all_passed else EXIT_FAIL


def cmd_verify(a) -> int:
    run_dir = Path(a.run_dir)
    cfg = json.loads((run_dir / "config.json").read_text())
    trace = read_trace((run_dir / "trace.jsonl").read_text())
    g = graph_from_json(cfg["graph"])
    x0 = [Fraction(v) for v in cfg["x0"]]
    claims = [c for c in a.claims.split(",") if c] if a.claims else cfg["claims"]
    if not claims:
        raise ConfigError("claims", "nothing to verify")
    try:
        reports = [verify_bound(trace, g, c, cfg["protocol"], x0) for c in claims]
    except ValueError as e:
        raise ConfigError("claims", str(e)) from None
    _print_reports(reports)
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAIL


def cmd_compare(a) -> int:
    cfg = _config_from_args(a, protocol=2)
    g = cfg.build_graph()
    x0 = cfg.build_x0(g.n)
    stop = Fraction(cfg.stop_ratio) if cfg.stop_ratio else Fraction(1, 10**6)
    rep = compare_protocols(g, x0, cfg.queues, queue_seed=cfg.queue_seed,
                            stop_ratio=stop, max_iters=cfg.max_iters)
    text = json.dumps(rep.to_json(), indent=2)
    if a.out:
        Path(a.out).mkdir(parents=True, exist_ok=True)
        (Path(a.out) / "comparison.json").write_text(text + "\n")
    print(text)
    return EXIT_OK


def cmd_search(a) -> int:
    values = tuple(int(v) for v in a.values.split(","))
    space = SearchSpace(small_graph_family(a.max_n), values=values,
                        queue_limit=a.queue_limit, x0_limit=a.x0_limit)
    cert = search_failure(space, a.horizon, a.protocol)
    if cert is None:
        print("no exact cycle with positive disagreement found")
        return EXIT_FAIL
    text = json.dumps(cert.to_json(), indent=2)
    if a.out:
        Path(a.out).write_text(text + "\n")
    print(text)
    return EXIT_OK


def cmd_gen_graph(a) -> int:
    spec = _parse_gen(a.gen, a.seed)
    try:
        g = generate(GraphKind(**spec))
    except GraphError as e:
        raise ConfigError("gen", str(e)) from None
    text = json.dumps(graph_to_json(g)) + "\n" if a.format == "json" else format_edge_list(g)
    if a.out:
        Path(a.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="reqgossip", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one experiment")
    _add_setup_flags(r)
    r.add_argument("--config", help="JSON experiment config (overrides the other flags)")
    r.add_argument("--claims", help="comma-separated verifier claims")
    r.add_argument("--out", help="output directory")
    r.set_defaults(func=cmd_run)

    v = sub.add_parser("verify", help="check claims against a saved run")
    v.add_argument("run_dir", help="directory written by `run --out`")
    v.add_argument("--claims", help="comma-separated claims (default: those in config.json)")
    v.set_defaults(func=cmd_verify)

    c = sub.add_parser("compare", help="Protocol II vs III from identical initial conditions")
    _add_setup_flags(c, with_protocol=False)
    c.add_argument("--out", help="output directory")
    c.set_defaults(func=cmd_compare, max_iters=10_000)

    s = sub.add_parser("search-failure", help="look for an exact non-consensus cycle")
    s.add_argument("--protocol", default="1")
    s.add_argument("--max-n", type=int, default=6)
    s.add_argument("--values", default="0,1,2")
    s.add_argument("--queue-limit", type=int, default=64)
    s.add_argument("--x0-limit", type=int)
    s.add_argument("--horizon", type=int, default=200)
    s.add_argument("--out", help="write the certificate JSON here")
    s.set_defaults(func=cmd_search)

    gg = sub.add_parser("gen-graph", help="emit a generated graph")
    gg.add_argument("--gen", required=True, metavar="KIND,n[,p]")
    gg.add_argument("--seed", type=int, default=0)
    gg.add_argument("--format", choices=("edges", "json"), default="edges")
    gg.add_argument("--out")
    gg.set_defaults(func=cmd_gen_graph)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    a = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return a.func(a)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (GraphError, ValueError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
