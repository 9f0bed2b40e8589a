"""Command-line entry point: simulate, discover, evaluate, counterfactual, bench.

Exit codes: 0 success, 1 configuration error, 2 data error, 3 partial failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .bench import METRIC_GROUPS, BenchConfig, ConfigError, parse_grid, run_benchmark
from .discovery import ALGORITHMS, DiscoveryOptions, threshold_sweep
from .graphs import Dag, GraphError, load_graph, save_graph
from .io import DataError, read_csv, simulate_benchmark_dataset
from .stats import DegenerateError, SampleSizeError

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_PARTIAL = 0, 1, 2, 3

DEFAULT_THRESHOLD = {"pc": 0.05, "fci": 0.05, "ges": 1.0}


def _print_json(obj) -> None:
    json.dump(obj, sys.stdout, indent=1)
    sys.stdout.write("\n")


def cmd_simulate(args) -> int:
    simulate_benchmark_dataset(args.seed, args.out, num_nodes=args.nodes,
                               edge_probability=args.edge_probability, n_obs=args.n_obs, n_int=args.n_int)
    print(Path(args.out) / "manifest.json")
    return EXIT_OK


def cmd_discover(args) -> int:
    data = read_csv(args.data)
    truth = _load_truth(args.truth, data) if args.truth else None
    grid = parse_grid(args.grid) if args.grid else [args.threshold if args.threshold is not None
                                                    else DEFAULT_THRESHOLD[args.algo]]
    opts = DiscoveryOptions(max_cond_size=args.max_cond_size)
    sweep = threshold_sweep(data, args.algo, grid, truth, opts)
    save_graph(sweep.best, args.out)
    info = {"algorithm": args.algo, "threshold": sweep.best_threshold, "out": str(args.out)}
    if sweep.f_scores is not None:
        info["f_score"] = sweep.f_scores[sweep.selected]
    _print_json(info)
    return EXIT_OK


def cmd_evaluate(args) -> int:
    from .metrics import auc, edge_confusion, nrmse_av, prf, shd, sid

    graph = load_graph(args.graph)
    out = {}
    if args.truth:
        truth = load_graph(args.truth)
        if not isinstance(truth, Dag):
            raise ConfigError("truth graph must be a DAG")
        c = edge_confusion(graph, truth)
        r = prf(c)
        out.update(tp=c.tp, fp=c.fp, fn=c.fn, tn=c.tn, precision=r.precision, recall=r.recall,
                   fpr=r.fpr, f_score=r.f_score, auc=auc([graph], truth), shd=shd(graph, truth),
                   sid=sid(truth, graph))
    if args.data:
        out["nrmse_av"] = nrmse_av(graph, read_csv(args.data))
    if not out:
        raise ConfigError("evaluate needs --truth and/or --data")
    _print_json(out)
    return EXIT_OK


def cmd_counterfactual(args) -> int:
    from .counterfactual import CounterfactualQuery, counterfactual_analysis

    query = CounterfactualQuery.from_json(args.query)
    graph = load_graph(args.graph)
    res = counterfactual_analysis(query, graph, winsorize=not args.no_winsorize)
    cols = query.observational.columns
    _print_json({
        "counterfactual_error": res.ce,
        "targets": [cols[t] for t in query.targets],
        "delta_act": list(res.delta_act),
        "delta_pred": list(res.delta_pred),
        "counterfactual_means": list(res.counter_means),
        "effective_sample_size": res.ess,
        "flagged_samples": res.flagged_samples,
        "missing_parents": [cols[p] for p in res.missing_parents],
    })
    return EXIT_OK


def cmd_bench(args) -> int:
    doc = {}
    base = "."
    if args.config:
        path = Path(args.config)
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        base = path.parent
    config = BenchConfig.from_dict(doc, base) if doc else None
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.algo:
        overrides["algorithms"] = args.algo
    if args.grid:
        overrides["grid"] = parse_grid(args.grid)
    if args.truth:
        overrides["truth"] = args.truth
    if args.out:
        overrides["out"] = args.out
    if args.metrics:
        overrides["metrics"] = [m.strip() for m in args.metrics.split(",") if m.strip()]
    if args.timeout is not None:
        overrides["timeout"] = args.timeout
    if args.manifest:
        overrides["manifest"] = args.manifest
    if config is None:
        fields = {"algorithms": list(ALGORITHMS)}
        if "manifest" not in overrides:
            fields["simulate"] = {}
        fields.update(overrides)
        if "out" not in fields:
            raise ConfigError("--out or a config file with 'out' is required")
        config = _make_config(fields)
    elif overrides:
        fields = {k: getattr(config, k) for k in ("algorithms", "out", "seed", "simulate", "manifest", "truth",
                                                 "grid", "metrics", "timeout")}
        if "manifest" in overrides:
            fields["simulate"] = None
        fields.update(overrides)
        config = _make_config(fields)
    outcome = run_benchmark(config)
    sys.stdout.write(outcome.report.to_markdown())
    return outcome.exit_code


def _make_config(fields) -> BenchConfig:
    unknown = set(fields.get("metrics", ())) - set(METRIC_GROUPS)
    if unknown:
        raise ConfigError(f"unknown metric groups {sorted(unknown)}")
    try:
        return BenchConfig(**fields)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def _load_truth(path, data) -> Dag:
    g = load_graph(path)
    if not isinstance(g, Dag):
        raise ConfigError(f"truth graph {path} must be a DAG")
    if g.n != data.m:
        raise DataError(f"truth graph has {g.n} nodes, data has {data.m} columns")
    return g


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="causalbench", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="write a seeded simulated benchmark dataset")
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--nodes", type=int, default=10)
    s.add_argument("--edge-probability", type=float, default=0.3)
    s.add_argument("--n-obs", type=int, default=10_000)
    s.add_argument("--n-int", type=int, default=1_000)
    s.set_defaults(func=cmd_simulate)

    d = sub.add_parser("discover", help="learn a graph from a CSV file")
    d.add_argument("--data", required=True)
    d.add_argument("--algo", choices=ALGORITHMS, default="pc")
    d.add_argument("--threshold", type=float, help="alpha for pc/fci, penalty multiplier for ges")
    d.add_argument("--grid", help="sweep 'start:step:end' (best F is kept when --truth is given)")
    d.add_argument("--truth")
    d.add_argument("--max-cond-size", type=int)
    d.add_argument("--out", required=True)
    d.set_defaults(func=cmd_discover)

    e = sub.add_parser("evaluate", help="score a graph against a truth graph and/or data")
    e.add_argument("--graph", required=True)
    e.add_argument("--truth")
    e.add_argument("--data")
    e.set_defaults(func=cmd_evaluate)

    c = sub.add_parser("counterfactual", help="counterfactual error of a graph for a query")
    c.add_argument("--query", required=True)
    c.add_argument("--graph", required=True)
    c.add_argument("--no-winsorize", action="store_true", help="keep raw importance weights")
    c.set_defaults(func=cmd_counterfactual)

    b = sub.add_parser("bench", help="run the end-to-end benchmark")
    b.add_argument("--config")
    b.add_argument("--seed", type=int)
    b.add_argument("--algo", action="append", choices=ALGORITHMS)
    b.add_argument("--grid")
    b.add_argument("--truth")
    b.add_argument("--manifest")
    b.add_argument("--out")
    b.add_argument("--metrics", help="comma list of " + ",".join(METRIC_GROUPS))
    b.add_argument("--timeout", type=float, help="per-algorithm budget in seconds (default 3600)")
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, GraphError, DegenerateError, SampleSizeError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
