"""End-to-end benchmark: load or simulate data, sweep each algorithm, score, report."""

from __future__ import annotations

import json
import logging
import platform
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .counterfactual import CounterfactualQuery, counterfactual_error
from .discovery import ALGORITHMS, DiscoveryOptions, alpha_grid, threshold_sweep
from .graphs import Dag, load_graph, save_graph
from .io import Manifest, read_csv, simulate_benchmark_dataset
from .metrics import MetricReport, auc, edge_confusion, nrmse_av, prf, shd, sid

log = logging.getLogger(__name__)

METRIC_GROUPS = ("structural", "predictive", "counterfactual")
DEFAULT_PENALTY_GRID = tuple(2.0**k for k in range(-3, 11))
DEFAULT_THRESHOLD = {"pc": 0.05, "fci": 0.05, "ges": 1.0}


class ConfigError(ValueError):
    pass


class BenchTimeout(Exception):
    pass


@dataclass
class AlgorithmSpec:
    """One algorithm entry: id, option overrides, optional own grid, selection policy.

    ``select="best_f"`` picks the best-F graph when a truth graph is known;
    ``select="default"`` always reports the run at the algorithm's default
    threshold (GES uses this: its grid only feeds the AUC).
    """

    id: str
    options: dict = field(default_factory=dict)
    grid: list | None = None
    select: str | None = None

    def __post_init__(self):
        if self.id not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.id!r}; expected one of {list(ALGORITHMS)}")
        if self.select is None:
            self.select = "default" if self.id == "ges" else "best_f"
        if self.select not in ("best_f", "default"):
            raise ConfigError(f"select must be 'best_f' or 'default', got {self.select!r}")
        try:
            DiscoveryOptions(**self.options)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{self.id}: bad options {self.options}: {exc}") from exc


@dataclass
class BenchConfig:
    algorithms: list
    out: str
    seed: int | None = None
    simulate: dict | None = None
    manifest: str | None = None
    truth: str | None = None
    grid: list = field(default_factory=alpha_grid)
    metrics: tuple = METRIC_GROUPS
    timeout: float = 3600.0

    def __post_init__(self):
        self.algorithms = [a if isinstance(a, AlgorithmSpec) else _algo_spec(a) for a in self.algorithms]
        if not self.algorithms:
            raise ConfigError("at least one algorithm is required")
        if (self.simulate is None) == (self.manifest is None):
            raise ConfigError("exactly one of 'simulate' and 'manifest' is required")
        if self.simulate is not None and self.seed is None:
            raise ConfigError("a seed is mandatory when simulating")
        self.grid = sorted(float(g) for g in self.grid)
        if not self.grid or any(not 0.0 <= g <= 1.0 for g in self.grid):
            raise ConfigError("grid values must lie in [0, 1]")
        if len(set(self.grid)) != len(self.grid):
            raise ConfigError("grid values must be distinct")
        unknown = set(self.metrics) - set(METRIC_GROUPS)
        if unknown:
            raise ConfigError(f"unknown metric groups {sorted(unknown)}")
        self.metrics = tuple(m for m in METRIC_GROUPS if m in set(self.metrics))
        if self.timeout <= 0:
            raise ConfigError("timeout must be positive")

    @classmethod
    def from_dict(cls, doc: dict, base_dir=".") -> "BenchConfig":
        doc = dict(doc)
        known = {"algorithms", "out", "seed", "simulate", "manifest", "truth", "grid", "metrics", "timeout"}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        base = Path(base_dir)
        for key in ("manifest", "truth", "out"):
            if doc.get(key) is not None:
                doc[key] = str(base / doc[key])
        if isinstance(doc.get("grid"), (str, dict)):
            doc["grid"] = parse_grid(doc["grid"])
        if isinstance(doc.get("metrics"), str):
            doc["metrics"] = doc["metrics"].split(",")
        if "out" not in doc:
            raise ConfigError("'out' is required")
        try:
            return cls(**doc)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path) -> "BenchConfig":
        path = Path(path)
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        return cls.from_dict(doc, path.parent)


def _algo_spec(entry) -> AlgorithmSpec:
    if isinstance(entry, str):
        return AlgorithmSpec(entry)
    if isinstance(entry, dict):
        return AlgorithmSpec(**entry)
    raise ConfigError(f"bad algorithm entry {entry!r}")


def parse_grid(spec) -> list[float]:
    """``"start:step:end"``, ``{"start", "step", "end"}``, or a comma list."""
    if isinstance(spec, dict):
        return alpha_grid(float(spec["start"]), float(spec["step"]), float(spec["end"]))
    spec = str(spec)
    if ":" in spec:
        try:
            start, step, end = (float(p) for p in spec.split(":"))
        except ValueError:
            raise ConfigError(f"grid must look like start:step:end, got {spec!r}") from None
        if step <= 0 or end < start:
            raise ConfigError(f"empty grid {spec!r}")
        return alpha_grid(start, step, end)
    try:
        return [float(p) for p in spec.split(",") if p.strip()]
    except ValueError:
        raise ConfigError(f"cannot parse grid {spec!r}") from None


def _open_grid(grid, algo_id):
    """Significance levels must be strictly inside (0, 1); endpoints are dropped."""
    if algo_id == "ges":
        return list(grid)
    return [g for g in grid if 0.0 < g < 1.0]


@dataclass
class BenchOutcome:
    report: MetricReport
    exit_code: int
    out_dir: Path


def _structural(graph, truth: Dag) -> dict:
    c = edge_confusion(graph, truth)
    r = prf(c)
    return dict(tp=c.tp, fp=c.fp, fn=c.fn, tn=c.tn, f_score=r.f_score, precision=r.precision,
                recall=r.recall, fpr=r.fpr, shd=shd(graph, truth), sid=sid(truth, graph))


def run_benchmark(config: BenchConfig) -> BenchOutcome:
    """Run every configured algorithm and write report.csv, report.md, graphs/ and metadata.json."""
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "graphs").mkdir(exist_ok=True)
    timings = {}

    if config.simulate is not None:
        sim = dict(config.simulate)
        t0 = time.perf_counter()
        manifest = simulate_benchmark_dataset(config.seed, out / "data", **sim)
        timings["simulate"] = time.perf_counter() - t0
    else:
        manifest = Manifest.load(config.manifest)
    data = read_csv(manifest.resolve(manifest.observational))
    truth_path = config.truth or (manifest.resolve(manifest.truth) if manifest.truth else None)
    truth = load_graph(truth_path) if truth_path else None
    if truth is not None and not isinstance(truth, Dag):
        raise ConfigError(f"truth graph {truth_path} must be a DAG")
    if truth is not None:
        truth = Dag(truth.n, truth.edges, data.columns)
        save_graph(truth, out / "graphs" / "truth.json")
    query = None
    if "counterfactual" in config.metrics and manifest.counterfactual:
        query = CounterfactualQuery.from_json(manifest.resolve(manifest.counterfactual))

    structural = truth is not None and "structural" in config.metrics
    report = MetricReport()
    failures = 0

    if truth is not None:
        row = dict(algorithm="true_graph", selected=True, status="ok")
        if structural:
            row.update(_structural(truth, truth))
        failures += _fill_inference(row, truth, data, query, config)
        report.add(**row)

    for spec in config.algorithms:
        t0 = time.perf_counter()
        grid = spec.grid if spec.grid is not None else (
            list(DEFAULT_PENALTY_GRID) if spec.id == "ges" else _open_grid(config.grid, spec.id))
        deadline_at = time.monotonic() + config.timeout

        def deadline():
            if time.monotonic() > deadline_at:
                raise BenchTimeout

        try:
            opts = DiscoveryOptions(**spec.options)
            select_truth = truth if spec.select == "best_f" else None
            sweep = threshold_sweep(data, spec.id, grid, select_truth, opts, deadline)
            selected = sweep.selected if select_truth is not None else _nearest(sweep.thresholds, DEFAULT_THRESHOLD[spec.id])
            area = auc(sweep, truth) if structural else None
        except BenchTimeout:
            report.add(algorithm=spec.id, status="timeout")
            failures += 1
            timings[spec.id] = time.perf_counter() - t0
            continue
        except Exception as exc:  # one failing algorithm must not abort the others
            log.warning("%s failed: %s", spec.id, exc)
            report.add(algorithm=spec.id, status=f"error: {type(exc).__name__}: {exc}")
            failures += 1
            timings[spec.id] = time.perf_counter() - t0
            continue
        save_graph(sweep.graphs[selected], out / "graphs" / f"{spec.id}.json")
        for k, (t, g) in enumerate(zip(sweep.thresholds, sweep.graphs)):
            row = dict(algorithm=spec.id, threshold=t, selected=k == selected, status="ok", auc=area)
            if structural:
                row.update(_structural(g, truth))
            if k == selected:
                failures += _fill_inference(row, g, data, query, config)
            report.add(**row)
        timings[spec.id] = time.perf_counter() - t0

    (out / "report.csv").write_text(report.to_csv(), encoding="utf-8")
    (out / "report.md").write_text(report.to_markdown(), encoding="utf-8")
    meta = {
        "seed": config.seed,
        "grid": config.grid,
        "algorithms": [{"id": a.id, "options": a.options, "grid": a.grid, "select": a.select} for a in config.algorithms],
        "metrics": list(config.metrics),
        "versions": {"causalbench": __version__, "numpy": np.__version__, "python": platform.python_version()},
        "wall_seconds": timings,
    }
    (out / "metadata.json").write_text(json.dumps(meta, indent=1) + "\n", encoding="utf-8")
    return BenchOutcome(report, 3 if failures else 0, out)


def _nearest(thresholds, target) -> int:
    return min(range(len(thresholds)), key=lambda k: (abs(thresholds[k] - target), k))


def _fill_inference(row, graph, data, query, config) -> int:
    """Add NRMSE and CE to ``row``; returns the number of failed metrics."""
    failed = 0
    if "predictive" in config.metrics:
        try:
            row["nrmse_av"] = nrmse_av(graph, data)
        except Exception as exc:
            row["status"] = f"nrmse error: {exc}"
            failed += 1
    if query is not None:
        try:
            row["counterfactual_error"] = counterfactual_error(query, graph)
        except Exception as exc:
            row["status"] = f"counterfactual error: {exc}"
            failed += 1
    return failed
