"""Structural and predictive performance metrics.

Structural: confusion counts over ordered node pairs, precision/recall/FPR/F,
AUC of recall against FPR across a sweep, SHD and SID.  Predictive: the averaged
NRMSE of predicting every node from all the others.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple, Sequence

import numpy as np

from .gbn import conditional_mean_coefficients, fit_gbn, random_weight
from .graphs import Dag, GraphError, Pag, Pdag, d_separated, extend_to_dag
from .stats import Dataset, DegenerateError


class NormalizationError(ValueError):
    pass


def as_pdag(graph) -> Pdag:
    if isinstance(graph, Pdag):
        return graph
    if isinstance(graph, Dag):
        return graph.to_pdag()
    if isinstance(graph, Pag):
        return graph.to_pdag()
    raise TypeError(f"not a graph: {type(graph).__name__}")


def as_dag(graph) -> Dag:
    """A DAG for ``graph``: itself, or its consistent extension (skeleton fallback)."""
    if isinstance(graph, Dag):
        return graph
    return extend_to_dag(as_pdag(graph))[0]


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int


class PRF(NamedTuple):
    precision: float
    recall: float
    fpr: float
    f_score: float


def edge_confusion(learned, truth: Dag) -> ConfusionCounts:
    """Tally ordered pairs ``(a, b)``.

    A pair is predicted positive when the learned graph has ``a -> b`` or the
    undirected ``a - b``, and actually positive when the truth has ``a -> b``.
    """
    learned = as_pdag(learned)
    if learned.n != truth.n:
        raise GraphError(f"node sets differ ({learned.n} vs {truth.n} nodes)")
    predicted = set(learned.directed)
    for a, b in learned.undirected:
        predicted.add((a, b))
        predicted.add((b, a))
    actual = truth.edges
    tp = len(predicted & actual)
    fp = len(predicted - actual)
    fn = len(actual - predicted)
    tn = truth.n * (truth.n - 1) - tp - fp - fn
    return ConfusionCounts(tp, fp, fn, tn)


def prf(c: ConfusionCounts) -> PRF:
    precision = c.tp / (c.tp + c.fp) if c.tp + c.fp else 1.0
    recall = c.tp / (c.tp + c.fn) if c.tp + c.fn else 1.0
    fpr = c.fp / (c.fp + c.tn) if c.fp + c.tn else 0.0
    f = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return PRF(precision, recall, fpr, f)


def roc_points(graphs, truth: Dag) -> list[tuple[float, float]]:
    pts = {(r.fpr, r.recall) for r in (prf(edge_confusion(g, truth)) for g in graphs)}
    pts |= {(0.0, 0.0), (1.0, 1.0)}
    return sorted(pts)


def auc(sweep, truth: Dag) -> float:
    """Trapezoidal area under recall-versus-FPR over the sweep's graphs.

    ``sweep`` is a :class:`~causalbench.discovery.SweepResult` or a sequence of
    graphs.  The end points (0, 0) and (1, 1) are always included.
    """
    graphs = getattr(sweep, "graphs", sweep)
    if not len(graphs):
        raise ValueError("sweep is empty")
    pts = roc_points(graphs, truth)
    area = 0.0
    for (x0, y0), (x1, y1) in zip(pts, pts[1:]):
        area += (x1 - x0) * (y0 + y1) / 2
    return area


def shd(g1, g2) -> int:
    """Unordered pairs whose edge status (absent, undirected, either direction) differs."""
    p1, p2 = as_pdag(g1), as_pdag(g2)
    if p1.n != p2.n:
        raise GraphError(f"node sets differ ({p1.n} vs {p2.n} nodes)")
    pairs = p1.skeleton() | p2.skeleton()
    return sum(p1.edge_status(a, b) != p2.edge_status(a, b) for a, b in pairs)


# -- structural intervention distance ---------------------------------------


@lru_cache(maxsize=None)
def _adjustment_failures(truth: Dag, i: int, z: frozenset) -> frozenset:
    """Targets ``j`` whose effect of ``i`` is mis-identified by adjusting for ``z``."""
    de_i = truth.descendants(i)
    wrong = set()
    for j in range(truth.n):
        if j == i:
            continue
        if j in z:
            # z claims j is a cause of i, i.e. no effect of i on j
            if j in de_i:
                wrong.add(j)
            continue
        if j not in de_i:
            if not d_separated(truth, i, j, z):
                wrong.add(j)
            continue
        an_j = truth.ancestors(j)
        causal = (de_i - {i}) & an_j
        forbidden = set()
        for w in causal:
            forbidden |= truth.descendants(w)
        if z & forbidden:
            wrong.add(j)
            continue
        cut = truth.edges - {(i, c) for c in causal}
        if not d_separated(Dag(truth.n, cut), i, j, z):
            wrong.add(j)
    return frozenset(wrong)


def sid(truth: Dag, estimate) -> int:
    """Structural intervention distance.

    Counts ordered pairs ``(i, j)`` where the estimate's parent set of ``i`` is
    not a valid adjustment set for the effect of ``i`` on ``j`` in ``truth``
    (generalized adjustment criterion).  A PDAG/PAG estimate is first extended to
    a DAG.
    """
    est = as_dag(estimate)
    if est.n != truth.n:
        raise GraphError(f"node sets differ ({truth.n} vs {est.n} nodes)")
    truth = Dag(truth.n, truth.edges)
    return sum(len(_adjustment_failures(truth, i, est.parents(i))) for i in range(truth.n))


@lru_cache(maxsize=4096)
def _oracle_draws(truth: Dag, seed, draws: int):
    rng = np.random.default_rng(seed)
    m = truth.n
    out = []
    for _ in range(draws):
        w = np.zeros((m, m))
        for a, b in sorted(truth.edges):
            w[a, b] = random_weight(rng)
        inv = np.linalg.inv(np.eye(m) - w)  # inv[i, j]: total effect of i on j
        cov = inv.T @ inv
        out.append((inv, cov))
    return out


@lru_cache(maxsize=None)
def _oracle_failures(truth: Dag, seed, draws: int, i: int, z: frozenset) -> frozenset:
    wrong = set()
    zs = sorted(z)
    for effects, cov in _oracle_draws(truth, seed, draws):
        for j in range(truth.n):
            if j == i or j in wrong:
                continue
            true = effects[i, j]
            if j in z:
                est = 0.0
            else:
                idx = [i] + zs
                block = cov[np.ix_(idx, idx)]
                if np.linalg.cond(block) > 1e12:
                    raise DegenerateError("singular covariance block in population OLS")
                est = np.linalg.solve(block, cov[idx, j])[0]
            if abs(true - est) > 1e-7:
                wrong.add(j)
    return frozenset(wrong)


def sid_oracle_mc(truth: Dag, estimate: Dag, seed=0, draws: int = 5) -> int:
    """Monte-Carlo SID: compare true total effects against parent-adjusted regressions.

    For random weightings of ``truth`` (unit noise), the adjusted effect of ``i`` on
    ``j`` is the coefficient of ``x_i`` in the population regression of ``x_j`` on
    ``x_i`` and the estimate's parents of ``i`` (zero if ``j`` is such a parent).
    A pair counts if any draw disagrees by more than 1e-7.
    """
    if draws < 3:
        raise ValueError("draws must be at least 3")
    if estimate.n != truth.n:
        raise GraphError(f"node sets differ ({truth.n} vs {estimate.n} nodes)")
    truth = Dag(truth.n, truth.edges)
    return sum(len(_oracle_failures(truth, seed, draws, i, estimate.parents(i))) for i in range(truth.n))


# -- predictive accuracy ----------------------------------------------------


def node_nrmse(graph, data: Dataset) -> np.ndarray:
    """Per-node ``100 * RMSE / |mean|`` of predicting each node from all others."""
    n, m = data.values.shape
    if n <= m + 1:
        raise ValueError(f"NRMSE needs n > m + 1 (n={n}, m={m})")
    dag = as_dag(graph)
    if dag.n != m:
        raise GraphError(f"graph has {dag.n} nodes but data has {m} columns")
    model = fit_gbn(dag, data)
    x = data.values
    out = np.empty(m)
    for v in range(m):
        mean = x[:, v].mean()
        if abs(mean) < 1e-12 * max(1.0, float(np.abs(x[:, v]).max())):
            raise NormalizationError(f"node {data.columns[v]!r} has zero sample mean")
        offset, coefs, others = conditional_mean_coefficients(model, v)
        pred = offset + x[:, others] @ coefs
        rmse = math.sqrt(float(np.mean((x[:, v] - pred) ** 2)))
        out[v] = 100.0 * rmse / abs(mean)
    return out


def nrmse_av(graph, data: Dataset) -> float:
    """Mean over nodes of the per-node NRMSE (in percent)."""
    return float(node_nrmse(graph, data).mean())


# -- reports ----------------------------------------------------------------

REPORT_COLUMNS = (
    "algorithm", "threshold", "selected", "status",
    "tp", "fp", "fn", "tn",
    "f_score", "precision", "recall", "fpr", "auc",
    "shd", "sid", "nrmse_av", "counterfactual_error",
)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    return str(v)


class MetricReport:
    """Rows of metrics, one per algorithm x threshold; missing metrics stay blank."""

    columns = REPORT_COLUMNS

    def __init__(self, rows: Sequence[dict] = ()):
        self.rows: list[dict] = []
        for r in rows:
            self.add(**r)

    def add(self, **row) -> None:
        unknown = set(row) - set(self.columns)
        if unknown:
            raise KeyError(f"unknown report columns: {sorted(unknown)}")
        for key in ("f_score", "precision", "recall", "fpr", "auc"):
            v = row.get(key)
            if v is not None and not 0.0 <= v <= 1.0:
                raise ValueError(f"{key}={v} outside [0, 1]")
        for key in ("shd", "sid"):
            v = row.get(key)
            if v is not None and v < 0:
                raise ValueError(f"{key} must be non-negative")
        self.rows.append({c: row.get(c) for c in self.columns})

    def selected_rows(self) -> list[dict]:
        return [r for r in self.rows if r["selected"]]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([_fmt(r[c]) for c in self.columns])
        return buf.getvalue()

    def to_markdown(self) -> str:
        head = ["Algorithm", "Threshold", "F-score", "AUC", "SHD", "SID", "NRMSE_av", "CE", "Status"]
        keys = ["algorithm", "threshold", "f_score", "auc", "shd", "sid", "nrmse_av", "counterfactual_error", "status"]
        lines = ["| " + " | ".join(head) + " |", "|" + "---|" * len(head)]
        for r in self.selected_rows():
            cells = []
            for k in keys:
                v = r[k]
                cells.append(f"{v:.3f}" if isinstance(v, float) else ("" if v is None else str(v)))
            lines.append("| " + " | ".join(cells) + " |")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text: str) -> "MetricReport":
        reader = csv.DictReader(io.StringIO(text))
        rep = cls()
        ints = {"tp", "fp", "fn", "tn", "shd", "sid"}
        for raw in reader:
            row = {}
            for k, v in raw.items():
                if v == "":
                    row[k] = None
                elif k in ("algorithm", "status"):
                    row[k] = v
                elif k == "selected":
                    row[k] = v == "1"
                elif k in ints:
                    row[k] = int(v)
                else:
                    row[k] = float(v)
            rep.add(**row)
        return rep
