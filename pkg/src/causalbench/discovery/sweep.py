"""Threshold sweeps: run an algorithm over a grid and pick the best-F graph."""

from __future__ import annotations

from dataclasses import dataclass, replace

from ..graphs import Dag
from ..stats import Dataset
from .fci import fci
from .ges import BicScorer, ges
from .options import DiscoveryOptions, as_ci_test
from .pc import pc

ALGORITHMS = ("pc", "ges", "fci")


@dataclass(frozen=True)
class SweepResult:
    thresholds: tuple
    graphs: tuple
    selected: int = 0
    f_scores: tuple | None = None

    def __post_init__(self):
        if len(self.thresholds) != len(self.graphs) or not self.thresholds:
            raise ValueError("one graph per threshold is required")
        if any(b <= a for a, b in zip(self.thresholds, self.thresholds[1:])):
            raise ValueError("thresholds must be strictly increasing")

    def __len__(self):
        return len(self.thresholds)

    @property
    def best(self):
        return self.graphs[self.selected]

    @property
    def best_threshold(self) -> float:
        return self.thresholds[self.selected]


def alpha_grid(start: float = 0.01, step: float = 0.01, end: float = 0.99) -> list[float]:
    """Evenly spaced significance levels, rounded to kill float drift."""
    count = int(round((end - start) / step)) + 1
    return [round(start + k * step, 10) for k in range(count)]


def run_algorithm(algorithm: str, data, threshold: float, opts: DiscoveryOptions | None = None):
    """One run: ``threshold`` is alpha for pc/fci and the penalty multiplier for ges."""
    opts = opts or DiscoveryOptions()
    if algorithm == "pc":
        return pc(data, opts.with_(alpha=threshold))[0]
    if algorithm == "fci":
        return fci(data, opts.with_(alpha=threshold))
    if algorithm == "ges":
        return ges(data, opts.with_(penalty_multiplier=threshold))
    raise ValueError(f"unknown algorithm {algorithm!r}; expected one of {ALGORITHMS}")


def threshold_sweep(data, algorithm: str, grid, truth: Dag | None = None,
                    opts: DiscoveryOptions | None = None, deadline=None) -> SweepResult:
    """Run ``algorithm`` at every grid value.

    For pc/fci the grid holds significance levels; a single p-value cache is
    shared across the sweep.  With ``truth`` the entry with the best F-score is
    selected (ties go to the smaller threshold); otherwise entry 0.
    ``deadline`` is an optional zero-argument callable raising when time is up.
    """
    from ..metrics import edge_confusion, prf

    grid = [float(t) for t in grid]
    if not grid:
        raise ValueError("grid must not be empty")
    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}; expected one of {ALGORITHMS}")
    opts = opts or DiscoveryOptions()
    source = data
    if algorithm in ("pc", "fci"):
        for t in grid:
            if not 0.0 < t < 1.0:
                raise ValueError(f"significance level {t} outside (0, 1)")
        source = as_ci_test(data, grid[0])
    elif isinstance(data, Dataset):
        source = BicScorer(data)
    graphs = []
    for t in grid:
        if deadline is not None:
            deadline()
        g = run_algorithm(algorithm, source, t, opts)
        if isinstance(data, Dataset):
            g = replace(g, names=data.columns)
        graphs.append(g)
    f_scores = None
    selected = 0
    if truth is not None:
        f_scores = tuple(prf(edge_confusion(g, truth)).f_score for g in graphs)
        selected = max(range(len(grid)), key=lambda k: (f_scores[k], -k))
    return SweepResult(tuple(grid), tuple(graphs), selected, f_scores)

