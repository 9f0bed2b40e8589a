"""Greedy score-based search over DAGs with a decomposable Gaussian BIC."""

from __future__ import annotations

import math

import numpy as np

from ..graphs import Dag, Pdag, dag_to_cpdag
from ..stats import RCOND_MIN, Dataset, DegenerateError
from .options import DiscoveryOptions


class BicScorer:
    """Node-wise BIC from centred cross-products, cached by (node, parents)."""

    def __init__(self, data: Dataset, penalty_multiplier: float = 1.0):
        x = data.values
        self.n, self.m = x.shape
        xc = x - x.mean(axis=0)
        self.cross = xc.T @ xc
        self.penalty_multiplier = penalty_multiplier
        self.columns = data.columns
        self._rss: dict = {}

    def with_penalty(self, penalty_multiplier: float) -> "BicScorer":
        """A scorer with another penalty sharing this one's RSS cache."""
        other = object.__new__(BicScorer)
        other.__dict__.update(self.__dict__)
        other.penalty_multiplier = penalty_multiplier
        return other

    def rss(self, node: int, parents) -> float:
        key = (node, frozenset(parents))
        val = self._rss.get(key)
        if val is None:
            pa = sorted(key[1])
            if len(pa) >= self.n - 1:
                raise DegenerateError(f"node {self.columns[node]!r}: {len(pa)} parents for {self.n} samples")
            val = float(self.cross[node, node])
            if pa:
                block = self.cross[np.ix_(pa, pa)]
                ev = np.linalg.eigvalsh(block)
                if ev[0] <= ev[-1] * RCOND_MIN:
                    raise DegenerateError(f"node {self.columns[node]!r}: rank-deficient parent design")
                rhs = self.cross[pa, node]
                val -= float(rhs @ np.linalg.solve(block, rhs))
            val = max(val, 0.0)
            self._rss[key] = val
        return val

    def score(self, node: int, parents) -> float:
        rss = self.rss(node, parents)
        if rss <= 0.0:
            raise DegenerateError(f"node {self.columns[node]!r}: zero residual variance")
        k = len(parents) + 1
        return -0.5 * self.n * math.log(rss / self.n) - self.penalty_multiplier * k * math.log(self.n) / 2

    def total(self, dag: Dag) -> float:
        return sum(self.score(v, dag.parents(v)) for v in range(dag.n))


def node_bic(data: Dataset, node: int, parents, penalty_multiplier: float = 1.0) -> float:
    """``-(n/2) ln(RSS/n) - penalty * (|parents| + 1) * ln(n) / 2`` for one node."""
    return BicScorer(data, penalty_multiplier).score(node, frozenset(parents))


def _reachable(children: list[set], src: int, dst: int) -> bool:
    stack, seen = [src], {src}
    while stack:
        v = stack.pop()
        if v == dst:
            return True
        for w in children[v]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return False


def ges_dag(data: Dataset | BicScorer, opts: DiscoveryOptions | None = None, trace: list | None = None) -> Dag:
    """Forward edge additions then backward deletions, each the best positive gain.

    ``trace`` (if given) receives the total score after every accepted move.
    """
    opts = opts or DiscoveryOptions()
    if isinstance(data, BicScorer):
        scorer = data.with_penalty(opts.penalty_multiplier)
    else:
        scorer = BicScorer(data, opts.penalty_multiplier)
    n, m = scorer.n, scorer.m
    if n <= m:
        raise ValueError(f"GES needs more samples than variables (n={n}, m={m})")
    parents = [set() for _ in range(m)]
    children = [set() for _ in range(m)]
    local = [scorer.score(v, ()) for v in range(m)]
    total = sum(local)
    if trace is not None:
        trace.append(total)

    while True:
        best = None
        for i in range(m):
            for j in range(m):
                if i == j or i in parents[j] or j in parents[i]:
                    continue
                if _reachable(children, j, i):
                    continue
                gain = scorer.score(j, parents[j] | {i}) - local[j]
                if gain > 0 and (best is None or gain > best[0]):
                    best = (gain, i, j)
        if best is None:
            break
        gain, i, j = best
        parents[j].add(i)
        children[i].add(j)
        local[j] = scorer.score(j, parents[j])
        total = sum(local)
        if trace is not None:
            trace.append(total)

    while True:
        best = None
        for j in range(m):
            for i in sorted(parents[j]):
                gain = scorer.score(j, parents[j] - {i}) - local[j]
                if gain > 0 and (best is None or gain > best[0]):
                    best = (gain, i, j)
        if best is None:
            break
        gain, i, j = best
        parents[j].discard(i)
        children[i].discard(j)
        local[j] = scorer.score(j, parents[j])
        total = sum(local)
        if trace is not None:
            trace.append(total)

    return Dag(m, [(p, c) for c in range(m) for p in parents[c]], scorer.columns)


def ges(data: Dataset | BicScorer, opts: DiscoveryOptions | None = None) -> Pdag:
    """Greedy BIC search; the final DAG is returned as its CPDAG.

    ``data`` may be a :class:`BicScorer` to reuse its residual cache across runs.
    """
    return dag_to_cpdag(ges_dag(data, opts))
