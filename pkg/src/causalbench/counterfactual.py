"""Counterfactual expectations by importance reweighting of observational samples.

Replacing the factor ``P(B | pa(B))`` of one node by ``P'(B | pa(B))`` changes the
expectation of any target ``D`` to ``E'[D] = E[D * P'(B|pa) / P(B|pa)]``.  The
self-normalized estimator divides by the sum of the ratios instead of ``n``.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from .gbn import GbnModel, fit_gbn
from .graphs import GraphError
from .metrics import as_dag
from .stats import Dataset

UNDERFLOW_DENSITY = 1e-300
WINSOR_QUANTILE = 99.9


class DegenerateWeights(ValueError):
    pass


class UndefinedCounterfactualError(ValueError):
    pass


@dataclass(frozen=True)
class FactorReplacement:
    """New parameters for the structural equation of ``node``.

    ``new_weights`` maps parent index to its new coefficient; parents not listed
    and a ``None`` intercept or noise keep their current values.
    """

    node: int
    new_weights: Mapping = field(default_factory=dict)
    new_intercept: float | None = None
    new_noise_sd: float | None = None

    def __post_init__(self):
        if self.new_noise_sd is not None and not self.new_noise_sd > 0:
            raise ValueError("new_noise_sd must be positive")
        object.__setattr__(self, "new_weights", {int(k): float(v) for k, v in dict(self.new_weights).items()})

    def apply(self, model: GbnModel, strict: bool = True) -> tuple[np.ndarray, float, float, list]:
        """``(weights, intercept, noise_sd, missing)`` of the replaced factor in ``model``.

        ``missing`` lists replacement parents that are not parents in ``model``;
        with ``strict`` they raise instead.
        """
        v = self.node
        parents = model.dag.parents(v)
        missing = sorted(p for p in self.new_weights if p not in parents)
        if missing and strict:
            raise GraphError(f"{missing} are not parents of node {v}; a replacement keeps the parent set")
        w = np.array(model.weights[:, v])
        for p, val in self.new_weights.items():
            if p in parents:
                w[p] = val
        c = model.intercepts[v] if self.new_intercept is None else self.new_intercept
        sd = model.noise_sd[v] if self.new_noise_sd is None else self.new_noise_sd
        return w, float(c), float(sd), missing

    def to_model(self, model: GbnModel) -> GbnModel:
        """``model`` with this factor swapped in (for generating interventional data)."""
        w_col, c, sd, _ = self.apply(model)
        w = np.array(model.weights)
        w[:, self.node] = w_col
        cs = np.array(model.intercepts)
        cs[self.node] = c
        sds = np.array(model.noise_sd)
        sds[self.node] = sd
        return GbnModel(model.dag, w, cs, sds, model.names)


def _log_normal_pdf(x, mean, sd):
    return -0.5 * ((x - mean) / sd) ** 2 - math.log(sd) - 0.5 * math.log(2 * math.pi)


def importance_weights(model: GbnModel, repl: FactorReplacement, data: Dataset,
                       winsorize: bool = False, return_flags: bool = False, strict: bool = True):
    """Per-sample density ratio ``P'(B | pa) / P(B | pa)`` of the replaced factor.

    Samples whose base density underflows (below 1e-300) are flagged and their
    weight is capped at the 99.9th percentile of the others.  ``winsorize`` caps
    every weight at that percentile.
    """
    v = repl.node
    if data.m != model.m:
        raise ValueError(f"data has {data.m} columns, model has {model.m} nodes")
    x = data.values
    new_w, new_c, new_sd, _ = repl.apply(model, strict=strict)
    base_mean = model.intercepts[v] + x @ model.weights[:, v]
    new_mean = new_c + x @ new_w
    log_base = _log_normal_pdf(x[:, v], base_mean, model.noise_sd[v])
    log_new = _log_normal_pdf(x[:, v], new_mean, new_sd)
    log_ratio = log_new - log_base
    flags = log_base < math.log(UNDERFLOW_DENSITY)
    with np.errstate(over="ignore"):
        weights = np.exp(np.minimum(log_ratio, 700.0))
    if flags.any() or winsorize:
        ref = weights[~flags] if (~flags).any() else weights
        cap = float(np.percentile(ref, WINSOR_QUANTILE))
        if flags.any():
            weights[flags] = np.minimum(weights[flags], cap)
        if winsorize:
            weights = np.minimum(weights, cap)
    if return_flags:
        return weights, flags
    return weights


def effective_sample_size(weights) -> float:
    """``(sum w)^2 / sum w^2``."""
    w = np.asarray(weights, dtype=float)
    s2 = float(w @ w)
    return float(w.sum()) ** 2 / s2 if s2 > 0 else 0.0


def counterfactual_mean(weights, targets, return_ess: bool = False):
    """Self-normalized estimate ``sum w_i D_i / sum w_i``."""
    w = np.asarray(weights, dtype=float)
    d = np.asarray(targets, dtype=float)
    if w.shape != d.shape[:1]:
        raise ValueError("weights and targets must have the same length")
    if np.any(w < 0):
        raise ValueError("weights must be non-negative")
    total = float(w.sum())
    if not total > 0:
        raise DegenerateWeights("all importance weights are zero")
    est = float(w @ d) / total
    if return_ess:
        return est, effective_sample_size(w)
    return est


def unnormalized_mean(weights, targets) -> float:
    """Plain importance-sampling estimate ``sum w_i D_i / n``."""
    w = np.asarray(weights, dtype=float)
    return float(w @ np.asarray(targets, dtype=float)) / len(w)


@dataclass(frozen=True, eq=False)
class CounterfactualQuery:
    """Factor replacement on a base model, with observational and interventional samples.

    ``targets`` defaults to the children of the replaced node in the base model.
    """

    model: GbnModel | None
    replacement: FactorReplacement
    observational: Dataset
    interventional: Dataset
    targets: tuple | None = None

    def __post_init__(self):
        targets = self.targets
        if targets is None:
            if self.model is None:
                raise ValueError("targets are required when no base model is given")
            targets = sorted(self.model.dag.children(self.replacement.node))
        targets = tuple(int(t) for t in targets)
        if not targets:
            raise ValueError("at least one target node is required")
        if self.replacement.node in targets:
            raise ValueError("the intervened node cannot be a target")
        if self.observational.columns != self.interventional.columns:
            raise ValueError("observational and interventional columns differ")
        object.__setattr__(self, "targets", targets)

    @classmethod
    def from_json(cls, doc, base_dir=".") -> "CounterfactualQuery":
        """Load ``{"intervene", "new_weights", "targets", "obs", "int"}`` (paths relative to ``base_dir``).

        Optional keys: ``"model"`` (GbnModel JSON path), ``"new_intercept"``,
        ``"new_noise_sd"``.  Node references may be column names or indices.
        """
        from .io import read_csv

        if isinstance(doc, (str, Path)) and Path(doc).exists():
            base_dir = Path(doc).parent
            doc = json.loads(Path(doc).read_text(encoding="utf-8"))
        elif isinstance(doc, str):
            doc = json.loads(doc)
        base = Path(base_dir)
        obs = read_csv(base / doc["obs"])
        intv = read_csv(base / doc["int"])
        model = GbnModel.load(base / doc["model"]) if doc.get("model") else None
        node = obs.index(doc["intervene"])
        repl = FactorReplacement(
            node,
            {obs.index(k): v for k, v in doc.get("new_weights", {}).items()},
            doc.get("new_intercept"),
            doc.get("new_noise_sd"),
        )
        targets = doc.get("targets")
        if targets is not None:
            targets = [obs.index(t) for t in targets]
        return cls(model, repl, obs, intv, targets)


@dataclass(frozen=True)
class CounterfactualResult:
    ce: float
    delta_act: tuple
    delta_pred: tuple
    counter_means: tuple
    ess: float
    flagged_samples: int
    missing_parents: tuple


def counterfactual_analysis(query: CounterfactualQuery, learned_graph, winsorize: bool = True) -> CounterfactualResult:
    """Fit on the learned structure, reweight, and compare predicted and actual shifts."""
    obs, intv = query.observational, query.interventional
    dag = as_dag(learned_graph)
    if dag.n != obs.m:
        raise GraphError(f"graph has {dag.n} nodes but data has {obs.m} columns")
    fitted = fit_gbn(dag, obs)
    weights, flags, missing = _weights_for(fitted, query.replacement, obs, winsorize)
    if missing:
        warnings.warn(
            f"replacement parents {missing} of node {query.replacement.node} are absent from the "
            "learned graph; using the learned factor as-is",
            stacklevel=2,
        )
    d_act, d_pred, means = [], [], []
    ess = effective_sample_size(weights)
    for t in query.targets:
        mean_obs = float(obs.values[:, t].mean())
        mean_int = float(intv.values[:, t].mean())
        mean_cf = counterfactual_mean(weights, obs.values[:, t])
        d_act.append(abs(mean_obs - mean_int))
        d_pred.append(abs(mean_obs - mean_cf))
        means.append(mean_cf)
    total_act = sum(d_act)
    if total_act == 0:
        raise UndefinedCounterfactualError("interventional means equal observational means (null intervention)")
    ce = (total_act - sum(d_pred)) / total_act
    return CounterfactualResult(ce, tuple(d_act), tuple(d_pred), tuple(means), ess, int(flags.sum()), tuple(missing))


def _weights_for(model, repl, data, winsorize):
    _, _, _, missing = repl.apply(model, strict=False)
    weights, flags = importance_weights(model, repl, data, winsorize=winsorize, return_flags=True, strict=False)
    return weights, flags, missing


def counterfactual_error(query: CounterfactualQuery, learned_graph, winsorize: bool = True) -> float:
    """``sum(delta_act - delta_pred) / sum(delta_act)`` over the query's targets."""
    return counterfactual_analysis(query, learned_graph, winsorize).ce
