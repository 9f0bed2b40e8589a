"""Linear-Gaussian Bayesian networks.

Each node ``v`` follows ``x_v = intercept_v + sum_p w[p, v] * x_p + e_v`` with
``e_v ~ N(0, noise_sd_v**2)``.  Weights are stored parent-indexed:
``weights[p, v]`` is the coefficient of parent ``p`` in the equation of ``v``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .graphs import Dag, GraphError
from .stats import Dataset, DegenerateError, Intervention, RCOND_MIN, _solve_spd

DEFAULT_EDGE_PROBABILITY = 0.3
WEIGHT_RANGE = (0.25, 1.0)
INTERCEPT_RANGE = (50.0, 500.0)
NOISE_SD_RANGE = (5.0, 100.0)
KNOCKOUT_VALUE = 0.0


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


@dataclass(frozen=True, eq=False)
class GbnModel:
    dag: Dag
    weights: np.ndarray
    intercepts: np.ndarray
    noise_sd: np.ndarray
    names: tuple = field(default=None)

    def __post_init__(self):
        m = self.dag.n
        w = np.array(self.weights, dtype=float)
        c = np.array(self.intercepts, dtype=float).reshape(-1)
        sd = np.array(self.noise_sd, dtype=float).reshape(-1)
        if w.shape != (m, m) or c.shape != (m,) or sd.shape != (m,):
            raise ValueError(f"parameter shapes do not match a {m}-node DAG")
        support = w != 0
        if np.any(support & ~self.dag.to_matrix()):
            raise ValueError("nonzero weight on a pair that is not an edge of the DAG")
        if np.any(sd <= 0) or not np.all(np.isfinite(sd)):
            raise ValueError("noise_sd must be positive")
        for arr in (w, c, sd):
            arr.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "intercepts", c)
        object.__setattr__(self, "noise_sd", sd)
        object.__setattr__(self, "names", tuple(self.names) if self.names is not None else self.dag.names)

    @property
    def m(self) -> int:
        return self.dag.n

    def weight(self, parent: int, child: int) -> float:
        if (parent, child) not in self.dag.edges:
            raise GraphError(f"{parent}->{child} is not an edge")
        return float(self.weights[parent, child])

    def edge_weights(self) -> dict:
        return {e: float(self.weights[e]) for e in sorted(self.dag.edges)}

    def to_json(self) -> dict:
        return {
            "nodes": list(self.names),
            "edges": [{"from": a, "to": b, "weight": float(self.weights[a, b])} for a, b in sorted(self.dag.edges)],
            "intercepts": [float(v) for v in self.intercepts],
            "noise_sd": [float(v) for v in self.noise_sd],
        }

    @classmethod
    def from_json(cls, doc) -> "GbnModel":
        if isinstance(doc, str):
            doc = json.loads(doc)
        names = doc["nodes"]
        m = len(names)
        w = np.zeros((m, m))
        edges = []
        for e in doc["edges"]:
            a, b = int(e["from"]), int(e["to"])
            edges.append((a, b))
            w[a, b] = float(e["weight"])
        return cls(Dag(m, edges, names), w, doc["intercepts"], doc["noise_sd"], names)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json(), fh, indent=1)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "GbnModel":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))


@dataclass(frozen=True)
class ClampSpec:
    node: int
    value: float = KNOCKOUT_VALUE


def random_gbn(num_nodes: int, edge_probability: float = DEFAULT_EDGE_PROBABILITY, seed=None, names=None) -> GbnModel:
    """Random linear-Gaussian network following the simulation protocol.

    Each pair ordered by a random permutation gets an edge with
    ``edge_probability``; weights are uniform on (-1, -0.25) U (0.25, 1), intercepts
    on (50, 500) and noise standard deviations on (5, 100).
    """
    if num_nodes < 1:
        raise ValueError("num_nodes must be at least 1")
    if not 0.0 <= edge_probability <= 1.0:
        raise ValueError("edge_probability must lie in [0, 1]")
    rng = _rng(seed)
    order = rng.permutation(num_nodes)
    edges = []
    w = np.zeros((num_nodes, num_nodes))
    for a in range(num_nodes):
        for b in range(a + 1, num_nodes):
            if rng.random() < edge_probability:
                edges.append((int(order[a]), int(order[b])))
    for p, c in edges:
        w[p, c] = random_weight(rng)
    intercepts = rng.uniform(*INTERCEPT_RANGE, size=num_nodes)
    noise_sd = rng.uniform(*NOISE_SD_RANGE, size=num_nodes)
    if names is None:
        names = [f"G{i + 1}" for i in range(num_nodes)]
    return GbnModel(Dag(num_nodes, edges, names), w, intercepts, noise_sd)


def random_weight(rng, size=None):
    """Uniform on (-1, -0.25) U (0.25, 1), equal mass per branch."""
    mag = rng.uniform(*WEIGHT_RANGE, size=size)
    sign = np.where(rng.random(size=size) < 0.5, -1.0, 1.0)
    return mag * sign if size is not None else float(mag * sign)


def _ancestral(model: GbnModel, n: int, rng, clamp: ClampSpec | None = None) -> np.ndarray:
    m = model.m
    noise = rng.standard_normal((n, m)) * model.noise_sd
    x = np.empty((n, m))
    for v in model.dag.topological_order:
        if clamp is not None and v == clamp.node:
            x[:, v] = clamp.value
            continue
        pa = sorted(model.dag.parents(v))
        x[:, v] = model.intercepts[v] + noise[:, v]
        if pa:
            x[:, v] += x[:, pa] @ model.weights[pa, v]
    return x


def sample_observational(model: GbnModel, n: int, seed=None) -> Dataset:
    """Ancestral sampling of ``n`` rows in topological order."""
    if n < 1:
        raise ValueError("n must be at least 1")
    return Dataset(model.names, _ancestral(model, n, _rng(seed)))


def sample_interventional(model: GbnModel, clamp: ClampSpec, n: int, seed=None) -> Dataset:
    """Sampling under graph surgery: the clamped node ignores its structural equation."""
    if not 0 <= clamp.node < model.m:
        raise GraphError(f"unknown node {clamp.node}")
    if n < 1:
        raise ValueError("n must be at least 1")
    x = _ancestral(model, n, _rng(seed), clamp)
    tag = Intervention(int(clamp.node), float(clamp.value))
    return Dataset(model.names, x, (tag,) * n)


def _moments(weights, intercepts, variances) -> tuple[np.ndarray, np.ndarray]:
    m = len(intercepts)
    b = np.eye(m) - weights.T  # child-indexed: A[j, i] = weight(i -> j)
    binv = np.linalg.solve(b, np.eye(m))
    mean = binv @ intercepts
    cov = binv @ np.diag(variances) @ binv.T
    return mean, (cov + cov.T) / 2


def joint_gaussian(model: GbnModel) -> tuple[np.ndarray, np.ndarray]:
    """Mean ``(I-A)^-1 c`` and covariance ``(I-A)^-1 D (I-A)^-T`` of the joint law."""
    return _moments(model.weights, model.intercepts, model.noise_sd**2)


def mutilated_gaussian(model: GbnModel, clamp: ClampSpec) -> tuple[np.ndarray, np.ndarray]:
    """Joint law after clamping: incoming edges cut, mean set to the value, zero noise."""
    w = np.array(model.weights)
    c = np.array(model.intercepts)
    var = np.array(model.noise_sd) ** 2
    w[:, clamp.node] = 0.0
    c[clamp.node] = clamp.value
    var[clamp.node] = 0.0
    return _moments(w, c, var)


def total_effects(model: GbnModel) -> np.ndarray:
    """``T[i, j]``: total causal effect of ``x_i`` on ``x_j``."""
    m = model.m
    return np.linalg.solve(np.eye(m) - model.weights, np.eye(m))


def _ols(y: np.ndarray, design: np.ndarray, label: str):
    n, k = design.shape
    if n <= k:
        raise DegenerateError(f"node {label}: {n} samples for {k} coefficients")
    sv = np.linalg.svd(design, compute_uv=False)
    if sv[-1] <= sv[0] * np.sqrt(RCOND_MIN):
        raise DegenerateError(f"node {label}: rank-deficient parent design")
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ coef
    return coef, resid


def fit_gbn(dag: Dag, data: Dataset) -> GbnModel:
    """Per-node OLS of each node on its parents (intercept included).

    The residual standard deviation uses denominator ``n - |parents| - 1``.
    """
    if dag.n != data.m:
        raise ValueError(f"DAG has {dag.n} nodes but data has {data.m} columns")
    n, m = data.values.shape
    x = data.values
    w = np.zeros((m, m))
    c = np.zeros(m)
    sd = np.zeros(m)
    for v in range(m):
        pa = sorted(dag.parents(v))
        if n - len(pa) - 1 < 1:
            raise DegenerateError(f"node {data.columns[v]!r}: too few samples for {len(pa)} parents")
        design = np.column_stack([np.ones(n), x[:, pa]])
        coef, resid = _ols(x[:, v], design, repr(data.columns[v]))
        c[v] = coef[0]
        w[pa, v] = coef[1:]
        rss = float(resid @ resid)
        scale = max(1.0, float(np.abs(x[:, v]).max()))
        sd[v] = max(np.sqrt(rss / (n - len(pa) - 1)), 1e-12 * scale)
    return GbnModel(Dag(m, dag.edges, data.columns), w, c, sd, data.columns)


def conditional_mean_coefficients(model: GbnModel, node: int) -> tuple[float, np.ndarray, np.ndarray]:
    """``(offset, coefs, others)`` with ``E[x_node | rest] = offset + coefs @ x[others]``."""
    mean, cov = joint_gaussian(model)
    others = np.array([v for v in range(model.m) if v != node], dtype=int)
    if len(others) == 0:
        return float(mean[node]), np.zeros(0), others
    s22 = cov[np.ix_(others, others)]
    s21 = cov[others, node]
    coefs = _solve_spd(s22, s21, f"covariance of the nodes other than {node}")
    offset = float(mean[node] - coefs @ mean[others])
    return offset, coefs, others


def predict_node_given_rest(model: GbnModel, node: int, assignment) -> float:
    """Conditional mean ``mu_1 + S_12 S_22^-1 (a - mu_2)`` of ``node`` given all other nodes.

    ``assignment`` is a mapping from every other node index to its value, or a
    sequence of values for the other nodes in ascending index order.
    """
    if not 0 <= node < model.m:
        raise GraphError(f"unknown node {node}")
    others = [v for v in range(model.m) if v != node]
    if isinstance(assignment, Mapping):
        if set(assignment) != set(others):
            raise ValueError("assignment must cover exactly the other nodes")
        a = np.array([assignment[v] for v in others], dtype=float)
    else:
        a = np.asarray(assignment, dtype=float).reshape(-1)
        if a.shape != (len(others),):
            raise ValueError(f"assignment needs {len(others)} values")
    mean, cov = joint_gaussian(model)
    if not others:
        return float(mean[node])
    s22 = cov[np.ix_(others, others)]
    s12 = cov[node, others]
    beta = _solve_spd(s22, a - mean[others], f"covariance of the nodes other than {node}")
    return float(mean[node] + s12 @ beta)
