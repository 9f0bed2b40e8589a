"""Sample statistics and the Fisher-Z conditional-independence test."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np


class DegenerateError(ValueError):
    """Numerical degeneracy: zero variance, singular matrices, rank deficiency."""


class SampleSizeError(ValueError):
    pass


# reciprocal condition number below which a matrix counts as singular
RCOND_MIN = 1e-12


@dataclass(frozen=True)
class Intervention:
    node: int
    value: float


@dataclass(frozen=True, eq=False)
class Dataset:
    """Column-named sample matrix, one row per sample.

    ``interventions`` optionally tags each row with the clamp that produced it
    (``None`` for observational rows).
    """

    columns: tuple
    values: np.ndarray
    interventions: tuple | None = field(default=None)

    def __post_init__(self):
        columns = tuple(str(c) for c in self.columns)
        values = np.array(self.values, dtype=float)
        if values.ndim != 2:
            raise ValueError("values must be a 2-d array")
        n, m = values.shape
        if m != len(columns):
            raise ValueError(f"{len(columns)} column names for {m} columns")
        if len(set(columns)) != m:
            raise ValueError("column names must be unique")
        if n < 1:
            raise ValueError("dataset needs at least one row")
        if not np.all(np.isfinite(values)):
            raise ValueError("dataset contains non-finite values")
        values.setflags(write=False)
        object.__setattr__(self, "columns", columns)
        object.__setattr__(self, "values", values)
        if self.interventions is not None:
            tags = tuple(self.interventions)
            if len(tags) != n:
                raise ValueError("one intervention tag per row is required")
            object.__setattr__(self, "interventions", tags)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def m(self) -> int:
        return self.values.shape[1]

    def column(self, name_or_index) -> np.ndarray:
        return self.values[:, self.index(name_or_index)]

    def index(self, name_or_index) -> int:
        if isinstance(name_or_index, (int, np.integer)):
            if not 0 <= name_or_index < self.m:
                raise KeyError(f"column index {name_or_index} out of range")
            return int(name_or_index)
        try:
            return self.columns.index(name_or_index)
        except ValueError:
            raise KeyError(f"unknown column {name_or_index!r}") from None

    def __len__(self):
        return self.n

    def __repr__(self):
        return f"Dataset(n={self.n}, m={self.m}, columns={list(self.columns)})"


@dataclass(frozen=True, eq=False)
class CorrelationMatrix:
    values: np.ndarray
    n: int

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValueError("correlation matrix must be square")
        if not np.allclose(v, v.T, atol=1e-12):
            raise ValueError("correlation matrix must be symmetric")
        if not np.allclose(np.diag(v), 1.0, atol=1e-12):
            raise ValueError("correlation matrix needs a unit diagonal")
        v = np.clip(v, -1.0, 1.0)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def m(self) -> int:
        return self.values.shape[0]

    @classmethod
    def from_covariance(cls, cov, n: int) -> "CorrelationMatrix":
        cov = np.asarray(cov, dtype=float)
        sd = np.sqrt(np.diag(cov))
        corr = cov / np.outer(sd, sd)
        np.fill_diagonal(corr, 1.0)
        return cls((corr + corr.T) / 2, n)


def correlation_matrix(dataset: Dataset) -> CorrelationMatrix:
    """Pearson correlations of all column pairs (n-1 variance convention)."""
    x = dataset.values
    if dataset.n < 2:
        raise SampleSizeError("correlation needs at least 2 samples")
    centered = x - x.mean(axis=0)
    var = (centered**2).sum(axis=0) / (dataset.n - 1)
    scale = np.maximum(np.abs(x).max(axis=0), 1.0)
    for j in np.flatnonzero(var <= (1e-14 * scale) ** 2):
        raise DegenerateError(f"column {dataset.columns[j]!r} has zero variance")
    cov = centered.T @ centered / (dataset.n - 1)
    return CorrelationMatrix.from_covariance(cov, dataset.n)


def _solve_spd(a: np.ndarray, b: np.ndarray, what: str = "matrix") -> np.ndarray:
    """Solve ``a x = b`` for symmetric positive-definite ``a`` by Cholesky."""
    try:
        chol = np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        raise DegenerateError(f"{what} is not positive definite") from None
    d = np.diag(chol)
    if (d.min() / d.max()) ** 2 < RCOND_MIN:
        raise DegenerateError(f"{what} is numerically singular")
    y = np.linalg.solve(chol, b)
    return np.linalg.solve(chol.T, y)


def _inverse_spd(a: np.ndarray, what: str = "matrix") -> np.ndarray:
    return _solve_spd(a, np.eye(a.shape[0]), what)


def _corr_values(corr) -> np.ndarray:
    return corr.values if isinstance(corr, CorrelationMatrix) else np.asarray(corr)


def partial_correlation(corr: CorrelationMatrix, x: int, y: int, s: Iterable[int] = ()) -> float:
    """Partial correlation of ``x`` and ``y`` given ``s`` from the precision of the sub-block."""
    c = _corr_values(corr)
    s = sorted(set(int(v) for v in s))
    if x == y:
        raise ValueError("x and y must differ")
    if x in s or y in s:
        raise ValueError("x and y must not be in the conditioning set")
    if not s:
        return float(c[x, y])
    idx = [x, y] + s
    prec = _inverse_spd(c[np.ix_(idx, idx)], "conditioning correlation block")
    r = -prec[0, 1] / math.sqrt(prec[0, 0] * prec[1, 1])
    return float(min(1.0, max(-1.0, r)))


def normal_sf(z: float) -> float:
    """Upper tail of the standard normal."""
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def normal_cdf(z: float) -> float:
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


@dataclass(frozen=True)
class CITestResult:
    z: float
    p: float
    independent: bool

    def __iter__(self):
        return iter((self.z, self.p, self.independent))


def fisher_z_statistic(r: float, n: int, k: int) -> tuple[float, float]:
    """``(z, p)`` for partial correlation ``r`` on ``n`` samples with ``k`` conditioners."""
    dof = n - k - 3
    if dof < 1:
        raise SampleSizeError(f"Fisher-Z needs n - |S| - 3 >= 1 (n={n}, |S|={k})")
    if abs(r) >= 1.0:
        return math.inf, 0.0
    z = math.atanh(r) * math.sqrt(dof)
    return z, 2.0 * normal_sf(abs(z))


def fisher_z_test(corr: CorrelationMatrix, x: int, y: int, s: Iterable[int], alpha: float) -> CITestResult:
    """Fisher-Z test of ``x _||_ y | s``; independent iff ``p > alpha``."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    s = tuple(s)
    r = partial_correlation(corr, x, y, s)
    z, p = fisher_z_statistic(r, corr.n, len(s))
    return CITestResult(z, p, p > alpha)


class FisherZ:
    """Fisher-Z CI test bound to a correlation matrix, with a p-value cache.

    The cache makes significance-level sweeps cheap: each (x, y, S) is evaluated
    once regardless of how many alphas are tried.
    """

    def __init__(self, corr: CorrelationMatrix, alpha: float = 0.05):
        self.corr = corr
        self.alpha = alpha
        self.n_vars = corr.m
        self._cache: dict = {}
        self.n_tests = 0

    @classmethod
    def from_data(cls, data: Dataset, alpha: float = 0.05) -> "FisherZ":
        return cls(correlation_matrix(data), alpha)

    def with_alpha(self, alpha: float) -> "FisherZ":
        other = FisherZ(self.corr, alpha)
        other._cache = self._cache
        return other

    def pvalue(self, x: int, y: int, s: Sequence[int]) -> float:
        key = (min(x, y), max(x, y), tuple(sorted(s)))
        p = self._cache.get(key)
        if p is None:
            r = partial_correlation(self.corr, x, y, key[2])
            _, p = fisher_z_statistic(r, self.corr.n, len(key[2]))
            self._cache[key] = p
        return p

    def __call__(self, x: int, y: int, s: Sequence[int]) -> bool:
        self.n_tests += 1
        return self.pvalue(x, y, s) > self.alpha
