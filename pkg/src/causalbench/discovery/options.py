from __future__ import annotations

from dataclasses import dataclass, replace

from ..graphs import Dag, d_separated
from ..stats import CorrelationMatrix, Dataset, FisherZ


@dataclass(frozen=True)
class DiscoveryOptions:
    """Settings shared by the discovery algorithms.

    ``max_cond_size=None`` means 4 when there are at least 50 variables and
    unbounded otherwise.
    """

    alpha: float = 0.05
    stable_skeleton: bool = True
    max_cond_size: int | None = None
    penalty_multiplier: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie strictly inside (0, 1)")
        if self.penalty_multiplier <= 0:
            raise ValueError("penalty_multiplier must be positive")
        if self.max_cond_size is not None and self.max_cond_size < 0:
            raise ValueError("max_cond_size must be non-negative")

    def cond_limit(self, n_vars: int) -> int:
        if self.max_cond_size is not None:
            return self.max_cond_size
        return 4 if n_vars >= 50 else n_vars

    def with_(self, **kw) -> "DiscoveryOptions":
        return replace(self, **kw)


class DSeparationOracle:
    """CI 'test' answering from d-separation in a known DAG.

    ``observed`` lists the DAG nodes that are visible, in column order; hidden
    nodes are marginalized.
    """

    def __init__(self, dag: Dag, observed=None):
        self.dag = dag
        self.observed = list(range(dag.n)) if observed is None else list(observed)
        self.n_vars = len(self.observed)
        self.n_tests = 0

    def __call__(self, x: int, y: int, s) -> bool:
        self.n_tests += 1
        obs = self.observed
        return d_separated(self.dag, obs[x], obs[y], [obs[v] for v in s])

    def with_alpha(self, alpha: float) -> "DSeparationOracle":
        return self


def as_ci_test(data, alpha: float):
    """Coerce a Dataset, CorrelationMatrix or CI-test object into a CI test."""
    if isinstance(data, Dataset):
        return FisherZ.from_data(data, alpha)
    if isinstance(data, CorrelationMatrix):
        return FisherZ(data, alpha)
    if callable(data) and hasattr(data, "n_vars"):
        return data.with_alpha(alpha) if hasattr(data, "with_alpha") else data
    raise TypeError(f"cannot build a CI test from {type(data).__name__}")
