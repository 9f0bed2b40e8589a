from .fci import fci
from .ges import BicScorer, ges, ges_dag, node_bic
from .options import DiscoveryOptions, DSeparationOracle, as_ci_test
from .pc import learn_skeleton, orient_colliders, pc
from .sweep import ALGORITHMS, SweepResult, alpha_grid, run_algorithm, threshold_sweep

__all__ = [
    "ALGORITHMS", "BicScorer", "DSeparationOracle", "DiscoveryOptions", "SweepResult",
    "alpha_grid", "as_ci_test", "fci", "ges", "ges_dag", "learn_skeleton", "node_bic",
    "orient_colliders", "pc", "run_algorithm", "threshold_sweep",
]
