"""
laplace_knn

Inverse-Laplace k-nearest-neighbor estimators of entropies and divergences,
with truncation schedules, theoretical rate exponents, reference densities
and a Monte Carlo harness for empirical convergence rates.
"""

__version__ = "0.1.0"

# Public API surface

from .core.knn import (
    PointSet,
    KnnIndex,
    KnnStatistic,
    knn_distance,
    self_knn_statistic,
    self_knn_volumes,
    cross_knn_statistic,
    cross_knn_volumes,
)
from .core.functionals import (
    FunctionalKind,
    FunctionalSpec,
    parse_functional,
    f_value,
    phi_single,
    phi_two,
    tail_envelope,
)
from .core.estimator import (
    TruncationSchedule,
    truncation_points_single,
    truncation_points_two,
    estimate_single,
    estimate_two,
)
from .core.rates import theoretical_exponent_single, theoretical_exponent_two
from .core.interfaces import Density, VolumeEstimator
from .core.distributions import parse_density, pdf, sample, smoothness_class
from .core.ground_truth import true_functional
from .core.experiment import (
    ExperimentConfig,
    run_mse_sweep,
    fit_rate_exponent,
    run_ks_gamma_test,
)
from .core.serialization import emit_results
from .core.errors import LaplaceKnnError

__all__ = [
    "__version__",
    # Data structures
    "PointSet",
    "KnnIndex",
    "KnnStatistic",
    "FunctionalKind",
    "FunctionalSpec",
    "TruncationSchedule",
    "ExperimentConfig",
    # Interfaces
    "Density",
    "VolumeEstimator",
    # Estimation
    "knn_distance",
    "self_knn_statistic",
    "self_knn_volumes",
    "cross_knn_volumes",
    "cross_knn_statistic",
    "parse_functional",
    "f_value",
    "phi_single",
    "phi_two",
    "tail_envelope",
    "truncation_points_single",
    "truncation_points_two",
    "estimate_single",
    "estimate_two",
    "theoretical_exponent_single",
    "theoretical_exponent_two",
    # Densities and ground truth
    "parse_density",
    "pdf",
    "sample",
    "smoothness_class",
    "true_functional",
    # Harness
    "run_mse_sweep",
    "fit_rate_exponent",
    "run_ks_gamma_test",
    "emit_results",
    # Errors
    "LaplaceKnnError",
]
