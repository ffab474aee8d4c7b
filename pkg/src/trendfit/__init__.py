"""trendfit: trend-constrained regression on ordered sequences of distributions.

Fits monotone-quantile (trend) models to batches of univariate samples
tagged with ordinal levels, quantifies the progression effect with
Wasserstein R^2 and the per-level expected Wasserstein change, and assesses
significance with permutation tests.
"""

from .effect_stats import delta_emp, delta_stat, r_squared, residual_table
from .errors import (
    ConvergenceError,
    CoverageError,
    DegenerateDataError,
    EstimationError,
    GridMismatchError,
    InvalidGridError,
    PreconditionError,
    SchemaError,
    UnsupportedError,
)
from .fitting import (
    DirectionConfig,
    TrendFit,
    alternating_projections,
    fit_linear_trends,
    fit_trends,
    follows_trend,
)
from .grid import (
    BatchObservation,
    QuantileFunction,
    QuantileGrid,
    default_grid,
    estimate_quantiles,
    validate_qf,
)
from .inference import (
    TestResult,
    ks_baseline,
    mi_baseline,
    permutation_test,
    plugin_cdf_bandwidth,
    smoothed_permutation_test,
    stepdown_minp,
)
from .isotonic import pava, pool_ties
from .simulate import (
    SimSpec,
    classification_metrics,
    delta_true,
    generate,
    trend_fixture,
    true_quantiles,
    wasserstein_error,
)
from .wasserstein import wasserstein_dist, wasserstein_mean

__version__ = "0.1.0"

__all__ = [
    "BatchObservation",
    "ConvergenceError",
    "CoverageError",
    "DegenerateDataError",
    "DirectionConfig",
    "EstimationError",
    "GridMismatchError",
    "InvalidGridError",
    "PreconditionError",
    "QuantileFunction",
    "QuantileGrid",
    "SchemaError",
    "SimSpec",
    "TestResult",
    "TrendFit",
    "UnsupportedError",
    "alternating_projections",
    "classification_metrics",
    "default_grid",
    "delta_emp",
    "delta_stat",
    "delta_true",
    "estimate_quantiles",
    "fit_linear_trends",
    "fit_trends",
    "follows_trend",
    "generate",
    "ks_baseline",
    "mi_baseline",
    "pava",
    "permutation_test",
    "plugin_cdf_bandwidth",
    "pool_ties",
    "r_squared",
    "residual_table",
    "smoothed_permutation_test",
    "stepdown_minp",
    "trend_fixture",
    "true_quantiles",
    "validate_qf",
    "wasserstein_dist",
    "wasserstein_error",
    "wasserstein_mean",
]
