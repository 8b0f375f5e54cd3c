"""Python bindings for the spconf spatial confounding library."""

from ._core import (
    ConfigError,
    FitResult,
    IdentifiabilityError,
    InvalidArgument,
    NumericalError,
    __version__,
    analytic_ci,
    covariance_matrix,
    exact_gls_bias,
    fit,
    hermite_constants,
    ols_asymptotic_bias,
    run_experiment,
    simulate_clustered,
    simulate_confounder,
    simulate_eigen,
    thinplate_basis,
)

__all__ = [
    "ConfigError",
    "FitResult",
    "IdentifiabilityError",
    "InvalidArgument",
    "NumericalError",
    "__version__",
    "analytic_ci",
    "covariance_matrix",
    "exact_gls_bias",
    "fit",
    "hermite_constants",
    "ols_asymptotic_bias",
    "run_experiment",
    "simulate_clustered",
    "simulate_confounder",
    "simulate_eigen",
    "thinplate_basis",
]
