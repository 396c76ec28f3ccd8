"""Explicit Hellinger-distance-to-Gaussian bounds for U-statistics, with the
exchangeable-pair machinery and Monte Carlo checks behind them."""
from .bounds import BoundInputs, BoundReport, alpha_const, bound_report
from .dists import DistributionSpec
from .errors import ConfigError, DegeneracyError, DomainError, NumericError, SteinHellingerError
from .hellinger import GaussianMixture, HellingerEstimate, hellinger_distance, kde_mixture
from .numerics import RngStream
from .ustat import KernelSpec, chaos_kernel, custom_kernel, simulate_batch, standardize

__version__ = "0.1.0"

__all__ = [
    "BoundInputs", "BoundReport", "alpha_const", "bound_report", "DistributionSpec",
    "ConfigError", "DegeneracyError", "DomainError", "NumericError", "SteinHellingerError",
    "GaussianMixture", "HellingerEstimate", "hellinger_distance", "kde_mixture", "RngStream",
    "KernelSpec", "chaos_kernel", "custom_kernel", "simulate_batch", "standardize",
]
