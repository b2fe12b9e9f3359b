"""Growth analysis for Poincare-type linear difference equations."""

from ._core import (
    AnalysisError,
    ConfigError,
    __version__,
    analyze,
    dyadic_points,
    growth_exponent,
    log_sum_bound,
    profile,
    transfer_log_norm_rate,
)

__all__ = [
    "AnalysisError",
    "ConfigError",
    "__version__",
    "analyze",
    "dyadic_points",
    "growth_exponent",
    "log_sum_bound",
    "profile",
    "transfer_log_norm_rate",
]
