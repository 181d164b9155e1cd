"""Successive extremes of nonstationary time series.

Fits generalised extreme value models to block maxima of the moving minimum
of a series, estimates extremal indices, links window sizes through a
scaling function ``g(k)`` and turns the result into return levels.
"""
from importlib import resources

from .errors import SuccexError
from .gev import FitResult, GevModel, ParamModel, fit_mle, gev_cdf, gev_quantile
from .series import BlockMaxSeries, TimeSeries, block_maxima, moving_minimum

__version__ = "0.1.0"

__all__ = [
    "BlockMaxSeries",
    "FitResult",
    "GevModel",
    "ParamModel",
    "SuccexError",
    "TimeSeries",
    "block_maxima",
    "bundled_dataset_path",
    "fit_mle",
    "gev_cdf",
    "gev_quantile",
    "moving_minimum",
]


def bundled_dataset_path():
    """Path of the bundled synthetic demand-like series (``t,value`` CSV)."""
    return str(resources.files(__package__) / "data" / "synthetic_demand.csv")
