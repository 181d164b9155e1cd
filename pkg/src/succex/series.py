"""Time-series container and the windowing transforms used by the workflow.

The raw sequence is turned into three derived sequences: the moving minimum
over a ``k``-window (successive extremes), block maxima of either, and a
moving quantile used as a nonstationary threshold.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from sortedcontainers import SortedList

from .errors import DataError, EmptySeriesError, InvalidArgumentError, WindowError


@dataclass(frozen=True)
class TimeSeries:
    """Observations ``values[i]`` taken at covariate ``covariates[i]``.

    Covariates must be nondecreasing (ties allowed: several events can share
    a covariate instant) and all values finite.
    """

    covariates: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.covariates, dtype=float).copy()
        x = np.asarray(self.values, dtype=float).copy()
        if t.ndim != 1 or x.ndim != 1:
            raise DataError("covariates and values must be one-dimensional")
        if len(t) != len(x):
            raise DataError(f"length mismatch: {len(t)} covariates, {len(x)} values")
        if len(x) == 0:
            raise EmptySeriesError("series is empty")
        if not np.all(np.isfinite(x)) or not np.all(np.isfinite(t)):
            raise DataError("covariates and values must be finite")
        if np.any(np.diff(t) < 0):
            raise DataError("covariates must be nondecreasing")
        t.flags.writeable = False
        x.flags.writeable = False
        object.__setattr__(self, "covariates", t)
        object.__setattr__(self, "values", x)

    @classmethod
    def from_values(cls, values, start=0.0, step=1.0):
        values = np.asarray(values, dtype=float)
        return cls(start + step * np.arange(len(values)), values)

    def __len__(self):
        return len(self.values)

    def shifted(self, offset):
        """Copy with ``offset`` subtracted from every covariate."""
        return TimeSeries(self.covariates - offset, self.values)

    def slice(self, start, stop):
        return TimeSeries(self.covariates[start:stop], self.values[start:stop])


@dataclass(frozen=True)
class BlockMaxSeries:
    block_covariates: np.ndarray
    maxima: np.ndarray
    block_length: int

    def __len__(self):
        return len(self.maxima)


def moving_minimum(series: TimeSeries, k: int) -> TimeSeries:
    """Minimum over each length-``k`` window, labelled by the window start.

    ``out[j] >= z`` holds exactly when every input value in ``j..j+k-1`` is at
    least ``z``; an exceedance of the output therefore certifies ``k``
    successive exceedances of the input.
    """
    if k < 1:
        raise WindowError(f"invalid window size k={k}; must be >= 1")
    n = len(series)
    if k > n:
        raise WindowError(f"window size k={k} exceeds series length {n}")
    if k == 1:
        return series
    mins = sliding_window_view(series.values, k).min(axis=1)
    return TimeSeries(series.covariates[: n - k + 1], mins)


def block_maxima(series: TimeSeries, m: int) -> BlockMaxSeries:
    """Maxima over consecutive blocks of length ``m``; a partial tail block is dropped.

    Each block is represented by the covariate at its middle index
    ``b*m + (m-1)//2``.
    """
    n = len(series)
    if m < 1:
        raise WindowError(f"invalid block length m={m}; must be >= 1")
    if m > n:
        raise WindowError(f"block length m={m} exceeds series length {n}")
    nb = n // m
    blocks = series.values[: nb * m].reshape(nb, m)
    mid = np.arange(nb) * m + (m - 1) // 2
    return BlockMaxSeries(series.covariates[mid].copy(), blocks.max(axis=1), m)


def _type7(sorted_vals, q):
    n = len(sorted_vals)
    h = (n - 1) * q
    j = int(np.floor(h))
    if j >= n - 1:
        return float(sorted_vals[n - 1])
    lo = sorted_vals[j]
    return float(lo + (h - j) * (sorted_vals[j + 1] - lo))


def moving_quantile(series: TimeSeries, window_span: float, q: float) -> TimeSeries:
    """Empirical ``q``-quantile over a centred covariate window.

    For each index ``i`` the window holds every value whose covariate lies in
    the closed interval ``[t_i - span/2, t_i + span/2]``. Quantiles use linear
    interpolation between order statistics (``h = (n-1) q``, the usual
    "type 7" rule).
    """
    if not 0.0 < q < 1.0:
        raise InvalidArgumentError(f"quantile level q={q} must lie in (0, 1)")
    if not window_span > 0:
        raise InvalidArgumentError(f"window_span={window_span} must be positive")
    t, x = series.covariates, series.values
    half = window_span / 2.0
    lo = np.searchsorted(t, t - half, side="left")
    hi = np.searchsorted(t, t + half, side="right")

    out = np.empty(len(x))
    window = SortedList()
    cur_lo = cur_hi = 0
    last = None
    for i in range(len(x)):
        a, b = int(lo[i]), int(hi[i])
        if (a, b) == last:
            out[i] = out[i - 1]
            continue
        # lo and hi are both nondecreasing, so the window only slides forward
        if a >= cur_hi:
            window.clear()
            cur_lo = cur_hi = a
        if b > cur_hi:
            window.update(x[cur_hi:b])
            cur_hi = b
        for v in x[cur_lo:a]:
            window.remove(v)
        cur_lo = a
        out[i] = _type7(window, q)
        last = (a, b)
    return TimeSeries(t, out)


def autocorrelation(series: TimeSeries, max_lag: int) -> np.ndarray:
    """Sample autocorrelation at lags ``0..max_lag`` (biased normalisation)."""
    n = len(series)
    if max_lag < 0 or max_lag >= n:
        raise InvalidArgumentError(f"max_lag={max_lag} must be in [0, {n - 1}]")
    d = series.values - series.values.mean()
    denom = float(d @ d)
    if denom == 0.0:
        raise DataError("autocorrelation undefined for a constant series")
    acf = np.empty(max_lag + 1)
    acf[0] = 1.0
    for lag in range(1, max_lag + 1):
        acf[lag] = float(d[:-lag] @ d[lag:]) / denom
    return acf


def drop_zeros(series: TimeSeries) -> TimeSeries:
    keep = series.values != 0
    if not keep.any():
        raise EmptySeriesError("no nonzero observations remain after dropping zeros")
    return TimeSeries(series.covariates[keep], series.values[keep])
