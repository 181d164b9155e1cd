"""Extremal index by the Ferro-Segers intervals estimator under moving thresholds."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, InsufficientExceedancesError
from .series import TimeSeries, moving_minimum, moving_quantile

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ThetaEstimate:
    k: int
    theta: float
    n_exceedances: int
    threshold_quantile: float | None = None
    threshold_window_span: float | None = None
    clamped: bool = False
    saturated: bool = False


def intervals_estimate(gaps):
    """Ferro-Segers intervals estimate from interexceedance times (index units).

    Returns ``(theta, clamped, saturated)``. The bias-corrected form is used
    whenever some gap exceeds 2. ``saturated`` marks the degenerate case in
    which every gap equals 1 (one unbroken run of exceedances).
    """
    T = np.asarray(gaps, dtype=float)
    n = len(T)
    if n < 1:
        raise InsufficientExceedancesError("need at least one interexceedance time")
    saturated = bool(np.all(T == 1))
    if T.max() <= 2:
        raw = 2.0 * T.sum() ** 2 / (n * np.sum(T * T))
    else:
        raw = 2.0 * np.sum(T - 1) ** 2 / (n * np.sum((T - 1) * (T - 2)))
    clamped = raw > 1.0
    return float(min(1.0, raw)), clamped, saturated


def ferro_segers(series: TimeSeries, threshold, k=1, q=None, window_span=None) -> ThetaEstimate:
    """Extremal index of ``series`` above a threshold aligned index-wise with it.

    ``threshold`` is a :class:`TimeSeries` (or array, or scalar) giving
    ``u(t_i)``; exceedances are strict, ``x_i > u(t_i)``.
    """
    x = series.values
    u = threshold.values if isinstance(threshold, TimeSeries) else np.asarray(threshold, float)
    if u.ndim == 0:
        u = np.full(x.shape, float(u))
    if u.shape != x.shape:
        raise DataError(f"threshold length {len(u)} does not match series length {len(x)}")
    idx = np.flatnonzero(x > u)
    if len(idx) < 3:
        raise InsufficientExceedancesError(f"k={k}: {len(idx)} exceedances, need at least 3")
    theta, clamped, saturated = intervals_estimate(np.diff(idx))
    return ThetaEstimate(k, theta, len(idx), q, window_span, clamped, saturated)


@dataclass
class ThetaByWindow:
    estimates: list
    horizon: int
    failure: str | None = field(default=None)

    def as_dict(self):
        return {e.k: e.theta for e in self.estimates}


def theta_by_window(series: TimeSeries, k_max: int, q=0.95, window_span=1.0) -> ThetaByWindow:
    """Extremal index of the moving minimum for ``k = 1..k_max``.

    Each window size gets its own moving-quantile threshold computed on the
    moving-minimum sequence. The result stops at the first ``k`` whose
    estimate fails; ``horizon`` is the last ``k`` that succeeded.
    """
    out = []
    failure = None
    for k in range(1, k_max + 1):
        try:
            y = moving_minimum(series, k)
            u = moving_quantile(y, window_span, q)
            out.append(ferro_segers(y, u, k=k, q=q, window_span=window_span))
        except (InsufficientExceedancesError, DataError) as exc:
            failure = f"k={k}: {exc}"
            log.info("extremal index horizon reached: %s", failure)
            break
    return ThetaByWindow(out, len(out), failure)
