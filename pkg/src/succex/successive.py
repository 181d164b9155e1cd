"""Successive-extreme analysis: per-window fits, extremal indices, fitting horizon and g(k).

This is the part of the workflow shared by the full pipeline and the method
comparison. Input series are expected in model coordinates (covariate origin
already shifted to the first block).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientDataError, NumericalError, SuccexError, WindowError
from .extremal import ThetaByWindow, theta_by_window
from .gev import FitResult, GevModel, fit_mle
from .gof import GofReport, gof_report
from .scaling import (
    HorizonDecision,
    ScalingInputs,
    ScalingLaw,
    extrapolate_theta,
    fit_scaling,
    fitting_horizon,
    infer_model,
    link_for_form,
    select_form,
)
from .series import BlockMaxSeries, TimeSeries, block_maxima, moving_minimum

log = logging.getLogger(__name__)

METHODS = ("full_proposed", "fixed_shape_mle", "plain_mle")


@dataclass
class SuccessiveConfig:
    block_length: int = 10
    location_form: str = "linear"
    scale_form: str = "linear"
    q: float = 0.95
    window_span: float = 1.0
    k_fit_max: int = 10
    scaling_form: str = "auto"
    scaling_degree: int = 2
    response: str = "adjusted"
    weighted: bool = False
    theta_extrapolation: str = "flat"
    min_scaling_points: int = 3
    restarts: int = 5


@dataclass
class WindowFit:
    k: int
    maxima: BlockMaxSeries | None = None
    fixed: FitResult | None = None
    free: FitResult | None = None
    gof: GofReport | None = None
    error: str | None = None
    free_error: str | None = None


@dataclass
class SuccessiveAnalysis:
    config: SuccessiveConfig
    base: FitResult
    windows: dict
    theta: ThetaByWindow
    horizon: HorizonDecision
    k_scaling: list = field(default_factory=list)
    scaling_inputs: ScalingInputs | None = None
    law: ScalingLaw | None = None
    law_candidates: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    @property
    def xi1(self):
        return self.base.model.shape

    @property
    def k_f(self):
        return self.horizon.k_f

    def theta_at(self, k):
        return extrapolate_theta(self.theta.as_dict(), k, self.config.theta_extrapolation)

    def model_for(self, k, method="full_proposed") -> GevModel | None:
        """Model for window ``k`` under one of the three estimation methods; None on failure."""
        w = self.windows.get(k)
        if method == "plain_mle":
            return w.free.model if w is not None and w.free is not None and w.free.converged else None
        if method == "fixed_shape_mle":
            return w.fixed.model if w is not None and w.fixed is not None and w.fixed.converged else None
        if method != "full_proposed":
            raise ValueError(f"unknown method {method!r}")
        if k <= self.k_f and w is not None and w.fixed is not None:
            return w.fixed.model
        if self.law is None:
            return None
        theta = self.theta.as_dict()
        if 1 not in theta:
            return None
        return infer_model(self.law, k, self.base.model, self.theta_at(k), theta[1])

    def is_inferred(self, k):
        return k > self.k_f or self.windows.get(k) is None or self.windows[k].fixed is None


def window_maxima(series: TimeSeries, k: int, m: int) -> BlockMaxSeries:
    return block_maxima(moving_minimum(series, k), m)


def fit_window(series, k, cfg: SuccessiveConfig, base: FitResult, fit_free=True) -> WindowFit:
    """Fixed-shape (and optionally free-shape) fit of the k-window block maxima."""
    w = WindowFit(k)
    try:
        w.maxima = window_maxima(series, k, cfg.block_length)
        if k == 1:
            w.fixed = base
        else:
            w.fixed = fit_mle(w.maxima, cfg.location_form, cfg.scale_form, fixed_shape=base.model.shape,
                              restarts=cfg.restarts)
    except (SuccexError, FloatingPointError) as exc:
        w.error = f"{type(exc).__name__}: {exc}"
        return w
    try:
        w.gof = gof_report(w.maxima, w.fixed.model)
    except SuccexError as exc:
        w.error = f"goodness of fit: {exc}"
    if fit_free:
        if k == 1:
            w.free = base
        else:
            try:
                w.free = fit_mle(w.maxima, cfg.location_form, cfg.scale_form, init=w.fixed, restarts=cfg.restarts)
            except SuccexError as exc:
                w.free_error = f"{type(exc).__name__}: {exc}"
    return w


def scaling_inputs_from(windows, theta: dict, ks, base: FitResult) -> ScalingInputs:
    ks = [k for k in ks if windows.get(k) is not None and windows[k].fixed is not None and k in theta]
    fits = [windows[k].fixed for k in ks]
    m = base.model
    return ScalingInputs(
        np.array(ks),
        np.array([f.model.location.coefficients[0] for f in fits]),
        np.array([f.model.scale.coefficients[0] for f in fits]),
        np.array([theta[k] for k in ks]),
        m.shape,
        link_for_form(m.location.form),
        link_for_form(m.scale.form),
        np.array([f.standard_errors.get("mu0", np.nan) for f in fits]),
    )


def fit_law(inputs: ScalingInputs, cfg: SuccessiveConfig, k_max=None):
    weights = None
    if cfg.weighted and inputs.mu0_se is not None and np.all(np.isfinite(inputs.mu0_se)) and np.all(inputs.mu0_se > 0):
        # variance of log(mu) by the delta method
        rel = inputs.mu0_se / np.abs(inputs.mu0) if inputs.location_link == "identity" else inputs.mu0_se
        weights = 1.0 / rel ** 2
    if cfg.scaling_form == "auto":
        if weights is not None or cfg.response != "adjusted":
            _, best, cands = select_form(inputs, k_max=k_max)
            return fit_scaling(inputs, best.form, best.degree or 0, cfg.response, weights), cands
        _, best, cands = select_form(inputs, max_degree=cfg.scaling_degree, k_max=k_max)
        return best, cands
    law = fit_scaling(inputs, cfg.scaling_form, cfg.scaling_degree, cfg.response, weights)
    return law, {law.label: law}


def analyse(series: TimeSeries, cfg: SuccessiveConfig, k_max=None, base: FitResult | None = None) -> SuccessiveAnalysis:
    """Run the per-window fits, extremal indices, horizon choice and scaling fit."""
    notes = []
    if base is None:
        base = fit_mle(block_maxima(series, cfg.block_length), cfg.location_form, cfg.scale_form,
                       restarts=cfg.restarts)
    k_top = max(cfg.k_fit_max, k_max or 0)
    windows = {}
    for k in range(1, k_top + 1):
        if k > len(series):
            break
        windows[k] = fit_window(series, k, cfg, base)
    theta = theta_by_window(series, k_top, cfg.q, cfg.window_span)
    if theta.failure:
        notes.append(f"extremal index horizon: {theta.failure}")

    cands = {}
    xi_ci = base.confidence_interval("xi")
    for k in range(1, cfg.k_fit_max + 1):
        w = windows.get(k)
        if w is None or w.fixed is None:
            cands[k] = {"converged": False}
            continue
        cands[k] = {
            "converged": w.fixed.converged,
            "ks_p": w.gof.ks_p if w.gof else 0.0,
            "ad_p": w.gof.ad_p if w.gof else 0.0,
            "xi_free": w.free.model.shape if w.free is not None and w.free.converged else None,
        }
    horizon = fitting_horizon(cands, xi_ci)
    if xi_ci is None:
        notes.append("k=1 shape standard error unavailable; shape-deviation check skipped")

    thetas = theta.as_dict()
    usable = [k for k in range(1, cfg.k_fit_max + 1)
              if k in thetas and windows.get(k) is not None and windows[k].fixed is not None
              and windows[k].fixed.converged]
    k_scaling = [k for k in usable if k <= horizon.k_f]
    if len(k_scaling) < cfg.min_scaling_points:
        k_scaling = usable[: max(cfg.min_scaling_points, len(k_scaling))]
        notes.append(f"fitting horizon k_f={horizon.k_f} leaves too few windows; "
                     f"g(k) fitted on k={k_scaling}")
    analysis = SuccessiveAnalysis(cfg, base, windows, theta, horizon, k_scaling, notes=notes)
    if len(k_scaling) >= 3 and 1 in k_scaling:
        try:
            analysis.scaling_inputs = scaling_inputs_from(windows, thetas, k_scaling, base)
            analysis.law, analysis.law_candidates = fit_law(analysis.scaling_inputs, cfg, k_top)
        except (NumericalError, ValueError) as exc:
            notes.append(f"scaling fit failed: {exc}")
    else:
        notes.append("not enough usable windows to fit g(k)")
    for n in notes:
        log.info(n)
    return analysis


def covariate_origin(series: TimeSeries, m: int) -> float:
    """Covariate of the first block; subtracting it puts that block at ``t = 0``."""
    if m > len(series):
        raise WindowError(f"block length m={m} exceeds series length {len(series)}")
    return float(series.covariates[(m - 1) // 2])


def require_windows(series, cfg, k_list):
    need = max(k_list) + cfg.block_length - 1
    if len(series) < need:
        raise InsufficientDataError(f"series of length {len(series)} is too short for k={max(k_list)} "
                                    f"with block length {cfg.block_length}")
