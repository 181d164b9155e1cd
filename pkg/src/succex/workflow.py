"""End-to-end successive-extremes workflow.

Part A checks the single-extreme model (autocorrelation, nonstationary fit
with likelihood-ratio tests, Frechet check). Part B fits the moving-minimum
block maxima for each window size with the shape fixed, estimates extremal
indices, picks the fitting horizon ``k_f`` and fits ``g(k)``. Part C infers
models beyond ``k_f`` and produces return levels, quantiles and
goodness-of-fit reports.

Covariates are shifted so the first block of the series sits at ``t = 0``;
every reported coefficient is in those shifted coordinates and the offset is
kept in :attr:`WorkflowResult.origin`.
"""
from __future__ import annotations

import contextlib
import logging
from dataclasses import dataclass, field

import numpy as np

from .config import WorkflowConfig
from .errors import DataError, SuccexError, WorkflowPreconditionError
from .gev import FitResult, GevModel, fit_mle, likelihood_ratio_test
from .gof import gof_report
from .inference import (
    HorizonTarget,
    QuantileTarget,
    ReturnLevelRow,
    ReturnLevelTable,
    horizon_return_level,
    permutation_ci,
    quantile_table,
    scaled_intervals,
    wald_intervals,
)
from .scaling import scaling_factor
from .series import TimeSeries, autocorrelation, block_maxima, drop_zeros
from .successive import SuccessiveAnalysis, SuccessiveConfig, analyse, covariate_origin

log = logging.getLogger(__name__)


@contextlib.contextmanager
def step(name):
    """Tag any library error raised inside with the workflow step it came from."""
    try:
        yield
    except SuccexError as exc:
        if getattr(exc, "step", None) is None:
            exc.step = name
            exc.args = (f"[step {name}] {exc}",) + exc.args[1:]
        raise


@dataclass
class LRRow:
    nested: str
    full: str
    deviance: float
    df: int
    p_value: float


@dataclass
class ParamRow:
    k: int
    method: str
    model: GevModel
    half_widths: dict
    factor: float | None = None


@dataclass
class QuantileRow:
    k: int
    year: int
    t: float
    p: float
    level: float
    ci_low: float
    ci_high: float


@dataclass
class GofRow:
    k: int
    method: str
    report: object = None
    error: str | None = None


@dataclass
class WorkflowResult:
    config: WorkflowConfig
    n: int
    origin: float
    blocks_per_unit: float
    t_end: float
    acf: np.ndarray
    lr_tests: list
    candidate_fits: dict
    base: FitResult
    analysis: SuccessiveAnalysis | None = None
    params: list = field(default_factory=list)
    returns: ReturnLevelTable | None = None
    quantiles: list = field(default_factory=list)
    gof: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    @property
    def forms(self):
        return self.base.model.location.form, self.base.model.scale.form


def _label(loc, sc):
    return f"{loc}/{sc}"


def blocks_per_unit(series: TimeSeries, m: int) -> float:
    """Blocks per covariate unit from the sampling density of ``series``."""
    span = float(series.covariates[-1] - series.covariates[0])
    if span <= 0:
        raise DataError("covariates span zero length; cannot convert horizons to blocks")
    return (len(series) - 1) / span / m


def select_forms(maxima, cfg: WorkflowConfig):
    """Fit the single-extreme model; with ``auto`` forms, grow it by forward LR selection.

    Returns ``(fit, lr_rows, fits_by_label)``.
    """
    fits = {}

    def fit(loc, sc, init=None):
        key = _label(loc, sc)
        if key not in fits:
            fits[key] = fit_mle(maxima, loc, sc, init=init, restarts=cfg.restarts)
        return fits[key]

    rows = []
    stationary = fit("constant", "constant")
    auto = cfg.location_form == "auto" or cfg.scale_form == "auto"
    if not auto:
        full = fit(cfg.location_form, cfg.scale_form, init=stationary)
        if _label(cfg.location_form, cfg.scale_form) != "constant/constant":
            p = likelihood_ratio_test(stationary, full)
            rows.append(LRRow("constant/constant", _label(cfg.location_form, cfg.scale_form),
                              2 * (stationary.neg_log_likelihood - full.neg_log_likelihood),
                              full.n_params - stationary.n_params, p))
        return full, rows, fits

    loc_opts = ["constant", "linear"] if cfg.location_form == "auto" else [cfg.location_form]
    sc_opts = ["constant", "linear"] if cfg.scale_form == "auto" else [cfg.scale_form]
    loc, sc = loc_opts[0], sc_opts[0]
    current = fit(loc, sc, init=stationary)
    while True:
        steps = []
        if loc_opts.index(loc) + 1 < len(loc_opts):
            steps.append((loc_opts[loc_opts.index(loc) + 1], sc))
        if sc_opts.index(sc) + 1 < len(sc_opts):
            steps.append((loc, sc_opts[sc_opts.index(sc) + 1]))
        if not steps:
            break
        trials = []
        for nl, ns in steps:
            cand = fit(nl, ns, init=current)
            p = likelihood_ratio_test(current, cand)
            rows.append(LRRow(_label(loc, sc), _label(nl, ns),
                              2 * (current.neg_log_likelihood - cand.neg_log_likelihood),
                              cand.n_params - current.n_params, p))
            trials.append((p, nl, ns, cand))
        p, nl, ns, cand = min(trials, key=lambda r: r[0])
        if p >= cfg.lr_alpha:
            break
        loc, sc, current = nl, ns, cand
    return current, rows, fits


def frechet_check(fit: FitResult, cfg: WorkflowConfig, notes):
    xi = fit.model.shape
    if cfg.frechet_check == "lower":
        ci = fit.confidence_interval("xi")
        if ci is None:
            notes.append("A3: shape standard error unavailable; checked the point estimate only")
            ok, detail = xi > 0, f"xi={xi:.4g}"
        else:
            ok, detail = ci[0] > 0, f"xi={xi:.4g}, 95% interval ({ci[0]:.4g}, {ci[1]:.4g})"
    else:
        ok, detail = xi > 0, f"xi={xi:.4g}"
    if not ok:
        raise WorkflowPreconditionError("A3", f"single-extreme shape is not of Frechet type ({detail})")


def successive_config(cfg: WorkflowConfig, base: FitResult) -> SuccessiveConfig:
    return SuccessiveConfig(
        block_length=cfg.block_length,
        location_form=base.model.location.form,
        scale_form=base.model.scale.form,
        q=cfg.q,
        window_span=cfg.window_span,
        k_fit_max=cfg.k_fit_max,
        scaling_form=cfg.scaling_form,
        scaling_degree=cfg.scaling_degree,
        response=cfg.scaling_response,
        theta_extrapolation=cfg.theta_extrapolation,
        restarts=cfg.restarts,
    )


def parameter_intervals(analysis: SuccessiveAnalysis, k, level=0.95):
    """Per-coefficient intervals for the window-``k`` model of the full method.

    Fitted windows use their own Wald intervals; the shape always carries the
    ``k = 1`` interval since it is fixed from there. Inferred windows carry
    the ``k = 1`` intervals through the scaling factor.
    """
    base = analysis.base
    base_cis = wald_intervals(base, level=level)
    if not analysis.is_inferred(k):
        cis = wald_intervals(analysis.windows[k].fixed, level=level)
        cis["xi"] = base_cis["xi"]
        return cis, None
    theta = analysis.theta.as_dict()
    c = scaling_factor(analysis.law, k, analysis.theta_at(k), theta[1], base.model.shape)
    return scaled_intervals(base_cis, base.model, c), c


def run_workflow(config: WorkflowConfig, series: TimeSeries) -> WorkflowResult:
    """Run Parts A, B and C on a raw series and collect everything for emission."""
    cfg = config.validate()
    notes = []
    with step("A1"):
        if cfg.drop_zeros:
            series = drop_zeros(series)
        origin = covariate_origin(series, cfg.block_length)
        series = series.shifted(origin)
        bpu = blocks_per_unit(series, cfg.block_length)
        acf = autocorrelation(series, min(cfg.max_lag, len(series) - 1))
    with step("A2"):
        maxima = block_maxima(series, cfg.block_length)
        base, lr_rows, cand = select_forms(maxima, cfg)
        if not base.converged:
            notes.append("A2: single-extreme fit reported non-convergence")
    with step("A3"):
        frechet_check(base, cfg, notes)
    result = WorkflowResult(cfg, len(series), origin, bpu, float(series.covariates[-1]), acf, lr_rows, cand, base,
                            notes=notes)
    with step("B1-B5"):
        analysis = analyse(series, successive_config(cfg, base), k_max=cfg.k_max, base=base)
    result.analysis = analysis
    notes.extend(f"B: {n}" for n in analysis.notes)
    with step("C"):
        _part_c(result, series)
    return result


def _part_c(result: WorkflowResult, series):
    cfg, analysis = result.config, result.analysis
    t0 = result.t_end
    table = ReturnLevelTable(anchor_t=t0, blocks_per_unit=result.blocks_per_unit)
    for k in range(1, cfg.k_max + 1):
        try:
            model = analysis.model_for(k, "full_proposed")
        except SuccexError as exc:
            result.notes.append(f"C: k={k}: {exc}")
            model = None
        if model is None:
            result.notes.append(f"C: k={k}: no model (fit failed and no scaling law)")
            continue
        method = "inferred" if analysis.is_inferred(k) else "fitted"
        cis, factor = parameter_intervals(analysis, k, cfg.ci_level)
        hw = {n: (hi - lo) / 2 for n, (lo, hi) in cis.items()}
        result.params.append(ParamRow(k, method, model, hw, factor))

        for h in cfg.horizons:
            target = HorizonTarget(t0, t0 + h, result.blocks_per_unit)
            try:
                level = horizon_return_level(model, (t0, t0 + h), result.blocks_per_unit)
                ci = permutation_ci(model, cis, target, cfg.samples_per_param, t_range=(t0, t0 + h))
            except SuccexError as exc:
                result.notes.append(f"C: k={k}, horizon {h}: {exc}")
                continue
            n_events = int(np.floor(h * result.blocks_per_unit + 1e-9))
            table.rows.append(ReturnLevelRow(k, float(h), n_events, level, ci.low, ci.high, method))

        for year in range(1, cfg.quantile_years + 1):
            t = t0 + year - 0.5
            try:
                levels = quantile_table(model, t, cfg.quantile_probs)
            except SuccexError as exc:
                result.notes.append(f"C: k={k}, year {year}: {exc}")
                continue
            for p, lev in zip(cfg.quantile_probs, levels):
                ci = permutation_ci(model, cis, QuantileTarget(p, t), cfg.samples_per_param,
                                    t_range=(t0, t0 + cfg.quantile_years))
                result.quantiles.append(QuantileRow(k, year, t, p, float(lev), ci.low, ci.high))

        w = analysis.windows.get(k)
        if w is not None and w.maxima is not None:
            try:
                result.gof.append(GofRow(k, method, gof_report(w.maxima, model)))
            except SuccexError as exc:
                result.gof.append(GofRow(k, method, None, str(exc)))
    result.returns = table
