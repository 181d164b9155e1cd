"""Return levels, horizon levels, quantile tables and permutation confidence bounds."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InfeasibleGridError, InvalidArgumentError
from .gev import GevModel, ParamModel, evaluate_params, gev_quantile, gev_sf


def return_level(model: GevModel, return_period_blocks: float, t: float) -> float:
    """Level exceeded on average once every ``return_period_blocks`` blocks at covariate ``t``."""
    if not return_period_blocks > 1:
        raise InvalidArgumentError(f"return period must exceed 1 block, got {return_period_blocks}")
    mu, sigma, xi = evaluate_params(model, t)
    return float(gev_quantile(1.0 - 1.0 / return_period_blocks, xi, mu, sigma))


def horizon_blocks(t_start, t_end, blocks_per_unit):
    """Block midpoints covering ``[t_start, t_end]``; at least two blocks are required."""
    if not t_end > t_start:
        raise InvalidArgumentError(f"horizon end {t_end} must exceed start {t_start}")
    n = int(np.floor((t_end - t_start) * blocks_per_unit + 1e-9))
    if n < 2:
        raise InvalidArgumentError(
            f"horizon [{t_start}, {t_end}] spans {n} block(s) at {blocks_per_unit} blocks per unit; need >= 2")
    return t_start + (np.arange(n) + 0.5) / blocks_per_unit


def _sf_and_pdf(z, mu, sigma, xi):
    s = (z - mu) / sigma
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        safe_xi = np.where(xi == 0, 1.0, xi)
        logw = np.where(xi == 0, -s, -np.log1p(xi * s) / safe_xi)
        w = np.exp(logw)
        sf = -np.expm1(-w)
        pdf = np.exp((1.0 + xi) * logw - w) / sigma
        outside = (xi != 0) & ~(1.0 + xi * s > 0)
        sf = np.where(outside, np.where(xi > 0, 1.0, 0.0), sf)
        pdf = np.where(outside | ~np.isfinite(pdf), 0.0, pdf)
    return sf, pdf


def _solve_unit_exceedance(mu, sigma, xi, rtol=1e-13, max_iter=200):
    """Solve ``sum_b P(Z_b > z) = 1`` along the last axis, one root per row.

    ``mu`` and ``sigma`` have shape ``(cells, blocks)``, ``xi`` ``(cells, 1)``.
    The per-block levels with return period ``blocks`` bracket the root;
    Newton steps that leave the bracket fall back to bisection.
    """
    nb = mu.shape[-1]
    per_block = gev_quantile(1.0 - 1.0 / nb, xi, mu, sigma)
    lo = per_block.min(axis=-1)
    hi = per_block.max(axis=-1)
    z = 0.5 * (lo + hi)
    done = lo == hi
    for _ in range(max_iter):
        if done.all():
            break
        sf, pdf = _sf_and_pdf(z[:, None], mu, sigma, xi)
        f = sf.sum(axis=-1) - 1.0
        fp = -pdf.sum(axis=-1)
        lo = np.where(f > 0, z, lo)
        hi = np.where(f <= 0, z, hi)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = f / fp
        znew = z - step
        tol = rtol * np.maximum(1.0, np.abs(z))
        conv = np.isfinite(step) & (np.abs(step) <= tol)
        bad = ~np.isfinite(znew) | (znew < lo) | (znew > hi)
        znew = np.where(bad & ~conv, 0.5 * (lo + hi), znew)
        z = np.where(done, z, znew)
        done = done | conv | (hi - lo <= tol)
    return z


def horizon_return_level(model: GevModel, covariate_range, blocks_per_unit: float) -> float:
    """Level with one expected block exceedance over a covariate horizon.

    Solves ``sum_b [1 - G(z; xi, mu(t_b), sigma(t_b))] = 1`` with one term per
    block at its covariate midpoint. For a stationary model this is the
    ordinary return level with period equal to the number of blocks.
    """
    tb = horizon_blocks(covariate_range[0], covariate_range[1], blocks_per_unit)
    mu, sigma, xi = evaluate_params(model, tb)
    mu = np.broadcast_to(mu, tb.shape)[None, :]
    sigma = np.broadcast_to(sigma, tb.shape)[None, :]
    return float(_solve_unit_exceedance(mu, sigma, np.array([[xi]]))[0])


def quantile_table(model: GevModel, t: float, probs) -> np.ndarray:
    probs = np.asarray(probs, dtype=float)
    if np.any(np.diff(probs) <= 0):
        raise InvalidArgumentError("probabilities must be strictly increasing")
    mu, sigma, xi = evaluate_params(model, t)
    return np.asarray(gev_quantile(probs, xi, mu, sigma), dtype=float)


# Targets evaluate on models whose coefficients are (cells, 1) arrays.

@dataclass(frozen=True)
class QuantileTarget:
    p: float
    t: float

    def __call__(self, model):
        mu, sigma, xi = model.params_at(self.t)
        return np.ravel(gev_quantile(self.p, xi, mu, sigma))


@dataclass(frozen=True)
class ReturnLevelTarget:
    period: float
    t: float

    def __call__(self, model):
        return QuantileTarget(1.0 - 1.0 / self.period, self.t)(model)


@dataclass(frozen=True)
class HorizonTarget:
    t_start: float
    t_end: float
    blocks_per_unit: float
    chunk_cells: int = 20_000

    def __call__(self, model):
        tb = horizon_blocks(self.t_start, self.t_end, self.blocks_per_unit)
        mu, sigma, xi = model.params_at(tb)
        cells = np.broadcast_shapes(np.shape(mu), np.shape(sigma), np.shape(xi), (1, len(tb)))
        mu = np.broadcast_to(mu, cells)
        sigma = np.broadcast_to(sigma, cells)
        xi = np.broadcast_to(np.asarray(xi, dtype=float).reshape(-1, 1), (cells[0], 1))
        return _solve_unit_exceedance(mu, sigma, xi)


@dataclass(frozen=True)
class PermutationCI:
    low: float
    high: float
    point: float
    n_evaluated: int
    n_skipped: int


def _grid_model(model, cols):
    def pm(p, prefix):
        return ParamModel(p.form, tuple(cols[f"{prefix}{i}"] for i in range(p.n_coef)))

    return GevModel(cols["xi"], pm(model.location, "mu"), pm(model.scale, "sigma"), model.shape_fixed)


def permutation_ci(model: GevModel, param_cis: dict, target, samples_per_param=10, t_range=None,
                   chunk_cells=None) -> PermutationCI:
    """Min and max of ``target`` over every combination of per-parameter samples.

    Each parameter named in ``param_cis`` (``mu0``, ``mu1``, ``sigma0``,
    ``sigma1``, ``xi``) gets ``samples_per_param`` equally spaced values
    spanning its interval, endpoints included; parameters not listed stay at
    their point values. Combinations whose scale is not positive over
    ``t_range`` are skipped. The point-estimate evaluation is always
    included in the bounds.
    """
    if samples_per_param < 2:
        raise InvalidArgumentError("samples_per_param must be >= 2")
    point_vals = model.coefficients()
    unknown = set(param_cis) - set(point_vals)
    if unknown:
        raise InvalidArgumentError(f"unknown parameters {sorted(unknown)}; model has {sorted(point_vals)}")
    names = [n for n in point_vals if n in param_cis]
    axes = []
    for n in names:
        lo, hi = param_cis[n]
        if not (np.isfinite(lo) and np.isfinite(hi)) or hi < lo:
            raise InvalidArgumentError(f"interval for {n} must be finite with low <= high, got {(lo, hi)}")
        axes.append(np.linspace(lo, hi, samples_per_param))
    grids = np.meshgrid(*axes, indexing="ij") if axes else []
    total = int(samples_per_param ** len(names))
    cols = {n: np.full(total, float(v)) for n, v in point_vals.items()}
    for n, g in zip(names, grids):
        cols[n] = g.ravel()

    feasible = np.ones(total, dtype=bool)
    if model.scale.form != "exponential":
        ts = [0.0] if t_range is None else list(t_range)
        for t in ts:
            s = cols["sigma0"] + (cols["sigma1"] * t if model.scale.form == "linear" else 0.0)
            feasible &= s > 0
    n_ok = int(feasible.sum())
    if n_ok == 0:
        raise InfeasibleGridError("every parameter combination has a nonpositive scale")

    point = float(np.ravel(target(_grid_model(model, {n: np.array([[v]]) for n, v in point_vals.items()})))[0])
    low, high = point, point
    idx = np.flatnonzero(feasible)
    if chunk_cells is None:
        chunk_cells = getattr(target, "chunk_cells", 200_000)
    for start in range(0, n_ok, chunk_cells):
        sel = idx[start : start + chunk_cells]
        vals = np.ravel(target(_grid_model(model, {n: c[sel][:, None] for n, c in cols.items()})))
        vals = vals[np.isfinite(vals)]
        if vals.size:
            low = min(low, float(vals.min()))
            high = max(high, float(vals.max()))
    return PermutationCI(low, high, point, n_ok, total - n_ok)


def wald_intervals(fit, names=None, level=0.95):
    """Per-coefficient Wald intervals from a fit; zero-width where no SE exists."""
    coefs = fit.model.coefficients()
    out = {}
    for n in names or coefs:
        if n not in coefs:
            continue
        ci = fit.confidence_interval(n, level) if n in fit.standard_errors else None
        out[n] = ci if ci is not None else (coefs[n], coefs[n])
    return out


def scaled_intervals(base_cis: dict, base_model: GevModel, factor: float):
    """Carry base-model intervals through a multiplicative rescaling of location and scale.

    Linear and constant coefficients scale by ``factor``; the intercept of an
    exponential form shifts by ``log(factor)``; slopes of exponential forms
    and the shape are unchanged.
    """
    out = {}
    for n, (lo, hi) in base_cis.items():
        form = base_model.location.form if n.startswith("mu") else base_model.scale.form if n.startswith("sigma") else None
        if form is None:
            out[n] = (lo, hi)
        elif form == "exponential":
            out[n] = (lo + np.log(factor), hi + np.log(factor)) if n.endswith("0") else (lo, hi)
        else:
            out[n] = (lo * factor, hi * factor)
    return out


@dataclass
class ReturnLevelRow:
    k: int
    horizon_span: float
    horizon_events: int
    level: float
    ci_low: float
    ci_high: float
    method: str = "full_proposed"

    @property
    def total(self):
        return self.k * self.level


@dataclass
class ReturnLevelTable:
    rows: list = field(default_factory=list)
    anchor_t: float = 0.0
    blocks_per_unit: float = 1.0
    method: str = "full_proposed"

    def levels(self, k):
        return [r.level for r in self.rows if r.k == k]


def return_level_curve(model: GevModel, t: float, periods):
    return np.array([return_level(model, T, t) for T in periods])


# ---------------------------------------------------------------------------
# Method comparison on a short run against a long-run reference

@dataclass
class MethodCell:
    method: str
    k: int
    model: GevModel | None
    params: dict
    errors: dict
    failure: str | None = None
    inferred: bool = False
    curve: np.ndarray | None = None

    @property
    def ok(self):
        return self.model is not None


@dataclass
class MethodComparison:
    cells: dict
    reference: dict
    k_list: list
    anchor_t: float
    origin: float
    analysis: object = None

    def cell(self, method, k) -> MethodCell:
        return self.cells[(method, k)]

    def error(self, method, k, name="mu"):
        c = self.cells[(method, k)]
        return c.errors.get(name, np.inf) if c.ok else np.inf

    def mean_error(self, method, ks=None, name="mu"):
        return float(np.mean([self.error(method, k, name) for k in (ks or self.k_list)]))


def _anchor_params(model, t):
    mu, sigma, xi = evaluate_params(model, t)
    return {"mu": float(mu), "sigma": float(sigma), "xi": float(xi)}


def gumbel_curve(maxima, model):
    """Empirical return-level curve of Gumbel-normalized maxima: columns (T, level)."""
    from .gev import gumbel_normalize

    g = np.sort(gumbel_normalize(maxima, model))
    n = len(g)
    p = np.arange(1, n + 1) / (n + 1.0)
    return np.column_stack([1.0 / (1.0 - p), g])


def reference_models(long_run, k_list, config, method="fixed_shape_mle"):
    """Per-k reference models fitted on the long run (already in model coordinates)."""
    from .gev import fit_mle
    from .series import block_maxima
    from .successive import window_maxima

    m = config.block_length
    base = fit_mle(block_maxima(long_run, m), config.location_form, config.scale_form, restarts=config.restarts)
    out = {1: base.model}
    for k in sorted(set(k_list) - {1}):
        z = window_maxima(long_run, k, m)
        if method == "fixed_shape_mle":
            f = fit_mle(z, config.location_form, config.scale_form, fixed_shape=base.model.shape,
                        restarts=config.restarts)
        elif method == "plain_mle":
            f = fit_mle(z, config.location_form, config.scale_form, restarts=config.restarts)
        else:
            raise InvalidArgumentError(f"unknown reference method {method!r}")
        out[k] = f.model
    return out


def compare_methods(short_run, long_run_reference, k_list, config, anchor_t=1.0,
                    reference_method="fixed_shape_mle", with_curves=True) -> MethodComparison:
    """Evaluate the three estimation methods on ``short_run`` against a long-run reference.

    Parameters
    ----------
    short_run : TimeSeries
        Raw short run; covariates are shifted so its first block sits at ``t = 0``.
    long_run_reference : TimeSeries or mapping
        Either a long run of the same process (shifted by the same origin and
        fitted per k with ``reference_method``) or a mapping ``k -> GevModel``
        already expressed in the shifted coordinates.
    k_list : sequence of int
    config : SuccessiveConfig
    anchor_t : float
        Covariate (shifted coordinates) at which parameters are compared.

    Returns
    -------
    MethodComparison
        One cell per (method, k). Failed fits are kept as cells with
        ``model=None`` and a ``failure`` message.
    """
    from .errors import SuccexError
    from .series import TimeSeries
    from .successive import METHODS, analyse, covariate_origin, window_maxima

    k_list = sorted(set(int(k) for k in k_list))
    if not k_list or k_list[0] < 1:
        raise InvalidArgumentError("k_list must contain positive window sizes")
    origin = covariate_origin(short_run, config.block_length)
    short = short_run.shifted(origin)
    long_series = None
    if isinstance(long_run_reference, TimeSeries):
        long_series = long_run_reference.shifted(origin)
        ref = reference_models(long_series, k_list, config, reference_method)
    else:
        ref = dict(long_run_reference)
    missing = [k for k in k_list if k not in ref]
    if missing:
        raise InvalidArgumentError(f"reference has no model for k={missing}")

    analysis = analyse(short, config, k_max=max(k_list))
    cells = {}
    for method in METHODS:
        for k in k_list:
            ref_p = _anchor_params(ref[k], anchor_t)
            try:
                model = analysis.model_for(k, method)
                failure = None if model is not None else _failure_reason(analysis, k, method)
            except SuccexError as exc:
                model, failure = None, f"{type(exc).__name__}: {exc}"
            params, errors, curve = {}, {}, None
            if model is not None:
                try:
                    params = _anchor_params(model, anchor_t)
                    errors = {n: abs(params[n] - ref_p[n]) for n in params}
                except SuccexError as exc:
                    model, failure = None, f"{type(exc).__name__}: {exc}"
            if model is not None and with_curves and long_series is not None:
                try:
                    curve = gumbel_curve(window_maxima(long_series, k, config.block_length), model)
                except SuccexError:
                    curve = None
            inferred = method == "full_proposed" and analysis.is_inferred(k)
            cells[(method, k)] = MethodCell(method, k, model, params, errors, failure, inferred, curve)
    return MethodComparison(cells, ref, k_list, anchor_t, origin, analysis)


def _failure_reason(analysis, k, method):
    w = analysis.windows.get(k)
    if w is None:
        return "window not fitted"
    if method == "plain_mle":
        if w.free_error:
            return w.free_error
        if w.free is not None and not w.free.converged:
            return "free-shape fit did not converge"
    if method == "fixed_shape_mle":
        if w.error:
            return w.error
        if w.fixed is not None and not w.fixed.converged:
            return "fixed-shape fit did not converge"
    if method == "full_proposed":
        return "no scaling law available"
    return "fit failed"
