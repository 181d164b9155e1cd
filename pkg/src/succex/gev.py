"""GEV distribution functions and nonstationary maximum-likelihood fitting.

Parameterisation follows Coles (2001):

    G(z) = exp(-[1 + xi (z - mu) / sigma]^(-1/xi)),   1 + xi (z - mu)/sigma > 0

with the Gumbel limit ``exp(-exp(-(z - mu)/sigma))`` at ``xi == 0``. Location
and scale may depend on a covariate ``t`` through a :class:`ParamModel`.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy import optimize, stats
from scipy.special import gamma as gamma_fn

from .errors import (
    FitInconsistencyError,
    FitInfeasibleError,
    InsufficientDataError,
    InvalidArgumentError,
    InvalidComparisonError,
    NormalizationDomainError,
    ScaleCollapseError,
)
from .series import BlockMaxSeries

FORMS = ("constant", "linear", "exponential")
MIN_MAXIMA = 20
PENALTY = 1e10
EULER_GAMMA = 0.5772156649015329


def _check_sigma(sigma):
    if np.any(np.asarray(sigma) <= 0):
        raise InvalidArgumentError(f"scale must be positive, got {sigma}")


def gev_cdf(z, xi, mu, sigma):
    """GEV distribution function, vectorised over all arguments.

    Outside the support the result is 0 below a lower endpoint (``xi > 0``)
    and 1 above an upper endpoint (``xi < 0``).
    """
    _check_sigma(sigma)
    z, xi, mu, sigma = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (z, xi, mu, sigma)))
    s = (z - mu) / sigma
    out = np.empty(z.shape)
    gum = xi == 0
    out[gum] = np.exp(-np.exp(-s[gum]))
    ng = ~gum
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        y = 1.0 + xi[ng] * s[ng]
        inside = y > 0
        val = np.exp(-np.exp(-np.log1p(xi[ng] * s[ng]) / xi[ng]))
        val = np.where(inside, val, np.where(xi[ng] > 0, 0.0, 1.0))
    out[ng] = val
    return out[()] if out.ndim == 0 else out


def gev_sf(z, xi, mu, sigma):
    """Survival function ``1 - G(z)``, computed without cancellation in the tail."""
    _check_sigma(sigma)
    z, xi, mu, sigma = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (z, xi, mu, sigma)))
    s = (z - mu) / sigma
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        safe_xi = np.where(xi == 0, 1.0, xi)
        expo = np.where(xi == 0, -s, -np.log1p(xi * s) / safe_xi)
        out = -np.expm1(-np.exp(expo))
        y = 1.0 + xi * s
        out = np.where((xi != 0) & ~(y > 0), np.where(xi > 0, 1.0, 0.0), out)
    return out[()] if out.ndim == 0 else out


def gev_quantile(p, xi, mu, sigma):
    """Inverse of :func:`gev_cdf` for ``p`` in (0, 1)."""
    _check_sigma(sigma)
    p_arr = np.asarray(p, dtype=float)
    if np.any(~((p_arr > 0) & (p_arr < 1))):
        raise InvalidArgumentError(f"probability must lie in (0, 1), got {p}")
    p_arr, xi, mu, sigma = np.broadcast_arrays(p_arr, *(np.asarray(a, dtype=float) for a in (xi, mu, sigma)))
    y = -np.log(p_arr)
    safe_xi = np.where(xi == 0, 1.0, xi)
    # expm1 keeps the small-shape branch continuous with the Gumbel limit
    out = np.where(xi == 0, mu - sigma * np.log(y), mu + sigma * np.expm1(-xi * np.log(y)) / safe_xi)
    return out[()] if out.ndim == 0 else out


def gev_logpdf(z, xi, mu, sigma):
    z, xi, mu, sigma = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (z, xi, mu, sigma)))
    s = (z - mu) / sigma
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        safe_xi = np.where(xi == 0, 1.0, xi)
        ly = np.log1p(xi * s)
        out = np.where(
            xi == 0,
            -np.log(sigma) - s - np.exp(-s),
            -np.log(sigma) - (1.0 + 1.0 / safe_xi) * ly - np.exp(-ly / safe_xi),
        )
        out = np.where((xi != 0) & ~(1.0 + xi * s > 0), -np.inf, out)
    return out[()] if out.ndim == 0 else out


@dataclass(frozen=True)
class ParamModel:
    """A location or scale parameter as a function of the covariate.

    ``constant``: ``c0``; ``linear``: ``c0 + c1 t``; ``exponential``:
    ``exp(c0 + c1 t)``. Coefficients may be numpy arrays, in which case
    evaluation broadcasts (used for parameter grids).
    """

    form: str
    coefficients: tuple

    def __post_init__(self):
        if self.form not in FORMS:
            raise InvalidArgumentError(f"unknown parameter form {self.form!r}; expected one of {FORMS}")
        need = 1 if self.form == "constant" else 2
        if len(self.coefficients) != need:
            raise InvalidArgumentError(f"{self.form} form takes {need} coefficient(s), got {len(self.coefficients)}")

    @classmethod
    def constant(cls, c0):
        return cls("constant", (c0,))

    @classmethod
    def linear(cls, c0, c1):
        return cls("linear", (c0, c1))

    @classmethod
    def exponential(cls, c0, c1):
        return cls("exponential", (c0, c1))

    def __call__(self, t):
        c = self.coefficients
        if self.form == "constant":
            return c[0] + 0.0 * np.asarray(t, dtype=float)
        if self.form == "linear":
            return c[0] + c[1] * np.asarray(t, dtype=float)
        return np.exp(c[0] + c[1] * np.asarray(t, dtype=float))

    @property
    def n_coef(self):
        return len(self.coefficients)

    def scaled(self, factor):
        """The parameter function multiplied by a positive ``factor``."""
        if self.form == "exponential":
            return ParamModel("exponential", (self.coefficients[0] + np.log(factor), self.coefficients[1]))
        return ParamModel(self.form, tuple(c * factor for c in self.coefficients))

    def embedded(self, form):
        """Express this function in a larger ``form`` that contains it."""
        if form == self.form:
            return self
        if self.form != "constant":
            raise InvalidComparisonError(f"{self.form} form is not nested in {form}")
        c0 = self.coefficients[0]
        if form == "linear":
            return ParamModel.linear(c0, 0.0)
        if c0 <= 0:
            raise InvalidComparisonError("nonpositive constant cannot be embedded in exponential form")
        return ParamModel.exponential(float(np.log(c0)), 0.0)


@dataclass(frozen=True)
class GevModel:
    shape: float
    location: ParamModel
    scale: ParamModel
    shape_fixed: bool = False

    @classmethod
    def stationary(cls, xi, mu, sigma):
        return cls(xi, ParamModel.constant(mu), ParamModel.constant(sigma))

    def coefficient_names(self, include_shape=True):
        names = [f"mu{i}" for i in range(self.location.n_coef)]
        names += [f"sigma{i}" for i in range(self.scale.n_coef)]
        if include_shape:
            names.append("xi")
        return names

    def coefficients(self):
        """Coefficient name -> value, shape last."""
        vals = list(self.location.coefficients) + list(self.scale.coefficients) + [self.shape]
        return dict(zip(self.coefficient_names(), vals))

    def with_coefficients(self, values):
        """Copy with coefficients replaced from a name -> value mapping."""
        loc = tuple(values.get(f"mu{i}", c) for i, c in enumerate(self.location.coefficients))
        sc = tuple(values.get(f"sigma{i}", c) for i, c in enumerate(self.scale.coefficients))
        return GevModel(values.get("xi", self.shape), ParamModel(self.location.form, loc),
                        ParamModel(self.scale.form, sc), self.shape_fixed)

    def scaled(self, factor):
        """Location and scale functions both multiplied by ``factor``; shape unchanged."""
        return replace(self, location=self.location.scaled(factor), scale=self.scale.scaled(factor))

    def params_at(self, t):
        return self.location(t), self.scale(t), self.shape


def evaluate_params(model: GevModel, t):
    """``(mu_t, sigma_t, xi)`` at covariate ``t``; raises if the scale collapses."""
    mu, sigma, xi = model.params_at(t)
    if np.any(~(np.asarray(sigma) > 0)):
        raise ScaleCollapseError(f"scale evaluates to {sigma} <= 0 at t={t}")
    return mu, sigma, xi


@dataclass
class FitResult:
    model: GevModel
    neg_log_likelihood: float
    standard_errors: dict
    converged: bool
    n_maxima: int
    covariance: np.ndarray | None = None
    maxima: BlockMaxSeries | None = field(default=None, repr=False)

    @property
    def se_available(self):
        return self.covariance is not None

    @property
    def n_params(self):
        return len(self.model.coefficient_names(include_shape=not self.model.shape_fixed))

    def confidence_interval(self, name, level=0.95):
        """Wald interval ``estimate +/- z * se``; ``None`` when SEs are unavailable."""
        se = self.standard_errors.get(name, np.nan)
        if not np.isfinite(se):
            return None
        zq = stats.norm.ppf(0.5 + level / 2)
        est = self.model.coefficients()[name]
        return est - zq * se, est + zq * se


def pwm_estimate(sample):
    """Stationary ``(xi, mu, sigma)`` from probability-weighted moments (Hosking 1985)."""
    x = np.sort(np.asarray(sample, dtype=float))
    n = len(x)
    if n < 3:
        raise InsufficientDataError("PWM estimation needs at least 3 values")
    j = np.arange(n)
    b0 = x.mean()
    b1 = np.sum(j / (n - 1) * x) / n
    b2 = np.sum(j * (j - 1) / ((n - 1) * (n - 2)) * x) / n
    l1, l2, l3 = b0, 2 * b1 - b0, 6 * b2 - 6 * b1 + b0
    if l2 <= 0:
        return 0.0, float(b0), float(max(np.std(x), 1e-8))
    t3 = l3 / l2
    c = 2.0 / (3.0 + t3) - np.log(2) / np.log(3)
    kh = 7.8590 * c + 2.9554 * c * c
    if abs(kh) < 1e-6:
        sigma = l2 / np.log(2)
        return 0.0, float(l1 - EULER_GAMMA * sigma), float(sigma)
    sigma = l2 * kh / ((1 - 2.0 ** (-kh)) * gamma_fn(1 + kh))
    mu = l1 - sigma * (1 - gamma_fn(1 + kh)) / kh
    return float(-kh), float(mu), float(sigma)


class _Objective:
    """Negative log-likelihood over an unconstrained, rescaled coordinate vector."""

    def __init__(self, z, t, location_form, scale_form, fixed_shape):
        self.z, self.t = z, t
        self.location_form, self.scale_form = location_form, scale_form
        self.fixed_shape = fixed_shape
        self.n_loc = 1 if location_form == "constant" else 2
        self.n_scale = 1 if scale_form == "constant" else 2
        self.t_ext = (t.min(), t.max())

    # natural coefficients <-> optimisation coordinates (before rescaling)
    def to_opt(self, nat):
        opt = np.array(nat, dtype=float)
        if self.scale_form == "constant":
            opt[self.n_loc] = np.log(nat[self.n_loc])
        return opt

    def to_nat(self, opt):
        nat = np.array(opt, dtype=float)
        if self.scale_form == "constant":
            nat[self.n_loc] = np.exp(opt[self.n_loc])
        return nat

    def model(self, nat):
        loc = ParamModel(self.location_form, tuple(float(c) for c in nat[: self.n_loc]))
        sc = ParamModel(self.scale_form, tuple(float(c) for c in nat[self.n_loc : self.n_loc + self.n_scale]))
        if self.fixed_shape is None:
            return GevModel(float(nat[-1]), loc, sc, shape_fixed=False)
        return GevModel(float(self.fixed_shape), loc, sc, shape_fixed=True)

    def nat_from_model(self, model):
        nat = list(model.location.coefficients) + list(model.scale.coefficients)
        if self.fixed_shape is None:
            nat.append(model.shape)
        return np.array(nat, dtype=float)

    def nll_nat(self, nat):
        nl = self.n_loc
        c_loc = nat[:nl]
        c_sc = nat[nl : nl + self.n_scale]
        xi = self.fixed_shape if self.fixed_shape is not None else nat[-1]
        t = self.t
        if self.scale_form == "linear":
            # positivity over the whole covariate range, not only at data points
            if c_sc[0] + c_sc[1] * self.t_ext[0] <= 0 or c_sc[0] + c_sc[1] * self.t_ext[1] <= 0:
                return PENALTY
            sigma = c_sc[0] + c_sc[1] * t
        elif self.scale_form == "exponential":
            sigma = np.exp(c_sc[0] + c_sc[1] * t)
        else:
            if c_sc[0] <= 0:
                return PENALTY
            sigma = c_sc[0]
        if self.location_form == "constant":
            mu = c_loc[0]
        elif self.location_form == "linear":
            mu = c_loc[0] + c_loc[1] * t
        else:
            mu = np.exp(c_loc[0] + c_loc[1] * t)
        with np.errstate(all="ignore"):
            s = (self.z - mu) / sigma
            if xi == 0:
                val = np.sum(np.log(sigma) + s + np.exp(-s)) if np.ndim(sigma) else len(s) * np.log(sigma) + np.sum(s + np.exp(-s))
            else:
                arg = xi * s
                if np.any(arg <= -1.0):
                    return PENALTY
                ly = np.log1p(arg)
                logsig = np.sum(np.log(sigma)) if np.ndim(sigma) else len(s) * np.log(sigma)
                val = logsig + (1.0 + 1.0 / xi) * np.sum(ly) + np.sum(np.exp(-ly / xi))
        if not np.isfinite(val) or np.any(~np.isfinite(sigma)) or np.any(sigma <= 0):
            return PENALTY
        return float(min(val, PENALTY))


def _scale_vector(obj, sigma0):
    span = obj.t_ext[1] - obj.t_ext[0]
    span = span if span > 0 else 1.0
    s = []
    s += [sigma0] if obj.location_form != "exponential" else [1.0]
    if obj.n_loc == 2:
        s += [sigma0 / span] if obj.location_form == "linear" else [1.0 / span]
    s += [sigma0] if obj.scale_form == "linear" else [1.0]
    if obj.n_scale == 2:
        s += [sigma0 / span] if obj.scale_form == "linear" else [1.0 / span]
    if obj.fixed_shape is None:
        s += [0.1]
    return np.array(s)


def _initial_nat(obj, z, fixed_shape):
    xi0, mu0, sig0 = pwm_estimate(z)
    xi0 = float(np.clip(xi0, -0.45, 0.9))
    if fixed_shape is not None:
        xi0 = float(fixed_shape)
    loc = [mu0] if obj.location_form == "constant" else (
        [mu0, 0.0] if obj.location_form == "linear" else [np.log(mu0) if mu0 > 0 else 0.0, 0.0])
    sc = [sig0] if obj.scale_form in ("constant", "linear") else [np.log(sig0)]
    if obj.n_scale == 2:
        sc.append(0.0)
    nat = np.array(loc + sc + ([xi0] if fixed_shape is None else []), dtype=float)
    # widen the scale until every maximum lies inside the support
    for _ in range(60):
        if obj.nll_nat(nat) < PENALTY:
            return nat, sig0
        i = obj.n_loc
        nat[i] = nat[i] * 2 if obj.scale_form != "exponential" else nat[i] + np.log(2)
        if obj.scale_form == "linear":
            nat[i + 1] *= 2
    if fixed_shape is None:
        nat[-1] = 0.0
        if obj.nll_nat(nat) < PENALTY:
            return nat, sig0
    raise FitInfeasibleError("no feasible starting point: every likelihood evaluation violates the support")


def fit_mle(maxima: BlockMaxSeries, location_form="constant", scale_form="constant", fixed_shape=None,
            init=None, restarts=5, maxiter=10_000, tol=1e-8, compute_se=True) -> FitResult:
    """Maximum-likelihood GEV fit to block maxima with covariate-dependent parameters.

    Parameters
    ----------
    maxima : BlockMaxSeries
        Block maxima and their covariates.
    location_form, scale_form : {"constant", "linear", "exponential"}
        Parameter models for location and scale.
    fixed_shape : float, optional
        If given, the shape is held at this value and removed from the
        optimisation (an exact constraint, not a penalty).
    init : GevModel or FitResult, optional
        Extra starting point, typically a nested fit embedded in these forms.
        The PWM start is always tried as well; the better optimum wins.
    restarts : int
        Number of Nelder-Mead restarts from the incumbent optimum with a
        jittered initial simplex.

    Returns
    -------
    FitResult
        ``converged`` is False when the simplex failed its tolerance within
        ``maxiter`` iterations or the restarts were still improving.
    """
    for f in (location_form, scale_form):
        if f not in FORMS:
            raise InvalidArgumentError(f"unknown parameter form {f!r}")
    z = np.asarray(maxima.maxima, dtype=float)
    t = np.asarray(maxima.block_covariates, dtype=float)
    if len(z) < MIN_MAXIMA:
        raise InsufficientDataError(f"need at least {MIN_MAXIMA} maxima, got {len(z)}")
    obj = _Objective(z, t, location_form, scale_form, fixed_shape)
    nat0, sig0 = _initial_nat(obj, z, fixed_shape)
    starts = [nat0]
    if init is not None:
        init_model = init.model if isinstance(init, FitResult) else init
        try:
            emb = GevModel(init_model.shape, init_model.location.embedded(location_form),
                           init_model.scale.embedded(scale_form))
            cand = obj.nat_from_model(emb)
            if obj.nll_nat(cand) < PENALTY:
                starts.append(cand)
        except InvalidComparisonError:
            pass

    scl = _scale_vector(obj, sig0)

    def f(v):
        return obj.nll_nat(obj.to_nat(v * scl))

    rng = np.random.default_rng(20240601)
    dim = len(nat0)
    opts = dict(maxiter=maxiter, maxfev=4 * maxiter, xatol=1e-7, fatol=tol, adaptive=dim > 3)

    def run(v0, jitter):
        steps = 0.1 * (1.0 + jitter * rng.uniform(-0.5, 0.5, size=dim))
        simplex = np.vstack([v0] + [v0 + np.eye(dim)[i] * steps[i] for i in range(dim)])
        return optimize.minimize(f, v0, method="Nelder-Mead", options={**opts, "initial_simplex": simplex})

    best = None
    for s0 in starts:
        res = run(obj.to_opt(s0) / scl, jitter=0.0)
        if best is None or res.fun < best.fun:
            best = res
    success = bool(best.success)
    last_gain = np.inf
    for _ in range(restarts):
        res = run(best.x, jitter=1.0)
        gain = best.fun - res.fun
        if res.fun < best.fun:
            best = res
            success = bool(res.success)
        last_gain = max(gain, 0.0)
    if best.fun >= PENALTY:
        raise FitInfeasibleError("optimiser never left the infeasible region")
    converged = success and (restarts == 0 or last_gain < 1e-6 * max(1.0, abs(best.fun)))

    nat = obj.to_nat(best.x * scl)
    model = obj.model(nat)
    names = model.coefficient_names(include_shape=fixed_shape is None)
    cov = _observed_information_inverse(obj, nat) if compute_se else None
    if cov is not None:
        ses = dict(zip(names, np.sqrt(np.diag(cov))))
    else:
        ses = {n: np.nan for n in names}
    if fixed_shape is not None:
        ses["xi"] = 0.0
    return FitResult(model, float(best.fun), ses, converged, len(z), cov, maxima)


def _observed_information_inverse(obj, nat):
    """Inverse of the central-difference Hessian of the nll; ``None`` if not positive definite."""
    dim = len(nat)
    h = 1e-4 * np.maximum(1.0, np.abs(nat))
    f0 = obj.nll_nat(nat)
    H = np.empty((dim, dim))

    def fv(x):
        v = obj.nll_nat(x)
        if v >= PENALTY:
            raise FloatingPointError
        return v

    try:
        for i in range(dim):
            ei = np.zeros(dim)
            ei[i] = h[i]
            H[i, i] = (fv(nat + ei) - 2 * f0 + fv(nat - ei)) / h[i] ** 2
            for j in range(i + 1, dim):
                ej = np.zeros(dim)
                ej[j] = h[j]
                H[i, j] = H[j, i] = (fv(nat + ei + ej) - fv(nat + ei - ej) - fv(nat - ei + ej)
                                     + fv(nat - ei - ej)) / (4 * h[i] * h[j])
        np.linalg.cholesky(H)
        cov = np.linalg.inv(H)
    except (FloatingPointError, np.linalg.LinAlgError):
        return None
    if np.any(np.diag(cov) < 0) or not np.all(np.isfinite(cov)):
        return None
    return cov


def numerical_gradient(fit: FitResult, rel_step=1e-6):
    """Central-difference gradient of the nll at the fitted natural coefficients."""
    m = fit.model
    obj = _Objective(fit.maxima.maxima, fit.maxima.block_covariates, m.location.form, m.scale.form,
                     m.shape if m.shape_fixed else None)
    nat = obj.nat_from_model(m)
    g = np.empty(len(nat))
    for i in range(len(nat)):
        h = rel_step * max(1.0, abs(nat[i]))
        e = np.zeros(len(nat))
        e[i] = h
        g[i] = (obj.nll_nat(nat + e) - obj.nll_nat(nat - e)) / (2 * h)
    return g


def negative_log_likelihood(model: GevModel, maxima: BlockMaxSeries) -> float:
    z = np.asarray(maxima.maxima, dtype=float)
    mu, sigma, xi = model.params_at(maxima.block_covariates)
    return float(-np.sum(gev_logpdf(z, xi, mu, sigma)))


_NESTS = {
    ("constant", "constant"), ("linear", "linear"), ("exponential", "exponential"),
    ("constant", "linear"), ("constant", "exponential"),
}


def _structure_nested(nested: GevModel, full: GevModel):
    if (nested.location.form, full.location.form) not in _NESTS:
        return False
    if (nested.scale.form, full.scale.form) not in _NESTS:
        return False
    if full.shape_fixed:
        return nested.shape_fixed and nested.shape == full.shape
    return True


def lr_pvalue(deviance, df):
    return float(stats.chi2.sf(deviance, df))


def likelihood_ratio_test(nested: FitResult, full: FitResult) -> float:
    """Upper-tail chi-square p-value of the deviance ``2 (l_full - l_nested)``."""
    if nested.maxima is not None and full.maxima is not None:
        same = (np.array_equal(nested.maxima.maxima, full.maxima.maxima)
                and np.array_equal(nested.maxima.block_covariates, full.maxima.block_covariates))
        if not same:
            raise InvalidComparisonError("fits were made on different maxima")
    if not _structure_nested(nested.model, full.model):
        raise InvalidComparisonError("first model is not nested in the second")
    df = full.n_params - nested.n_params
    deviance = 2.0 * (nested.neg_log_likelihood - full.neg_log_likelihood)
    if deviance < -1e-8:
        raise FitInconsistencyError(f"negative deviance {deviance:.3g}: the larger model fit is worse than the nested one")
    deviance = max(deviance, 0.0)
    if df == 0:
        return 1.0
    return lr_pvalue(deviance, df)


def gumbel_normalize(maxima: BlockMaxSeries, model: GevModel) -> np.ndarray:
    """Map maxima through the fitted model to standard-Gumbel residuals.

    ``(1/xi) log(1 + xi (z - mu(t)) / sigma(t))``, or ``(z - mu(t))/sigma(t)`` when
    ``xi == 0``. A correctly specified model yields standard-Gumbel output.
    """
    z = np.asarray(maxima.maxima, dtype=float)
    mu, sigma, xi = evaluate_params(model, maxima.block_covariates)
    s = (z - mu) / sigma
    if xi == 0:
        return s
    arg = xi * s
    bad = np.flatnonzero(~(arg > -1.0))
    if len(bad):
        raise NormalizationDomainError(bad)
    return np.log1p(arg) / xi
