"""Scaling function ``g(k)`` linking k-window GEV parameters to the single-extreme fit.

For Frechet-type data the location and scale of the k-window maxima satisfy

    mu_k = g(k) * mu_1 * (theta_k / theta_1) ** xi_1      (same for sigma_k)

so ``g`` is learned by least squares on the theta-adjusted response
``log mu_k - log mu_1 - xi_1 (log theta_k - log theta_1)`` and then used to
infer parameters for window sizes where direct fitting is unreliable.
Parameters modelled as ``exp(c0 + c1 t)`` enter through a log link: the
relation holds on ``exp(c0)`` at ``t = 0``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateDesignError, InvalidArgumentError, LogDomainError, WindowError
from .gev import GevModel

FORMS = ("exponential", "power", "polynomial")
LINKS = ("identity", "log")


def link_for_form(form):
    return "log" if form == "exponential" else "identity"


@dataclass(frozen=True)
class ScalingInputs:
    """Per-window intercepts at ``t = 0`` and extremal indices.

    The base intercepts ``mu_{1,0}``, ``sigma_{1,0}`` default to the ``k = 1``
    entries. They can be given separately (``base_mu0``, ``base_sigma0``)
    when ``g(1) != 1``, e.g. for exact synthetic inputs.
    """

    k: np.ndarray
    mu0: np.ndarray
    sigma0: np.ndarray
    theta: np.ndarray
    xi: float
    location_link: str = "identity"
    scale_link: str = "identity"
    mu0_se: np.ndarray | None = None
    base_mu0: float | None = None
    base_sigma0: float | None = None

    def __post_init__(self):
        k = np.asarray(self.k, dtype=int)
        order = np.argsort(k, kind="stable")
        for name in ("k", "mu0", "sigma0", "theta", "mu0_se"):
            val = getattr(self, name)
            if val is not None:
                object.__setattr__(self, name, np.asarray(val, dtype=float if name != "k" else int)[order])
        if len(np.unique(self.k)) != len(self.k):
            raise InvalidArgumentError("window sizes must be distinct")
        if self.k[0] != 1:
            raise InvalidArgumentError("scaling inputs must include the base window k=1")
        if not (len(self.mu0) == len(self.sigma0) == len(self.theta) == len(self.k)):
            raise InvalidArgumentError("per-k arrays must have equal length")
        if not np.all(np.isfinite(self.mu0)) or not np.all(np.isfinite(self.sigma0)):
            raise InvalidArgumentError("intercepts must be finite")
        if np.any(~((self.theta > 0) & (self.theta <= 1))):
            raise InvalidArgumentError("extremal indices must lie in (0, 1]")
        for link in (self.location_link, self.scale_link):
            if link not in LINKS:
                raise InvalidArgumentError(f"unknown link {link!r}")

    @property
    def mu10(self):
        return float(self.mu0[0] if self.base_mu0 is None else self.base_mu0)

    @property
    def sigma10(self):
        return float(self.sigma0[0] if self.base_sigma0 is None else self.base_sigma0)

    @property
    def theta1(self):
        return float(self.theta[0])

    def subset(self, ks):
        keep = np.isin(self.k, list(ks))
        se = None if self.mu0_se is None else self.mu0_se[keep]
        return ScalingInputs(self.k[keep], self.mu0[keep], self.sigma0[keep], self.theta[keep], self.xi,
                             self.location_link, self.scale_link, se, self.mu10, self.sigma10)


def _log_quantity(values, link, what):
    values = np.asarray(values, dtype=float)
    if link == "log":
        return values
    if np.any(values <= 0):
        raise LogDomainError(f"{what} intercepts must be strictly positive for the log transform")
    return np.log(values)


def log_scaling_response(inputs: ScalingInputs, which="location"):
    """``log g(k)`` implied by each window's fitted intercept."""
    if which == "location":
        lq = _log_quantity(inputs.mu0, inputs.location_link, "location")
        lb = _log_quantity(inputs.mu10, inputs.location_link, "location")
    else:
        lq = _log_quantity(inputs.sigma0, inputs.scale_link, "scale")
        lb = _log_quantity(inputs.sigma10, inputs.scale_link, "scale")
    return lq - lb - inputs.xi * (np.log(inputs.theta) - np.log(inputs.theta[0]))


@dataclass(frozen=True)
class ScalingLaw:
    form: str
    coefficients: tuple
    fit_r2: float = 1.0
    k_fit_range: tuple = ()
    residuals: tuple = ()
    degree: int | None = None
    selection_score: float | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.form not in FORMS:
            raise InvalidArgumentError(f"unknown scaling form {self.form!r}")
        if self.form in ("exponential", "power") and self.coefficients[0] <= 0:
            raise InvalidArgumentError(f"{self.form} scaling needs a > 0")
        if self.form == "exponential" and self.coefficients[1] <= 0:
            raise InvalidArgumentError("exponential scaling needs b > 0")

    @property
    def n_coef(self):
        return len(self.coefficients)

    @property
    def label(self):
        return f"polynomial{self.degree}" if self.form == "polynomial" else self.form

    def __call__(self, k):
        k = np.asarray(k, dtype=float)
        c = self.coefficients
        if self.form == "exponential":
            return c[0] * c[1] ** (k - 1)
        if self.form == "power":
            return c[0] * k ** c[1]
        return sum(cj * k ** j for j, cj in enumerate(c))


def _ols(X, y, w=None):
    if w is not None:
        sw = np.sqrt(np.asarray(w, dtype=float))
        Xw, yw = X * sw[:, None], y * sw
    else:
        Xw, yw = X, y
    if X.shape[0] < X.shape[1] or np.linalg.matrix_rank(Xw) < X.shape[1]:
        raise DegenerateDesignError(f"design matrix of shape {X.shape} is rank deficient")
    beta, *_ = np.linalg.lstsq(Xw, yw, rcond=None)
    return beta


def _r2(y, yhat):
    ss_res = float(np.sum((y - yhat) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot <= 1e-24 * max(1.0, float(np.sum(y * y))):
        return 1.0 if ss_res <= 1e-18 * max(1.0, float(np.sum(y * y))) else 0.0
    return float(np.clip(1.0 - ss_res / ss_tot, 0.0, 1.0))


def fit_scaling(inputs: ScalingInputs, form="exponential", degree=2, response="adjusted", weights=None) -> ScalingLaw:
    """Least-squares estimate of ``g(k)`` in the given functional form.

    Parameters
    ----------
    form : {"exponential", "power", "polynomial"}
        ``a b**(k-1)``, ``a k**beta`` or ``c0 + c1 k + ... + c_d k**d``.
    degree : int
        Polynomial degree (ignored for the other forms).
    response : {"adjusted", "literal"}
        ``adjusted`` regresses ``log g(k)`` (theta-corrected); ``literal``
        regresses ``log mu_k`` directly and removes the mean theta term from
        the intercept afterwards, which is exact only when ``theta_k/theta_1``
        does not vary with ``k``.
    weights : array, optional
        Per-k regression weights (e.g. inverse variances from the MLE).
    """
    if form not in FORMS:
        raise InvalidArgumentError(f"unknown scaling form {form!r}")
    if response not in ("adjusted", "literal"):
        raise InvalidArgumentError(f"unknown response mode {response!r}")
    k = inputs.k.astype(float)
    if len(k) < 3:
        raise DegenerateDesignError("need at least 3 distinct window sizes")
    r = log_scaling_response(inputs)
    theta_term = inputs.xi * (np.log(inputs.theta) - np.log(inputs.theta[0]))

    if form == "polynomial":
        y = np.exp(r)
        X = np.vander(k, degree + 1, increasing=True)
        beta = _ols(X, y, weights)
        yhat = X @ beta
        coefs = tuple(float(b) for b in beta)
    else:
        x = k - 1 if form == "exponential" else np.log(k)
        X = np.column_stack([np.ones_like(x), x])
        if response == "literal":
            lq = _log_quantity(inputs.mu0, inputs.location_link, "location")
            beta = _ols(X, lq, weights)
            intercept = beta[0] - _log_quantity(inputs.mu10, inputs.location_link, "location") - theta_term.mean()
            y = lq
            yhat = X @ beta
        else:
            beta = _ols(X, r, weights)
            intercept = beta[0]
            y = r
            yhat = X @ beta
        slope = float(beta[1])
        a = float(np.exp(intercept))
        coefs = (a, float(np.exp(slope))) if form == "exponential" else (a, slope)
    return ScalingLaw(form, coefs, _r2(y, yhat), tuple(int(v) for v in inputs.k), tuple(float(v) for v in y - yhat),
                      degree if form == "polynomial" else None)


def _log_score(law, inputs):
    """Adjusted R^2 of a fitted law on the common ``log g(k)`` scale."""
    r = log_scaling_response(inputs)
    g = law(inputs.k)
    if np.any(g <= 0):
        return -np.inf
    n, p = len(r), law.n_coef - 1
    if n - p - 1 <= 0:
        return -np.inf
    r2 = _r2(r, np.log(g))
    return 1.0 - (1.0 - r2) * (n - 1) / (n - p - 1)


_PREFERENCE = {"exponential": 0, "power": 1, "polynomial": 2}


def _increases(law, k_max):
    g = law(np.arange(1, k_max + 1))
    return bool(np.any(g <= 0) or np.any(np.diff(g) > 1e-12 * np.abs(g[:-1])))


def select_form(inputs: ScalingInputs, max_degree=2, tie_tol=1e-9, k_max=None):
    """Fit every candidate form and pick the best adjusted R^2 on ``log g(k)``.

    Candidates within ``tie_tol`` of the best score are resolved in favour
    of fewer coefficients. With ``k_max`` set, candidates whose ``g`` is not
    positive and nonincreasing on ``1..k_max`` are set aside (a longer
    moving-minimum window can only lower the series), unless every
    candidate fails that check. Returns ``(label, law, all_fits)`` where
    ``all_fits`` maps each candidate label to its law or the exception that
    prevented (or rejected) the fit.
    """
    fits = {}
    cands = [("exponential", None), ("power", None)] + [("polynomial", d) for d in range(max_degree + 1)]
    for form, deg in cands:
        label = form if deg is None else f"polynomial{deg}"
        try:
            law = fit_scaling(inputs, form, degree=deg if deg is not None else 2)
            fits[label] = ScalingLaw(law.form, law.coefficients, law.fit_r2, law.k_fit_range, law.residuals,
                                     law.degree, _log_score(law, inputs))
        except (DegenerateDesignError, LogDomainError, InvalidArgumentError) as exc:
            fits[label] = exc
    ok = {lab: law for lab, law in fits.items() if isinstance(law, ScalingLaw) and np.isfinite(law.selection_score)}
    if k_max is not None and k_max > 1:
        monotone = {lab: law for lab, law in ok.items() if not _increases(law, k_max)}
        if monotone:
            for lab in set(ok) - set(monotone):
                fits[lab] = InvalidArgumentError(f"{lab}: g(k) not positive and nonincreasing on k = 1..{k_max}")
            ok = monotone
    if not ok:
        first = next(iter(fits.values()))
        raise first if isinstance(first, Exception) else DegenerateDesignError("no scaling form could be fitted")
    top = max(law.selection_score for law in ok.values())
    tied = [law for law in ok.values() if law.selection_score >= top - tie_tol]
    best = min(tied, key=lambda law: (law.n_coef, _PREFERENCE[law.form]))
    return best.label, best, fits


@dataclass(frozen=True)
class InferredParams:
    k: int
    mu0: float
    sigma0: float
    factor: float
    warning: str | None = None


def scaling_factor(law: ScalingLaw, k, theta_k, theta_1, xi):
    return float(law(k) * (theta_k / theta_1) ** xi)


def infer_params(law: ScalingLaw, k: int, base: ScalingInputs, theta_k: float, scale_link=None,
                 k_cap=None) -> InferredParams:
    """Location and scale intercepts for window ``k`` from the base fit and ``g(k)``."""
    if k < 1:
        raise WindowError(f"invalid window size k={k}")
    if not 0 < theta_k <= 1:
        raise InvalidArgumentError(f"theta_k={theta_k} must lie in (0, 1]")
    scale_link = scale_link or base.scale_link
    c = scaling_factor(law, k, theta_k, base.theta1, base.xi)
    if c <= 0:
        raise LogDomainError(f"scaling factor {c} at k={k} is not positive")
    mu = base.mu10 + np.log(c) if base.location_link == "log" else c * base.mu10
    sigma = base.sigma10 + np.log(c) if scale_link == "log" else c * base.sigma10
    warning = None
    if k_cap is not None and k > k_cap:
        warning = f"k={k} extrapolates beyond the configured cap {k_cap}"
        warnings.warn(warning, stacklevel=2)
    return InferredParams(k, float(mu), float(sigma), c, warning)


def infer_model(law: ScalingLaw, k: int, base_model: GevModel, theta_k: float, theta_1: float) -> GevModel:
    """Whole k-window model: base location and scale functions times the scaling factor."""
    if k < 1:
        raise WindowError(f"invalid window size k={k}")
    c = scaling_factor(law, k, theta_k, theta_1, base_model.shape)
    if c <= 0:
        raise LogDomainError(f"scaling factor {c} at k={k} is not positive")
    out = base_model.scaled(c)
    return GevModel(out.shape, out.location, out.scale, shape_fixed=True)


def extrapolate_theta(thetas: dict, k: int, method="flat"):
    """Extremal index at ``k``: the estimate if present, otherwise extrapolated.

    ``flat`` carries the estimate of the largest available window forward;
    ``linear`` extends a least-squares line in ``k``. Results are kept in
    ``[1e-3, 1]``.
    """
    if k in thetas:
        return float(thetas[k])
    ks = sorted(thetas)
    if not ks:
        raise InvalidArgumentError("no extremal index estimates to extrapolate from")
    if method == "flat" or len(ks) < 2:
        val = thetas[max(kk for kk in ks if kk <= k)] if any(kk <= k for kk in ks) else thetas[ks[0]]
    elif method == "linear":
        slope, icpt = np.polyfit(ks, [thetas[kk] for kk in ks], 1)
        val = icpt + slope * k
    else:
        raise InvalidArgumentError(f"unknown theta extrapolation {method!r}")
    return float(np.clip(val, 1e-3, 1.0))


@dataclass
class HorizonDecision:
    k_f: int
    reasons: dict


def fitting_horizon(candidates, xi1_ci=None, p_min=0.05):
    """Largest ``k_f`` such that every window ``1..k_f`` passes the reliability checks.

    ``candidates`` maps ``k`` to a dict with keys ``converged`` (fixed-shape
    fit), ``ks_p``, ``ad_p`` and ``xi_free`` (free-shape estimate, or None
    when that fit failed). ``xi1_ci`` is the 95% interval of the ``k = 1``
    shape; when None the shape check is skipped.
    """
    reasons = {}
    k_f = 0
    for k in sorted(candidates):
        c = candidates[k]
        why = []
        if not c.get("converged", False):
            why.append("fit did not converge")
        if not (c.get("ks_p", 0.0) > p_min):
            why.append(f"KS p={c.get('ks_p', 0.0):.4g}")
        if not (c.get("ad_p", 0.0) > p_min):
            why.append(f"AD p={c.get('ad_p', 0.0):.4g}")
        if xi1_ci is not None and k > 1:
            xf = c.get("xi_free")
            if xf is None or not (xi1_ci[0] <= xf <= xi1_ci[1]):
                shown = "unavailable" if xf is None else f"{xf:.4g}"
                why.append(f"free shape {shown} outside ({xi1_ci[0]:.4g}, {xi1_ci[1]:.4g})")
        reasons[k] = why
        if why or k != k_f + 1:
            break
        k_f = k
    return HorizonDecision(k_f, reasons)
