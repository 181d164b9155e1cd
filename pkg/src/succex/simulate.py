"""Synthetic processes with known extremal behaviour.

Random numbers come from numpy's ``PCG64`` bit generator seeded with the
integer seed (``numpy.random.Generator(numpy.random.PCG64(seed))``). PCG64 is
the PCG-XSL-RR 128/64 generator: a 128-bit linear congruential state update
``s <- s * 0x2360ed051fc65da44385df649fccf645 + inc (mod 2**128)`` whose
output is the xor of the state halves rotated right by the top 6 state bits.
Doubles are drawn as ``(next_uint64 >> 11) * 2**-53``; this module adds
``2**-54`` so every uniform lies strictly inside (0, 1).

Processes
---------
iid_gev
    Independent GEV draws by inverse-CDF sampling, ``x_i = Q(u_i; xi, mu(t_i), sigma(t_i))``.
moving_max
    ``x_i = max(e_i, ..., e_{i+r})`` with ``e`` iid unit Frechet; extremal index ``1/(r+1)``.
chain
    Max-autoregressive chain ``X_i = max(phi X_{i-1}, e_i)`` with
    ``e_i`` standard Frechet of index ``1/xi``. Marginals are Frechet, the
    extremal index is ``1 - phi**(1/xi)`` and a single large shock produces a
    geometrically decaying run, so successive-extreme parameters scale
    like ``phi**(k-1)``. The standardised chain is mapped to
    ``GEV(xi, mu(t), sigma(t))`` marginals.
runs
    Decaying runs with exact successive-extreme scaling. Run ``j`` covers
    indices ``jL .. jL+L-1`` and holds ``s(t_j) Z_j phi**i`` for
    ``i = 0..L-1``, with ``Z_j`` iid ``GEV(xi, 1, xi)`` and ``t_j`` the
    covariate at the run centre ``jL + (L-1)//2``. With blocks aligned on
    runs (``m = L``) the block maxima of the ``k``-window moving minimum are
    exactly ``phi**(k-1) s(t_j) Z_j`` for ``k <= L``, i.e.
    ``GEV(xi, phi**(k-1) s(t), xi phi**(k-1) s(t))``. ``s`` is the location
    model; the scale model is not used.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError
from .gev import GevModel, ParamModel, gev_quantile
from .series import TimeSeries

PROCESSES = ("iid_gev", "moving_max", "chain", "runs")


def make_rng(seed):
    return np.random.Generator(np.random.PCG64(seed))


def open_uniforms(rng, n):
    return rng.random(n) + 2.0 ** -54


@dataclass(frozen=True)
class SyntheticSpec:
    process: str = "iid_gev"
    n: int = 1000
    seed: int = 0
    xi: float = 0.2
    location: ParamModel = field(default_factory=lambda: ParamModel.constant(10.0))
    scale: ParamModel = field(default_factory=lambda: ParamModel.constant(2.0))
    order: int = 1
    phi: float = 0.8
    t_start: float = 0.0
    t_end: float = 1.0
    run_length: int = 10

    def __post_init__(self):
        if self.process not in PROCESSES:
            raise InvalidArgumentError(f"unknown process {self.process!r}; expected one of {PROCESSES}")
        if self.n < 1:
            raise InvalidArgumentError("n must be positive")
        if self.order < 0:
            raise InvalidArgumentError("moving-max order must be >= 0")
        if not 0 <= self.phi < 1:
            raise InvalidArgumentError("chain coefficient phi must lie in [0, 1)")
        if self.process in ("chain", "runs") and self.xi <= 0:
            raise InvalidArgumentError(f"{self.process} process needs a Frechet shape xi > 0")
        if self.run_length < 1:
            raise InvalidArgumentError("run_length must be >= 1")

    def covariates(self):
        return np.linspace(self.t_start, self.t_end, self.n)


def _params(spec, t):
    mu, sigma = spec.location(t), spec.scale(t)
    if np.any(sigma <= 0):
        raise InvalidArgumentError("scale must be positive over the covariate range")
    return mu, sigma


def sample_gev(spec: SyntheticSpec) -> TimeSeries:
    rng = make_rng(spec.seed)
    t = spec.covariates()
    mu, sigma = _params(spec, t)
    return TimeSeries(t, gev_quantile(open_uniforms(rng, spec.n), spec.xi, mu, sigma))


def sample_moving_max(n, order=1, seed=0, t_start=0.0, t_end=None) -> TimeSeries:
    """Moving maximum of order ``order`` over iid unit-Frechet noise."""
    if order < 0:
        raise InvalidArgumentError("order must be >= 0")
    rng = make_rng(seed)
    eps = -1.0 / np.log(open_uniforms(rng, n + order))
    x = np.lib.stride_tricks.sliding_window_view(eps, order + 1).max(axis=1)
    t = np.linspace(t_start, t_start + n - 1 if t_end is None else t_end, n)
    return TimeSeries(t, x)


def chain_extremal_index(xi, phi):
    return 1.0 - phi ** (1.0 / xi)


def sample_chain(spec: SyntheticSpec) -> TimeSeries:
    rng = make_rng(spec.seed)
    n, xi, phi = spec.n, spec.xi, spec.phi
    alpha = 1.0 / xi
    eps = (-np.log(open_uniforms(rng, n))) ** (-xi)
    x = np.empty(n)
    # stationary start: X_0 ~ Frechet with scale (1 - phi^alpha)^(-xi)
    prev = eps[0] * (1.0 - phi ** alpha) ** (-xi)
    x[0] = prev
    for i in range(1, n):
        prev = max(phi * prev, eps[i])
        x[i] = prev
    z = x * (1.0 - phi ** alpha) ** xi  # standard Frechet == GEV(xi, 1, xi)
    t = spec.covariates()
    mu, sigma = _params(spec, t)
    return TimeSeries(t, mu + sigma * (z - 1.0) / xi)


def sample_runs(spec: SyntheticSpec) -> TimeSeries:
    rng = make_rng(spec.seed)
    L = spec.run_length
    n_runs = -(-spec.n // L)
    z = (-np.log(open_uniforms(rng, n_runs))) ** (-spec.xi)
    t = spec.covariates()
    centre = np.minimum(np.arange(n_runs) * L + (L - 1) // 2, spec.n - 1)
    s = spec.location(t[centre])
    if np.any(s <= 0):
        raise InvalidArgumentError("runs process needs a positive location model")
    x = (s * z)[:, None] * spec.phi ** np.arange(L)[None, :]
    return TimeSeries(t, x.ravel()[: spec.n])


def runs_truth(spec: SyntheticSpec, k: int) -> GevModel:
    """Exact model of the k-window block maxima of :func:`sample_runs` (blocks of length ``run_length``)."""
    if not 1 <= k <= spec.run_length:
        raise InvalidArgumentError(f"exact scaling holds for 1 <= k <= {spec.run_length}")
    c = spec.phi ** (k - 1)
    loc = spec.location.scaled(c)
    return GevModel(spec.xi, loc, loc.scaled(spec.xi))


def simulate(spec: SyntheticSpec) -> TimeSeries:
    if spec.process == "iid_gev":
        return sample_gev(spec)
    if spec.process == "moving_max":
        return sample_moving_max(spec.n, spec.order, spec.seed, spec.t_start, spec.t_end)
    if spec.process == "runs":
        return sample_runs(spec)
    return sample_chain(spec)


def demand_like_spec(n=3347, seed=0, years=25.0, xi=0.3, phi=0.9, level=100.0, trend=0.02):
    """Chain with a multiplicative linear trend ``s(t) = level (1 + trend t)``.

    Marginals are ``GEV(xi, s(t), xi s(t))``: linear location and linear
    scale sharing one trend, so both scale together across window sizes.
    """
    s0, s1 = level, level * trend
    return SyntheticSpec("chain", n, seed, xi, ParamModel.linear(s0, s1), ParamModel.linear(xi * s0, xi * s1),
                         phi=phi, t_start=0.0, t_end=years)
