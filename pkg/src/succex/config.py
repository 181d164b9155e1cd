"""Workflow configuration: a flat ``key = value`` file plus command-line overrides.

Lines starting with ``#`` are comments. Lists are comma separated. Every key
is optional; defaults are listed in :data:`DEFAULTS`.

========================  ===============  ==============================================
key                       default          meaning
========================  ===============  ==============================================
block_length              10               observations per block (m)
k_max                     15               largest window size reported
k_fit_max                 10               largest window size fitted directly
q                         0.95             threshold quantile for the extremal index
window_span               1.0              moving-quantile window, covariate units
location_form             auto             constant, linear, exponential or auto
scale_form                auto             constant, linear, exponential or auto
lr_alpha                  0.05             LR test level used by the ``auto`` forms
scaling_form              auto             exponential, power, polynomial or auto
scaling_degree            2                polynomial degree (max degree under auto)
scaling_response          adjusted         adjusted or literal
theta_extrapolation       flat             flat or linear
samples_per_param         10               grid points per parameter for CIs
ci_level                  0.95             level of the per-parameter intervals
horizons                  10,20            return-level horizons, covariate units
quantile_probs            0.25,0.5,0.75,0.95
quantile_years            10               number of yearly quantile anchors
anchor_t                  1.0              comparison anchor (shifted coordinates)
frechet_check             lower            lower (CI lower bound > 0) or point
drop_zeros                false            drop zero values before the analysis
max_lag                   50               ACF lags
seed                      0                seed for simulation subcommands
restarts                  5                Nelder-Mead restarts per fit
========================  ===============  ==============================================
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError

FORMS = ("constant", "linear", "exponential")


@dataclass
class WorkflowConfig:
    block_length: int = 10
    k_max: int = 15
    k_fit_max: int = 10
    q: float = 0.95
    window_span: float = 1.0
    location_form: str = "auto"
    scale_form: str = "auto"
    lr_alpha: float = 0.05
    scaling_form: str = "auto"
    scaling_degree: int = 2
    scaling_response: str = "adjusted"
    theta_extrapolation: str = "flat"
    samples_per_param: int = 10
    ci_level: float = 0.95
    horizons: tuple = (10.0, 20.0)
    quantile_probs: tuple = (0.25, 0.5, 0.75, 0.95)
    quantile_years: int = 10
    anchor_t: float = 1.0
    frechet_check: str = "lower"
    drop_zeros: bool = False
    max_lag: int = 50
    seed: int = 0
    restarts: int = 5

    def validate(self):
        def need(cond, key, msg):
            if not cond:
                raise ConfigError(key, msg)

        need(self.block_length >= 1, "block_length", "must be >= 1")
        need(self.k_max >= 1, "k_max", "must be >= 1")
        need(1 <= self.k_fit_max, "k_fit_max", "must be >= 1")
        need(0 < self.q < 1, "q", "must lie in (0, 1)")
        need(self.window_span > 0, "window_span", "must be > 0")
        need(self.location_form in FORMS + ("auto",), "location_form", f"must be one of {FORMS + ('auto',)}")
        need(self.scale_form in FORMS + ("auto",), "scale_form", f"must be one of {FORMS + ('auto',)}")
        need(0 < self.lr_alpha < 1, "lr_alpha", "must lie in (0, 1)")
        need(self.scaling_form in ("auto", "exponential", "power", "polynomial"), "scaling_form",
             "must be auto, exponential, power or polynomial")
        need(0 <= self.scaling_degree <= 5, "scaling_degree", "must lie in 0..5")
        need(self.scaling_response in ("adjusted", "literal"), "scaling_response", "must be adjusted or literal")
        need(self.theta_extrapolation in ("flat", "linear"), "theta_extrapolation", "must be flat or linear")
        need(self.samples_per_param >= 2, "samples_per_param", "must be >= 2")
        need(0 < self.ci_level < 1, "ci_level", "must lie in (0, 1)")
        need(len(self.horizons) > 0 and all(h > 0 for h in self.horizons), "horizons",
             "must be a nonempty list of positive spans")
        need(len(self.quantile_probs) > 0 and all(0 < p < 1 for p in self.quantile_probs), "quantile_probs",
             "must be probabilities in (0, 1)")
        need(all(a < b for a, b in zip(self.quantile_probs, self.quantile_probs[1:])), "quantile_probs",
             "must be strictly increasing")
        need(self.quantile_years >= 1, "quantile_years", "must be >= 1")
        need(self.frechet_check in ("lower", "point"), "frechet_check", "must be lower or point")
        need(self.max_lag >= 1, "max_lag", "must be >= 1")
        need(self.restarts >= 0, "restarts", "must be >= 0")
        return self

    def as_items(self):
        """Sorted ``(key, text)`` pairs, as written to the manifest."""
        out = []
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            out.append((f.name, ",".join(repr(float(x)) for x in v) if isinstance(v, tuple) else str(v).lower()
                        if isinstance(v, bool) else str(v)))
        return out


def _coerce(key, text, proto):
    text = text.strip()
    try:
        if isinstance(proto, bool):
            low = text.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(text)
            return low in ("true", "1", "yes")
        if isinstance(proto, int):
            return int(text)
        if isinstance(proto, float):
            return float(text)
        if isinstance(proto, tuple):
            return tuple(float(v) for v in text.split(",") if v.strip())
        return text
    except ValueError:
        raise ConfigError(key, f"cannot parse {text!r} as {type(proto).__name__}") from None


def apply_overrides(cfg: WorkflowConfig, pairs) -> WorkflowConfig:
    """Return a copy of ``cfg`` with ``(key, text)`` pairs applied and validated."""
    names = {f.name for f in dataclasses.fields(cfg)}
    updates = {}
    for key, text in pairs:
        key = key.strip()
        if key not in names:
            raise ConfigError(key, "unknown configuration key")
        updates[key] = _coerce(key, text, getattr(cfg, key))
    return dataclasses.replace(cfg, **updates).validate()


def parse_assignment(text):
    if "=" not in text:
        raise ConfigError(text, "expected key=value")
    key, value = text.split("=", 1)
    return key.strip(), value.strip()


def load_config(path=None, overrides=()) -> WorkflowConfig:
    """Defaults, then the file at ``path`` (if any), then ``overrides`` (``key=value`` strings)."""
    pairs = []
    if path is not None:
        try:
            lines = Path(path).read_text(encoding="utf-8").splitlines()
        except OSError as exc:
            raise ConfigError(str(path), f"cannot read config file: {exc}") from None
        for line in lines:
            line = line.split("#", 1)[0].strip()
            if line:
                pairs.append(parse_assignment(line))
    pairs.extend(parse_assignment(o) for o in overrides)
    return apply_overrides(WorkflowConfig(), pairs)


DEFAULTS = dict(WorkflowConfig().as_items())
