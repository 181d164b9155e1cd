"""Write a workflow result to CSV tables, plot-data CSVs, SVG figures and a manifest."""
from __future__ import annotations

import logging
from pathlib import Path

import numpy as np

from .errors import SuccexError
from .gof import model_qq
from .inference import return_level_curve
from .io import fmt, write_csv
from .scaling import ScalingLaw, log_scaling_response
from .svg import Layer, chart
from .workflow import WorkflowResult

log = logging.getLogger(__name__)

PARAM_NAMES = ("mu0", "mu1", "sigma0", "sigma1", "xi")
CURVE_PERIODS = np.unique(np.round(np.logspace(np.log10(2), 3, 40), 6))


def _coef(model, name):
    c = model.coefficients()
    if name == "xi":
        return c["xi"]
    return c.get(name)


def params_rows(result: WorkflowResult):
    rows = []
    for r in result.params:
        m = r.model
        vals = [_coef(m, n) for n in PARAM_NAMES]
        hws = [r.half_widths.get(n) if _coef(m, n) is not None else None for n in PARAM_NAMES]
        rows.append([r.k, r.method, m.location.form, m.scale.form, *vals, *hws, r.factor])
    return rows


def theta_rows(result: WorkflowResult):
    return [[e.k, e.theta, e.n_exceedances, e.threshold_quantile, e.threshold_window_span, e.clamped, e.saturated]
            for e in result.analysis.theta.estimates]


def gtk_rows(result: WorkflowResult):
    a = result.analysis
    if a.law is None:
        return []
    rows = []
    names = {"exponential": ("a", "b"), "power": ("a", "beta")}
    cands = dict(a.law_candidates) if a.law_candidates else {a.law.label: a.law}
    if a.law.label not in cands or not isinstance(cands[a.law.label], ScalingLaw):
        cands[a.law.label] = a.law
    for label in sorted(cands):
        law = cands[label]
        selected = label == a.law.label
        if not isinstance(law, ScalingLaw):
            rows.append([label, selected, "error", str(law)])
            continue
        if selected:
            law = a.law
        coef_names = names.get(law.form, tuple(f"c{j}" for j in range(law.n_coef)))
        for n, v in zip(coef_names, law.coefficients):
            rows.append([label, selected, n, v])
        rows.append([label, selected, "r2", law.fit_r2])
        if law.selection_score is not None:
            rows.append([label, selected, "adjusted_r2_log", law.selection_score])
        rows.append([label, selected, "k_fit", ";".join(str(k) for k in law.k_fit_range)])
    return rows


def returns_rows(result: WorkflowResult):
    t = result.returns
    return [[r.k, r.method, r.horizon_span, r.horizon_events, t.anchor_t, r.level, r.ci_low, r.ci_high,
             r.total, r.k * r.ci_low, r.k * r.ci_high] for r in t.rows]


def gof_rows(result: WorkflowResult):
    out = []
    for g in result.gof:
        if g.report is None:
            out.append([g.k, g.method, None, None, None, None, None, None, g.error])
        else:
            r = g.report
            out.append([g.k, g.method, r.n, r.ks_statistic, r.ks_p, r.ad_statistic, r.ad_p, r.normalized, None])
    return out


def _write_svg(path, text):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    return path


def emit_outputs(result: WorkflowResult, out_dir) -> list:
    """Write every available section; returns the written paths (relative, sorted)."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    written, omitted = [], []

    def table(name, header, rows):
        if rows:
            written.append(write_csv(out / name, header, rows))
        else:
            omitted.append(f"{name}: no rows")

    table("params.csv", ["k", "method", "location_form", "scale_form", *PARAM_NAMES,
                         *(f"{n}_hw" for n in PARAM_NAMES), "scaling_factor"], params_rows(result))
    table("theta.csv", ["k", "theta", "n_exceedances", "threshold_quantile", "window_span", "clamped", "saturated"],
          theta_rows(result))
    table("gtk.csv", ["form", "selected", "name", "value"], gtk_rows(result))
    table("returns.csv", ["k", "method", "horizon_span", "horizon_events", "anchor_t", "level", "ci_low", "ci_high",
                          "total", "total_ci_low", "total_ci_high"], returns_rows(result) if result.returns else [])
    table("gof.csv", ["k", "method", "n", "ks_statistic", "ks_p", "ad_statistic", "ad_p", "normalized", "error"],
          gof_rows(result))

    for name, (svg, header, rows) in _figures(result).items():
        if rows:
            written.append(write_csv(out / "plotdata" / f"{name}.csv", header, rows))
            written.append(_write_svg(out / "figures" / f"{name}.svg", svg))
        else:
            omitted.append(f"figures/{name}.svg: no data")

    manifest = out / "manifest.txt"
    files = sorted(str(p.relative_to(out)) for p in written)
    manifest.write_text(_manifest_text(result, files, omitted), encoding="utf-8")
    files.append("manifest.txt")
    return files


def _figures(result: WorkflowResult):
    a = result.analysis
    figs = {}

    lags = np.arange(len(result.acf))
    figs["acf"] = (chart([Layer("ACF", lags, result.acf, "points")], "Autocorrelation", "lag", "acf"),
                   ["lag", "acf"], [[int(lag), v] for lag, v in zip(lags, result.acf)])

    if a.law is not None and a.scaling_inputs is not None:
        inp = a.scaling_inputs
        ks = np.arange(1, result.config.k_max + 1)
        obs_mu = log_scaling_response(inp, "location")
        try:
            obs_sigma = log_scaling_response(inp, "scale")
        except SuccexError:
            obs_sigma = np.full(len(inp.k), np.nan)
        with np.errstate(invalid="ignore", divide="ignore"):
            fitted = np.log(a.law(ks))
        rows = []
        for k in ks:
            i = np.flatnonzero(inp.k == k)
            rows.append([int(k), obs_mu[i[0]] if len(i) else None, obs_sigma[i[0]] if len(i) else None,
                         fitted[k - 1]])
        svg = chart([Layer("log g(k), fitted", ks, fitted, "line"),
                     Layer("location (derivation)", inp.k, obs_mu, "points"),
                     Layer("scale (validation)", inp.k, obs_sigma, "points")],
                    f"Scaling function ({a.law.label})", "k", "log g(k)")
        figs["gtk"] = (svg, ["k", "log_g_location", "log_g_scale", "log_g_fitted"], rows)

    rows = []
    ci = a.base.confidence_interval("xi")
    for k, w in sorted(a.windows.items()):
        free = w.free.model.shape if w.free is not None and w.free.converged else None
        fixed = w.fixed.model.shape if w.fixed is not None else None
        rows.append([k, free, fixed, ci[0] if ci else None, ci[1] if ci else None])
    if rows:
        ks = np.array([r[0] for r in rows], dtype=float)
        free = np.array([np.nan if r[1] is None else r[1] for r in rows])
        fixed = np.array([np.nan if r[2] is None else r[2] for r in rows])
        layers = [Layer("free-shape MLE", ks, free, "points"), Layer("fixed shape", ks, fixed, "line", dashed=True)]
        if ci:
            layers.append(Layer("k=1 95% interval", ks, np.column_stack([np.full(len(ks), ci[0]),
                                                                         np.full(len(ks), ci[1])]), "band"))
        figs["shape_deviation"] = (chart(layers, "Shape estimate by window size", "k", "xi"),
                                   ["k", "xi_free", "xi_fixed", "xi1_ci_low", "xi1_ci_high"], rows)

    if result.returns is not None and result.returns.rows:
        rows, layers = [], []
        for h in result.config.horizons:
            rs = [r for r in result.returns.rows if r.horizon_span == h]
            if not rs:
                continue
            ks = np.array([r.k for r in rs], dtype=float)
            layers.append(Layer(f"{fmt(h)} units", ks, np.array([r.level for r in rs]), "line"))
            layers.append(Layer(f"{fmt(h)} units CI", ks, np.array([[r.ci_low, r.ci_high] for r in rs]), "band",
                                color=layers[-1].color or None))
            rows.extend([r.k, h, r.level, r.ci_low, r.ci_high] for r in rs)
        for i, layer in enumerate(layers):
            layer.color = layer.color or ("#1f77b4", "#d62728", "#2ca02c", "#9467bd")[(i // 2) % 4]
        figs["horizon_levels"] = (chart(layers, "Horizon return levels", "k", "level per event"),
                                  ["k", "horizon_span", "level", "ci_low", "ci_high"], rows)

    rows, layers = [], []
    for p in result.params:
        try:
            levels = return_level_curve(p.model, result.t_end, CURVE_PERIODS)
        except SuccexError:
            continue
        rows.extend([p.k, T, z] for T, z in zip(CURVE_PERIODS, levels))
        if p.k in _shown_ks(result):
            layers.append(Layer(f"k={p.k} ({p.method})", CURVE_PERIODS, levels, "line"))
    if rows:
        figs["return_levels"] = (chart(layers, f"Return levels at t={fmt(result.t_end)}", "return period (blocks)",
                                       "level", logx=True), ["k", "period_blocks", "level"], rows)

    if result.quantiles:
        rows = [[q.k, q.year, q.t, q.p, q.level, q.ci_low, q.ci_high] for q in result.quantiles]
        layers = []
        for k in sorted({q.k for q in result.quantiles} & set(_shown_ks(result)[:2])):
            for p in result.config.quantile_probs:
                qs = [q for q in result.quantiles if q.k == k and q.p == p]
                yrs = np.array([q.year for q in qs], dtype=float)
                layers.append(Layer(f"k={k} p={fmt(p)}", yrs, np.array([q.level for q in qs]), "line",
                                    dashed=k != 1))
        figs["quantile_fan"] = (chart(layers, "Quantiles by year ahead", "year", "level"),
                                ["k", "year", "t", "p", "level", "ci_low", "ci_high"], rows)

    rows, layers = [], []
    for p in result.params:
        w = a.windows.get(p.k)
        if w is None or w.maxima is None:
            continue
        try:
            qq = model_qq(w.maxima, p.model)
        except SuccexError:
            continue
        rows.extend([p.k, x, y] for x, y in qq)
        if p.k in _shown_ks(result):
            layers.append(Layer(f"k={p.k}", qq[:, 0], qq[:, 1], "points"))
    if rows:
        lim = np.array([min(r[1] for r in rows), max(r[1] for r in rows)])
        layers.append(Layer("y = x", lim, lim, "line", color="#000000", dashed=True))
        figs["qq_gumbel"] = (chart(layers, "Gumbel-scale QQ", "standard Gumbel quantile", "normalized maxima"),
                             ["k", "theoretical", "empirical"], rows)
    return figs


def _shown_ks(result):
    ks = sorted({p.k for p in result.params})
    if not ks:
        return []
    kf = result.analysis.k_f
    pick = [1, kf, ks[-1]] if kf >= 1 else [ks[0], ks[-1]]
    return [k for k in dict.fromkeys(pick) if k in ks]


def _manifest_text(result: WorkflowResult, files, omitted):
    a = result.analysis
    lines = ["# succex workflow manifest", "", "[config]"]
    lines += [f"{k} = {v}" for k, v in result.config.as_items()]
    lines += ["", "[metadata]",
              f"n_observations = {result.n}",
              f"covariate_origin = {fmt(result.origin)}",
              "covariates = shifted so the first block sits at t = 0",
              f"blocks_per_unit = {fmt(result.blocks_per_unit)}",
              f"return_level_anchor_t = {fmt(result.t_end)}",
              "quantile_anchor = t_end + year - 0.5",
              f"selected_location_form = {result.forms[0]}",
              f"selected_scale_form = {result.forms[1]}",
              f"xi1 = {fmt(result.base.model.shape)}",
              f"k_f = {a.k_f}",
              f"k_scaling = {';'.join(str(k) for k in a.k_scaling)}",
              f"selected_scaling_form = {a.law.label if a.law is not None else 'none'}",
              f"theta_horizon = {a.theta.horizon}",
              "", "[lr_tests]"]
    lines += [f"{r.nested} vs {r.full}: deviance = {fmt(r.deviance)}, df = {r.df}, p = {fmt(r.p_value)}"
              for r in result.lr_tests] or ["none"]
    lines += ["", "[horizon_checks]"]
    lines += [f"k={k}: {'; '.join(why) if why else 'ok'}" for k, why in sorted(a.horizon.reasons.items())]
    lines += ["", "[notes]"] + (list(result.notes) or ["none"])
    lines += ["", "[omitted]"] + (omitted or ["none"])
    lines += ["", "[files]"] + files + ["manifest.txt", ""]
    return "\n".join(lines)
