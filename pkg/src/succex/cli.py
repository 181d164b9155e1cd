"""Command-line interface: ``succex <subcommand> ...``.

Exit codes: 0 success, 2 configuration or argument error, 3 data or I/O
error, 4 workflow precondition failed (non-Frechet data), 5 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__, bundled_dataset_path
from .config import load_config
from .errors import DataError, SuccexError
from .extremal import theta_by_window
from .gev import ParamModel, fit_mle, likelihood_ratio_test
from .gof import gof_report
from .inference import compare_methods
from .io import fmt, ingest_csv, write_series_csv
from .series import block_maxima, moving_minimum
from .simulate import PROCESSES, SyntheticSpec, demand_like_spec, simulate
from .successive import analyse, covariate_origin
from .workflow import run_workflow, successive_config

log = logging.getLogger("succex")


def _print_table(header, rows, out=None):
    fh = open(out, "w", encoding="utf-8", newline="") if out else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(v) for v in r])
    finally:
        if out:
            fh.close()


def _load(args):
    cfg = load_config(args.config, args.set or ())
    if getattr(args, "example", False):
        path = bundled_dataset_path()
    elif getattr(args, "input", None):
        path = args.input
    else:
        raise DataError("no input file given (pass a CSV path or --example)")
    series = ingest_csv(path)
    return cfg, series


def _shifted(cfg, series):
    from .series import drop_zeros

    if cfg.drop_zeros:
        series = drop_zeros(series)
    return series.shifted(covariate_origin(series, cfg.block_length))


def cmd_fit(args):
    cfg, series = _load(args)
    s = _shifted(cfg, series)
    z = block_maxima(moving_minimum(s, args.window), cfg.block_length)
    loc = args.location_form or (cfg.location_form if cfg.location_form != "auto" else "linear")
    sc = args.scale_form or (cfg.scale_form if cfg.scale_form != "auto" else "linear")
    stationary = fit_mle(z, restarts=cfg.restarts, fixed_shape=args.fixed_shape)
    fit = fit_mle(z, loc, sc, fixed_shape=args.fixed_shape, init=stationary, restarts=cfg.restarts)
    rows = [[n, v, fit.standard_errors.get(n)] for n, v in fit.model.coefficients().items()]
    rows.append(["neg_log_likelihood", fit.neg_log_likelihood, None])
    rows.append(["converged", fit.converged, None])
    rows.append(["n_maxima", fit.n_maxima, None])
    if (loc, sc) != ("constant", "constant"):
        rows.append(["lr_p_vs_stationary", likelihood_ratio_test(stationary, fit), None])
    _print_table(["name", "value", "se"], rows, args.out)


def cmd_theta(args):
    cfg, series = _load(args)
    s = _shifted(cfg, series)
    res = theta_by_window(s, cfg.k_max, cfg.q, cfg.window_span)
    rows = [[e.k, e.theta, e.n_exceedances, e.clamped, e.saturated] for e in res.estimates]
    _print_table(["k", "theta", "n_exceedances", "clamped", "saturated"], rows, args.out)
    if res.failure:
        print(f"# stopped: {res.failure}", file=sys.stderr)


def _analysis(cfg, series):
    s = _shifted(cfg, series)
    loc = cfg.location_form if cfg.location_form != "auto" else "linear"
    sc = cfg.scale_form if cfg.scale_form != "auto" else "linear"
    base = fit_mle(block_maxima(s, cfg.block_length), loc, sc, restarts=cfg.restarts)
    return analyse(s, successive_config(cfg, base), k_max=cfg.k_max, base=base)


def cmd_successive(args):
    cfg, series = _load(args)
    a = _analysis(cfg, series)
    rows = []
    for k, w in sorted(a.windows.items()):
        if w.fixed is None:
            rows.append([k, None, None, None, None, None, None, w.error])
            continue
        c = w.fixed.model.coefficients()
        free = w.free.model.shape if w.free is not None else None
        rows.append([k, c.get("mu0"), c.get("mu1"), c.get("sigma0"), c.get("sigma1"), c["xi"], free, w.error])
    _print_table(["k", "mu0", "mu1", "sigma0", "sigma1", "xi", "xi_free", "error"], rows, args.out)
    print(f"# k_f = {a.k_f}", file=sys.stderr)


def cmd_scaling(args):
    cfg, series = _load(args)
    a = _analysis(cfg, series)
    if a.law is None:
        raise SuccexError("; ".join(a.notes) or "no scaling law could be fitted")
    rows = []
    for label, law in sorted(a.law_candidates.items()):
        if isinstance(law, Exception):
            rows.append([label, False, None, None, str(law)])
        else:
            rows.append([label, label == a.law.label, ";".join(fmt(c) for c in law.coefficients),
                         law.selection_score, None])
    _print_table(["form", "selected", "coefficients", "adjusted_r2_log", "error"], rows, args.out)
    print(f"# k_f = {a.k_f}; fitted on k = {a.k_scaling}", file=sys.stderr)


def cmd_gof(args):
    cfg, series = _load(args)
    a = _analysis(cfg, series)
    rows = []
    for k in range(1, cfg.k_max + 1):
        w = a.windows.get(k)
        model = a.model_for(k)
        if w is None or w.maxima is None or model is None:
            continue
        try:
            r = gof_report(w.maxima, model)
        except SuccexError as exc:
            rows.append([k, "inferred" if a.is_inferred(k) else "fitted", None, None, None, None, None, str(exc)])
            continue
        rows.append([k, "inferred" if a.is_inferred(k) else "fitted", r.n, r.ks_statistic, r.ks_p, r.ad_statistic,
                     r.ad_p, None])
    _print_table(["k", "method", "n", "ks_statistic", "ks_p", "ad_statistic", "ad_p", "error"], rows, args.out)


def cmd_returns(args):
    cfg, series = _load(args)
    res = run_workflow(cfg, series)
    rows = [[r.k, r.method, r.horizon_span, r.horizon_events, r.level, r.ci_low, r.ci_high, r.total]
            for r in res.returns.rows]
    _print_table(["k", "method", "horizon_span", "horizon_events", "level", "ci_low", "ci_high", "total"], rows,
                 args.out)


def cmd_compare(args):
    cfg = load_config(args.config, args.set or ())
    short, long_run = ingest_csv(args.short), ingest_csv(args.long)
    from .successive import SuccessiveConfig

    loc = cfg.location_form if cfg.location_form != "auto" else "linear"
    sc = cfg.scale_form if cfg.scale_form != "auto" else "linear"
    scfg = SuccessiveConfig(cfg.block_length, loc, sc, cfg.q, cfg.window_span, cfg.k_fit_max, cfg.scaling_form,
                            cfg.scaling_degree, cfg.scaling_response, False, cfg.theta_extrapolation,
                            restarts=cfg.restarts)
    k_list = [int(k) for k in args.k.split(",")]
    res = compare_methods(short, long_run, k_list, scfg, anchor_t=cfg.anchor_t, with_curves=False)
    rows = []
    for (method, k), c in sorted(res.cells.items(), key=lambda kv: (kv[0][1], kv[0][0])):
        ref = res.reference[k]
        mu_r, s_r = ref.location(res.anchor_t), ref.scale(res.anchor_t)
        if c.ok:
            rows.append([k, method, c.params["mu"], c.params["sigma"], c.params["xi"], mu_r, s_r, ref.shape,
                         c.errors["mu"], c.errors["sigma"], c.errors["xi"], c.inferred, None])
        else:
            rows.append([k, method, None, None, None, mu_r, s_r, ref.shape, None, None, None, c.inferred, c.failure])
    _print_table(["k", "method", "mu", "sigma", "xi", "mu_ref", "sigma_ref", "xi_ref", "mu_error", "sigma_error",
                  "xi_error", "inferred", "failure"], rows, args.out)


def cmd_simulate(args):
    if args.process == "demand":
        spec = demand_like_spec(n=args.n, seed=args.seed, xi=args.xi, phi=args.phi)
    else:
        loc = ParamModel.linear(args.mu, args.mu_slope) if args.mu_slope else ParamModel.constant(args.mu)
        sc = ParamModel.linear(args.sigma, args.sigma_slope) if args.sigma_slope else ParamModel.constant(args.sigma)
        spec = SyntheticSpec(args.process, args.n, args.seed, args.xi, loc, sc, args.order, args.phi,
                             args.t_start, args.t_end, args.run_length)
    series = simulate(spec)
    if args.out:
        write_series_csv(args.out, series)
    else:
        _print_table(["t", "value"], zip(series.covariates, series.values))


def cmd_run(args):
    from .emit import emit_outputs

    cfg, series = _load(args)
    res = run_workflow(cfg, series)
    files = emit_outputs(res, args.out)
    for f in files:
        print(str(Path(args.out) / f))


def build_parser():
    p = argparse.ArgumentParser(prog="succex", description="Successive-extremes analysis of nonstationary series.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, needs_input=True):
        if needs_input:
            sp.add_argument("input", nargs="?", help="CSV file with header t,value")
            sp.add_argument("--example", action="store_true", help="use the bundled synthetic dataset")
        sp.add_argument("--config", help="key = value configuration file")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a configuration key")
        sp.add_argument("--out", "-o", help="output file (directory for run)")

    sp = sub.add_parser("fit", help="fit the GEV to (moving-minimum) block maxima")
    common(sp)
    sp.add_argument("--window", type=int, default=1, help="moving-minimum window k")
    sp.add_argument("--location-form", choices=("constant", "linear", "exponential"))
    sp.add_argument("--scale-form", choices=("constant", "linear", "exponential"))
    sp.add_argument("--fixed-shape", type=float)
    sp.set_defaults(func=cmd_fit)

    for name, fn, text in (("successive", cmd_successive, "fixed-shape fits for k = 1..k_max"),
                           ("theta", cmd_theta, "extremal index of the moving minimum per k"),
                           ("scaling", cmd_scaling, "fit and select the scaling function g(k)"),
                           ("gof", cmd_gof, "KS and AD reports per window size"),
                           ("returns", cmd_returns, "horizon return levels with permutation intervals")):
        sp = sub.add_parser(name, help=text)
        common(sp)
        sp.set_defaults(func=fn)

    sp = sub.add_parser("compare", help="compare the three estimation methods on a short run")
    sp.add_argument("short", help="short-run CSV")
    sp.add_argument("long", help="long-run CSV (reference)")
    sp.add_argument("--k", default="8,10,12", help="comma-separated window sizes")
    common(sp, needs_input=False)
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("simulate", help="write a synthetic series as CSV")
    sp.add_argument("--process", choices=PROCESSES + ("demand",), default="iid_gev")
    sp.add_argument("--n", type=int, default=1000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--xi", type=float, default=0.2)
    sp.add_argument("--mu", type=float, default=10.0)
    sp.add_argument("--mu-slope", type=float, default=0.0)
    sp.add_argument("--sigma", type=float, default=2.0)
    sp.add_argument("--sigma-slope", type=float, default=0.0)
    sp.add_argument("--order", type=int, default=1)
    sp.add_argument("--phi", type=float, default=0.8)
    sp.add_argument("--run-length", type=int, default=10, help="run length L of the runs process")
    sp.add_argument("--t-start", type=float, default=0.0)
    sp.add_argument("--t-end", type=float, default=1.0)
    sp.add_argument("--out", "-o")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("run", help="full workflow with tables, plot data and figures")
    common(sp)
    sp.set_defaults(func=cmd_run)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(message)s")
    if args.command == "run" and not args.out:
        parser.error("run needs --out DIRECTORY")
    try:
        with np.errstate(all="ignore"):
            args.func(args)
    except SuccexError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DataError.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
