import numpy as np
import pytest

from succex.config import WorkflowConfig
from succex.errors import WorkflowPreconditionError
from succex.gev import ParamModel
from succex.series import block_maxima
from succex.simulate import SyntheticSpec, runs_truth, simulate
from succex.successive import analyse, covariate_origin
from succex.workflow import run_workflow, select_forms, successive_config

FAST = dict(samples_per_param=2, quantile_years=1, horizons=(10.0,))


def _runs_spec(seed):
    return SyntheticSpec("runs", 3347, seed, 0.3, ParamModel.linear(100.0, 2.0), phi=0.8, t_end=25.0,
                         run_length=20)


def _inferred_error(seed):
    spec = _runs_spec(seed)
    cfg = WorkflowConfig(block_length=20, k_max=12, k_fit_max=6, location_form="linear", scale_form="linear", **FAST)
    res = run_workflow(cfg, simulate(spec))
    a = res.analysis
    errs, ratios = [], []
    base_mu0 = res.params[0].model.location.coefficients[0]
    for row in res.params:
        if row.method != "inferred":
            continue
        truth = runs_truth(spec, row.k).location(res.origin)
        errs.append(abs(row.model.location.coefficients[0] / truth - 1))
        theta_ratio = (a.theta_at(row.k) / a.theta.as_dict()[1]) ** a.xi1
        ratios.append(row.model.location.coefficients[0] / base_mu0 / theta_ratio / 0.8 ** (row.k - 1))
    return res, max(errs), ratios


def test_end_to_end_exact_scaling_oracle():
    # block maxima of window k are exactly 0.8**(k-1) times the base maxima
    worst = []
    for seed in range(5):
        res, err, ratios = _inferred_error(seed)
        assert res.analysis.law is not None and res.analysis.k_f < 12
        assert any(r.method == "inferred" for r in res.params)
        worst.append(err)
        if seed == 0:
            # the fitted law recovers g(k) = 0.8**(k-1) closely
            np.testing.assert_allclose(ratios, 1.0, atol=0.05)
    assert np.median(worst) <= 0.05


def test_gumbel_data_aborts_at_frechet_check():
    s = simulate(SyntheticSpec("iid_gev", 2000, 1, 0.0, ParamModel.constant(10.0), ParamModel.constant(2.0)))
    with pytest.raises(WorkflowPreconditionError) as err:
        run_workflow(WorkflowConfig(**FAST), s)
    assert err.value.step == "A3" and err.value.exit_code == 4


def test_run_workflow_equals_manual_composition():
    spec = _runs_spec(1)
    series = simulate(spec)
    cfg = WorkflowConfig(block_length=20, k_max=8, k_fit_max=5, **FAST)
    res = run_workflow(cfg, series)

    shifted = series.shifted(covariate_origin(series, 20))
    base, _, _ = select_forms(block_maxima(shifted, 20), cfg)
    manual = analyse(shifted, successive_config(cfg, base), k_max=cfg.k_max, base=base)
    assert res.forms == (base.model.location.form, base.model.scale.form)
    assert res.analysis.k_f == manual.k_f
    for k in range(1, cfg.k_max + 1):
        a, b = res.analysis.model_for(k), manual.model_for(k)
        assert a.coefficients() == pytest.approx(b.coefficients(), rel=1e-12)


def test_lr_selection_finds_trend():
    spec = SyntheticSpec("iid_gev", 3000, 2, 0.2, ParamModel.linear(10.0, 0.5), ParamModel.constant(2.0),
                         t_end=25.0)
    fit, rows, _ = select_forms(block_maxima(simulate(spec), 10), WorkflowConfig())
    assert fit.model.location.form == "linear"
    assert rows[0].nested == "constant/constant"
