import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from succex.errors import InfeasibleGridError, InvalidArgumentError
from succex.gev import GevModel, ParamModel, gev_cdf
from succex.inference import (
    HorizonTarget,
    QuantileTarget,
    compare_methods,
    horizon_blocks,
    horizon_return_level,
    permutation_ci,
    quantile_table,
    return_level,
    scaled_intervals,
)
from succex.simulate import SyntheticSpec, runs_truth, simulate
from succex.successive import SuccessiveConfig, covariate_origin


@settings(max_examples=40)
@given(st.floats(-0.3, 0.6), st.floats(2.0, 500.0))
def test_return_level_is_quantile(xi, T):
    m = GevModel.stationary(xi, 5.0, 2.0)
    assert gev_cdf(return_level(m, T, 0.0), xi, 5.0, 2.0) == pytest.approx(1 - 1 / T, rel=1e-9)


def test_horizon_level_nonstationary_unit_exceedance():
    m = GevModel(0.2, ParamModel.linear(10.0, 0.5), ParamModel.linear(2.0, 0.05))
    z = horizon_return_level(m, (5.0, 15.0), 4.0)
    tb = horizon_blocks(5.0, 15.0, 4.0)
    assert len(tb) == 40
    expected = np.sum(1 - gev_cdf(z, 0.2, m.location(tb), m.scale(tb)))
    assert expected == pytest.approx(1.0, abs=1e-10)
    with pytest.raises(InvalidArgumentError):
        horizon_blocks(0.0, 0.3, 4.0)
    with pytest.raises(InvalidArgumentError):
        return_level(m, 1.0, 0.0)


def test_quantile_table_monotone():
    m = GevModel.stationary(0.1, 0.0, 1.0)
    q = quantile_table(m, 0.0, [0.25, 0.5, 0.95])
    assert np.all(np.diff(q) > 0)
    with pytest.raises(InvalidArgumentError):
        quantile_table(m, 0.0, [0.5, 0.25])


def test_permutation_ci_enumerates_grid_and_skips_infeasible():
    m = GevModel(0.1, ParamModel.constant(10.0), ParamModel.linear(1.0, -0.1))
    cis = {"mu0": (9.0, 11.0), "sigma0": (0.5, 1.5), "sigma1": (-0.2, 0.0)}
    ci = permutation_ci(m, cis, QuantileTarget(0.9, 0.0), samples_per_param=5, t_range=(0.0, 10.0))
    assert ci.n_evaluated + ci.n_skipped == 125 and ci.n_skipped > 0
    assert ci.low <= ci.point <= ci.high
    with pytest.raises(InfeasibleGridError):
        permutation_ci(m, {"sigma0": (-2.0, -1.0)}, QuantileTarget(0.9, 0.0), 3)
    with pytest.raises(InvalidArgumentError):
        permutation_ci(m, {"nope": (0, 1)}, QuantileTarget(0.9, 0.0))


def test_horizon_target_matches_scalar_solver():
    m = GevModel(0.2, ParamModel.linear(10.0, 0.5), ParamModel.constant(2.0))
    target = HorizonTarget(0.0, 10.0, 3.0)
    ci = permutation_ci(m, {"mu1": (0.5, 0.5)}, target, 2, t_range=(0.0, 10.0))
    assert ci.point == pytest.approx(horizon_return_level(m, (0.0, 10.0), 3.0), rel=1e-12)


def test_scaled_intervals():
    base = GevModel(0.2, ParamModel.linear(10.0, 1.0), ParamModel.exponential(0.5, 0.1))
    cis = {"mu0": (9.0, 11.0), "mu1": (0.5, 1.5), "sigma0": (0.4, 0.6), "sigma1": (0.0, 0.2), "xi": (0.1, 0.3)}
    out = scaled_intervals(cis, base, 2.0)
    assert out["mu0"] == (18.0, 22.0) and out["mu1"] == (1.0, 3.0)
    assert out["sigma0"] == pytest.approx((0.4 + np.log(2), 0.6 + np.log(2)))
    assert out["sigma1"] == (0.0, 0.2) and out["xi"] == (0.1, 0.3)


def test_compare_methods_anchor_in_shifted_coordinates():
    # covariates start far from zero; reference models are given in shifted coordinates
    spec = SyntheticSpec("runs", 2000, 4, 0.3, ParamModel.linear(100.0, 2.0), phi=0.8, t_start=2000.0,
                         t_end=2025.0, run_length=10)
    series = simulate(spec)
    cfg = SuccessiveConfig(block_length=10, location_form="linear", scale_form="linear", k_fit_max=4)
    origin = covariate_origin(series, 10)
    ref = {}
    for k in (1, 2):
        truth = runs_truth(spec, k)
        loc, sc = truth.location, truth.scale
        ref[k] = GevModel(truth.shape, ParamModel.linear(loc(origin), loc.coefficients[1]),
                          ParamModel.linear(sc(origin), sc.coefficients[1]))
    res = compare_methods(series, ref, [1, 2], cfg, anchor_t=1.0, with_curves=False)
    assert res.origin == origin
    for method in ("fixed_shape_mle", "full_proposed"):
        cell = res.cell(method, 2)
        assert cell.ok
        assert cell.errors["mu"] / ref[2].location(1.0) < 0.1
