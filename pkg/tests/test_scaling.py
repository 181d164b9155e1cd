import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from succex.errors import DegenerateDesignError, InvalidArgumentError, LogDomainError, WindowError
from succex.gev import GevModel, ParamModel
from succex.scaling import (
    ScalingInputs,
    ScalingLaw,
    extrapolate_theta,
    fit_scaling,
    fitting_horizon,
    infer_model,
    infer_params,
    log_scaling_response,
    select_form,
)


def exact(g, k, theta, xi=0.3, mu10=100.0, sigma10=30.0):
    c = g(np.asarray(k, float)) * (np.asarray(theta) / theta[0]) ** xi
    return ScalingInputs(k, mu10 * c, sigma10 * c, theta, xi, base_mu0=mu10, base_sigma0=sigma10)


K = np.arange(1, 9)
THETA = np.linspace(0.6, 0.35, len(K))


@given(st.floats(0.5, 1.2), st.floats(0.6, 0.99))
def test_exponential_round_trip(a, b):
    law = fit_scaling(exact(lambda k: a * b ** (k - 1), K, THETA), "exponential")
    assert law.coefficients == pytest.approx((a, b), rel=1e-9)


@given(st.floats(0.5, 1.2), st.floats(-1.0, -0.1))
def test_power_round_trip(a, beta):
    law = fit_scaling(exact(lambda k: a * k ** beta, K, THETA), "power")
    assert law.coefficients == pytest.approx((a, beta), rel=1e-9, abs=1e-12)


def test_polynomial_round_trip_and_response():
    inputs = exact(lambda k: 1.0 - 0.05 * k + 0.001 * k ** 2, K, THETA)
    law = fit_scaling(inputs, "polynomial", degree=2)
    assert law.coefficients == pytest.approx((1.0, -0.05, 0.001), abs=1e-10)
    assert law.label == "polynomial2"
    np.testing.assert_allclose(np.exp(log_scaling_response(inputs)), law(K), rtol=1e-10)


def test_literal_mode_exact_for_constant_theta():
    theta = np.full(len(K), 0.5)
    inputs = exact(lambda k: 0.9 * 0.8 ** (k - 1), K, theta)
    law = fit_scaling(inputs, "exponential", response="literal")
    assert law.coefficients == pytest.approx((0.9, 0.8), rel=1e-9)


def test_input_validation():
    with pytest.raises(InvalidArgumentError):
        ScalingInputs([2, 3, 4], [1, 1, 1], [1, 1, 1], [0.5, 0.5, 0.5], 0.2)
    with pytest.raises(InvalidArgumentError):
        ScalingInputs([1, 2, 3], [1, 1, 1], [1, 1, 1], [0.5, 1.5, 0.5], 0.2)
    with pytest.raises(DegenerateDesignError):
        fit_scaling(exact(lambda k: 0.8 ** k, [1, 2], [0.5, 0.5]))
    with pytest.raises(LogDomainError):
        fit_scaling(ScalingInputs([1, 2, 3], [1.0, -1.0, 0.5], [1, 1, 1], [0.5] * 3, 0.2))
    with pytest.raises(InvalidArgumentError):
        ScalingLaw("exponential", (0.8, -0.1))


def test_monotone_guard_rejects_upturning_quadratic():
    # exact quadratic with a minimum at k=6: the guard on 1..12 sets it aside
    inputs = exact(lambda k: 1.0 - 0.12 * k + 0.01 * k ** 2 + 0.11, K, THETA)
    label, _, fits = select_form(inputs)
    assert label == "polynomial2"
    label, law, fits = select_form(inputs, k_max=12)
    assert label != "polynomial2"
    assert isinstance(fits["polynomial2"], InvalidArgumentError)
    assert np.all(np.diff(law(np.arange(1, 13))) <= 0)


def test_infer_params_and_model_agree():
    inputs = exact(lambda k: 0.9 * 0.8 ** (k - 1), K, THETA)
    law = fit_scaling(inputs, "exponential")
    p = infer_params(law, 15, inputs, 0.3)
    c = 0.9 * 0.8 ** 14 * (0.3 / 0.6) ** 0.3
    assert p.mu0 == pytest.approx(100 * c, rel=1e-12) and p.factor == pytest.approx(c, rel=1e-12)
    base = GevModel(0.3, ParamModel.linear(100.0, 2.0), ParamModel.exponential(np.log(30.0), 0.01))
    m = infer_model(law, 15, base, 0.3, 0.6)
    assert m.location(3.0) == pytest.approx(c * base.location(3.0))
    assert m.scale(3.0) == pytest.approx(c * base.scale(3.0))
    assert m.shape == 0.3 and m.shape_fixed
    with pytest.raises(WindowError):
        infer_params(law, 0, inputs, 0.3)
    with pytest.warns(UserWarning):
        infer_params(law, 30, inputs, 0.3, k_cap=20)


def test_extrapolate_theta():
    th = {1: 0.6, 2: 0.5, 3: 0.4}
    assert extrapolate_theta(th, 2) == 0.5
    assert extrapolate_theta(th, 10) == 0.4
    assert extrapolate_theta(th, 4, "linear") == pytest.approx(0.3)
    assert extrapolate_theta(th, 100, "linear") == 1e-3
    with pytest.raises(InvalidArgumentError):
        extrapolate_theta({}, 2)


def test_fitting_horizon_stops_at_first_failure():
    good = {"converged": True, "ks_p": 0.5, "ad_p": 0.5, "xi_free": 0.3}
    cands = {1: good, 2: good, 3: dict(good, xi_free=0.9), 4: good}
    d = fitting_horizon(cands, xi1_ci=(0.1, 0.5))
    assert d.k_f == 2
    assert "free shape 0.9" in d.reasons[3][0]
    assert fitting_horizon({1: good, 2: dict(good, ad_p=0.01)}).k_f == 1
