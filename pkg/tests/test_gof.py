import numpy as np
import pytest
from scipy import stats

from succex.errors import DataError
from succex.gev import GevModel, ParamModel
from succex.gof import ad_pvalue, ad_test, gof_report, gumbel_cdf, ks_test, model_qq
from succex.series import BlockMaxSeries


def test_ks_matches_scipy():
    x = stats.norm.rvs(size=200, random_state=1)
    d, p = ks_test(x, stats.norm.cdf)
    ref = stats.kstest(x, "norm", method="asymp")
    assert d == pytest.approx(ref.statistic, rel=1e-12)
    assert p == pytest.approx(stats.kstwobign.sf(np.sqrt(200) * ref.statistic))


def test_ad_statistic_and_pvalue():
    x = stats.norm.rvs(size=150, random_state=2)
    a2, _ = ad_test(x, stats.norm.cdf)
    u = np.sort(stats.norm.cdf(x))
    i = np.arange(1, 151)
    assert a2 == pytest.approx(-150 - np.mean((2 * i - 1) * (np.log(u) + np.log(1 - u[::-1]))))
    # asymptotic 5% point of A^2 is about 2.492
    assert ad_pvalue(2.492) == pytest.approx(0.05, abs=2e-3)
    assert ad_pvalue(50.0) == 0.001 and ad_pvalue(0.01) == 0.999


def test_report_normalizes_nonstationary():
    t = np.linspace(0, 10, 300)
    model = GevModel(0.1, ParamModel.linear(5.0, 1.0), ParamModel.constant(1.0))
    g = stats.gumbel_r.rvs(size=300, random_state=3)
    z = model.location(t) + np.expm1(0.1 * g) / 0.1
    bm = BlockMaxSeries(t, z, 1)
    r = gof_report(bm, model)
    assert r.normalized and r.n == 300 and r.ks_p > 0.01
    with pytest.raises(DataError):
        gof_report(bm, model, normalize=False)
    q = model_qq(bm, model)
    assert q.shape == (300, 2)
    assert gumbel_cdf(0.0) == pytest.approx(np.exp(-1))
