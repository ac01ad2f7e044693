import numpy as np
import pytest

from mapworks.diffdist import check_link, diff_cdf, diff_pdf, diff_ppf, diff_rvs
from mapworks.errors import NumericalError
from mapworks.mixtures import beta_mixture, gamma_mixture, normal_mixture

BETA_A = beta_mixture([(0.6, 8.0, 16.0), (0.4, 2.0, 2.0)])
BETA_B = beta_mixture([(1.0, 12.0, 30.0)])
NORM_A = normal_mixture([(0.7, 0.3, 0.6), (0.3, -1.0, 1.1)])
NORM_B = normal_mixture([(1.0, -0.2, 0.8)])
GAMMA_A = gamma_mixture([(1.0, 9.0, 2.0)])
GAMMA_B = gamma_mixture([(0.5, 4.0, 1.5), (0.5, 14.0, 3.0)])


def _mc_cdf(mix1, mix2, delta, link, n=1_000_000, seed=0):
    from mapworks.diffdist import link_apply

    rng = np.random.default_rng(seed)
    x1 = link_apply(link, mix1.rvs(n, rng=rng))
    x2 = link_apply(link, mix2.rvs(n, rng=rng))
    p = np.mean(x1 - x2 <= delta)
    se = np.sqrt(max(p * (1 - p), 1e-12) / n)
    return p, se


@pytest.mark.parametrize("mix1,mix2,link,deltas", [
    (BETA_A, BETA_B, "identity", [-0.3, -0.05, 0.0, 0.1, 0.4]),
    (BETA_A, BETA_B, "logit", [-1.0, 0.0, 0.8]),
    (BETA_A, BETA_B, "log", [-0.7, 0.0, 0.5]),
    (GAMMA_A, GAMMA_B, "identity", [-2.0, 0.0, 1.5]),
    (GAMMA_A, GAMMA_B, "log", [-0.4, 0.0, 0.6]),
    (NORM_A, NORM_B, "identity", [-1.5, 0.0, 0.9]),
])
def test_diff_cdf_matches_paired_monte_carlo(mix1, mix2, link, deltas):
    for i, d in enumerate(deltas):
        p, se = _mc_cdf(mix1, mix2, d, link, seed=100 + i)
        got = diff_cdf(mix1, mix2, d, link=link)
        assert abs(got - p) < 3.0 * se + 1e-5


def test_normal_identity_closed_form_quality():
    # pairwise normal differences stay exact to floating precision
    from scipy import stats

    one = normal_mixture([(1.0, 0.5, 0.7)])
    other = normal_mixture([(1.0, -0.25, 0.4)])
    for d in (-1.0, 0.0, 0.3, 2.0):
        want = stats.norm.cdf(d, loc=0.75, scale=np.hypot(0.7, 0.4))
        assert abs(diff_cdf(one, other, d) - want) < 1e-14


def test_diff_cdf_limits():
    assert diff_cdf(BETA_A, BETA_B, -1.0) == pytest.approx(0.0, abs=1e-9)
    assert diff_cdf(BETA_A, BETA_B, 1.0) == pytest.approx(1.0, abs=1e-9)
    vals = [diff_cdf(BETA_A, BETA_B, d) for d in np.linspace(-0.9, 0.9, 15)]
    assert np.all(np.diff(vals) >= -1e-12)


def test_diff_pdf_integrates_to_cdf_increment():
    from scipy import integrate

    lo, hi = -0.2, 0.25
    mass, _ = integrate.quad(lambda d: diff_pdf(BETA_A, BETA_B, d), lo, hi, limit=100)
    want = diff_cdf(BETA_A, BETA_B, hi) - diff_cdf(BETA_A, BETA_B, lo)
    assert abs(mass - want) < 1e-7


def test_diff_ppf_inverts_cdf():
    for q in (0.025, 0.2, 0.5, 0.8, 0.975):
        d = diff_ppf(BETA_A, BETA_B, q)
        assert abs(diff_cdf(BETA_A, BETA_B, d) - q) < 1e-8
    d = diff_ppf(NORM_A, NORM_B, 0.9)
    assert abs(diff_cdf(NORM_A, NORM_B, d) - 0.9) < 1e-8


def test_diff_rvs_pairs_draws():
    rng = np.random.default_rng(21)
    draws = diff_rvs(BETA_A, BETA_B, 40_000, link="identity", rng=rng)
    assert draws.shape == (40_000,)
    assert ((draws > -1.0) & (draws < 1.0)).all()
    p_emp = np.mean(draws <= 0.05)
    p = diff_cdf(BETA_A, BETA_B, 0.05)
    assert abs(p_emp - p) < 4.0 * np.sqrt(p * (1 - p) / 40_000)


def test_link_validation():
    check_link(BETA_A, "logit")
    with pytest.raises(ValueError):
        check_link(NORM_A, "logit")
    with pytest.raises(ValueError):
        check_link(NORM_A, "log")
    with pytest.raises(ValueError):
        check_link(GAMMA_A, "logit")
    with pytest.raises(ValueError):
        check_link(BETA_A, "probit")
    with pytest.raises(ValueError):
        diff_cdf(GAMMA_A, GAMMA_B, 0.0, link="logit")


def test_mixed_families_rejected():
    with pytest.raises(ValueError):
        diff_cdf(BETA_A, GAMMA_B, 0.0)
