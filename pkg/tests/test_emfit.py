import numpy as np
import pytest

from mapworks.emfit import auto_fit, fit_mixture
from mapworks.mixtures import beta_mixture, gamma_mixture, normal_mixture


def test_loglik_trace_monotone_every_family():
    rng = np.random.default_rng(31)
    samples = {
        "beta": beta_mixture([(0.5, 3.0, 9.0), (0.5, 14.0, 4.0)]).rvs(3_000, rng=rng),
        "normal": normal_mixture([(0.6, -1.0, 0.6), (0.4, 2.0, 1.0)]).rvs(3_000, rng=rng),
        "gamma": gamma_mixture([(0.7, 4.0, 2.0), (0.3, 20.0, 2.5)]).rvs(3_000, rng=rng),
    }
    for family, x in samples.items():
        for k in (1, 2, 3):
            fit = fit_mixture(x, k, family, seed=5)
            trace = np.asarray(fit.trace)
            assert trace.size >= 1
            assert np.all(np.diff(trace) >= -1e-7), (family, k)


def test_single_beta_recovery():
    rng = np.random.default_rng(32)
    x = rng.beta(4.0, 8.0, size=10_000)
    fit = fit_mixture(x, 1, "beta", seed=1)
    assert fit.converged
    assert abs(fit.mixture.a[0] - 4.0) / 4.0 < 0.10
    assert abs(fit.mixture.b[0] - 8.0) / 8.0 < 0.10


def test_two_component_normal_recovery():
    rng = np.random.default_rng(33)
    x = np.concatenate([rng.normal(-2.0, 0.5, 6_000), rng.normal(1.5, 0.8, 4_000)])
    fit = fit_mixture(x, 2, "normal", seed=2)
    order = np.argsort(fit.mixture.a)
    means = fit.mixture.a[order]
    sds = fit.mixture.b[order]
    ws = fit.mixture.w[order]
    assert abs(means[0] - (-2.0)) < 0.05
    assert abs(means[1] - 1.5) < 0.08
    assert abs(sds[0] - 0.5) < 0.05
    assert abs(sds[1] - 0.8) < 0.08
    assert abs(ws[0] - 0.6) < 0.03


def test_single_gamma_recovery():
    rng = np.random.default_rng(34)
    x = rng.gamma(6.0, 1.0 / 2.5, size=10_000)
    fit = fit_mixture(x, 1, "gamma", seed=3)
    assert abs(fit.mixture.a[0] - 6.0) / 6.0 < 0.10
    assert abs(fit.mixture.b[0] - 2.5) / 2.5 < 0.10


def test_fit_reproducible_for_seed():
    rng = np.random.default_rng(35)
    x = rng.beta(3.0, 5.0, size=2_000)
    one = fit_mixture(x, 2, "beta", seed=11)
    two = fit_mixture(x, 2, "beta", seed=11)
    assert np.array_equal(one.mixture.w, two.mixture.w)
    assert np.array_equal(one.mixture.a, two.mixture.a)
    assert one.loglik == two.loglik


def test_overfit_request_collapses_or_degenerates_gracefully():
    rng = np.random.default_rng(36)
    x = rng.beta(10.0, 10.0, size=4_000)
    fit = fit_mixture(x, 4, "beta", seed=4)
    mix = fit.mixture
    assert abs(mix.w.sum() - 1.0) < 1e-12
    assert np.isfinite(fit.loglik)
    # the fitted density should still track a single hump
    grid = np.linspace(0.01, 0.99, 99)
    ref = beta_mixture([(1.0, 10.0, 10.0)])
    assert np.max(np.abs(mix.cdf(grid) - ref.cdf(grid))) < 0.03


def test_auto_fit_prefers_single_component_for_simple_data():
    rng = np.random.default_rng(37)
    x = rng.beta(5.0, 9.0, size=8_000)
    auto = auto_fit(x, "beta", k_max=4, seed=6)
    assert auto.best.requested_k <= 2
    ks = [f.requested_k for f in auto.candidates]
    assert ks == sorted(ks)
    assert all(auto.best.aic <= f.aic + 1e-9 for f in auto.candidates)


def test_auto_fit_finds_two_clusters():
    rng = np.random.default_rng(38)
    x = np.concatenate([rng.beta(4.0, 22.0, 5_000), rng.beta(30.0, 8.0, 5_000)])
    auto = auto_fit(x, "beta", k_max=4, seed=7)
    assert auto.best.requested_k >= 2
    # Kolmogorov distance against the generating mixture
    src = beta_mixture([(0.5, 4.0, 22.0), (0.5, 30.0, 8.0)])
    grid = np.linspace(0.005, 0.995, 199)
    assert np.max(np.abs(auto.best.mixture.cdf(grid) - src.cdf(grid))) < 0.02


def test_heavy_tail_contamination_is_tolerated():
    rng = np.random.default_rng(39)
    clean = rng.normal(0.0, 1.0, 4_700)
    junk = rng.standard_t(1.0, size=300) * 5.0
    fit = fit_mixture(np.concatenate([clean, junk]), 2, "normal", seed=8)
    # dominant component should stay near the clean bulk
    lead = int(np.argmax(fit.mixture.w))
    assert abs(fit.mixture.a[lead]) < 0.25
    assert 0.7 < fit.mixture.b[lead] < 1.6


def test_gamma_likelihood_tag_passthrough():
    rng = np.random.default_rng(40)
    x = rng.gamma(3.0, 1.0, size=1_000)
    fit = fit_mixture(x, 1, "gamma", seed=9, likelihood="exponential")
    assert fit.mixture.likelihood == "exponential"


def test_input_validation():
    rng = np.random.default_rng(41)
    x = rng.beta(2.0, 2.0, size=50)
    with pytest.raises(ValueError):
        fit_mixture(x, 0, "beta")
    with pytest.raises(ValueError):
        fit_mixture(x, 2, "cauchy")
    with pytest.raises(ValueError):
        fit_mixture(np.array([0.1, 0.5, -0.2]), 1, "beta")
    with pytest.raises(ValueError):
        fit_mixture(np.array([0.1, 0.5, 1.7]), 1, "beta")
    with pytest.raises(ValueError):
        fit_mixture(np.array([1.0, -2.0, 3.0]), 1, "gamma")
    with pytest.raises(ValueError):
        fit_mixture(x[:1], 2, "beta")
    with pytest.raises(ValueError):
        auto_fit(x, "beta", k_max=0)


def test_fit_result_serialization():
    rng = np.random.default_rng(46)
    x = rng.beta(2.0, 6.0, size=500)
    fit = fit_mixture(x, 2, "beta", seed=10)
    d = fit.to_dict()
    assert set(d) >= {"mixture", "loglik", "aic", "n_iter", "converged"}
    auto = auto_fit(x, "beta", k_max=2, seed=10)
    ad = auto.to_dict()
    assert "best" in ad and "candidates" in ad
    assert len(ad["candidates"]) == 2
