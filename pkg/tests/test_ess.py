import numpy as np
import pytest

from mapworks.conjugate import BinomialData, posterior_update, predictive
from mapworks.ess import ess, prior_information, unit_information
from mapworks.mixtures import beta_mixture, gamma_mixture, normal_mixture

BETA_11_32 = beta_mixture([(1.0, 11.0, 32.0)])


def test_beta_moment_closed_form():
    # for a pure Beta(a, b): m(1-m)/v - 1 equals a + b
    assert ess(BETA_11_32, method="moment") == pytest.approx(43.0, abs=1e-9)


def test_beta_elir_closed_form():
    assert ess(BETA_11_32, method="elir") == pytest.approx(43.0, abs=0.05)


def test_normal_both_methods():
    prior = normal_mixture([(1.0, 0.3, 0.5)], sigma=2.0)
    want = 2.0**2 / 0.5**2
    assert ess(prior, method="moment") == pytest.approx(want, abs=1e-6)
    assert ess(prior, method="elir") == pytest.approx(want, abs=1e-6)


def test_normal_sigma_argument_overrides():
    prior = normal_mixture([(1.0, 0.3, 0.5)])
    assert ess(prior, method="moment", sigma=1.0) == pytest.approx(4.0, abs=1e-6)
    with pytest.raises(ValueError):
        ess(prior, method="moment")


def test_gamma_poisson_closed_forms():
    prior = gamma_mixture([(1.0, 14.0, 3.5)], likelihood="poisson")
    # unit Fisher information 1/theta gives ESS = rate parameter
    assert ess(prior, method="moment") == pytest.approx(3.5, abs=1e-9)
    assert ess(prior, method="elir") == pytest.approx(3.5, abs=0.01)


def test_gamma_exponential_closed_forms():
    prior = gamma_mixture([(1.0, 14.0, 3.5)], likelihood="exponential")
    # moment matching on mean/var recovers the shape parameter
    assert ess(prior, method="moment") == pytest.approx(14.0, abs=1e-9)
    # elir: prior info (a-1)/theta^2 over unit info 1/theta^2 is a - 1,
    # which stays consistent under updates (a gains one per event)
    assert ess(prior, method="elir") == pytest.approx(13.0, abs=0.05)


def test_mixture_moment_uses_overall_moments():
    mix = beta_mixture([(0.5, 10.0, 20.0), (0.5, 20.0, 10.0)])
    m, v = mix.mean(), mix.var()
    assert ess(mix, method="moment") == pytest.approx(m * (1 - m) / v - 1.0, abs=1e-9)


def test_prior_information_matches_finite_differences():
    rng = np.random.default_rng(51)
    mixes = [
        beta_mixture([(0.6, 8.0, 16.0), (0.4, 2.0, 5.0)]),
        normal_mixture([(0.5, -0.4, 0.8), (0.5, 1.0, 0.5)], sigma=1.0),
        gamma_mixture([(0.7, 6.0, 2.0), (0.3, 11.0, 4.0)]),
    ]
    grids = [rng.uniform(0.08, 0.85, 12), rng.uniform(-1.2, 1.8, 12),
             rng.uniform(0.8, 6.0, 12)]
    for mix, grid in zip(mixes, grids):
        h = 1e-5
        for x in grid:
            want = -(mix.log_pdf(x + h) - 2.0 * mix.log_pdf(x)
                     + mix.log_pdf(x - h)) / h**2
            got = prior_information(mix, x)
            assert abs(got - want) < 1e-4 * max(1.0, abs(want))


def test_prior_information_single_beta_identity():
    # i(p) for Beta(a,b) is (a-1)/x^2 + (b-1)/(1-x)^2
    mix = beta_mixture([(1.0, 5.0, 9.0)])
    for x in (0.2, 0.5, 0.7):
        want = 4.0 / x**2 + 8.0 / (1.0 - x) ** 2
        assert prior_information(mix, x) == pytest.approx(want, rel=1e-10)


def test_unit_information_forms():
    assert unit_information(beta_mixture([(1.0, 2.0, 2.0)]), 0.25) == pytest.approx(
        1.0 / (0.25 * 0.75))
    assert unit_information(normal_mixture([(1.0, 0.0, 1.0)], sigma=2.0), 0.7) \
        == pytest.approx(0.25)
    assert unit_information(gamma_mixture([(1.0, 2.0, 2.0)]), 4.0) == pytest.approx(0.25)
    assert unit_information(
        gamma_mixture([(1.0, 2.0, 2.0)], likelihood="exponential"), 4.0) \
        == pytest.approx(1.0 / 16.0)


def test_elir_divergence_flagged():
    spiky = beta_mixture([(1.0, 0.5, 3.0)])
    with pytest.raises(ValueError):
        ess(spiky, method="elir")
    # the integrand carries a factor (shape - 1) < 0, so the divergence
    # is toward minus infinity
    assert ess(spiky, method="elir", on_divergence="inf") == -np.inf
    ok = beta_mixture([(1.0, 1.0, 1.0)])
    assert np.isfinite(ess(ok, method="elir"))


def test_gamma_poisson_divergence_flagged():
    spiky = gamma_mixture([(1.0, 0.5, 2.0)], likelihood="poisson")
    with pytest.raises(ValueError):
        ess(spiky, method="elir")
    assert ess(spiky, method="elir", on_divergence="inf") == -np.inf


def test_morita_beta():
    val = ess(BETA_11_32, method="morita")
    assert 40.0 <= val <= 46.0
    val = ess(beta_mixture([(1.0, 4.0, 4.0)]), method="morita")
    assert 5.0 <= val <= 10.0


def test_morita_normal():
    # the inflated comparator is built to carry one observation worth of
    # information, so the search lands at sigma^2/s^2 - 1
    prior = normal_mixture([(1.0, 0.0, 0.5)], sigma=1.0)
    val = ess(prior, method="morita")
    assert val == pytest.approx(3.0, rel=0.05)


def test_unknown_method_rejected():
    with pytest.raises(ValueError):
        ess(BETA_11_32, method="guess")


def test_elir_predictive_consistency():
    # averaging the posterior ESS over the prior predictive of m new
    # observations should recover ess(prior) + m
    prior = beta_mixture([(0.7, 11.0, 32.0), (0.3, 3.0, 3.0)])
    base = ess(prior, method="elir")
    for m in (1, 5, 10):
        pred = predictive(prior, m)
        ys = np.arange(m + 1)
        weights = pred.pmf(ys)
        post_ess = [
            ess(posterior_update(prior, BinomialData(r=int(y), n=m)), method="elir")
            for y in ys
        ]
        avg = float(np.dot(weights, post_ess))
        assert abs(avg - (base + m)) / (base + m) < 0.02


def test_vague_prior_ess():
    assert ess(beta_mixture([(1.0, 1.0, 1.0)]), method="moment") == pytest.approx(2.0)
    # flat density carries zero curvature everywhere
    val = ess(beta_mixture([(1.0, 1.0, 1.0)]), method="elir")
    assert val == pytest.approx(0.0, abs=1e-9)
