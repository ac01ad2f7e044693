import numpy as np
import pytest
from scipy import integrate, stats

from mapworks.conjugate import (
    BinomialData,
    ExponentialData,
    NormalData,
    PoissonData,
    data_from_dict,
    data_to_dict,
    posterior_update,
    predictive,
)
from mapworks.mixtures import beta_mixture, gamma_mixture, normal_mixture


def _likelihood(data, theta, sigma=None):
    if isinstance(data, BinomialData):
        return stats.binom.pmf(data.r, data.n, theta)
    if isinstance(data, NormalData):
        return stats.norm.pdf(data.mean, theta, sigma / np.sqrt(data.n))
    if isinstance(data, PoissonData):
        return stats.poisson.pmf(data.count, theta * data.exposure)
    if isinstance(data, ExponentialData):
        return stats.gamma.pdf(data.total, data.events, scale=1.0 / theta)
    raise AssertionError(type(data))


def _bayes_by_quadrature(prior, data, grid, sigma=None):
    lik = np.array([float(_likelihood(data, t, sigma)) for t in grid])
    joint = prior.pdf(grid) * lik
    lo, hi = float(grid[0]), float(grid[-1])
    norm, _ = integrate.quad(
        lambda t: prior.pdf(t) * float(_likelihood(data, t, sigma)), lo, hi,
        limit=300, epsabs=1e-13, epsrel=1e-12)
    return joint / norm


def _check_posterior(prior, data, grid):
    post = posterior_update(prior, data)
    want = _bayes_by_quadrature(prior, data, grid, sigma=prior.sigma)
    got = post.pdf(grid)
    scale = max(1.0, float(np.max(want)))
    assert np.max(np.abs(got - want)) / scale < 1e-6


def test_beta_binomial_matches_quadrature():
    rng = np.random.default_rng(42)
    grid = np.linspace(1e-4, 1.0 - 1e-4, 300)
    for _ in range(5):
        k = rng.integers(1, 4)
        comps = [(rng.uniform(0.2, 1.0), rng.uniform(0.5, 20.0), rng.uniform(0.5, 20.0))
                 for _ in range(k)]
        prior = beta_mixture(comps)
        n = int(rng.integers(1, 40))
        data = BinomialData(r=int(rng.integers(0, n + 1)), n=n)
        _check_posterior(prior, data, grid)


def test_normal_matches_quadrature():
    rng = np.random.default_rng(43)
    grid = np.linspace(-8.0, 8.0, 300)
    for _ in range(5):
        k = rng.integers(1, 4)
        comps = [(rng.uniform(0.2, 1.0), rng.uniform(-2.0, 2.0), rng.uniform(0.3, 2.0))
                 for _ in range(k)]
        prior = normal_mixture(comps, sigma=rng.uniform(0.5, 2.0))
        data = NormalData(mean=rng.uniform(-2.0, 2.0), n=float(rng.integers(1, 30)))
        _check_posterior(prior, data, grid)


def test_poisson_matches_quadrature():
    rng = np.random.default_rng(44)
    grid = np.linspace(1e-3, 25.0, 400)
    for _ in range(5):
        k = rng.integers(1, 4)
        comps = [(rng.uniform(0.2, 1.0), rng.uniform(1.0, 15.0), rng.uniform(0.5, 4.0))
                 for _ in range(k)]
        prior = gamma_mixture(comps, likelihood="poisson")
        data = PoissonData(count=int(rng.integers(0, 30)),
                           exposure=rng.uniform(0.5, 10.0))
        _check_posterior(prior, data, grid)


def test_exponential_matches_quadrature():
    rng = np.random.default_rng(45)
    grid = np.linspace(1e-3, 20.0, 400)
    for _ in range(5):
        comps = [(1.0, rng.uniform(1.0, 10.0), rng.uniform(0.5, 4.0))]
        prior = gamma_mixture(comps, likelihood="exponential")
        data = ExponentialData(events=int(rng.integers(1, 20)),
                               total=rng.uniform(0.5, 15.0))
        _check_posterior(prior, data, grid)


def test_update_parameters_beta():
    post = posterior_update(beta_mixture([(1.0, 1.0, 1.0)]), BinomialData(r=8, n=10))
    assert np.allclose([post.a[0], post.b[0]], [9.0, 3.0])


def test_update_parameters_exponential():
    prior = gamma_mixture([(1.0, 2.0, 3.0)], likelihood="exponential")
    post = posterior_update(prior, ExponentialData(events=5, total=7.5))
    assert np.allclose([post.a[0], post.b[0]], [7.0, 10.5])


def test_update_order_invariance():
    prior = beta_mixture([(0.6, 4.0, 8.0), (0.4, 1.0, 1.0)])
    d1 = BinomialData(r=3, n=12)
    d2 = BinomialData(r=9, n=20)
    p12 = posterior_update(posterior_update(prior, d1), d2)
    p21 = posterior_update(posterior_update(prior, d2), d1)
    pooled = posterior_update(prior, BinomialData(r=12, n=32))
    for other in (p21, pooled):
        assert np.allclose(p12.w, other.w, atol=1e-12)
        assert np.allclose(p12.a, other.a)
        assert np.allclose(p12.b, other.b)


def test_family_data_mismatch():
    with pytest.raises(ValueError):
        posterior_update(beta_mixture([(1.0, 1.0, 1.0)]), PoissonData(count=1, exposure=1.0))
    with pytest.raises(ValueError):
        posterior_update(gamma_mixture([(1.0, 1.0, 1.0)]), BinomialData(r=1, n=2))


def test_data_validation():
    with pytest.raises(ValueError):
        BinomialData(r=5, n=4)
    with pytest.raises(ValueError):
        BinomialData(r=-1, n=4)
    with pytest.raises(ValueError):
        NormalData(mean=0.0, n=0.0)
    with pytest.raises(ValueError):
        NormalData(mean=np.inf, n=5.0)
    with pytest.raises(ValueError):
        PoissonData(count=-2, exposure=1.0)
    with pytest.raises(ValueError):
        PoissonData(count=2, exposure=0.0)
    with pytest.raises(ValueError):
        ExponentialData(events=0, total=1.0)


def test_normal_data_from_se():
    d = NormalData.from_se(mean=1.5, se=0.25, sigma=1.0)
    assert d.n == pytest.approx(16.0)
    assert d.mean == 1.5


def test_data_dict_round_trip():
    for data in (BinomialData(r=3, n=9),
                 NormalData(mean=0.4, n=12.0),
                 PoissonData(count=7, exposure=3.5),
                 ExponentialData(events=4, total=9.0)):
        back = data_from_dict(data_to_dict(data))
        assert back == data
    with pytest.raises(ValueError):
        data_from_dict({"kind": "binomial", "r": 1})
    with pytest.raises(ValueError):
        data_from_dict({"kind": "unknown"})


# -- predictive ---------------------------------------------------------------

def test_beta_binomial_predictive_forward_simulation():
    rng = np.random.default_rng(7)
    prior = beta_mixture([(0.6, 4.0, 8.0), (0.4, 12.0, 3.0)])
    pred = predictive(prior, 15)
    theta = prior.rvs(200_000, rng=rng)
    y = rng.binomial(15, theta)
    grid = np.arange(16)
    pmf = pred.pmf(grid)
    assert abs(pmf.sum() - 1.0) < 1e-12
    emp = np.bincount(y, minlength=16) / y.size
    se = np.sqrt(pmf * (1 - pmf) / y.size)
    assert np.all(np.abs(emp - pmf) < 4.0 * se + 1e-4)
    assert abs(pred.mean() - 15.0 * prior.mean()) < 1e-10


def test_poisson_predictive_forward_simulation():
    rng = np.random.default_rng(8)
    prior = gamma_mixture([(0.7, 6.0, 2.0), (0.3, 2.0, 0.8)], likelihood="poisson")
    pred = predictive(prior, 3.0)
    theta = prior.rvs(200_000, rng=rng)
    y = rng.poisson(3.0 * theta)
    grid = pred.grid(1e-9)
    pmf = pred.pmf(grid)
    assert abs(pmf.sum() - 1.0) < 1e-6
    top = int(grid[-1])
    emp = np.bincount(np.clip(y, 0, top), minlength=top + 1)[: top + 1] / y.size
    se = np.sqrt(pmf * (1 - pmf) / y.size)
    assert np.all(np.abs(emp - pmf[: top + 1]) < 4.0 * se + 1e-4)


def test_normal_predictive_matches_closed_form():
    prior = normal_mixture([(1.0, 1.0, 0.5)], sigma=2.0)
    pred = predictive(prior, 4.0)
    # y-bar ~ Normal(1, sqrt(0.25 + 4/4)) for a single component
    assert abs(pred.mean() - 1.0) < 1e-12
    mix = pred.as_mixture()
    assert mix.family == "normal"
    assert abs(mix.b[0] - np.sqrt(0.5**2 + 2.0**2 / 4.0)) < 1e-12
    rng = np.random.default_rng(9)
    theta = prior.rvs(100_000, rng=rng)
    ybar = rng.normal(theta, 2.0 / np.sqrt(4.0))
    for q in (0.1, 0.5, 0.9):
        assert abs(np.quantile(ybar, q) - mix.ppf(q)) < 0.02


def test_normal_predictive_requires_sigma():
    prior = normal_mixture([(1.0, 0.0, 1.0)])
    with pytest.raises(ValueError):
        predictive(prior, 5.0)


def test_exponential_predictive_unsupported():
    prior = gamma_mixture([(1.0, 2.0, 2.0)], likelihood="exponential")
    with pytest.raises(ValueError):
        predictive(prior, 5.0)


def test_predictive_cdf_monotone():
    prior = beta_mixture([(1.0, 2.0, 5.0)])
    pred = predictive(prior, 20)
    grid = np.arange(21)
    cdf = pred.cdf(grid)
    assert np.all(np.diff(cdf) >= 0)
    assert abs(cdf[-1] - 1.0) < 1e-12
