"""Effective sample size (ESS) of a mixture prior.

Three estimators:

* "elir": expected local-information ratio, the prior-expected ratio of
  the prior's observed information to the unit Fisher information of
  one sampling observation.  Fully predictively consistent (the ESS of
  the conjugate posterior after m observations averages to ESS + m).
* "moment": moment matching to the conjugate family, e.g. a beta with
  the mixture's mean and variance has a + b = mean(1-mean)/var - 1.
* "morita": curvature matching at the prior mode against a variance
  inflated (ESS ~ 1) version of the prior updated with pseudo-data.
"""
from __future__ import annotations

import numpy as np
from scipy import optimize, special, stats

from .errors import NumericalError
from .mixtures import Mixture, require_sigma
from .quadrature import tanh_sinh_piecewise

_METHODS = ("elir", "moment", "morita")


def _dlog_d2log(mix: Mixture, theta: np.ndarray):
    """Per-component first/second derivatives of the component log-density."""
    t = theta[..., None]
    if mix.family == "beta":
        d1 = (mix.a - 1.0) / t - (mix.b - 1.0) / (1.0 - t)
        d2 = -(mix.a - 1.0) / t**2 - (mix.b - 1.0) / (1.0 - t) ** 2
    elif mix.family == "normal":
        d1 = -(t - mix.a) / mix.b**2
        d2 = -1.0 / mix.b**2 + 0.0 * t
    else:
        d1 = (mix.a - 1.0) / t - mix.b
        d2 = -(mix.a - 1.0) / t**2 + 0.0 * t
    return d1, d2


def prior_information(mix: Mixture, theta):
    """Observed information -(log p)''(theta) of the mixture density.

    Mixture identity: with responsibilities r_k(theta),
    -(log p)'' = (sum_k r_k dlog_k)^2 - sum_k r_k (dlog_k^2 + d2log_k),
    where dlog_k and d2log_k differentiate the component log-densities.
    """
    theta_arr = np.atleast_1d(np.asarray(theta, dtype=float))
    d1, d2 = _dlog_d2log(mix, theta_arr)
    logp = np.log(mix.w) + _comp_logpdf(mix, theta_arr)
    m = logp.max(axis=-1, keepdims=True)
    r = np.exp(logp - m)
    r /= r.sum(axis=-1, keepdims=True)
    grad = (r * d1).sum(axis=-1)
    curv = (r * (d2 + d1**2)).sum(axis=-1)
    info = grad**2 - curv
    return info if np.ndim(theta) else float(info[0])


def _comp_logpdf(mix: Mixture, theta: np.ndarray) -> np.ndarray:
    t = theta[..., None]
    if mix.family == "beta":
        return stats.beta.logpdf(t, mix.a, mix.b)
    if mix.family == "normal":
        return stats.norm.logpdf(t, mix.a, mix.b)
    return stats.gamma.logpdf(t, mix.a, scale=1.0 / mix.b)


def unit_information(mix: Mixture, theta, sigma: float | None = None):
    """Fisher information of a single sampling observation at theta."""
    t = np.asarray(theta, dtype=float)
    if mix.family == "beta":
        return 1.0 / (t * (1.0 - t))
    if mix.family == "normal":
        sig = require_sigma(mix, sigma)
        return np.full_like(t, 1.0 / sig**2)
    if mix.likelihood == "poisson":
        return 1.0 / t
    return 1.0 / t**2


def ess(mix: Mixture, method: str = "elir", sigma: float | None = None,
        on_divergence: str = "error") -> float:
    """Effective sample size of a mixture prior.

    on_divergence applies to "elir" when the integral diverges (a beta
    or poisson-gamma component with shape < 1 at a support boundary):
    "error" raises ValueError, "inf" returns -inf, the sign the integral
    runs off to.
    """
    if method not in _METHODS:
        raise ValueError(f"unknown ess method: {method!r}; expected one of {_METHODS}")
    if on_divergence not in ("error", "inf"):
        raise ValueError("on_divergence must be 'error' or 'inf'")
    if method == "moment":
        return _ess_moment(mix, sigma)
    if method == "elir":
        return _ess_elir(mix, sigma, on_divergence)
    return _ess_morita(mix, sigma)


def _ess_moment(mix: Mixture, sigma: float | None) -> float:
    m, v = mix.mean(), mix.var()
    if mix.family == "beta":
        return m * (1.0 - m) / v - 1.0
    if mix.family == "normal":
        return require_sigma(mix, sigma) ** 2 / v
    if mix.likelihood == "poisson":
        return m / v
    return m * m / v


def _elir_divergent(mix: Mixture) -> bool:
    # The boundary term carries a factor (shape - 1); it integrates iff
    # shape >= 1.  Normal and exponential-gamma cases never diverge.
    if mix.family == "beta":
        return bool(np.any(mix.a < 1.0) or np.any(mix.b < 1.0))
    if mix.family == "gamma" and mix.likelihood == "poisson":
        return bool(np.any(mix.a < 1.0))
    return False


def _ess_elir(mix: Mixture, sigma: float | None, on_divergence: str) -> float:
    if mix.family == "normal":
        require_sigma(mix, sigma)
    if _elir_divergent(mix):
        if on_divergence == "error":
            # property of the prior, not a convergence failure
            raise ValueError(
                "ELIR integral diverges: a component shape parameter below 1 puts "
                "unbounded negative curvature at a support boundary"
            )
        return float("-inf")
    if mix.family == "beta":
        lo, hi = 1e-8, 1.0 - 1e-8
    else:
        lo = float(mix.ppf(1e-12))
        hi = float(mix.ppf(1.0 - 1e-12))
        if mix.family == "gamma":
            lo = max(lo, 1e-300)

    def integrand(t):
        return prior_information(mix, t) / unit_information(mix, t, sigma) * mix.pdf(t)

    mid = [float(q) for q in np.atleast_1d(mix.ppf(np.array([0.05, 0.5, 0.95])))]
    return tanh_sinh_piecewise(integrand, lo, hi, mid, abs_tol=1e-9)


# -- Morita-style curvature matching ----------------------------------------

def _prior_mode(mix: Mixture) -> float:
    lo, hi = mix.support()
    if mix.family == "beta":
        glo, ghi = 1e-9, 1.0 - 1e-9
    elif mix.family == "normal":
        glo, ghi = float(mix.ppf(1e-9)), float(mix.ppf(1.0 - 1e-9))
    else:
        glo, ghi = max(float(mix.ppf(1e-12)), 1e-12), float(mix.ppf(1.0 - 1e-9))
    grid = np.linspace(glo, ghi, 4001)
    dens = mix.pdf(grid)
    i0 = int(np.argmax(dens))
    a = grid[max(i0 - 1, 0)]
    b = grid[min(i0 + 1, grid.size - 1)]
    res = optimize.minimize_scalar(lambda t: -mix.pdf(t), bounds=(a, b), method="bounded")
    return float(res.x)


def _inflate(mix: Mixture, c: float) -> Mixture:
    """Divide each component's information by c, keeping component means."""
    if mix.family == "normal":
        return Mixture("normal", mix.w, mix.a, mix.b * np.sqrt(c), sigma=mix.sigma)
    return Mixture(mix.family, mix.w, mix.a / c, mix.b / c, likelihood=mix.likelihood)


def _vague_version(mix: Mixture, sigma: float | None) -> Mixture:
    """Rescale the prior so its moment ESS is 1 (component means kept)."""
    def f(log_c):
        return _ess_moment(_inflate(mix, np.exp(log_c)), sigma) - 1.0

    lo, hi = -20.0, 20.0
    if f(lo) * f(hi) > 0:
        raise NumericalError("could not bracket the vague rescaling factor")
    log_c = optimize.brentq(f, lo, hi, xtol=1e-12)
    return _inflate(mix, float(np.exp(log_c)))


def _pseudo_update(mix: Mixture, theta0: float, m: float, sigma: float | None) -> Mixture:
    """Conjugate update with m pseudo-observations centered at theta0.

    Fractional counts are fine here: the conjugate algebra extends to
    real-valued sufficient statistics.
    """
    if m <= 0:
        return mix
    if mix.family == "beta":
        r = m * theta0
        a, b = mix.a + r, mix.b + (m - r)
        log_ml = special.betaln(a, b) - special.betaln(mix.a, mix.b)
        return Mixture("beta", _soft(mix.w, log_ml), a, b)
    if mix.family == "normal":
        sig = require_sigma(mix, sigma)
        se2 = sig**2 / m
        prec = 1.0 / mix.b**2 + 1.0 / se2
        mean = (mix.a / mix.b**2 + theta0 / se2) / prec
        log_ml = stats.norm.logpdf(theta0, mix.a, np.sqrt(mix.b**2 + se2))
        return Mixture("normal", _soft(mix.w, log_ml), mean, 1.0 / np.sqrt(prec), sigma=mix.sigma)
    if mix.likelihood == "poisson":
        s = m * theta0
        a, b = mix.a + s, mix.b + m
        log_ml = (special.gammaln(a) - special.gammaln(mix.a)
                  + mix.a * np.log(mix.b) - a * np.log(b))
        return Mixture("gamma", _soft(mix.w, log_ml), a, b, likelihood="poisson")
    total = m / theta0
    a, b = mix.a + m, mix.b + total
    log_ml = (special.gammaln(a) - special.gammaln(mix.a)
              + mix.a * np.log(mix.b) - a * np.log(b))
    return Mixture("gamma", _soft(mix.w, log_ml), a, b, likelihood="exponential")


def _soft(w: np.ndarray, log_ml: np.ndarray) -> np.ndarray:
    logw = np.log(w) + log_ml
    logw -= logw.max()
    return np.exp(logw)


def _ess_morita(mix: Mixture, sigma: float | None) -> float:
    """Curvature match: find m so that the vague prior updated with m
    pseudo-observations at the prior mode has the prior's information.

    Discrete-data families search an integer grid; the normal family
    refines continuously (golden section) since its data are continuous.
    """
    theta0 = _prior_mode(mix)
    target = prior_information(mix, theta0)
    vague = _vague_version(mix, sigma)

    def gap(m):
        return abs(prior_information(_pseudo_update(vague, theta0, m, sigma), theta0) - target)

    rough = max(_ess_moment(mix, sigma), 1.0)
    upper = max(10.0 * rough + 10.0, 100.0)
    if mix.family == "normal":
        res = optimize.minimize_scalar(gap, bounds=(0.0, upper), method="bounded",
                                       options={"xatol": 1e-8})
        return float(res.x)
    grid = np.arange(0, int(np.ceil(upper)) + 1)
    vals = np.array([gap(float(m)) for m in grid])
    return float(grid[int(np.argmin(vals))])
