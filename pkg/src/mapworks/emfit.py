"""Expectation-maximization fitting of parametric mixtures to samples.

fit_mixture() fits a fixed number of components; auto_fit() scans
component counts and picks the best AIC.  Initialization is a 1-D
k-means (k-means++ seeding); normal fits additionally run a Student-t
EM (fixed nu = 4) first so outliers do not capture components.

M-steps use exact weighted maximum likelihood: closed form for normal
components, digamma systems solved by damped Newton for beta and gamma.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import special, stats

from .errors import NumericalError
from .mixtures import Mixture

# Beta samples are clamped away from {0, 1} so log-moments stay finite.
_BETA_CLAMP = 1e-8
# Components collapse when their weight or spread degenerates.
_WEIGHT_FLOOR = 1e-8
_VAR_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class EmFit:
    """Result of one EM run."""

    mixture: Mixture
    loglik: float
    aic: float
    n_iter: int
    converged: bool
    trace: np.ndarray
    requested_k: int
    pruned: int

    def to_dict(self) -> dict:
        return {
            "mixture": self.mixture.to_dict(),
            "loglik": self.loglik,
            "aic": self.aic,
            "n_iter": self.n_iter,
            "converged": self.converged,
            "requested_k": self.requested_k,
            "pruned": self.pruned,
        }


@dataclass(frozen=True, eq=False)
class AutoFit:
    """Best-AIC fit over a range of component counts."""

    best: EmFit
    candidates: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "best": self.best.to_dict(),
            "candidates": [
                {"k": c.requested_k, "aic": c.aic, "loglik": c.loglik,
                 "converged": c.converged, "final_k": c.mixture.k}
                for c in self.candidates
            ],
        }


def n_parameters(k: int) -> int:
    """Free parameters of a k-component mixture: k-1 weights + 2k shape."""
    return 3 * k - 1


# -- initialization ---------------------------------------------------------


def _kmeans_1d(x: np.ndarray, k: int, rng: np.random.Generator,
               n_iter: int = 100) -> np.ndarray:
    """Cluster labels from 1-D k-means with k-means++ seeding."""
    centers = np.empty(k)
    centers[0] = x[rng.integers(x.size)]
    d2 = (x - centers[0]) ** 2
    for j in range(1, k):
        total = d2.sum()
        if total <= 0:
            centers[j:] = x[rng.integers(x.size, size=k - j)]
            break
        centers[j] = x[rng.choice(x.size, p=d2 / total)]
        d2 = np.minimum(d2, (x - centers[j]) ** 2)
    labels = np.zeros(x.size, dtype=int)
    for _ in range(n_iter):
        new_labels = np.argmin(np.abs(x[:, None] - centers[None, :]), axis=1)
        for j in range(k):
            sel = new_labels == j
            if sel.any():
                centers[j] = x[sel].mean()
            else:
                # Reseed an empty cluster at the farthest point.
                far = np.argmax(np.min(np.abs(x[:, None] - centers[None, :]), axis=1))
                centers[j] = x[far]
                new_labels[far] = j
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
    return labels


def _moment_beta(mean: float, var: float) -> tuple[float, float]:
    cap = mean * (1.0 - mean)
    var = min(var, 0.95 * cap) if var > 0 else 0.05 * cap
    t = max(cap / var - 1.0, 1e-3)
    return max(mean * t, 1e-3), max((1.0 - mean) * t, 1e-3)


def _initial_params(x: np.ndarray, labels: np.ndarray, k: int, family: str):
    w = np.empty(k)
    a = np.empty(k)
    b = np.empty(k)
    for j in range(k):
        xs = x[labels == j]
        w[j] = max(xs.size, 1) / x.size
        m = float(xs.mean()) if xs.size else float(x.mean())
        v = float(xs.var()) if xs.size > 1 else float(x.var()) / max(k, 1)
        v = max(v, _VAR_FLOOR)
        if family == "beta":
            a[j], b[j] = _moment_beta(m, v)
        elif family == "normal":
            a[j], b[j] = m, np.sqrt(v)
        else:
            m = max(m, 1e-8)
            a[j] = m * m / v
            b[j] = m / v
    return w / w.sum(), a, b


# -- weighted maximum-likelihood M-steps -------------------------------------


def _solve_beta_mle(s1: float, s2: float, a0: float, b0: float) -> tuple[float, float]:
    """Solve psi(a) - psi(a+b) = s1, psi(b) - psi(a+b) = s2.

    Newton iteration on (log a, log b) with step halving; the system is
    the stationarity condition of the weighted beta log-likelihood.
    """
    u = np.log([max(a0, 1e-6), max(b0, 1e-6)])

    def residual(uv):
        aa, bb = np.exp(uv)
        r = np.array([
            special.digamma(aa) - special.digamma(aa + bb) - s1,
            special.digamma(bb) - special.digamma(aa + bb) - s2,
        ])
        return aa, bb, r

    aa, bb, r = residual(u)
    for _ in range(500):
        if np.max(np.abs(r)) < 1e-11:
            return float(aa), float(bb)
        tri_a, tri_b = special.polygamma(1, aa), special.polygamma(1, bb)
        tri_ab = special.polygamma(1, aa + bb)
        jac = np.array([
            [aa * (tri_a - tri_ab), -bb * tri_ab],
            [-aa * tri_ab, bb * (tri_b - tri_ab)],
        ])
        try:
            step = np.linalg.solve(jac, -r)
        except np.linalg.LinAlgError as exc:
            raise NumericalError("beta M-step Jacobian is singular") from exc
        norm0 = np.linalg.norm(r)
        scale = 1.0
        for _ in range(60):
            trial = u + scale * np.clip(step, -4.0, 4.0)
            aa_t, bb_t, r_t = residual(trial)
            if np.all(np.isfinite(r_t)) and np.linalg.norm(r_t) < norm0:
                u, aa, bb, r = trial, aa_t, bb_t, r_t
                break
            scale *= 0.5
        else:
            raise NumericalError("beta M-step Newton failed to make progress")
    raise NumericalError("beta M-step Newton did not converge")


def _solve_gamma_shape(c: float, a0: float) -> float:
    """Solve psi(a) - log(a) = c for c < 0 (unique root, increasing LHS)."""
    if c >= 0:
        raise NumericalError("gamma M-step needs E[log x] < log E[x]")
    a = max(a0, 1e-8)
    lo, hi = 1e-12, 1e12
    for _ in range(200):
        g = special.digamma(a) - np.log(a) - c
        if abs(g) < 1e-12:
            return float(a)
        if g > 0:
            hi = min(hi, a)
        else:
            lo = max(lo, a)
        deriv = a * (special.polygamma(1, a) - 1.0 / a)
        step = -g / deriv  # Newton in log a
        new = a * np.exp(np.clip(step, -4.0, 4.0))
        if not (lo < new < hi):
            new = np.sqrt(lo * hi)
        a = new
    raise NumericalError("gamma M-step Newton did not converge")


def _m_step(x: np.ndarray, gamma: np.ndarray, family: str,
            a_prev: np.ndarray, b_prev: np.ndarray):
    nk = gamma.sum(axis=0)
    w = nk / x.size
    k = nk.size
    a = np.empty(k)
    b = np.empty(k)
    if family == "normal":
        mu = (gamma * x[:, None]).sum(axis=0) / nk
        var = (gamma * (x[:, None] - mu) ** 2).sum(axis=0) / nk
        return w, mu, np.sqrt(np.maximum(var, 0.0))
    if family == "beta":
        s1 = (gamma * np.log(x)[:, None]).sum(axis=0) / nk
        s2 = (gamma * np.log1p(-x)[:, None]).sum(axis=0) / nk
        for j in range(k):
            a[j], b[j] = _solve_beta_mle(s1[j], s2[j], a_prev[j], b_prev[j])
        return w, a, b
    mean = (gamma * x[:, None]).sum(axis=0) / nk
    logmean = (gamma * np.log(x)[:, None]).sum(axis=0) / nk
    for j in range(k):
        a[j] = _solve_gamma_shape(logmean[j] - np.log(mean[j]), a_prev[j])
        b[j] = a[j] / mean[j]
    return w, a, b


def _log_density(x: np.ndarray, family: str, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if family == "beta":
        return stats.beta.logpdf(x[:, None], a, b)
    if family == "normal":
        return stats.norm.logpdf(x[:, None], a, b)
    return stats.gamma.logpdf(x[:, None], a, scale=1.0 / b)


def _component_var(family: str, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if family == "beta":
        s = a + b
        return a * b / (s * s * (s + 1.0))
    if family == "normal":
        return b * b
    return a / (b * b)


def _student_t_prefit(x: np.ndarray, w, mu, sd, nu: float = 4.0,
                      max_iter: int = 300):
    """Student-t mixture EM used to seed normal fits (fixed nu).

    Scale estimates are moment-matched back to normal sds with the
    factor sqrt(nu / (nu - 2)).
    """
    w = w.copy()
    mu = mu.copy()
    scale = sd / np.sqrt(nu / (nu - 2.0))
    prev = -np.inf
    for _ in range(max_iter):
        logp = stats.t.logpdf(x[:, None], nu, loc=mu, scale=scale) + np.log(w)
        m = logp.max(axis=1, keepdims=True)
        lse = m[:, 0] + np.log(np.exp(logp - m).sum(axis=1))
        gamma = np.exp(logp - lse[:, None])
        ll = float(lse.sum())
        delta2 = ((x[:, None] - mu) / scale) ** 2
        u = (nu + 1.0) / (nu + delta2)
        gu = gamma * u
        nk = gamma.sum(axis=0)
        w = nk / x.size
        mu = (gu * x[:, None]).sum(axis=0) / gu.sum(axis=0)
        var = (gu * (x[:, None] - mu) ** 2).sum(axis=0) / nk
        scale = np.sqrt(np.maximum(var, _VAR_FLOOR))
        if abs(ll - prev) < 1e-8 * max(1.0, abs(ll)):
            break
        prev = ll
    return w, mu, scale * np.sqrt(nu / (nu - 2.0))


def _prepare_sample(sample, family: str) -> np.ndarray:
    x = np.asarray(sample, dtype=float).ravel()
    if x.size < 2:
        raise ValueError("EM fitting needs at least two sample values")
    if not np.all(np.isfinite(x)):
        raise ValueError("sample contains non-finite values")
    if family == "beta":
        if np.any(x < 0) or np.any(x > 1):
            raise ValueError("beta samples must lie in [0, 1]")
        x = np.clip(x, _BETA_CLAMP, 1.0 - _BETA_CLAMP)
    elif family == "gamma":
        if np.any(x <= 0):
            raise ValueError("gamma samples must be positive")
    return x


def fit_mixture(sample, k: int, family: str, *, seed=None,
                max_iter: int = 1000, likelihood: str | None = None) -> EmFit:
    """Fit a k-component mixture to a sample by EM.

    Components whose weight falls below 1e-8 or whose variance falls
    below 1e-12 are pruned and the fit continues with fewer components.
    Convergence: ten consecutive log-likelihood moves below 1e-6, or a
    single relative move below 1e-9.
    """
    if family not in ("beta", "normal", "gamma"):
        raise ValueError(f"unknown mixture family: {family!r}")
    if k < 1 or int(k) != k:
        raise ValueError("component count must be a positive integer")
    x = _prepare_sample(sample, family)
    rng = np.random.default_rng(seed)
    labels = _kmeans_1d(x, k, rng)
    w, a, b = _initial_params(x, labels, k, family)
    if family == "normal" and k >= 1:
        w, a, b = _student_t_prefit(x, w, a, b)
        b = np.maximum(b, 1e-8)

    trace = []
    prev_ll = -np.inf
    small_moves = 0
    converged = False
    pruned = 0
    it = 0
    while it < max_iter:
        it += 1
        logp = _log_density(x, family, a, b) + np.log(w)
        m = logp.max(axis=1, keepdims=True)
        lse = m[:, 0] + np.log(np.exp(logp - m).sum(axis=1))
        ll = float(lse.sum())
        trace.append(ll)
        gamma = np.exp(logp - lse[:, None])
        w, a, b = _m_step(x, gamma, family, a, b)
        drop = (w < _WEIGHT_FLOOR) | (_component_var(family, a, b) < _VAR_FLOOR)
        if drop.any() and w.size > 1:
            keep = ~drop
            pruned += int(drop.sum())
            w, a, b = w[keep] / w[keep].sum(), a[keep], b[keep]
            prev_ll, small_moves = -np.inf, 0
            continue
        move = ll - prev_ll
        if abs(move) < 1e-6:
            small_moves += 1
        else:
            small_moves = 0
        if small_moves >= 10 or (np.isfinite(prev_ll) and abs(move) < 1e-9 * max(1.0, abs(ll))):
            converged = True
            break
        prev_ll = ll
    final_ll = _sample_loglik(x, family, w, a, b)
    mixture = Mixture(family, w, a, b,
                      likelihood=likelihood if family == "gamma" else None)
    return EmFit(
        mixture=mixture,
        loglik=final_ll,
        aic=2.0 * n_parameters(mixture.k) - 2.0 * final_ll,
        n_iter=it,
        converged=converged,
        trace=np.asarray(trace),
        requested_k=k,
        pruned=pruned,
    )


def _sample_loglik(x, family, w, a, b) -> float:
    logp = _log_density(x, family, a, b) + np.log(w)
    m = logp.max(axis=1, keepdims=True)
    return float((m[:, 0] + np.log(np.exp(logp - m).sum(axis=1))).sum())


def auto_fit(sample, family: str, *, k_max: int = 4, seed=None,
             max_iter: int = 1000, likelihood: str | None = None) -> AutoFit:
    """Fit 1..k_max components and keep the best AIC (ties favor fewer)."""
    if k_max < 1:
        raise ValueError("k_max must be at least 1")
    seeds = np.random.SeedSequence(seed).spawn(k_max)
    fits = [
        fit_mixture(sample, k, family, seed=np.random.default_rng(seeds[k - 1]),
                    max_iter=max_iter, likelihood=likelihood)
        for k in range(1, k_max + 1)
    ]
    best = min(fits, key=lambda f: (round(f.aic, 9), f.requested_k))
    return AutoFit(best=best, candidates=fits)
