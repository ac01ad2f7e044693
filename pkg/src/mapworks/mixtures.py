"""Finite parametric mixtures used as priors and posteriors.

A mixture is a weighted sum of same-family components:

* beta: components Beta(a, b) on (0, 1)
* normal: components Normal(a, b) (b is the sd), optionally carrying a
  known sampling standard deviation sigma used by conjugate updates
* gamma: components Gamma(a, b) (shape a, rate b) with a likelihood tag
  of "poisson" (b counts exposure) or "exponential" (a counts events)

Weights are strictly positive and normalized on construction.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import optimize, stats

FAMILIES = ("beta", "normal", "gamma")
GAMMA_LIKELIHOODS = ("poisson", "exponential")

# Quantile refinement target, in probability.
_PPF_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class Mixture:
    """Immutable mixture with component arrays w, a, b of equal length."""

    family: str
    w: np.ndarray
    a: np.ndarray
    b: np.ndarray
    sigma: float | None = None
    likelihood: str | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown mixture family: {self.family!r}")
        w = np.atleast_1d(np.asarray(self.w, dtype=float))
        a = np.atleast_1d(np.asarray(self.a, dtype=float))
        b = np.atleast_1d(np.asarray(self.b, dtype=float))
        if not (w.shape == a.shape == b.shape) or w.ndim != 1 or w.size == 0:
            raise ValueError("component arrays w, a, b must be equal-length 1-D and non-empty")
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise ValueError("mixture weights must be finite and > 0")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise ValueError("mixture parameters must be finite")
        if self.family == "beta" and (np.any(a <= 0) or np.any(b <= 0)):
            raise ValueError("beta components need a > 0 and b > 0")
        if self.family == "gamma" and (np.any(a <= 0) or np.any(b <= 0)):
            raise ValueError("gamma components need shape > 0 and rate > 0")
        if self.family == "normal" and np.any(b <= 0):
            raise ValueError("normal components need sd > 0")
        if self.sigma is not None:
            if self.family != "normal":
                raise ValueError("sigma is only meaningful for normal mixtures")
            if not (np.isfinite(self.sigma) and self.sigma > 0):
                raise ValueError("sigma must be a positive finite number")
        if self.family == "gamma":
            lk = self.likelihood or "poisson"
            if lk not in GAMMA_LIKELIHOODS:
                raise ValueError(f"gamma likelihood must be one of {GAMMA_LIKELIHOODS}")
            object.__setattr__(self, "likelihood", lk)
        elif self.likelihood is not None:
            raise ValueError("likelihood tag is only meaningful for gamma mixtures")
        object.__setattr__(self, "w", w / w.sum())
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        self.w.setflags(write=False)
        self.a.setflags(write=False)
        self.b.setflags(write=False)

    # -- basic structure ------------------------------------------------

    @property
    def k(self) -> int:
        return self.w.size

    def components(self) -> list[tuple[float, float, float]]:
        return [(float(w), float(a), float(b)) for w, a, b in zip(self.w, self.a, self.b)]

    def support(self) -> tuple[float, float]:
        if self.family == "beta":
            return (0.0, 1.0)
        if self.family == "gamma":
            return (0.0, np.inf)
        return (-np.inf, np.inf)

    def _dist(self):
        # Frozen scipy distributions broadcasting over components.
        if self.family == "beta":
            return stats.beta(self.a, self.b)
        if self.family == "normal":
            return stats.norm(self.a, self.b)
        return stats.gamma(self.a, scale=1.0 / self.b)

    # -- evaluation -----------------------------------------------------

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        val = self._dist().pdf(x[..., None]) @ self.w
        return val if val.ndim else float(val)

    def log_pdf(self, x):
        x = np.asarray(x, dtype=float)
        lp = self._dist().logpdf(x[..., None]) + np.log(self.w)
        val = _logsumexp_last(lp)
        return val if val.ndim else float(val)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        val = self._dist().cdf(x[..., None]) @ self.w
        return val if val.ndim else float(val)

    def ppf(self, p):
        """Quantile: component quantiles bracket the root, Brent refines."""
        p_arr = np.atleast_1d(np.asarray(p, dtype=float))
        if np.any((p_arr < 0) | (p_arr > 1) | ~np.isfinite(p_arr)):
            raise ValueError("quantile probabilities must lie in [0, 1]")
        comp_q = self._dist().ppf(p_arr[:, None])
        out = np.empty_like(p_arr)
        for i, prob in enumerate(p_arr):
            if prob <= 0.0 or prob >= 1.0:
                edge = self.support()
                out[i] = edge[0] if prob <= 0.0 else edge[1]
                continue
            lo = float(np.min(comp_q[i]))
            hi = float(np.max(comp_q[i]))
            if hi - lo <= 1e-15 * max(1.0, abs(lo)):
                out[i] = lo
                continue
            out[i] = optimize.brentq(
                lambda x: self.cdf(x) - prob, lo, hi, xtol=1e-13, rtol=8.9e-16
            )
        return out if np.ndim(p) else float(out[0])

    def rvs(self, size: int, rng=None) -> np.ndarray:
        """Draw `size` samples; rng is a seed or numpy Generator."""
        gen = np.random.default_rng(rng)
        idx = gen.choice(self.k, size=size, p=self.w)
        if self.family == "beta":
            return gen.beta(self.a[idx], self.b[idx])
        if self.family == "normal":
            return gen.normal(self.a[idx], self.b[idx])
        return gen.gamma(self.a[idx], 1.0 / self.b[idx])

    # -- moments and summaries -------------------------------------------

    def mean(self) -> float:
        return float(self.w @ self._comp_mean())

    def var(self) -> float:
        m = self._comp_mean()
        second = self._comp_second_moment()
        mu = float(self.w @ m)
        return float(self.w @ second - mu * mu)

    def sd(self) -> float:
        return float(np.sqrt(self.var()))

    def _comp_mean(self) -> np.ndarray:
        if self.family == "beta":
            return self.a / (self.a + self.b)
        if self.family == "normal":
            return self.a
        return self.a / self.b

    def _comp_second_moment(self) -> np.ndarray:
        if self.family == "beta":
            s = self.a + self.b
            return self.a * (self.a + 1) / (s * (s + 1))
        if self.family == "normal":
            return self.a**2 + self.b**2
        return self.a * (self.a + 1) / self.b**2

    def summary(self, probs: Sequence[float] = (0.025, 0.25, 0.5, 0.75, 0.975)) -> dict:
        q = self.ppf(np.asarray(probs, dtype=float))
        return {
            "mean": self.mean(),
            "sd": self.sd(),
            "quantiles": {f"{p:g}": float(v) for p, v in zip(probs, q)},
        }

    # -- serialization ----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "sigma": self.sigma,
            "likelihood": self.likelihood,
            "components": [[float(w), float(a), float(b)]
                           for w, a, b in zip(self.w, self.a, self.b)],
        }

    def to_json(self, **kwargs) -> str:
        kwargs.setdefault("sort_keys", True)
        return json.dumps(self.to_dict(), **kwargs)

    def __repr__(self):
        parts = ", ".join(f"({w:.6g}, {a:.6g}, {b:.6g})"
                          for w, a, b in zip(self.w, self.a, self.b))
        tags = ""
        if self.sigma is not None:
            tags += f", sigma={self.sigma:.6g}"
        if self.family == "gamma":
            tags += f", likelihood={self.likelihood}"
        return f"Mixture({self.family}, [{parts}]{tags})"


def _logsumexp_last(arr: np.ndarray) -> np.ndarray:
    m = np.max(arr, axis=-1, keepdims=True)
    return (m + np.log(np.sum(np.exp(arr - m), axis=-1, keepdims=True)))[..., 0]


# -- constructors ---------------------------------------------------------

def _split_components(components: Iterable[Sequence[float]]):
    comp = [tuple(map(float, c)) for c in components]
    if not comp:
        raise ValueError("a mixture needs at least one component")
    if any(len(c) != 3 for c in comp):
        raise ValueError("each component must be a (weight, a, b) triple")
    w, a, b = (np.array(col) for col in zip(*comp))
    return w, a, b


def beta_mixture(components: Iterable[Sequence[float]]) -> Mixture:
    """Beta mixture from (weight, a, b) triples."""
    w, a, b = _split_components(components)
    return Mixture("beta", w, a, b)


def normal_mixture(components: Iterable[Sequence[float]], sigma: float | None = None) -> Mixture:
    """Normal mixture from (weight, mean, sd) triples; sigma is the known
    sampling standard deviation, attachable later with with_sigma()."""
    w, a, b = _split_components(components)
    return Mixture("normal", w, a, b, sigma=sigma)


def gamma_mixture(components: Iterable[Sequence[float]], likelihood: str = "poisson") -> Mixture:
    """Gamma mixture from (weight, shape, rate) triples."""
    w, a, b = _split_components(components)
    return Mixture("gamma", w, a, b, likelihood=likelihood)


def make_mixture(family: str, components: Iterable[Sequence[float]], *,
                 sigma: float | None = None, likelihood: str | None = None) -> Mixture:
    """Family-dispatching constructor, mirroring the JSON schema."""
    if family == "beta":
        if sigma is not None or likelihood is not None:
            raise ValueError("beta mixtures take neither sigma nor likelihood")
        return beta_mixture(components)
    if family == "normal":
        if likelihood is not None:
            raise ValueError("normal mixtures take no likelihood tag")
        return normal_mixture(components, sigma=sigma)
    if family == "gamma":
        if sigma is not None:
            raise ValueError("gamma mixtures take no sigma")
        return gamma_mixture(components, likelihood=likelihood or "poisson")
    raise ValueError(f"unknown mixture family: {family!r}")


def mixture_from_dict(payload: dict) -> Mixture:
    """Parse the serialized form; unknown fields are an error."""
    if not isinstance(payload, dict):
        raise ValueError("mixture payload must be a JSON object")
    allowed = {"family", "sigma", "likelihood", "components"}
    extra = set(payload) - allowed
    if extra:
        raise ValueError(f"unknown mixture fields: {sorted(extra)}")
    if "family" not in payload or "components" not in payload:
        raise ValueError("mixture payload needs 'family' and 'components'")
    return make_mixture(
        payload["family"],
        payload["components"],
        sigma=payload.get("sigma"),
        likelihood=payload.get("likelihood"),
    )


def mixture_from_json(text: str) -> Mixture:
    return mixture_from_dict(json.loads(text))


def with_sigma(mix: Mixture, sigma: float) -> Mixture:
    """Return a copy of a normal mixture with sigma attached."""
    if mix.family != "normal":
        raise ValueError("sigma can only be attached to normal mixtures")
    return Mixture("normal", mix.w, mix.a, mix.b, sigma=sigma)


def require_sigma(mix: Mixture, sigma: float | None = None) -> float:
    """Resolve the sampling sd for a normal mixture operation."""
    if sigma is not None:
        if not (np.isfinite(sigma) and sigma > 0):
            raise ValueError("sigma must be a positive finite number")
        return float(sigma)
    if mix.sigma is None:
        raise ValueError(
            "this operation needs the sampling standard deviation: attach it "
            "with with_sigma() or pass sigma= explicitly"
        )
    return mix.sigma


# -- structural operations -------------------------------------------------

def combine(mixtures: Sequence[Mixture], weights: Sequence[float] | None = None) -> Mixture:
    """Weighted concatenation of same-family mixtures into one mixture."""
    if not mixtures:
        raise ValueError("combine needs at least one mixture")
    fam = mixtures[0].family
    if any(m.family != fam for m in mixtures):
        raise ValueError("cannot combine mixtures of different families")
    if weights is None:
        weights = [1.0] * len(mixtures)
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (len(mixtures),) or np.any(weights <= 0):
        raise ValueError("combine weights must be positive, one per mixture")
    sigma = None
    if fam == "normal":
        sigmas = {m.sigma for m in mixtures if m.sigma is not None}
        if len(sigmas) > 1:
            raise ValueError("cannot combine normal mixtures with different sigma")
        sigma = sigmas.pop() if sigmas else None
    likelihood = None
    if fam == "gamma":
        lks = {m.likelihood for m in mixtures}
        if len(lks) > 1:
            raise ValueError("cannot combine gamma mixtures with different likelihoods")
        likelihood = lks.pop()
    w = np.concatenate([wt * m.w for wt, m in zip(weights, mixtures)])
    a = np.concatenate([m.a for m in mixtures])
    b = np.concatenate([m.b for m in mixtures])
    return Mixture(fam, w, a, b, sigma=sigma, likelihood=likelihood)


def robustify(mix: Mixture, weight: float, mean: float, n: float = 1.0,
              sigma: float | None = None) -> Mixture:
    """Mix a weakly-informative component into a prior.

    The result is (1 - weight) * mix + weight * vague, where the vague
    component encodes a mean and the information of n observations:

    * beta: Beta(mean*(n+1), (1-mean)*(n+1)), so the default mean=0.5,
      n=1 vague part is the uniform Beta(1, 1).  The +1 offset is the
      convention that reproduces the published robust operating
      characteristics; the plain mean*n scaling does not.
    * normal: Normal(mean, sigma^2 / n) using the attached or passed sigma.
    * gamma/poisson: Gamma(mean*n, n) (exposure n).
    * gamma/exponential: Gamma(n, n/mean) (n events).
    """
    if not (0.0 <= weight <= 1.0):
        raise ValueError("robust weight must lie in [0, 1]")
    if not np.isfinite(mean):
        raise ValueError("robust mean must be finite")
    if not (np.isfinite(n) and n > 0):
        raise ValueError("robust prior weight n must be > 0")
    if mix.family == "beta":
        if not 0.0 < mean < 1.0:
            raise ValueError("robust mean for a beta mixture must lie in (0, 1)")
        vague = beta_mixture([(1.0, mean * (n + 1.0), (1.0 - mean) * (n + 1.0))])
    elif mix.family == "normal":
        sd = require_sigma(mix, sigma) / np.sqrt(n)
        vague = normal_mixture([(1.0, mean, sd)], sigma=mix.sigma if sigma is None else sigma)
    else:
        if mean <= 0:
            raise ValueError("robust mean for a gamma mixture must be > 0")
        if mix.likelihood == "poisson":
            vague = gamma_mixture([(1.0, mean * n, n)], likelihood="poisson")
        else:
            vague = gamma_mixture([(1.0, n, n / mean)], likelihood="exponential")
    if weight == 0.0:
        return mix
    if weight == 1.0:
        return vague
    return combine([mix, vague], [1.0 - weight, weight])
