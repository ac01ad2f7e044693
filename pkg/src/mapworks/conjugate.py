"""Conjugate posterior updates and predictive distributions for mixtures.

Updating a conjugate mixture keeps the family: each component is updated
by its textbook conjugate rule and the weights are reweighted by the
component marginal likelihoods (computed in log space).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy import special, stats

from .mixtures import Mixture, require_sigma


# -- observed data ---------------------------------------------------------

@dataclass(frozen=True)
class BinomialData:
    """r responders out of n subjects."""
    r: int
    n: int

    def __post_init__(self):
        if self.n < 1 or int(self.n) != self.n:
            raise ValueError("binomial n must be a positive integer")
        if not 0 <= self.r <= self.n or int(self.r) != self.r:
            raise ValueError("binomial r must be an integer in [0, n]")


@dataclass(frozen=True)
class NormalData:
    """Sample mean of n observations with known sampling sd sigma.

    n may be fractional: a mean with standard error se carries
    n = (sigma / se)^2 effective observations.
    """
    mean: float
    n: float

    def __post_init__(self):
        if not np.isfinite(self.mean):
            raise ValueError("normal mean must be finite")
        if not (np.isfinite(self.n) and self.n > 0):
            raise ValueError("normal n must be > 0")

    @classmethod
    def from_se(cls, mean: float, se: float, sigma: float) -> "NormalData":
        if not (np.isfinite(se) and se > 0):
            raise ValueError("standard error must be > 0")
        return cls(mean, (sigma / se) ** 2)


@dataclass(frozen=True)
class PoissonData:
    """Total event count over an exposure (person-time or subjects)."""
    count: int
    exposure: float

    def __post_init__(self):
        if self.count < 0 or int(self.count) != self.count:
            raise ValueError("poisson count must be a non-negative integer")
        if not (np.isfinite(self.exposure) and self.exposure > 0):
            raise ValueError("poisson exposure must be > 0")


@dataclass(frozen=True)
class ExponentialData:
    """n exponential event times with total duration `total`."""
    events: int
    total: float

    def __post_init__(self):
        if self.events < 1 or int(self.events) != self.events:
            raise ValueError("exponential events must be a positive integer")
        if not (np.isfinite(self.total) and self.total > 0):
            raise ValueError("exponential total time must be > 0")


ObservedData = Union[BinomialData, NormalData, PoissonData, ExponentialData]

_DATA_KINDS = {
    "binomial": BinomialData,
    "normal": NormalData,
    "poisson": PoissonData,
    "exponential": ExponentialData,
}


def data_from_dict(payload: dict, sigma: float | None = None) -> ObservedData:
    """Parse {"kind": ..., ...} into an ObservedData value."""
    if not isinstance(payload, dict) or "kind" not in payload:
        raise ValueError("observed data payload must be an object with a 'kind'")
    kind = payload["kind"]
    fields = {k: v for k, v in payload.items() if k != "kind"}
    cls = _DATA_KINDS.get(kind)
    if cls is not None:
        expected = set(cls.__dataclass_fields__)
        if kind == "normal" and "se" in fields:
            expected = {"mean", "se"}
        if set(fields) != expected:
            raise ValueError(
                f"{kind} data needs fields {sorted(expected)}, got {sorted(fields)}")
    if kind == "binomial":
        return BinomialData(**fields)
    if kind == "normal":
        if "se" in fields:
            if sigma is None:
                raise ValueError("normal data given as (mean, se) needs sigma")
            return NormalData.from_se(fields["mean"], fields["se"], sigma)
        return NormalData(**fields)
    if kind == "poisson":
        return PoissonData(**fields)
    if kind == "exponential":
        return ExponentialData(**fields)
    raise ValueError(f"unknown data kind: {kind!r}; expected one of {sorted(_DATA_KINDS)}")


def data_to_dict(data: ObservedData) -> dict:
    for kind, cls in _DATA_KINDS.items():
        if isinstance(data, cls):
            out = {"kind": kind}
            out.update({k: getattr(data, k) for k in cls.__dataclass_fields__})
            return out
    raise ValueError(f"not an observed-data value: {data!r}")


# -- posterior update ------------------------------------------------------

def posterior_update(prior: Mixture, data: ObservedData, sigma: float | None = None) -> Mixture:
    """Exact conjugate posterior of a mixture prior given observed data.

    New weights are proportional to (old weight) * (component marginal
    likelihood of the data); terms constant across components cancel.
    """
    if prior.family == "beta":
        if not isinstance(data, BinomialData):
            raise ValueError("beta mixtures update with binomial data")
        a = prior.a + data.r
        b = prior.b + data.n - data.r
        log_ml = special.betaln(a, b) - special.betaln(prior.a, prior.b)
        return Mixture("beta", _reweight(prior.w, log_ml), a, b)
    if prior.family == "normal":
        if not isinstance(data, NormalData):
            raise ValueError("normal mixtures update with normal data")
        sig = require_sigma(prior, sigma)
        se2 = sig**2 / data.n
        prec = 1.0 / prior.b**2 + 1.0 / se2
        mean = (prior.a / prior.b**2 + data.mean / se2) / prec
        sd = 1.0 / np.sqrt(prec)
        log_ml = stats.norm.logpdf(data.mean, prior.a, np.sqrt(prior.b**2 + se2))
        return Mixture("normal", _reweight(prior.w, log_ml), mean, sd, sigma=prior.sigma)
    if prior.likelihood == "poisson":
        if not isinstance(data, PoissonData):
            raise ValueError("poisson-likelihood gamma mixtures update with poisson data")
        a = prior.a + data.count
        b = prior.b + data.exposure
        log_ml = (special.gammaln(a) - special.gammaln(prior.a)
                  + prior.a * np.log(prior.b) - a * np.log(b))
        return Mixture("gamma", _reweight(prior.w, log_ml), a, b, likelihood="poisson")
    if not isinstance(data, ExponentialData):
        raise ValueError("exponential-likelihood gamma mixtures update with exponential data")
    a = prior.a + data.events
    b = prior.b + data.total
    log_ml = (special.gammaln(a) - special.gammaln(prior.a)
              + prior.a * np.log(prior.b) - a * np.log(b))
    return Mixture("gamma", _reweight(prior.w, log_ml), a, b, likelihood="exponential")


def _reweight(w: np.ndarray, log_ml: np.ndarray) -> np.ndarray:
    logw = np.log(w) + log_ml
    logw -= logw.max()
    return np.exp(logw)


# -- predictive distributions ----------------------------------------------

@dataclass(frozen=True, eq=False)
class Predictive:
    """Mixture predictive law of a future summary statistic.

    kind "beta-binomial": responders out of n trials; components (w, a, b).
    kind "normal": mean of n observations; b holds the predictive sd
    sqrt(comp_sd^2 + sigma^2 / n).
    kind "negative-binomial": total count over exposure n; components
    (w, shape a, rate b) with success probability b / (b + n).
    """

    kind: str
    n: float
    w: np.ndarray
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        for name in ("w", "a", "b"):
            arr = np.atleast_1d(np.asarray(getattr(self, name), dtype=float))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def discrete(self) -> bool:
        return self.kind != "normal"

    def _dists(self):
        if self.kind == "beta-binomial":
            return stats.betabinom(int(self.n), self.a, self.b)
        if self.kind == "negative-binomial":
            return stats.nbinom(self.a, self.b / (self.b + self.n))
        return stats.norm(self.a, self.b)

    def pmf(self, y):
        y = np.asarray(y, dtype=float)
        d = self._dists()
        f = d.pmf(y[..., None]) if self.discrete else d.pdf(y[..., None])
        val = f @ self.w
        return val if val.ndim else float(val)

    pdf = pmf

    def cdf(self, y):
        y = np.asarray(y, dtype=float)
        val = self._dists().cdf(y[..., None]) @ self.w
        return val if val.ndim else float(val)

    def mean(self) -> float:
        return float(self.w @ np.atleast_1d(self._dists().mean()))

    def grid(self, mass: float = 1e-6) -> np.ndarray:
        """Integer outcome grid containing at least 1 - mass of the law."""
        if not self.discrete:
            raise ValueError("grid() applies to discrete predictives only")
        if self.kind == "beta-binomial":
            return np.arange(int(self.n) + 1)
        hi = int(np.max(self._dists().ppf(1.0 - mass)))
        return np.arange(hi + 1)

    def as_mixture(self) -> Mixture:
        if self.kind != "normal":
            raise ValueError("only normal predictives convert to a mixture")
        return Mixture("normal", self.w, self.a, self.b)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "n": float(self.n),
            "components": [[float(w), float(a), float(b)]
                           for w, a, b in zip(self.w, self.a, self.b)],
        }


def predictive(prior: Mixture, n: float, sigma: float | None = None) -> Predictive:
    """Prior- (or posterior-) predictive law of the summary of n new observations."""
    if not (np.isfinite(n) and n > 0):
        raise ValueError("predictive sample size must be > 0")
    if prior.family == "beta":
        if int(n) != n:
            raise ValueError("beta-binomial predictive needs an integer trial count")
        return Predictive("beta-binomial", int(n), prior.w, prior.a, prior.b)
    if prior.family == "normal":
        sig = require_sigma(prior, sigma)
        sd = np.sqrt(prior.b**2 + sig**2 / n)
        return Predictive("normal", float(n), prior.w, prior.a, sd)
    if prior.likelihood == "poisson":
        return Predictive("negative-binomial", float(n), prior.w, prior.a, prior.b)
    raise ValueError("predictive for exponential-likelihood gamma mixtures is not defined")
