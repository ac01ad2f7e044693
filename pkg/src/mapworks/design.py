"""Trial design evaluation: decision rules, boundaries, OC and PoS.

A decision rule checks posterior tail probabilities against levels:
success requires P(effect beyond qc) strictly greater than pc for every
criterion.  Designs fix priors and sample sizes; from those this module
computes critical outcome boundaries, frequentist operating
characteristics (success probability at fixed true parameters), and
predictive probability of success.

Boundaries exploit posterior monotonicity in the observed outcome
(likelihood-ratio ordering of conjugate updates), so discrete critical
values come from binary search and continuous ones from root-finding.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import optimize, stats

from .conjugate import BinomialData, NormalData, PoissonData, posterior_update, predictive
from .diffdist import check_link, diff_cdf
from .errors import NumericalError
from .mixtures import Mixture, require_sigma

_FAMILY_BY_PRIOR = {"beta": "binomial", "normal": "normal", "gamma": "poisson"}


# -- decision rules ----------------------------------------------------------

@dataclass(frozen=True)
class DecisionFunction:
    """Success criteria: all of P(tail beyond qc[i]) > pc[i] must hold.

    lower_tail=True tests P(effect <= qc); False tests P(effect > qc).
    Comparisons are strict, so a probability exactly equal to pc fails.
    For two-sample rules the effect is g(theta1) - g(theta2) under the
    chosen link.
    """

    pc: np.ndarray
    qc: np.ndarray
    lower_tail: bool
    arity: int
    link: str = "identity"

    def __post_init__(self):
        pc = np.atleast_1d(np.asarray(self.pc, dtype=float))
        qc = np.atleast_1d(np.asarray(self.qc, dtype=float))
        if pc.shape != qc.shape or pc.ndim != 1 or pc.size == 0:
            raise ValueError("pc and qc must be equal-length non-empty vectors")
        if np.any((pc <= 0) | (pc >= 1)):
            raise ValueError("probability levels pc must lie in (0, 1)")
        if not np.all(np.isfinite(qc)):
            raise ValueError("thresholds qc must be finite")
        if self.arity not in (1, 2):
            raise ValueError("decision arity must be 1 or 2")
        if self.arity == 1 and self.link != "identity":
            raise ValueError("one-sample decisions use the identity link")
        pc.setflags(write=False)
        qc.setflags(write=False)
        object.__setattr__(self, "pc", pc)
        object.__setattr__(self, "qc", qc)

    def to_dict(self) -> dict:
        return {
            "pc": self.pc.tolist(),
            "qc": self.qc.tolist(),
            "lower_tail": self.lower_tail,
            "arity": self.arity,
            "link": self.link,
        }


def decision1S(pc, qc, lower_tail: bool = True) -> DecisionFunction:
    """One-sample decision: success iff P(theta <=/> qc) > pc for all criteria."""
    return DecisionFunction(pc, qc, lower_tail, arity=1)


def decision2S(pc, qc, lower_tail: bool = False, link: str = "identity") -> DecisionFunction:
    """Two-sample decision on g(theta1) - g(theta2)."""
    return DecisionFunction(pc, qc, lower_tail, arity=2, link=link)


def decision_from_dict(payload: dict) -> DecisionFunction:
    if not isinstance(payload, dict):
        raise ValueError("decision payload must be a JSON object")
    allowed = {"pc", "qc", "lower_tail", "arity", "link"}
    extra = set(payload) - allowed
    if extra:
        raise ValueError(f"unknown decision fields: {sorted(extra)}")
    arity = payload.get("arity", 2)
    if arity == 1:
        return decision1S(payload["pc"], payload["qc"], payload.get("lower_tail", True))
    return decision2S(payload["pc"], payload["qc"], payload.get("lower_tail", False),
                      payload.get("link", "identity"))


def success_probabilities_1s(posterior: Mixture, decision: DecisionFunction) -> np.ndarray:
    p = np.atleast_1d(posterior.cdf(decision.qc))
    return p if decision.lower_tail else 1.0 - p


def decide_1s(posterior: Mixture, decision: DecisionFunction) -> bool:
    return bool(np.all(success_probabilities_1s(posterior, decision) > decision.pc))


def success_probabilities_2s(post1: Mixture, post2: Mixture,
                             decision: DecisionFunction) -> np.ndarray:
    p = np.array([diff_cdf(post1, post2, q, decision.link) for q in decision.qc])
    return p if decision.lower_tail else 1.0 - p


def decide_2s(post1: Mixture, post2: Mixture, decision: DecisionFunction) -> bool:
    return bool(np.all(success_probabilities_2s(post1, post2, decision) > decision.pc))


def _margin_1s(posterior: Mixture, decision: DecisionFunction) -> float:
    """Signed success margin: positive iff every criterion is met."""
    return float(np.min(success_probabilities_1s(posterior, decision) - decision.pc))


def _margin_2s(post1: Mixture, post2: Mixture, decision: DecisionFunction) -> float:
    return float(np.min(success_probabilities_2s(post1, post2, decision) - decision.pc))


# -- outcome models ----------------------------------------------------------

def _family_of(prior: Mixture) -> str:
    fam = _FAMILY_BY_PRIOR[prior.family]
    if prior.family == "gamma" and prior.likelihood != "poisson":
        raise ValueError("design evaluation supports poisson-likelihood gamma priors only")
    return fam


def _observe(family: str, y, n):
    if family == "binomial":
        return BinomialData(int(y), int(n))
    if family == "normal":
        return NormalData(float(y), float(n))
    return PoissonData(int(y), float(n))


def _posterior_at(prior: Mixture, family: str, y, n, sigma) -> Mixture:
    return posterior_update(prior, _observe(family, y, n),
                            sigma=sigma if family == "normal" else None)


def _sampling_tail(family: str, theta, n, crit, direction: str, sigma=None):
    """P(outcome in the success region | true theta) for one arm."""
    if crit is None:
        return np.zeros(np.shape(theta)) if np.ndim(theta) else 0.0
    if family == "binomial":
        dist = stats.binom(int(n), theta)
    elif family == "poisson":
        dist = stats.poisson(np.multiply(n, theta))
    else:
        dist = stats.norm(theta, sigma / np.sqrt(n))
    if direction == "ge":
        return dist.sf(crit - 1) if family != "normal" else dist.sf(crit)
    return dist.cdf(crit)


# -- one-sample boundaries ----------------------------------------------------

@dataclass(frozen=True)
class Boundary1S:
    """Critical outcome of a one-sample design.

    direction "ge": success iff y >= crit; "le": success iff y <= crit.
    crit None means no outcome succeeds; for continuous outcomes crit
    may be +/-inf with the same meaning at the never/always extremes.
    """

    family: str
    n: float
    direction: str
    crit: float | None

    def decide(self, y) -> bool:
        if self.crit is None:
            return False
        return bool(y >= self.crit) if self.direction == "ge" else bool(y <= self.crit)

    def always_succeeds(self) -> bool:
        c = self.crit
        return bool(c is not None and np.isinf(c) and (c < 0) == (self.direction == "ge"))

    def never_succeeds(self) -> bool:
        c = self.crit
        return bool(c is None or (np.isinf(c) and (c > 0) == (self.direction == "ge")))

    def to_dict(self) -> dict:
        crit = self.crit
        if crit is not None and not np.isfinite(crit):
            crit = None
        return {
            "family": self.family,
            "n": self.n,
            "direction": self.direction,
            "crit": crit,
            "always_succeeds": self.always_succeeds(),
            "never_succeeds": self.never_succeeds(),
        }


def _search_min_true(lo: int, hi: int, pred) -> int | None:
    """Smallest integer in [lo, hi] where a monotone predicate turns true."""
    if not pred(hi):
        return None
    while lo < hi:
        mid = (lo + hi) // 2
        if pred(mid):
            hi = mid
        else:
            lo = mid + 1
    return lo


def _search_max_true(lo: int, hi: int, pred) -> int | None:
    """Largest integer in [lo, hi] where a monotone-decreasing predicate holds."""
    if not pred(lo):
        return None
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if pred(mid):
            lo = mid
        else:
            hi = mid - 1
    return lo


def _poisson_count_cap(prior: Mixture, n: float) -> int:
    pred = predictive(prior, n)
    cap = int(np.max(pred.grid(1e-9)))
    return max(cap, 10)


def boundary1S(prior: Mixture, n: float, decision: DecisionFunction,
               sigma: float | None = None) -> Boundary1S:
    """Critical outcome y_c such that the decision flips at y_c."""
    if decision.arity != 1:
        raise ValueError("boundary1S needs a one-sample decision")
    family = _family_of(prior)
    if family == "normal":
        sigma = require_sigma(prior, sigma)
    direction = "le" if decision.lower_tail else "ge"

    def success(y) -> bool:
        return decide_1s(_posterior_at(prior, family, y, n, sigma), decision)

    if family == "binomial":
        n_int = int(n)
        crit = (_search_min_true(0, n_int, success) if direction == "ge"
                else _search_max_true(0, n_int, success))
        return Boundary1S(family, n_int, direction, crit)
    if family == "poisson":
        hi = _extend_poisson_cap(_poisson_count_cap(prior, n), success, direction)
        crit = (_search_min_true(0, hi, success) if direction == "ge"
                else _search_max_true(0, hi, success))
        return Boundary1S(family, n, direction, crit)

    def margin(y: float) -> float:
        return _margin_1s(_posterior_at(prior, family, y, n, sigma), decision)

    crit = _continuous_crit(margin, direction,
                            center=prior.mean(),
                            scale=prior.sd() + sigma / np.sqrt(n))
    return Boundary1S(family, n, direction, crit)


def _extend_poisson_cap(hi: int, success, direction: str) -> int:
    """Grow the count search cap until the decision is stable beyond it."""
    for _ in range(60):
        if direction == "ge" and success(hi):
            break
        if direction == "le" and not success(hi):
            break
        hi *= 2
        if hi > 10**9:
            break
    return hi


def _continuous_crit(margin, direction: str, center: float, scale: float) -> float:
    """Root of a monotone success margin over a continuous outcome.

    margin(y) is positive iff the decision succeeds at outcome y; it is
    increasing in y for direction "ge" and decreasing for "le".
    """
    scale = max(scale, 1e-9)
    lo, hi = center - 8 * scale, center + 8 * scale
    m_lo, m_hi = margin(lo), margin(hi)
    for _ in range(200):
        if (m_lo > 0) != (m_hi > 0):
            break
        width = hi - lo
        if (m_lo > 0) == (direction == "ge"):
            # Succeeding on the low side already: push lo further down.
            lo -= width
            m_lo = margin(lo)
        else:
            hi += width
            m_hi = margin(hi)
        if hi - lo > 1e12 * scale:
            break
    if (m_lo > 0) == (m_hi > 0):
        # Constant decision over the searched range: always or never.
        always = m_lo > 0
        if direction == "ge":
            return -np.inf if always else np.inf
        return np.inf if always else -np.inf
    return float(optimize.brentq(margin, lo, hi, xtol=1e-11, rtol=8.9e-16))


# -- two-sample boundaries -----------------------------------------------------

@dataclass(eq=False)
class Boundary2S:
    """Critical outcome of arm 1 as a function of the arm-2 outcome.

    direction "ge": success iff y1 >= crit(y2); "le": iff y1 <= crit(y2).
    crit(y2) is None (discrete) or +/-inf (continuous) when no / every
    y1 succeeds.  Values are computed once per y2 and cached.
    """

    family: str
    n1: float
    n2: float
    direction: str
    _crit_fn: object = field(repr=False)
    _cache: dict = field(default_factory=dict, repr=False)

    def crit(self, y2):
        key = float(y2)
        if key not in self._cache:
            self._cache[key] = self._crit_fn(y2)
        return self._cache[key]

    def decide(self, y1, y2) -> bool:
        c = self.crit(y2)
        if c is None:
            return False
        return bool(y1 >= c) if self.direction == "ge" else bool(y1 <= c)

    def table(self, y2_values) -> list:
        rows = []
        for y2 in y2_values:
            c = self.crit(y2)
            if c is not None and not np.isfinite(c):
                c = None
            rows.append({"y2": float(y2), "crit_y1": c if c is None else float(c)})
        return rows

    def monotone(self, y2_values) -> bool:
        """Scan: is crit(y2) monotone over these arm-2 outcomes?"""
        crits = []
        for y2 in y2_values:
            c = self.crit(y2)
            if c is None:
                c = np.inf if self.direction == "ge" else -np.inf
            crits.append(float(c))
        # pairwise comparisons, not np.diff: repeated infinities at the
        # saturated end would subtract to nan
        pairs = list(zip(crits, crits[1:]))
        return all(a <= b for a, b in pairs) or all(a >= b for a, b in pairs)


def boundary2S(prior1: Mixture, prior2: Mixture, n1: float, n2: float,
               decision: DecisionFunction, sigma1: float | None = None,
               sigma2: float | None = None) -> Boundary2S:
    """Per-y2 critical values of y1 for a two-sample design."""
    if decision.arity != 2:
        raise ValueError("boundary2S needs a two-sample decision")
    if prior1.family != prior2.family:
        raise ValueError("both arms must use priors of the same family")
    check_link(prior1, decision.link)
    check_link(prior2, decision.link)
    family = _family_of(prior1)
    if family == "normal":
        sigma1 = require_sigma(prior1, sigma1)
        sigma2 = require_sigma(prior2, sigma2)
    direction = "le" if decision.lower_tail else "ge"

    def crit_fn(y2):
        post2 = _posterior_at(prior2, family, y2, n2, sigma2)

        def success(y1) -> bool:
            post1 = _posterior_at(prior1, family, y1, n1, sigma1)
            return decide_2s(post1, post2, decision)

        if family == "binomial":
            return (_search_min_true(0, int(n1), success) if direction == "ge"
                    else _search_max_true(0, int(n1), success))
        if family == "poisson":
            hi = _extend_poisson_cap(_poisson_count_cap(prior1, n1), success, direction)
            return (_search_min_true(0, hi, success) if direction == "ge"
                    else _search_max_true(0, hi, success))

        def margin(y1: float) -> float:
            post1 = _posterior_at(prior1, family, y1, n1, sigma1)
            return _margin_2s(post1, post2, decision)

        # The critical y1 sits near the observed y2 shifted by the margin.
        return _continuous_crit(
            margin, direction,
            center=float(y2),
            scale=prior1.sd() + sigma1 / np.sqrt(n1) + abs(float(np.max(decision.qc))),
        )

    if family == "binomial":
        bound = Boundary2S(family, int(n1), int(n2), direction, crit_fn)
        for y2 in range(int(n2) + 1):
            bound.crit(y2)
        return bound
    return Boundary2S(family, n1, n2, direction, crit_fn)


# -- operating characteristics -------------------------------------------------

def oc1S(prior: Mixture, n: float, decision: DecisionFunction, theta,
         sigma: float | None = None) -> np.ndarray:
    """P(trial success | true theta) for a one-sample design."""
    bound = boundary1S(prior, n, decision, sigma=sigma)
    family = bound.family
    if family == "normal":
        sigma = require_sigma(prior, sigma)
    thetas = np.atleast_1d(np.asarray(theta, dtype=float))
    _check_theta(family, thetas)
    if bound.never_succeeds():
        val = np.zeros_like(thetas)
    elif bound.always_succeeds():
        val = np.ones_like(thetas)
    else:
        val = np.asarray(_sampling_tail(family, thetas, n, bound.crit, bound.direction, sigma))
    return val if np.ndim(theta) else float(val[0])


def _check_theta(family: str, thetas: np.ndarray) -> None:
    if family == "binomial" and (np.any(thetas < 0) or np.any(thetas > 1)):
        raise ValueError("binomial sampling needs theta in [0, 1]")
    if family == "poisson" and np.any(thetas < 0):
        raise ValueError("poisson sampling needs theta >= 0")


def _gauss_legendre(lo: float, hi: float, panels: int = 4, order: int = 32):
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(lo, hi, panels + 1)
    nodes, weights = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        nodes.append(0.5 * (b - a) * x + 0.5 * (a + b))
        weights.append(0.5 * (b - a) * w)
    return np.concatenate(nodes), np.concatenate(weights)


def _arm1_tail(bound: Boundary2S, family: str, theta1: float, n1: float,
               y2_values, sigma1=None) -> np.ndarray:
    out = np.empty(len(y2_values))
    for i, y2 in enumerate(y2_values):
        c = bound.crit(y2)
        if c is None:
            out[i] = 0.0
        elif not np.isfinite(c):
            out[i] = 1.0 if (c < 0) == (bound.direction == "ge") else 0.0
        else:
            out[i] = _sampling_tail(family, theta1, n1, c, bound.direction, sigma1)
    return out


def oc2S(prior1: Mixture, prior2: Mixture, n1: float, n2: float,
         decision: DecisionFunction, theta1, theta2,
         sigma1: float | None = None, sigma2: float | None = None,
         boundary: Boundary2S | None = None) -> np.ndarray:
    """P(trial success | true theta1, theta2), elementwise over pairs."""
    bound = boundary if boundary is not None else boundary2S(
        prior1, prior2, n1, n2, decision, sigma1, sigma2)
    family = bound.family
    if family == "normal":
        sigma1 = require_sigma(prior1, sigma1)
        sigma2 = require_sigma(prior2, sigma2)
    t1 = np.atleast_1d(np.asarray(theta1, dtype=float))
    t2 = np.atleast_1d(np.asarray(theta2, dtype=float))
    if t1.shape != t2.shape:
        raise ValueError("theta1 and theta2 must have matching shapes")
    _check_theta(family, t1)
    _check_theta(family, t2)
    out = np.empty(t1.shape)
    for i, (a1, a2) in enumerate(zip(t1, t2)):
        if family == "binomial":
            y2 = np.arange(int(n2) + 1)
            pmf = stats.binom.pmf(y2, int(n2), a2)
            out[i] = float(pmf @ _arm1_tail(bound, family, a1, n1, y2, sigma1))
        elif family == "poisson":
            mean2 = n2 * a2
            hi = int(stats.poisson.ppf(1.0 - 1e-6, mean2)) + 3 if mean2 > 0 else 0
            y2 = np.arange(hi + 1)
            pmf = stats.poisson.pmf(y2, mean2)
            out[i] = float(pmf @ _arm1_tail(bound, family, a1, n1, y2, sigma1))
        else:
            se2 = sigma2 / np.sqrt(n2)
            nodes, weights = _gauss_legendre(a2 - 7.5 * se2, a2 + 7.5 * se2)
            dens = stats.norm.pdf(nodes, a2, se2)
            tail = _arm1_tail(bound, family, a1, n1, nodes, sigma1)
            out[i] = float(np.sum(weights * dens * tail))
    out = np.clip(out, 0.0, 1.0)
    return out if np.ndim(theta1) else float(out[0])


# -- probability of success ----------------------------------------------------

def pos1S(prior: Mixture, n: float, decision: DecisionFunction,
          data_prior: Mixture | None = None, sigma: float | None = None) -> float:
    """Predictive probability of success of a one-sample design.

    data_prior generates the future data (defaults to the analysis prior).
    """
    bound = boundary1S(prior, n, decision, sigma=sigma)
    family = bound.family
    src = data_prior if data_prior is not None else prior
    if src.family != prior.family:
        raise ValueError("data prior must match the analysis prior family")
    if family == "normal":
        sig = src.sigma if src.sigma is not None else require_sigma(prior, sigma)
        pred = predictive(src, n, sigma=sig)
    else:
        pred = predictive(src, n)
    if bound.never_succeeds():
        return 0.0
    if bound.always_succeeds():
        return 1.0
    crit = bound.crit
    if bound.direction == "ge":
        if family == "normal":
            return float(1.0 - pred.cdf(crit))
        return float(1.0 - pred.cdf(crit - 1))
    return float(pred.cdf(crit))


def pos2S(prior1: Mixture, prior2: Mixture, n1: float, n2: float,
          decision: DecisionFunction, data_prior1: Mixture | None = None,
          data_prior2: Mixture | None = None, sigma1: float | None = None,
          sigma2: float | None = None, boundary: Boundary2S | None = None) -> float:
    """Predictive probability of success of a two-sample design."""
    bound = boundary if boundary is not None else boundary2S(
        prior1, prior2, n1, n2, decision, sigma1, sigma2)
    family = bound.family
    src1 = data_prior1 if data_prior1 is not None else prior1
    src2 = data_prior2 if data_prior2 is not None else prior2
    if src1.family != prior1.family or src2.family != prior2.family:
        raise ValueError("data priors must match the analysis prior family")
    if family == "normal":
        sigma1 = require_sigma(prior1, sigma1)
        sigma2 = require_sigma(prior2, sigma2)
        pred1 = predictive(src1, n1, sigma=src1.sigma if src1.sigma is not None else sigma1)
        pred2 = predictive(src2, n2, sigma=src2.sigma if src2.sigma is not None else sigma2)
        mix2 = pred2.as_mixture()
        lo = float(mix2.ppf(1e-9))
        hi = float(mix2.ppf(1.0 - 1e-9))
        nodes, weights = _gauss_legendre(lo, hi, panels=8, order=24)
        dens = mix2.pdf(nodes)
        mix1 = pred1.as_mixture()
        tails = np.empty(nodes.size)
        for i, y2 in enumerate(nodes):
            c = bound.crit(y2)
            if c is None:
                tails[i] = 0.0
            elif not np.isfinite(c):
                tails[i] = 1.0 if (c < 0) == (bound.direction == "ge") else 0.0
            elif bound.direction == "ge":
                tails[i] = 1.0 - mix1.cdf(c)
            else:
                tails[i] = mix1.cdf(c)
        return float(np.clip(np.sum(weights * dens * tails), 0.0, 1.0))
    pred1 = predictive(src1, n1)
    pred2 = predictive(src2, n2)
    y2 = pred2.grid(1e-9) if family == "poisson" else np.arange(int(n2) + 1)
    pmf2 = pred2.pmf(y2)
    tails = np.empty(y2.size)
    for i, v in enumerate(y2):
        c = bound.crit(v)
        if c is None:
            tails[i] = 0.0
        elif bound.direction == "ge":
            tails[i] = 1.0 - pred1.cdf(c - 1)
        else:
            tails[i] = pred1.cdf(c)
    return float(np.clip(pmf2 @ tails, 0.0, 1.0))


# -- design containers (service/CLI surface) -----------------------------------

@dataclass(frozen=True, eq=False)
class Design:
    """A one- or two-sample design: priors, sample sizes, decision rule."""

    decision: DecisionFunction
    prior1: Mixture
    n1: float
    prior2: Mixture | None = None
    n2: float | None = None
    sigma1: float | None = None
    sigma2: float | None = None

    def __post_init__(self):
        if self.decision.arity == 2:
            if self.prior2 is None or self.n2 is None:
                raise ValueError("two-sample designs need prior2 and n2")
        else:
            if self.prior2 is not None or self.n2 is not None:
                raise ValueError("one-sample designs take no second arm")
        _family_of(self.prior1)
        if self.n1 <= 0 or (self.n2 is not None and self.n2 <= 0):
            raise ValueError("sample sizes must be positive")

    @property
    def family(self) -> str:
        return _FAMILY_BY_PRIOR[self.prior1.family]

    def boundary(self):
        if self.decision.arity == 1:
            return boundary1S(self.prior1, self.n1, self.decision, sigma=self.sigma1)
        return boundary2S(self.prior1, self.prior2, self.n1, self.n2,
                          self.decision, self.sigma1, self.sigma2)

    def oc(self, theta1, theta2=None, boundary=None):
        if self.decision.arity == 1:
            if theta2 is not None:
                raise ValueError("one-sample designs take a single theta vector")
            return oc1S(self.prior1, self.n1, self.decision, theta1, sigma=self.sigma1)
        if theta2 is None:
            raise ValueError("two-sample designs need theta1 and theta2")
        return oc2S(self.prior1, self.prior2, self.n1, self.n2, self.decision,
                    theta1, theta2, self.sigma1, self.sigma2, boundary=boundary)

    def pos(self, data_prior1=None, data_prior2=None, boundary=None):
        if self.decision.arity == 1:
            if data_prior2 is not None:
                raise ValueError("one-sample designs take a single data prior")
            return pos1S(self.prior1, self.n1, self.decision,
                         data_prior=data_prior1, sigma=self.sigma1)
        return pos2S(self.prior1, self.prior2, self.n1, self.n2, self.decision,
                     data_prior1, data_prior2, self.sigma1, self.sigma2,
                     boundary=boundary)

    def boundary_table(self) -> dict:
        bound = self.boundary()
        if self.decision.arity == 1:
            return bound.to_dict()
        if self.family == "binomial":
            y2 = np.arange(int(self.n2) + 1)
        elif self.family == "poisson":
            y2 = predictive(self.prior2, self.n2).grid(1e-6)
        else:
            sig2 = require_sigma(self.prior2, self.sigma2)
            mix2 = predictive(self.prior2, self.n2, sigma=sig2).as_mixture()
            y2 = np.linspace(float(mix2.ppf(1e-6)), float(mix2.ppf(1.0 - 1e-6)), 101)
        return {
            "family": self.family,
            "n1": self.n1,
            "n2": self.n2,
            "direction": bound.direction,
            "monotone": bound.monotone(y2),
            "table": bound.table(y2),
        }


def design_from_dict(payload: dict) -> Design:
    from .mixtures import mixture_from_dict

    if not isinstance(payload, dict):
        raise ValueError("design payload must be a JSON object")
    allowed = {"decision", "prior1", "prior2", "prior", "n1", "n2", "n",
               "sigma1", "sigma2"}
    extra = set(payload) - allowed
    if extra:
        raise ValueError(f"unknown design fields: {sorted(extra)}")
    if "decision" not in payload:
        raise ValueError("design payload needs a 'decision'")
    decision = decision_from_dict(payload["decision"])
    prior1_payload = payload.get("prior1", payload.get("prior"))
    if prior1_payload is None:
        raise ValueError("design payload needs 'prior1' (or 'prior')")
    n1 = payload.get("n1", payload.get("n"))
    if n1 is None:
        raise ValueError("design payload needs 'n1' (or 'n')")
    prior2 = payload.get("prior2")
    return Design(
        decision=decision,
        prior1=mixture_from_dict(prior1_payload),
        n1=n1,
        prior2=mixture_from_dict(prior2) if prior2 is not None else None,
        n2=payload.get("n2"),
        sigma1=payload.get("sigma1"),
        sigma2=payload.get("sigma2"),
    )
