"""Hierarchical meta-analytic model fit by MCMC.

The model places study effects on a transformed scale (logit for
binomial data, identity for normal, log for poisson):

    g(theta_j) = mu + tau * z_j,   z_j ~ Normal(0, 1)
    mu ~ Normal(mu_mean, mu_sd^2),  tau ~ chosen heterogeneity prior

and the prediction for a new study is g(theta*) = mu + tau * z_new.

Sampling runs adaptive random-walk Metropolis-within-Gibbs on the
non-centered coordinates (mu, log tau, z_1..z_J).  The non-centered
parameterization is load-bearing: sampling theta_j directly collapses
into the funnel at small tau and leaves tau badly mixed.  Step sizes
adapt toward 0.44 acceptance during warmup and freeze afterwards.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import special

from .data import StudyDataset

_LINKS = {"binomial": "logit", "normal": "identity", "poisson": "log"}
_TAU_PRIORS = ("half-normal", "truncated-normal", "uniform", "log-normal")

_ADAPT_WINDOW = 50
_TARGET_ACCEPT = 0.44


@dataclass(frozen=True)
class HyperPriors:
    """Priors for the population mean (transformed scale) and tau."""

    mu_mean: float = 0.0
    mu_sd: float = 2.0
    tau_prior: str = "half-normal"
    tau_params: tuple = (1.0,)

    def __post_init__(self):
        if not (np.isfinite(self.mu_mean) and np.isfinite(self.mu_sd) and self.mu_sd > 0):
            raise ValueError("mu prior needs a finite mean and sd > 0")
        if self.tau_prior not in _TAU_PRIORS:
            raise ValueError(f"tau prior must be one of {_TAU_PRIORS}")
        p = tuple(float(v) for v in self.tau_params)
        object.__setattr__(self, "tau_params", p)
        if self.tau_prior == "half-normal":
            if len(p) != 1 or p[0] <= 0:
                raise ValueError("half-normal tau prior takes one positive scale")
        elif self.tau_prior == "truncated-normal":
            if len(p) != 2 or p[1] <= 0:
                raise ValueError("truncated-normal tau prior takes (mean, sd > 0)")
        elif self.tau_prior == "uniform":
            if len(p) != 2 or not 0 <= p[0] < p[1]:
                raise ValueError("uniform tau prior takes bounds 0 <= lo < hi")
        else:
            if len(p) != 2 or p[1] <= 0:
                raise ValueError("log-normal tau prior takes (log-mean, log-sd > 0)")

    def tau_log_density(self, tau: float, u: float) -> float:
        """Unnormalized log prior of tau expressed in u = log(tau)."""
        p = self.tau_params
        if self.tau_prior == "half-normal":
            return -0.5 * (tau / p[0]) ** 2 + u
        if self.tau_prior == "truncated-normal":
            return -0.5 * ((tau - p[0]) / p[1]) ** 2 + u
        if self.tau_prior == "uniform":
            return u if p[0] <= tau <= p[1] else -np.inf
        return -0.5 * ((u - p[0]) / p[1]) ** 2

    def tau_init(self, rng: np.random.Generator) -> float:
        p = self.tau_params
        if self.tau_prior == "half-normal":
            draw = abs(rng.normal(0.0, p[0]))
        elif self.tau_prior == "truncated-normal":
            draw = abs(rng.normal(p[0], p[1]))
        elif self.tau_prior == "uniform":
            # keep the start strictly inside the support; a floor that
            # overshoots the upper bound would wedge the chain at a
            # zero-density point
            lo = max(p[0], 1e-6 * p[1])
            return float(min(max(rng.uniform(p[0], p[1]), lo), p[1]))
        else:
            draw = np.exp(rng.normal(p[0], p[1]))
        return float(max(draw, 1e-3))

    def to_dict(self) -> dict:
        return {
            "mu_mean": self.mu_mean,
            "mu_sd": self.mu_sd,
            "tau_prior": self.tau_prior,
            "tau_params": list(self.tau_params),
        }


def hyperpriors_from_dict(payload: dict) -> HyperPriors:
    if not isinstance(payload, dict):
        raise ValueError("hyperpriors payload must be a JSON object")
    extra = set(payload) - {"mu_mean", "mu_sd", "tau_prior", "tau_params"}
    if extra:
        raise ValueError(f"unknown hyperprior fields: {sorted(extra)}")
    kwargs = dict(payload)
    if "tau_params" in kwargs:
        kwargs["tau_params"] = tuple(kwargs["tau_params"])
    return HyperPriors(**kwargs)


def _loglik_fn(dataset: StudyDataset):
    """Per-study log likelihood of the transformed effects (constants dropped)."""
    if dataset.family == "binomial":
        r = dataset.column("r")
        n = dataset.column("n")
        return lambda th: r * th - n * np.logaddexp(0.0, th)
    if dataset.family == "normal":
        y = dataset.column("y")
        se = dataset.column("se")
        return lambda th: -0.5 * ((y - th) / se) ** 2
    c = dataset.column("count")
    e = dataset.column("exposure")
    return lambda th: c * th - e * np.exp(np.minimum(th, 700.0))


def _empirical_transformed(dataset: StudyDataset) -> np.ndarray:
    if dataset.family == "binomial":
        r = dataset.column("r")
        n = dataset.column("n")
        return np.log((r + 0.5) / (n - r + 0.5))
    if dataset.family == "normal":
        return dataset.column("y").copy()
    return np.log((dataset.column("count") + 0.5) / dataset.column("exposure"))


def inverse_link(family: str, x):
    if family == "binomial":
        return special.expit(x)
    if family == "poisson":
        return np.exp(x)
    return x


def split_rhat(chains: np.ndarray) -> float:
    """Split-Rhat over an array of shape (chains, draws).

    Each chain is halved; NaN is returned for degenerate inputs
    (identical chains or zero within-sequence variance).
    """
    c, s = chains.shape
    if s < 4:
        return float("nan")
    if c > 1 and all(np.array_equal(chains[0], chains[i]) for i in range(1, c)):
        return float("nan")
    half = s // 2
    seqs = np.concatenate([chains[:, :half], chains[:, half:2 * half]], axis=0)
    n = seqs.shape[1]
    within = seqs.var(axis=1, ddof=1)
    w = within.mean()
    if w <= 0:
        return float("nan")
    b_over_n = seqs.mean(axis=1).var(ddof=1)
    var_plus = (n - 1) / n * w + b_over_n
    return float(np.sqrt(var_plus / w))


def _run_chain(rng: np.random.Generator, loglik, emp: np.ndarray,
               hyper: HyperPriors, warmup: int, samples: int):
    j = emp.size
    mu0, s0 = hyper.mu_mean, hyper.mu_sd
    mu = float(rng.normal(mu0, s0))
    tau = hyper.tau_init(rng)
    u = float(np.log(tau))
    # data-informed start, clipped so a tiny tau cannot blow z up
    z = np.clip((emp - mu) / tau, -3.0, 3.0) + 0.1 * rng.standard_normal(j)

    step_mu, step_u = 0.5, 0.5
    step_z = np.full(j, 0.5)
    acc_mu = acc_u = 0
    acc_z = np.zeros(j)
    batch = 0
    kept_acc = np.zeros(2 + j)

    ll = loglik(mu + tau * z)
    out_mu = np.empty(samples)
    out_tau = np.empty(samples)
    out_z = np.empty((samples, j))
    out_star = np.empty(samples)

    for it in range(warmup + samples):
        # mu move: touches every study plus the mu prior
        mu_p = mu + step_mu * rng.standard_normal()
        ll_p = loglik(mu_p + tau * z)
        num = ll_p.sum() - 0.5 * ((mu_p - mu0) / s0) ** 2
        den = ll.sum() - 0.5 * ((mu - mu0) / s0) ** 2
        if np.log(rng.uniform()) < num - den:
            mu, ll = mu_p, ll_p
            acc_mu += 1

        # log-tau move: touches every study plus the tau prior
        u_p = u + step_u * rng.standard_normal()
        tau_p = float(np.exp(u_p))
        ll_p = loglik(mu + tau_p * z)
        num = ll_p.sum() + hyper.tau_log_density(tau_p, u_p)
        den = ll.sum() + hyper.tau_log_density(tau, u)
        if np.log(rng.uniform()) < num - den:
            u, tau, ll = u_p, tau_p, ll_p
            acc_u += 1

        # z moves are conditionally independent across studies
        z_p = z + step_z * rng.standard_normal(j)
        ll_p = loglik(mu + tau * z_p)
        accept = np.log(rng.uniform(size=j)) < (ll_p - 0.5 * z_p**2) - (ll - 0.5 * z**2)
        z = np.where(accept, z_p, z)
        ll = np.where(accept, ll_p, ll)
        acc_z += accept

        if it < warmup:
            if (it + 1) % _ADAPT_WINDOW == 0:
                batch += 1
                delta = min(0.1, batch**-0.5)
                step_mu *= np.exp(delta if acc_mu / _ADAPT_WINDOW > _TARGET_ACCEPT else -delta)
                step_u *= np.exp(delta if acc_u / _ADAPT_WINDOW > _TARGET_ACCEPT else -delta)
                step_z *= np.exp(np.where(acc_z / _ADAPT_WINDOW > _TARGET_ACCEPT, delta, -delta))
                acc_mu = acc_u = 0
                acc_z = np.zeros(j)
        else:
            keep = it - warmup
            if keep == 0:
                acc_mu = acc_u = 0
                acc_z = np.zeros(j)
            out_mu[keep] = mu
            out_tau[keep] = tau
            out_z[keep] = z
            out_star[keep] = mu + tau * rng.standard_normal()
    kept_acc[0] = acc_mu / samples
    kept_acc[1] = acc_u / samples
    kept_acc[2:] = acc_z / samples
    return out_mu, out_tau, out_z, out_star, kept_acc


@dataclass(frozen=True, eq=False)
class MapAnalysis:
    """Posterior draws and summaries of the meta-analytic model."""

    dataset: StudyDataset
    hyper: HyperPriors
    chains: int
    warmup: int
    samples: int
    seed: int | None
    mu: np.ndarray          # (chains, samples), transformed scale
    tau: np.ndarray         # (chains, samples)
    theta: np.ndarray       # (chains, samples, studies), transformed scale
    theta_star_t: np.ndarray  # (chains, samples), transformed scale
    acceptance: dict

    @property
    def family(self) -> str:
        return self.dataset.family

    @property
    def link(self) -> str:
        return _LINKS[self.family]

    @cached_property
    def theta_star(self) -> np.ndarray:
        """New-study (MAP prior) draws on the response scale, flattened."""
        return np.asarray(inverse_link(self.family, self.theta_star_t)).ravel()

    @cached_property
    def rhat(self) -> dict:
        per_theta = [split_rhat(self.theta[:, :, j]) for j in range(self.theta.shape[2])]
        values = {
            "mu": split_rhat(self.mu),
            "tau": split_rhat(self.tau),
            "theta": per_theta,
        }
        pool = [values["mu"], values["tau"], *per_theta]
        finite = [v for v in pool if np.isfinite(v)]
        values["max"] = max(finite) if finite else float("nan")
        return values

    def _stats(self, draws: np.ndarray) -> dict:
        flat = np.asarray(draws).ravel()
        q = np.quantile(flat, [0.025, 0.25, 0.5, 0.75, 0.975])
        return {
            "mean": float(flat.mean()),
            "sd": float(flat.std(ddof=1)),
            "quantiles": {"2.5": float(q[0]), "25": float(q[1]), "50": float(q[2]),
                          "75": float(q[3]), "97.5": float(q[4])},
        }

    @cached_property
    def summary(self) -> dict:
        return {
            "theta_star": self._stats(self.theta_star),
            "tau": self._stats(self.tau),
            "mu_typical": self._stats(inverse_link(self.family, self.mu)),
        }

    @cached_property
    def shrinkage(self) -> list:
        """Per-study posterior of theta_j on the response scale."""
        rows = []
        for jx, study in enumerate(self.dataset.studies):
            draws = inverse_link(self.family, self.theta[:, :, jx])
            rows.append({"study": study, **self._stats(draws)})
        return rows

    def diagnostics(self) -> dict:
        warnings = []
        if not np.isfinite(self.rhat["max"]) or self.rhat["max"] > 1.05:
            warnings.append(f"max split-Rhat {self.rhat['max']:.3f} exceeds 1.05")
        return {
            "rhat": self.rhat,
            "max_rhat": self.rhat["max"],
            "acceptance": self.acceptance,
            "warnings": warnings,
        }

    def to_dict(self, include_draws: str = "theta_star") -> dict:
        if include_draws not in ("none", "theta_star", "all"):
            raise ValueError("include_draws must be 'none', 'theta_star' or 'all'")
        out = {
            "kind": "map_analysis",
            "config": {
                "family": self.family,
                "link": self.link,
                "hyperpriors": self.hyper.to_dict(),
                "chains": self.chains,
                "warmup": self.warmup,
                "samples": self.samples,
                "seed": self.seed,
            },
            "dataset": self.dataset.to_dict(),
            "summary": self.summary,
            "shrinkage": self.shrinkage,
            "diagnostics": self.diagnostics(),
        }
        if include_draws != "none":
            draws = {"theta_star": inverse_link(self.family, self.theta_star_t).tolist()}
            if include_draws == "all":
                draws["mu"] = self.mu.tolist()
                draws["tau"] = self.tau.tolist()
                draws["theta_transformed"] = self.theta.tolist()
            out["draws"] = draws
        return out


def gmap(dataset: StudyDataset, hyper: HyperPriors | None = None, *,
         chains: int = 4, warmup: int = 1000, samples: int = 1000,
         seed: int | None = None) -> MapAnalysis:
    """Fit the meta-analytic model and return draws plus summaries.

    Chains run sequentially from independently spawned RNG streams, so
    results are reproducible for a given seed and chain count.
    """
    hyper = hyper or HyperPriors()
    if chains < 1:
        raise ValueError("need at least one chain")
    if warmup < _ADAPT_WINDOW:
        raise ValueError(f"warmup must be at least {_ADAPT_WINDOW} iterations")
    if samples < 4:
        raise ValueError("need at least four kept draws per chain")
    loglik = _loglik_fn(dataset)
    emp = _empirical_transformed(dataset)
    j = len(dataset)
    streams = np.random.SeedSequence(seed).spawn(chains)
    mu = np.empty((chains, samples))
    tau = np.empty((chains, samples))
    theta = np.empty((chains, samples, j))
    star = np.empty((chains, samples))
    acc = np.empty((chains, 2 + j))
    for c in range(chains):
        rng = np.random.default_rng(streams[c])
        out_mu, out_tau, out_z, out_star, kept_acc = _run_chain(
            rng, loglik, emp, hyper, warmup, samples
        )
        mu[c] = out_mu
        tau[c] = out_tau
        theta[c] = out_mu[:, None] + out_tau[:, None] * out_z
        star[c] = out_star
        acc[c] = kept_acc
    acceptance = {
        "mu": float(acc[:, 0].mean()),
        "tau": float(acc[:, 1].mean()),
        "theta": [float(v) for v in acc[:, 2:].mean(axis=0)],
    }
    return MapAnalysis(
        dataset=dataset, hyper=hyper, chains=chains, warmup=warmup,
        samples=samples, seed=seed, mu=mu, tau=tau, theta=theta,
        theta_star_t=star, acceptance=acceptance,
    )
