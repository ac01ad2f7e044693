"""Forest-plot data, a static SVG renderer, and pipeline orchestration.

The pipeline chains the full workflow: historical data -> MCMC
meta-analysis -> mixture approximation of the new-study prediction ->
robustification -> effective sample sizes -> design evaluation, then
bundles everything into one JSON report (plus an SVG forest plot).
"""
from __future__ import annotations

import datetime as _dt
import json
import os

import numpy as np
from scipy import stats

from .data import StudyDataset, dataset_from_dict, read_csv
from .design import Design, decision_from_dict
from .emfit import auto_fit, fit_mixture
from .ess import ess
from .mapmcmc import HyperPriors, gmap, hyperpriors_from_dict
from .mixtures import Mixture, mixture_from_dict, robustify, with_sigma

_FIT_FAMILY = {"binomial": "beta", "normal": "normal", "poisson": "gamma"}


# -- forest data -------------------------------------------------------------

def _raw_interval(family: str, row: dict, level: float = 0.95):
    """Point estimate and exact (binomial/poisson) or Wald (normal) CI."""
    alpha = 1.0 - level
    if family == "binomial":
        r, n = row["r"], row["n"]
        est = r / n
        lo = 0.0 if r == 0 else float(stats.beta.ppf(alpha / 2, r, n - r + 1))
        hi = 1.0 if r == n else float(stats.beta.ppf(1 - alpha / 2, r + 1, n - r))
        return est, lo, hi
    if family == "normal":
        z = float(stats.norm.ppf(1 - alpha / 2))
        y, se = row["y"], row["se"]
        return y, y - z * se, y + z * se
    c, e = row["count"], row["exposure"]
    est = c / e
    lo = 0.0 if c == 0 else float(stats.gamma.ppf(alpha / 2, c) / e)
    hi = float(stats.gamma.ppf(1 - alpha / 2, c + 1) / e)
    return est, lo, hi


def forest_rows(analysis: dict) -> list:
    """Per-study raw and shrunken intervals plus the new-study row.

    Accepts the serialized analysis (MapAnalysis.to_dict()); shrunken
    intervals come from the stored per-study posterior summaries.
    """
    if not isinstance(analysis, dict) or "dataset" not in analysis or "shrinkage" not in analysis:
        raise ValueError("forest data needs a map analysis payload with dataset and shrinkage")
    family = analysis["dataset"]["family"]
    shrink_by_study = {row["study"]: row for row in analysis["shrinkage"]}
    rows = []
    for raw in analysis["dataset"]["rows"]:
        study = raw["study"]
        if study not in shrink_by_study:
            raise ValueError(f"analysis payload is missing shrinkage for study {study!r}")
        est, lo, hi = _raw_interval(family, raw)
        sh = shrink_by_study[study]
        rows.append({
            "label": study,
            "kind": "study",
            "estimate": float(est),
            "lower": float(lo),
            "upper": float(hi),
            "model_median": sh["quantiles"]["50"],
            "model_lower": sh["quantiles"]["2.5"],
            "model_upper": sh["quantiles"]["97.5"],
        })
    for label, kind, key in (("typical", "typical", "mu_typical"),
                             ("MAP", "prediction", "theta_star")):
        stats = analysis["summary"][key]
        rows.append({
            "label": label,
            "kind": kind,
            "estimate": None,
            "lower": None,
            "upper": None,
            "model_median": stats["quantiles"]["50"],
            "model_lower": stats["quantiles"]["2.5"],
            "model_upper": stats["quantiles"]["97.5"],
        })
    return rows


def forest_svg(rows: list, title: str = "") -> str:
    """Render forest rows to a standalone SVG string.

    Gray whiskers show the raw per-study intervals, filled whiskers the
    model (shrunken) intervals, and the bottom row the new-study
    prediction.
    """
    if not rows:
        raise ValueError("no rows to render")
    span = [
        v for r in rows
        for v in (r["lower"], r["upper"], r["model_lower"], r["model_upper"])
        if v is not None
    ]
    x_lo, x_hi = min(span), max(span)
    pad = 0.05 * (x_hi - x_lo or 1.0)
    x_lo, x_hi = x_lo - pad, x_hi + pad
    width, row_h, left, right, top = 640, 28, 150, 30, 40
    height = top + row_h * len(rows) + 50
    plot_w = width - left - right

    def sx(v: float) -> float:
        return left + (v - x_lo) / (x_hi - x_lo) * plot_w

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    if title:
        parts.append(f'<text x="{left}" y="20" font-size="14" font-weight="bold">{title}</text>')
    for i, r in enumerate(rows):
        y = top + row_h * (i + 0.5)
        parts.append(f'<text x="8" y="{y + 4:.1f}">{r["label"]}</text>')
        if r["lower"] is not None:
            parts.append(
                f'<line x1="{sx(r["lower"]):.1f}" y1="{y - 5:.1f}" '
                f'x2="{sx(r["upper"]):.1f}" y2="{y - 5:.1f}" stroke="#999" stroke-width="2"/>'
            )
            parts.append(
                f'<rect x="{sx(r["estimate"]) - 3:.1f}" y="{y - 8:.1f}" width="6" height="6" fill="#999"/>'
            )
        palette = {"study": "#1b6ca8", "typical": "#3f7d5c"}
        color = palette.get(r["kind"], "#b4441f")
        yy = y + 5 if r["kind"] == "study" else y
        parts.append(
            f'<line x1="{sx(r["model_lower"]):.1f}" y1="{yy:.1f}" '
            f'x2="{sx(r["model_upper"]):.1f}" y2="{yy:.1f}" stroke="{color}" stroke-width="2"/>'
        )
        parts.append(
            f'<circle cx="{sx(r["model_median"]):.1f}" cy="{yy:.1f}" r="4" fill="{color}"/>'
        )
    axis_y = top + row_h * len(rows) + 12
    parts.append(
        f'<line x1="{left}" y1="{axis_y}" x2="{left + plot_w}" y2="{axis_y}" stroke="black"/>'
    )
    for t in np.linspace(x_lo, x_hi, 6):
        parts.append(
            f'<line x1="{sx(t):.1f}" y1="{axis_y}" x2="{sx(t):.1f}" y2="{axis_y + 5}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{sx(t):.1f}" y="{axis_y + 18}" text-anchor="middle">{t:.3g}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts)


# -- pipeline ----------------------------------------------------------------

def _check_keys(payload: dict, allowed: set, where: str) -> None:
    extra = set(payload) - allowed
    if extra:
        raise ValueError(f"unknown {where} fields: {sorted(extra)}")


def _load_dataset(cfg: dict) -> StudyDataset:
    _check_keys(cfg, {"file", "family", "rows", "sigma"}, "data")
    if "file" in cfg:
        if "family" not in cfg:
            raise ValueError("data.file needs data.family")
        return read_csv(cfg["file"], cfg["family"])
    return dataset_from_dict({"family": cfg.get("family"), "rows": cfg.get("rows")})


def _resolve_prior(spec, named: dict) -> Mixture:
    if isinstance(spec, str):
        if spec not in named or named[spec] is None:
            raise ValueError(f"design refers to prior {spec!r} which this pipeline did not produce")
        return named[spec]
    return mixture_from_dict(spec)


def run_pipeline(config: dict, out_dir: str | None = None) -> dict:
    """Run the full workflow described by a config object.

    Config sections: data (required), map, fit, robustify, ess, design.
    Design priors may name pipeline products ("map", "robust") instead
    of spelling out a mixture.  Returns the combined report; when
    out_dir is given also writes report.json, forest.svg and the
    produced priors as JSON files.
    """
    if not isinstance(config, dict):
        raise ValueError("pipeline config must be a JSON object")
    _check_keys(config, {"seed", "data", "map", "fit", "robustify", "ess", "design"}, "config")
    if "data" not in config:
        raise ValueError("pipeline config needs a 'data' section")
    run_seed = config.get("seed")

    dataset = _load_dataset(config["data"])
    sigma = config["data"].get("sigma")

    map_cfg = dict(config.get("map", {}))
    _check_keys(map_cfg, {"hyperpriors", "chains", "warmup", "samples", "seed"}, "map")
    hyper = hyperpriors_from_dict(map_cfg["hyperpriors"]) if "hyperpriors" in map_cfg else HyperPriors()
    analysis = gmap(
        dataset, hyper,
        chains=int(map_cfg.get("chains", 4)),
        warmup=int(map_cfg.get("warmup", 1000)),
        samples=int(map_cfg.get("samples", 1000)),
        seed=map_cfg.get("seed", run_seed),
    )

    fit_cfg = dict(config.get("fit", {}))
    _check_keys(fit_cfg, {"components", "k_max", "seed"}, "fit")
    if "seed" not in fit_cfg and run_seed is not None:
        fit_cfg["seed"] = int(run_seed) + 1
    fit_family = _FIT_FAMILY[dataset.family]
    likelihood = "poisson" if fit_family == "gamma" else None
    if "components" in fit_cfg:
        fit = fit_mixture(analysis.theta_star, int(fit_cfg["components"]), fit_family,
                          seed=fit_cfg.get("seed"), likelihood=likelihood)
        fit_payload = fit.to_dict()
        map_mix = fit.mixture
    else:
        auto = auto_fit(analysis.theta_star, fit_family,
                        k_max=int(fit_cfg.get("k_max", 4)),
                        seed=fit_cfg.get("seed"), likelihood=likelihood)
        fit_payload = auto.to_dict()
        map_mix = auto.best.mixture
    if fit_family == "normal" and sigma is not None:
        map_mix = with_sigma(map_mix, float(sigma))

    robust_mix = None
    if "robustify" in config:
        rob_cfg = dict(config["robustify"])
        _check_keys(rob_cfg, {"weight", "mean", "n", "sigma"}, "robustify")
        robust_mix = robustify(
            map_mix, float(rob_cfg["weight"]), float(rob_cfg["mean"]),
            n=float(rob_cfg.get("n", 1.0)), sigma=rob_cfg.get("sigma"),
        )

    ess_cfg = dict(config.get("ess", {}))
    _check_keys(ess_cfg, {"methods", "sigma"}, "ess")
    methods = ess_cfg.get("methods", ["elir", "moment", "morita"])
    ess_sigma = ess_cfg.get("sigma", sigma)
    ess_payload = {
        name: {m: float(ess(mix, method=m, sigma=ess_sigma)) for m in methods}
        for name, mix in (("map", map_mix), ("robust", robust_mix))
        if mix is not None
    }

    named = {"map": map_mix, "robust": robust_mix}
    design_payload = None
    if "design" in config:
        d_cfg = dict(config["design"])
        _check_keys(d_cfg, {"decision", "prior1", "prior2", "n1", "n2",
                            "sigma1", "sigma2", "theta1", "theta2", "pos"}, "design")
        decision = decision_from_dict(d_cfg["decision"])
        prior1 = _resolve_prior(d_cfg["prior1"], named)
        prior2 = _resolve_prior(d_cfg["prior2"], named) if "prior2" in d_cfg else None
        design = Design(
            decision=decision, prior1=prior1, n1=d_cfg["n1"], prior2=prior2,
            n2=d_cfg.get("n2"), sigma1=d_cfg.get("sigma1"), sigma2=d_cfg.get("sigma2"),
        )
        bound = design.boundary()
        design_payload = {"boundary": design.boundary_table()}
        if "theta1" in d_cfg:
            t1 = np.asarray(d_cfg["theta1"], dtype=float)
            if design.decision.arity == 2:
                t2 = np.asarray(d_cfg.get("theta2", d_cfg["theta1"]), dtype=float)
                probs = design.oc(t1, t2, boundary=bound)
                design_payload["oc"] = [
                    {"theta1": float(a), "theta2": float(b), "prob_success": float(p)}
                    for a, b, p in zip(t1, t2, np.atleast_1d(probs))
                ]
            else:
                probs = design.oc(t1)
                design_payload["oc"] = [
                    {"theta1": float(a), "prob_success": float(p)}
                    for a, p in zip(t1, np.atleast_1d(probs))
                ]
        if d_cfg.get("pos"):
            design_payload["pos"] = float(design.pos(boundary=bound)) \
                if design.decision.arity == 2 else float(design.pos())

    analysis_dict = analysis.to_dict(include_draws="none")
    rows = forest_rows(analysis_dict)
    report = {
        "kind": "pipeline_report",
        "created": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "config": config,
        "map": analysis_dict,
        "fit": fit_payload,
        "map_prior": map_mix.to_dict(),
        "robust_prior": robust_mix.to_dict() if robust_mix is not None else None,
        "ess": ess_payload,
        "design": design_payload,
        "forest": rows,
    }
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        _write_json(os.path.join(out_dir, "report.json"), report)
        _write_json(os.path.join(out_dir, "map_prior.json"), map_mix.to_dict())
        if robust_mix is not None:
            _write_json(os.path.join(out_dir, "robust_prior.json"), robust_mix.to_dict())
        with open(os.path.join(out_dir, "forest.svg"), "w", encoding="utf-8") as fh:
            fh.write(forest_svg(rows, title="Meta-analytic shrinkage"))
    return report


def _write_json(path: str, payload) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
