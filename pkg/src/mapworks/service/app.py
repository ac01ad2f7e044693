"""FastAPI application exposing the workflow as JSON endpoints.

Domain validation errors (ValueError) map to HTTP 422; numerical
failures (NumericalError) map to HTTP 500.  Both carry a machine
readable body: {"error": {"kind": ..., "message": ...}}.
"""
from __future__ import annotations

import math

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..conjugate import data_from_dict, posterior_update, predictive
from ..data import dataset_from_dict
from ..emfit import auto_fit, fit_mixture
from ..errors import NumericalError
from ..ess import ess
from ..mapmcmc import HyperPriors, gmap, hyperpriors_from_dict
from ..mixtures import robustify
from ..reports import forest_rows, forest_svg, run_pipeline
from . import schemas as s


def create_app() -> FastAPI:
    app = FastAPI(title="mapworks", version=__version__,
                  description="Meta-analytic-predictive priors and design evaluation")

    @app.exception_handler(ValueError)
    async def _validation_error(request: Request, exc: ValueError):
        return JSONResponse(
            status_code=422,
            content={"error": {"kind": "validation", "message": str(exc)}},
        )

    @app.exception_handler(NumericalError)
    async def _numerical_error(request: Request, exc: NumericalError):
        return JSONResponse(
            status_code=500,
            content={"error": {"kind": "numerical", "message": str(exc)}},
        )

    @app.get("/health", response_model=s.HealthResponse)
    async def health():
        return s.HealthResponse(status="ok", version=__version__)

    @app.post("/map", response_model=s.MapResponse)
    async def map_endpoint(req: s.MapRequest):
        dataset = dataset_from_dict(req.data.payload())
        hyper = (hyperpriors_from_dict(req.hyperpriors.model_dump())
                 if req.hyperpriors is not None else HyperPriors())
        analysis = gmap(dataset, hyper, chains=req.chains, warmup=req.warmup,
                        samples=req.samples, seed=req.seed)
        return analysis.to_dict(include_draws=req.include_draws)

    @app.post("/fit", response_model=s.FitResponse)
    async def fit_endpoint(req: s.FitRequest):
        if (req.sample is None) == (req.analysis is None):
            raise ValueError("fit needs exactly one of 'sample' or 'analysis'")
        if req.sample is not None:
            sample = req.sample
        else:
            draws = req.analysis.get("draws") if isinstance(req.analysis, dict) else None
            if not draws or "theta_star" not in draws:
                raise ValueError("analysis payload has no draws.theta_star to fit")
            sample = [v for chain in draws["theta_star"] for v in
                      (chain if isinstance(chain, list) else [chain])]
        if req.components is not None:
            fit = fit_mixture(sample, req.components, req.family,
                              seed=req.seed, likelihood=req.likelihood)
            return {"best": fit.to_dict(),
                    "candidates": [{"k": fit.requested_k, "aic": fit.aic,
                                    "loglik": fit.loglik, "converged": fit.converged,
                                    "final_k": fit.mixture.k}]}
        auto = auto_fit(sample, req.family, k_max=req.k_max,
                        seed=req.seed, likelihood=req.likelihood)
        return auto.to_dict()

    @app.post("/robustify", response_model=s.MixtureResponse)
    async def robustify_endpoint(req: s.RobustifyRequest):
        mix = robustify(req.mixture.to_mixture(), req.weight, req.mean,
                        n=req.n, sigma=req.sigma)
        return s.MixtureResponse(mixture=s.MixtureModel.from_mixture(mix))

    @app.post("/ess", response_model=s.EssResponse)
    async def ess_endpoint(req: s.EssRequest):
        mix = req.mixture.to_mixture()
        methods = ("elir", "moment", "morita") if req.method == "all" else (req.method,)
        values = {}
        for m in methods:
            v = ess(mix, method=m, sigma=req.sigma, on_divergence=req.on_divergence)
            values[m] = v if math.isfinite(v) else ("-inf" if v < 0 else "inf")
        return s.EssResponse(values=values)

    @app.post("/update", response_model=s.MixtureResponse)
    async def update_endpoint(req: s.UpdateRequest):
        prior = req.mixture.to_mixture()
        data = data_from_dict(req.data, sigma=req.sigma if req.sigma is not None else prior.sigma)
        post = posterior_update(prior, data, sigma=req.sigma)
        return s.MixtureResponse(mixture=s.MixtureModel.from_mixture(post))

    @app.post("/predict", response_model=s.PredictResponse)
    async def predict_endpoint(req: s.PredictRequest):
        pred = predictive(req.mixture.to_mixture(), req.n, sigma=req.sigma)
        return s.PredictResponse(predictive=pred.to_dict())

    @app.post("/boundary", response_model=s.BoundaryResponse)
    async def boundary_endpoint(req: s.BoundaryRequest):
        design = _design(req.design)
        return s.BoundaryResponse(boundary=design.boundary_table())

    @app.post("/oc", response_model=s.OcResponse)
    async def oc_endpoint(req: s.OcRequest):
        design = _design(req.design)
        if design.decision.arity == 2:
            theta2 = req.theta2 if req.theta2 is not None else req.theta1
            if len(theta2) != len(req.theta1):
                raise ValueError("theta1 and theta2 must have the same length")
            probs = design.oc(req.theta1, theta2)
            rows = [{"theta1": float(a), "theta2": float(b), "prob_success": float(p)}
                    for a, b, p in zip(req.theta1, theta2, probs)]
        else:
            if req.theta2 is not None:
                raise ValueError("one-sample designs take a single theta vector")
            probs = design.oc(req.theta1)
            rows = [{"theta1": float(a), "prob_success": float(p)}
                    for a, p in zip(req.theta1, probs)]
        return s.OcResponse(rows=rows)

    @app.post("/pos", response_model=s.PosResponse)
    async def pos_endpoint(req: s.PosRequest):
        design = _design(req.design)
        dp1 = req.data_prior1.to_mixture() if req.data_prior1 is not None else None
        dp2 = req.data_prior2.to_mixture() if req.data_prior2 is not None else None
        return s.PosResponse(prob_success=design.pos(dp1, dp2))

    @app.post("/forest", response_model=s.ForestResponse)
    async def forest_endpoint(req: s.ForestRequest):
        rows = forest_rows(req.analysis)
        svg = forest_svg(rows, title="Meta-analytic shrinkage") if req.include_svg else None
        return s.ForestResponse(rows=rows, svg=svg)

    @app.post("/pipeline", response_model=s.PipelineResponse)
    async def pipeline_endpoint(req: s.PipelineRequest):
        return run_pipeline(req.config, out_dir=req.out_dir)

    return app


def _design(model: s.DesignModel):
    from ..design import design_from_dict

    return design_from_dict(model.payload())
