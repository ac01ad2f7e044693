"""Pydantic request/response models for the HTTP service.

These mirror the package's JSON forms; conversion helpers hand off to
the core types, whose constructors remain the source of truth for
domain validation.
"""
from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field

from ..mixtures import Mixture, make_mixture


class MixtureModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    family: Literal["beta", "normal", "gamma"]
    components: list = Field(min_length=1)
    sigma: Optional[float] = None
    likelihood: Optional[Literal["poisson", "exponential"]] = None

    def to_mixture(self) -> Mixture:
        return make_mixture(self.family, self.components,
                            sigma=self.sigma, likelihood=self.likelihood)

    @classmethod
    def from_mixture(cls, mix: Mixture) -> "MixtureModel":
        return cls(**mix.to_dict())


class DatasetModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    family: Literal["binomial", "normal", "poisson"]
    rows: list = Field(min_length=1)

    def payload(self) -> dict:
        return {"family": self.family, "rows": self.rows}


class HyperPriorsModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    mu_mean: float = 0.0
    mu_sd: float = 2.0
    tau_prior: Literal["half-normal", "truncated-normal", "uniform", "log-normal"] = "half-normal"
    tau_params: list = Field(default=[1.0])


class DecisionModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    pc: list
    qc: list
    lower_tail: Optional[bool] = None
    arity: Literal[1, 2] = 2
    link: Literal["identity", "logit", "log"] = "identity"

    def payload(self) -> dict:
        out = {"pc": self.pc, "qc": self.qc, "arity": self.arity, "link": self.link}
        if self.lower_tail is not None:
            out["lower_tail"] = self.lower_tail
        return out


class DesignModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    decision: DecisionModel
    prior1: MixtureModel
    n1: float
    prior2: Optional[MixtureModel] = None
    n2: Optional[float] = None
    sigma1: Optional[float] = None
    sigma2: Optional[float] = None

    def payload(self) -> dict:
        out: dict = {"decision": self.decision.payload(),
                     "prior1": self.prior1.model_dump(), "n1": self.n1}
        if self.prior2 is not None:
            out["prior2"] = self.prior2.model_dump()
        if self.n2 is not None:
            out["n2"] = self.n2
        if self.sigma1 is not None:
            out["sigma1"] = self.sigma1
        if self.sigma2 is not None:
            out["sigma2"] = self.sigma2
        return out


# -- requests -----------------------------------------------------------------

class MapRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    data: DatasetModel
    hyperpriors: Optional[HyperPriorsModel] = None
    chains: int = 4
    warmup: int = 1000
    samples: int = 1000
    seed: Optional[int] = None
    include_draws: Literal["none", "theta_star", "all"] = "theta_star"


class FitRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    family: Literal["beta", "normal", "gamma"]
    sample: Optional[list] = None
    analysis: Optional[dict] = None
    components: Optional[int] = None
    k_max: int = 4
    seed: Optional[int] = None
    likelihood: Optional[Literal["poisson", "exponential"]] = None


class RobustifyRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    mixture: MixtureModel
    weight: float
    mean: float
    n: float = 1.0
    sigma: Optional[float] = None


class EssRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    mixture: MixtureModel
    method: Literal["elir", "moment", "morita", "all"] = "elir"
    sigma: Optional[float] = None
    on_divergence: Literal["error", "inf"] = "error"


class UpdateRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    mixture: MixtureModel
    data: dict
    sigma: Optional[float] = None


class PredictRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    mixture: MixtureModel
    n: float
    sigma: Optional[float] = None


class BoundaryRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    design: DesignModel


class OcRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    design: DesignModel
    theta1: list
    theta2: Optional[list] = None


class PosRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    design: DesignModel
    data_prior1: Optional[MixtureModel] = None
    data_prior2: Optional[MixtureModel] = None


class ForestRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    analysis: dict
    include_svg: bool = False


class PipelineRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    config: dict
    out_dir: Optional[str] = None


# -- responses ----------------------------------------------------------------

class HealthResponse(BaseModel):
    status: str
    version: str


class MixtureResponse(BaseModel):
    mixture: MixtureModel


class PredictResponse(BaseModel):
    predictive: dict


class EssResponse(BaseModel):
    values: dict


class BoundaryResponse(BaseModel):
    boundary: dict


class OcResponse(BaseModel):
    rows: list


class PosResponse(BaseModel):
    prob_success: float


class ForestResponse(BaseModel):
    rows: list
    svg: Optional[str] = None


class MapResponse(BaseModel):
    # draws is deliberately undeclared: it must appear only when the
    # request asked for draws, and a declared Optional would serialize
    # as an explicit null
    model_config = ConfigDict(extra="allow")

    kind: str
    config: dict
    dataset: dict
    summary: dict
    shrinkage: list
    diagnostics: dict


class FitResponse(BaseModel):
    best: dict
    candidates: list


class PipelineResponse(BaseModel):
    model_config = ConfigDict(extra="allow")

    kind: str
