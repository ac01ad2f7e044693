"""Meta-analytic-predictive priors and trial design evaluation.

Workflow: historical study data -> MCMC meta-analysis (gmap) -> EM
mixture approximation of the new-study prediction (fit_mixture /
auto_fit) -> robustification (robustify) -> effective sample size (ess)
-> design evaluation (boundaries, operating characteristics,
probability of success).
"""

__version__ = "0.1.0"

from .conjugate import (
    BinomialData,
    ExponentialData,
    NormalData,
    PoissonData,
    Predictive,
    posterior_update,
    predictive,
)
from .data import StudyDataset, dataset_from_dict, read_csv
from .design import (
    Design,
    DecisionFunction,
    boundary1S,
    boundary2S,
    decision1S,
    decision2S,
    design_from_dict,
    oc1S,
    oc2S,
    pos1S,
    pos2S,
)
from .diffdist import diff_cdf, diff_pdf, diff_ppf, diff_rvs
from .emfit import AutoFit, EmFit, auto_fit, fit_mixture
from .errors import NumericalError
from .ess import ess, prior_information
from .mapmcmc import HyperPriors, MapAnalysis, gmap, split_rhat
from .mixtures import (
    Mixture,
    beta_mixture,
    combine,
    gamma_mixture,
    make_mixture,
    mixture_from_dict,
    mixture_from_json,
    normal_mixture,
    robustify,
    with_sigma,
)
from .reports import forest_rows, forest_svg, run_pipeline

__all__ = [
    "AutoFit",
    "BinomialData",
    "DecisionFunction",
    "Design",
    "EmFit",
    "ExponentialData",
    "HyperPriors",
    "MapAnalysis",
    "Mixture",
    "NormalData",
    "NumericalError",
    "PoissonData",
    "Predictive",
    "StudyDataset",
    "auto_fit",
    "beta_mixture",
    "boundary1S",
    "boundary2S",
    "combine",
    "dataset_from_dict",
    "decision1S",
    "decision2S",
    "design_from_dict",
    "diff_cdf",
    "diff_pdf",
    "diff_ppf",
    "diff_rvs",
    "ess",
    "fit_mixture",
    "forest_rows",
    "forest_svg",
    "gamma_mixture",
    "gmap",
    "make_mixture",
    "mixture_from_dict",
    "mixture_from_json",
    "normal_mixture",
    "oc1S",
    "oc2S",
    "pos1S",
    "pos2S",
    "posterior_update",
    "predictive",
    "prior_information",
    "read_csv",
    "robustify",
    "run_pipeline",
    "split_rhat",
    "with_sigma",
]
