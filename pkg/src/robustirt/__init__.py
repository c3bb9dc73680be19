"""Robust probit scaling of legislative roll-call votes.

Estimates legislator positions and bill parameters under a probit item
response model augmented with sparse per-cell shift parameters that absorb
protest votes, so a handful of insincere votes cannot drag an extreme
legislator toward the center.
"""

from .analysis import (
    IRCData,
    PivotalSummary,
    ProtestRow,
    QuantileRow,
    compare_fits,
    empirical_quantile,
    empirical_quantiles,
    irc_points,
    pivotal_quantities,
    protest_report,
)
from .em import (
    DivergenceError,
    InitMode,
    InitSpec,
    fit,
    preliminary_then_main,
)
from .identify import (
    AnchorMode,
    AnchorSpec,
    IdentificationError,
    procrustes_align,
    sign_anchor,
    standardize,
)
from .model import (
    BillMeta,
    FitResult,
    Hyperparams,
    LegislatorMeta,
    ModelState,
    Party,
    Penalty,
    Vote,
    VoteMatrix,
    inverse_mills,
    lambda_from_pi,
    linear_predictor,
    penalized_log_posterior,
    yea_probability,
)
from .preprocess import (
    EmptyMatrixError,
    PreprocessConfig,
    PreprocessReport,
    pipeline,
)
from .simulate import (
    SimulatedData,
    SimulationSpec,
    inject_protests,
    run_simulation,
    synthetic_truth,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "Vote", "Party", "Penalty",
    "LegislatorMeta", "BillMeta", "VoteMatrix",
    "Hyperparams", "ModelState", "FitResult",
    "linear_predictor", "yea_probability", "inverse_mills",
    "penalized_log_posterior", "lambda_from_pi",
    "DivergenceError", "InitMode", "InitSpec", "fit", "preliminary_then_main",
    "IdentificationError", "AnchorMode", "AnchorSpec",
    "standardize", "sign_anchor", "procrustes_align",
    "SimulationSpec", "SimulatedData", "synthetic_truth",
    "inject_protests", "run_simulation",
    "EmptyMatrixError", "PreprocessConfig", "PreprocessReport", "pipeline",
    "QuantileRow", "PivotalSummary", "ProtestRow", "IRCData",
    "empirical_quantiles", "empirical_quantile", "protest_report",
    "irc_points", "pivotal_quantities", "compare_fits",
]
