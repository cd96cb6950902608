"""Dynamic Bayesian quadratic calibration.

Sequential filtering of drifting regression coefficients, inverse prediction
of unknown reference values with full per-time posteriors, classical static
baselines, and a Monte Carlo harness for coverage studies.
"""

__version__ = "0.1.0"

from .dlrm import StepOutput, filter_step, init_filter, run_filter
from .inverse import (
    InversionContext,
    draw_x0,
    invert_quadratic,
    matched_posterior,
    posterior_x0,
)
from .metrics import (
    CampaignSummary,
    ReplicationResult,
    campaign_summary,
    replication_metrics,
)
from .model import (
    CalibrationPosterior,
    DesignMatrix,
    FilterState,
    RegressionState,
    ScalingTransform,
    VariancePair,
    build_design,
    center_scale,
    rescale_value,
    scale_value,
)
from .simgen import (
    ShockWindow,
    SimScenario,
    VertexPoint,
    apply_shocks,
    gen_beta_path,
    gen_first_stage,
    gen_second_stage,
    vertex_of,
)
from .sir import (
    CalibrationConfig,
    CalibrationRun,
    CandidateSet,
    dynamic_calibrate,
    resample,
    sample_prior,
    weight_candidates,
)
from .static import (
    OlsFit,
    StaticEstimate,
    delta_interval,
    fit_ols_quadratic,
    lundberg_interval,
    static_estimate,
)

__all__ = [
    "CalibrationConfig",
    "CalibrationPosterior",
    "CalibrationRun",
    "CampaignSummary",
    "CandidateSet",
    "DesignMatrix",
    "FilterState",
    "InversionContext",
    "OlsFit",
    "RegressionState",
    "ReplicationResult",
    "ScalingTransform",
    "ShockWindow",
    "SimScenario",
    "StaticEstimate",
    "StepOutput",
    "VariancePair",
    "VertexPoint",
    "apply_shocks",
    "build_design",
    "campaign_summary",
    "center_scale",
    "delta_interval",
    "draw_x0",
    "dynamic_calibrate",
    "filter_step",
    "fit_ols_quadratic",
    "gen_beta_path",
    "gen_first_stage",
    "gen_second_stage",
    "init_filter",
    "invert_quadratic",
    "lundberg_interval",
    "matched_posterior",
    "posterior_x0",
    "replication_metrics",
    "resample",
    "rescale_value",
    "run_filter",
    "sample_prior",
    "scale_value",
    "static_estimate",
    "vertex_of",
    "weight_candidates",
]
