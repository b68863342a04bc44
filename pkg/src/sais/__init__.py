"""Adaptive importance sampling driven by stochastic approximation.

The sampler draws batches from a parametric proposal, reweights them
against an unnormalized target, nudges the proposal parameter toward the
weighted-batch update with a decaying gain, and accumulates the running
integral estimate along the way.
"""

from .adapters import (
    AdaptationMap,
    Minorizer,
    cauchy_curvature_bound,
    cauchy_loglik,
    cauchy_minorizer,
    cauchy_mm_adapter,
    cauchy_mm_map,
    cauchy_score,
    exp_family_adapter,
    exp_family_map,
    frozen_adapter,
    mixture_indicator_adapter,
    mixture_indicator_map,
    mixture_rb_adapter,
    mixture_rb_map,
)
from .densities import (
    ParameterBox,
    ProposalFamily,
    TargetDensity,
    WeightedSample,
    cauchy_scale_family,
    draw_batch,
    fixed_component_mixture,
    importance_weight,
    normal_mean_family,
    normal_mixture_family,
    normal_mixture_target,
    standard_normal_target,
)
from .diagnostics import (
    FDCheck,
    KLEstimate,
    MinorizationReport,
    effective_sample_size,
    fd_check,
    kl_divergence,
    minorization_check,
)
from .engine import (
    AdaptationTrace,
    GainSchedule,
    adapt,
    ascent_check,
    gain,
    sa_step,
)
from .errors import (
    ConfigError,
    InvalidMixtureWeights,
    IterationDiverged,
    MissingComponentIndex,
    NonfiniteParameter,
    NonfiniteWeight,
    NonnegativeCurvature,
    NonpositiveScale,
    ProposalZeroAtSample,
    SamplerError,
    UnboundedDivergenceWarning,
    ZeroWeights,
)
from .estimator import (
    ArmResult,
    ArmSpec,
    IntegralEstimate,
    MSEReport,
    ReplicationPlan,
    fixed_proposal_estimate,
    integral_update,
    replicate_mse,
)
from .experiments import (
    ExperimentConfig,
    density_curve,
    parse_config,
    preset,
    run,
    self_check,
    serialize_config,
    table1,
)

__version__ = "0.1.0"

__all__ = [
    "AdaptationMap",
    "AdaptationTrace",
    "ArmResult",
    "ArmSpec",
    "ConfigError",
    "ExperimentConfig",
    "FDCheck",
    "GainSchedule",
    "IntegralEstimate",
    "InvalidMixtureWeights",
    "IterationDiverged",
    "KLEstimate",
    "Minorizer",
    "MinorizationReport",
    "MissingComponentIndex",
    "MSEReport",
    "NonfiniteParameter",
    "NonfiniteWeight",
    "NonnegativeCurvature",
    "NonpositiveScale",
    "ParameterBox",
    "ProposalFamily",
    "ProposalZeroAtSample",
    "ReplicationPlan",
    "SamplerError",
    "TargetDensity",
    "UnboundedDivergenceWarning",
    "WeightedSample",
    "ZeroWeights",
    "adapt",
    "ascent_check",
    "cauchy_curvature_bound",
    "cauchy_loglik",
    "cauchy_minorizer",
    "cauchy_mm_adapter",
    "cauchy_mm_map",
    "cauchy_scale_family",
    "cauchy_score",
    "density_curve",
    "draw_batch",
    "effective_sample_size",
    "exp_family_adapter",
    "exp_family_map",
    "fd_check",
    "fixed_component_mixture",
    "fixed_proposal_estimate",
    "frozen_adapter",
    "gain",
    "importance_weight",
    "integral_update",
    "kl_divergence",
    "minorization_check",
    "mixture_indicator_adapter",
    "mixture_indicator_map",
    "mixture_rb_adapter",
    "mixture_rb_map",
    "normal_mean_family",
    "normal_mixture_family",
    "normal_mixture_target",
    "parse_config",
    "preset",
    "replicate_mse",
    "run",
    "sa_step",
    "self_check",
    "serialize_config",
    "standard_normal_target",
    "table1",
]
