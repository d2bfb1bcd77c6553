"""Convex mixtures of generalized dephasing (Pauli-type) channels.

Tools to build mutually unbiased bases and their Weyl-type unitaries, evolve
channel mixtures with time-dependent mixing probabilities, extract time-local
decay rates, detect semigroups and CP divisibility, locate noninvertibility
times, and generate mixtures of noninvertible channels whose output is an
exact semigroup.
"""

from .channelcore import (
    ChannelSpec,
    DecoherenceFunction,
    ExpRelax,
    Expression,
    MixtureComponent,
    MixtureSpec,
    MixtureValidation,
    MixtureValidationError,
    SampledGrid,
    ValidationIssue,
    single_channel_eigenvalues,
    validate_mixture,
)
from .dynamics import (
    AnalysisResult,
    ClassificationReport,
    InputVerdict,
    IntermediateMapCheck,
    RateTrajectory,
    SemigroupVerdict,
    SpectralTrajectory,
    TimeGrid,
    Tolerances,
    analyze_mixture,
    classify,
    default_grid,
    detect_semigroup,
    intermediate_map_check,
    mixture_eigenvalues,
    rates_from_spectrum,
    refine_grid,
)
from .exprcalc import DomainError, DualValue, ParseError, eval_dual, parse
from .matrixlab import (
    ComposeCheck,
    DensityCheck,
    PsdCheck,
    apply_channel,
    check_density_matrix,
    choi,
    choi_from_eigenvalues,
    compose_check,
    hermitian_eigensystem,
    hermiticity_deviation,
    partial_trace_first,
    psd_check,
    superoperator,
)
from .mubgen import (
    DIMENSION_RANGE,
    MubFamily,
    MubReport,
    WeylSet,
    build_unitaries,
    construct_mub,
    is_prime,
    verify_mub,
    weyl_set,
)
from .semigroupforge import (
    AllChannelsRequest,
    ChannelForecast,
    ConstructionError,
    InvertibilityForecast,
    SameChannelRequest,
    ScanReport,
    WeightBoundError,
    build_all_channels_mix,
    build_same_channel_mix,
    forecast_invertibility,
    random_decoherence_function,
    theorem1_scan,
    theorem2_scan,
    weight_lower_bound,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # exprcalc
    "ParseError",
    "DomainError",
    "DualValue",
    "parse",
    "eval_dual",
    # mubgen
    "DIMENSION_RANGE",
    "MubFamily",
    "WeylSet",
    "MubReport",
    "is_prime",
    "construct_mub",
    "build_unitaries",
    "verify_mub",
    "weyl_set",
    # channelcore
    "DecoherenceFunction",
    "ExpRelax",
    "Expression",
    "SampledGrid",
    "ChannelSpec",
    "MixtureComponent",
    "MixtureSpec",
    "ValidationIssue",
    "MixtureValidation",
    "MixtureValidationError",
    "validate_mixture",
    "single_channel_eigenvalues",
    # dynamics
    "TimeGrid",
    "default_grid",
    "refine_grid",
    "Tolerances",
    "SpectralTrajectory",
    "RateTrajectory",
    "SemigroupVerdict",
    "InputVerdict",
    "ClassificationReport",
    "IntermediateMapCheck",
    "AnalysisResult",
    "mixture_eigenvalues",
    "rates_from_spectrum",
    "detect_semigroup",
    "classify",
    "analyze_mixture",
    "intermediate_map_check",
    # semigroupforge
    "ConstructionError",
    "WeightBoundError",
    "SameChannelRequest",
    "AllChannelsRequest",
    "ChannelForecast",
    "InvertibilityForecast",
    "ScanReport",
    "build_same_channel_mix",
    "build_all_channels_mix",
    "forecast_invertibility",
    "weight_lower_bound",
    "random_decoherence_function",
    "theorem1_scan",
    "theorem2_scan",
    # matrixlab
    "PsdCheck",
    "ComposeCheck",
    "DensityCheck",
    "hermiticity_deviation",
    "hermitian_eigensystem",
    "psd_check",
    "check_density_matrix",
    "apply_channel",
    "superoperator",
    "choi",
    "choi_from_eigenvalues",
    "partial_trace_first",
    "compose_check",
]
