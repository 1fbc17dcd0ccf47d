"""Lower bounds on the noncoherent capacity of highly underspread fading channels.

The package builds up from a small Gaussian algebra on complex scalars
(:mod:`.gaussian`) through the subcarrier correlation model (:mod:`.channel`)
and OFDM bookkeeping (:mod:`.blockfading`) to the Monte Carlo bound engine
(:mod:`.bounds`).  :mod:`.oracle` checks the engine against a simulated
channel, a Kalman tracker and quadrature; :mod:`.cli` drives experiments.
"""
from .blockfading import OfdmConfig, SnrBudget, adjust_snr, cp_penalty, derive_grid, truncation_energy
from .bounds import (
    BoundResult,
    McConfig,
    NormalizedParams,
    estimate_bounds,
    information_sample,
    perfect_csi_capacity,
    perfect_csi_capacity_mc,
    recursion_step,
    sample_path_terms,
    truncated_average,
)
from .channel import (
    ExponentialPDP,
    FrequencyCorrelation,
    SpacingConvention,
    TabulatedPDP,
    conditional_response,
    correlation_a,
    decorrelation,
    joint_pair_covariance,
    read_pdp_csv,
    response_variance,
    truncate,
)
from .config import ExperimentConfig, load_config
from .exceptions import (
    DegenerateFusionError,
    InvalidTruncationError,
    NonIntegerGridError,
    PrecisionError,
    UndefinedCorrelationError,
    UnderspreadError,
    ValidationError,
)
from .gaussian import UNINFORMATIVE, Gaussian2, ZmcsGaussian, fuse, sample_zmcs
from .oracle import ChannelTrace, QuadratureSpec, exact_conditional_mi, simulate, track

__version__ = "0.1.0"

__all__ = [
    "BoundResult", "ChannelTrace", "DegenerateFusionError", "ExperimentConfig", "ExponentialPDP",
    "FrequencyCorrelation", "Gaussian2", "InvalidTruncationError", "McConfig", "NonIntegerGridError",
    "NormalizedParams", "OfdmConfig", "PrecisionError", "QuadratureSpec", "SnrBudget", "SpacingConvention",
    "TabulatedPDP", "UNINFORMATIVE", "UndefinedCorrelationError", "UnderspreadError", "ValidationError",
    "ZmcsGaussian", "adjust_snr", "conditional_response", "correlation_a", "cp_penalty", "decorrelation",
    "derive_grid", "estimate_bounds", "exact_conditional_mi", "fuse", "information_sample",
    "joint_pair_covariance", "load_config", "perfect_csi_capacity", "perfect_csi_capacity_mc", "read_pdp_csv",
    "recursion_step", "response_variance", "sample_path_terms", "sample_zmcs", "simulate", "track",
    "truncate", "truncated_average", "truncation_energy",
]
