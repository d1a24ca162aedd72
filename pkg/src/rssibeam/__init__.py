"""Phase estimation and training design for RSSI-feedback energy beamforming."""
from .codebook import (
    Codebook,
    CrlbUnboundedError,
    FimMatrix,
    PhaseSet,
    crlb_phi,
    delta_ijk,
    fim,
    make_codebook,
    make_theta,
    mcrlb,
)
from .estimator import (
    DegenerateFeedbackError,
    EstimateSet,
    PhaseEstimate,
    estimate_all_phases,
    estimate_ml,
    estimate_noiseless_n3,
    estimate_phase,
    exhaustive_baseline,
    ls_objective,
    resolve_ambiguity,
)
from .feedback import NoiseModel, RssiRecord, TrainingSchedule, TrainingTable, run_training, simulate_rssi, training_overhead
from .model import BeamVector, ChannelVector, PairParams, SystemParams, derive_pair_params, egt_beam_vector, received_energy, sample_channel, wrap_angle
from .planner import NStar, PlannerError, TimingParams, WpbParams, e_total, n_star, n_star_brute, omega_params, rwpb_approx

__version__ = "0.1.0"

__all__ = [
    "Codebook",
    "CrlbUnboundedError",
    "FimMatrix",
    "PhaseSet",
    "crlb_phi",
    "delta_ijk",
    "fim",
    "make_codebook",
    "make_theta",
    "mcrlb",
    "DegenerateFeedbackError",
    "EstimateSet",
    "PhaseEstimate",
    "estimate_all_phases",
    "estimate_ml",
    "estimate_noiseless_n3",
    "estimate_phase",
    "exhaustive_baseline",
    "ls_objective",
    "resolve_ambiguity",
    "NoiseModel",
    "RssiRecord",
    "TrainingSchedule",
    "TrainingTable",
    "run_training",
    "simulate_rssi",
    "training_overhead",
    "BeamVector",
    "ChannelVector",
    "PairParams",
    "SystemParams",
    "derive_pair_params",
    "egt_beam_vector",
    "received_energy",
    "sample_channel",
    "wrap_angle",
    "NStar",
    "PlannerError",
    "TimingParams",
    "WpbParams",
    "e_total",
    "n_star",
    "n_star_brute",
    "omega_params",
    "rwpb_approx",
]
