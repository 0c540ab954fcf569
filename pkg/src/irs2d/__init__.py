"""Decoupled 2-D channel parameter estimation for IRS-assisted MIMO links."""

from .channel import (
    PARAMETERS,
    ArrayConfig,
    ChannelFactors,
    SceneParams,
    build_channel_factors,
    sample_scene,
    steering_vector,
)
from .crlb import SingularFisherError, crlb_all, fim_domain
from .estimators import (
    FrequencyEstimate,
    KRFResult,
    PeakGrid,
    hkmr_estimate,
    krf_baseline,
    ls_baseline,
    peak_search,
    reconstruct_cascaded,
    tshdr_estimate,
)
from .models import HKMREstimator, KRFEstimator, LSEstimator, TSHDREstimator
from .multilin import DegenerateInputError, hosvd_rank1_3, nearest_kronecker
from .training import NoiseModel, PilotObservation, TrainingDesign, build_design, synthesize_received

__version__ = "0.1.0"

__all__ = [
    "PARAMETERS", "ArrayConfig", "ChannelFactors", "SceneParams", "build_channel_factors",
    "sample_scene", "steering_vector", "SingularFisherError", "crlb_all", "fim_domain",
    "FrequencyEstimate", "KRFResult", "PeakGrid", "hkmr_estimate", "krf_baseline",
    "ls_baseline", "peak_search", "reconstruct_cascaded", "tshdr_estimate",
    "HKMREstimator", "KRFEstimator", "LSEstimator", "TSHDREstimator",
    "DegenerateInputError", "hosvd_rank1_3", "nearest_kronecker",
    "NoiseModel", "PilotObservation", "TrainingDesign", "build_design", "synthesize_received",
]
