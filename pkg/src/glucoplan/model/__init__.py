from .config import (
    FEATURE_GROUPS,
    FORECAST_TARGET,
    TITRATION_TARGET,
    FeatureGroup,
    ModelConfig,
    NormStats,
    forecast_config,
    get_feature_group,
    tiny_config,
    titration_config,
)
from .features import Batch, clip_arrays, clips_to_batch, profile_vector
from .network import GlycemicModel, count_parameters
from .checkpoint import load_checkpoint, save_checkpoint
from .profile import PROFILE_DIM, PatientProfile, encode_profile

__all__ = [
    "FEATURE_GROUPS",
    "FORECAST_TARGET",
    "TITRATION_TARGET",
    "FeatureGroup",
    "ModelConfig",
    "NormStats",
    "Batch",
    "GlycemicModel",
    "PatientProfile",
    "PROFILE_DIM",
    "clip_arrays",
    "clips_to_batch",
    "count_parameters",
    "encode_profile",
    "forecast_config",
    "get_feature_group",
    "load_checkpoint",
    "profile_vector",
    "save_checkpoint",
    "tiny_config",
    "titration_config",
]
