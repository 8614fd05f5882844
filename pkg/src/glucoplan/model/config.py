"""Model configuration, feature groups, and normalization statistics."""
from __future__ import annotations

from dataclasses import dataclass, field, asdict
from typing import Optional, Sequence

import numpy as np

from ..errors import FeatureGroupMismatch
from ..pipeline.records import (
    BASAL,
    BOLUS,
    CALORIES,
    CARB,
    DRUG,
    FAT,
    GLUCOSE,
    PROTEIN,
)

TITRATION_TARGET = BOLUS
FORECAST_TARGET = GLUCOSE


@dataclass(frozen=True)
class FeatureGroup:
    """One of the nested input-channel sets G1..G9.

    ``channels`` are the per-slot temporal inputs; the flags switch the
    profile branch, the 24-hour basal-history branch, and whether the
    medical-record block of the profile is visible.
    """

    gid: str
    channels: tuple[str, ...]
    uses_profile: bool = False
    uses_basal_history: bool = False
    uses_medical_record: bool = False


_G1 = (GLUCOSE, BOLUS, BASAL)
_G2 = _G1 + (CARB,)
_G3 = _G2 + (PROTEIN, FAT, CALORIES)
_G4 = _G3 + (DRUG,)

FEATURE_GROUPS: dict[str, FeatureGroup] = {
    "G1": FeatureGroup("G1", _G1),
    "G2": FeatureGroup("G2", _G2),
    "G3": FeatureGroup("G3", _G3),
    "G4": FeatureGroup("G4", _G4),
    "G5": FeatureGroup("G5", _G4, uses_profile=True),
    "G6": FeatureGroup("G6", _G4, uses_basal_history=True),
    "G7": FeatureGroup("G7", _G4, uses_profile=True, uses_basal_history=True),
    "G8": FeatureGroup("G8", _G4, uses_basal_history=True, uses_medical_record=True),
    "G9": FeatureGroup(
        "G9", _G4, uses_profile=True, uses_basal_history=True, uses_medical_record=True
    ),
}

DEFAULT_TITRATION_GROUP = "G7"
DEFAULT_FORECAST_GROUP = "G5"


def get_feature_group(gid: str) -> FeatureGroup:
    try:
        return FEATURE_GROUPS[gid]
    except KeyError:
        raise FeatureGroupMismatch(f"unknown feature group {gid!r}; valid: G1..G9")


@dataclass
class NormStats:
    """Per-channel z-score statistics, computed on the training split only.

    Degenerate channels (constant in training data) keep std = 1 so they
    pass through unscaled instead of dividing by zero.
    """

    channel_mean: dict[str, float] = field(default_factory=dict)
    channel_std: dict[str, float] = field(default_factory=dict)
    basal_mean: float = 0.0
    basal_std: float = 1.0

    @classmethod
    def from_clips(cls, clips: Sequence, channels: Sequence[str]) -> "NormStats":
        stats = cls()
        for ch in channels:
            data = np.concatenate([c.values[ch] for c in clips])
            std = float(data.std())
            stats.channel_mean[ch] = float(data.mean())
            stats.channel_std[ch] = std if std > 1e-8 else 1.0
        basal = np.concatenate([c.basal_24h for c in clips])
        stats.basal_mean = float(basal.mean())
        std = float(basal.std())
        stats.basal_std = std if std > 1e-8 else 1.0
        return stats

    def normalize(self, channel: str, values: np.ndarray) -> np.ndarray:
        return (values - self.channel_mean[channel]) / self.channel_std[channel]

    def denormalize(self, channel: str, values: np.ndarray) -> np.ndarray:
        return values * self.channel_std[channel] + self.channel_mean[channel]

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "NormStats":
        return cls(**data)


@dataclass
class ModelConfig:
    """Everything needed to rebuild a model: sizes, variant, statistics.

    The defaults are sized so the full titration network (G7) and the
    forecast network (G5) each land near 11.2M trainable parameters.
    """

    target_channel: str = TITRATION_TARGET
    feature_group: str = DEFAULT_TITRATION_GROUP
    decoder_kind: str = "transformer"  # or "lstm"
    window: int = 32
    history_len: int = 24
    basal_len: int = 96
    basal_tokens: int = 8
    enc_hidden: int = 384
    basal_hidden: int = 96
    profile_hidden: int = 128
    d_model: int = 256
    fusion_layers: int = 6
    fusion_heads: int = 4
    fusion_ffn: int = 1024
    dec_width: int = 256
    dec_layers: int = 6
    dec_heads: int = 4
    dec_ffn: int = 1024
    cnn_channels: int = 256
    cnn_kernel: int = 3
    seed: int = 0
    norm: Optional[NormStats] = None

    @property
    def future_len(self) -> int:
        return self.window - self.history_len

    @property
    def group(self) -> FeatureGroup:
        return get_feature_group(self.feature_group)

    def validate(self) -> None:
        if self.decoder_kind not in ("transformer", "lstm"):
            raise ValueError(f"decoder_kind must be transformer|lstm, got {self.decoder_kind}")
        if not (0 < self.history_len < self.window):
            raise ValueError("need 0 < history_len < window")
        if self.basal_len % self.basal_tokens:
            raise ValueError("basal_len must be divisible by basal_tokens")
        self.group  # raises on unknown id

    def to_dict(self) -> dict:
        out = asdict(self)
        out["norm"] = self.norm.to_dict() if self.norm else None
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ModelConfig":
        data = dict(data)
        norm = data.pop("norm", None)
        cfg = cls(**data)
        cfg.norm = NormStats.from_dict(norm) if norm else None
        return cfg


def titration_config(**overrides) -> ModelConfig:
    return ModelConfig(
        target_channel=TITRATION_TARGET, feature_group=DEFAULT_TITRATION_GROUP, **overrides
    )


def forecast_config(**overrides) -> ModelConfig:
    return ModelConfig(
        target_channel=FORECAST_TARGET, feature_group=DEFAULT_FORECAST_GROUP, **overrides
    )


def tiny_config(target_channel: str = TITRATION_TARGET, **overrides) -> ModelConfig:
    """Small sizes for tests: fast to build, cheap to finite-difference."""
    defaults = dict(
        target_channel=target_channel,
        feature_group="G7" if target_channel == TITRATION_TARGET else "G5",
        window=12,
        history_len=8,
        basal_len=24,
        basal_tokens=4,
        enc_hidden=8,
        basal_hidden=6,
        profile_hidden=8,
        d_model=16,
        fusion_layers=1,
        fusion_heads=2,
        fusion_ffn=32,
        dec_width=16,
        dec_layers=1,
        dec_heads=2,
        dec_ffn=32,
        cnn_channels=8,
        cnn_kernel=3,
    )
    defaults.update(overrides)
    return ModelConfig(**defaults)
