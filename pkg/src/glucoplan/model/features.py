"""Assembly of clips into normalized model inputs.

The model never sees raw clips: channels are z-scored with training-split
statistics, and the future slots of the series being decoded are zeroed
*after* normalization, so the visible placeholders are exact zeros. The
other masked channel stays visible — when decoding doses the future
glucose column carries the anticipated/target trace, and when decoding
glucose the future bolus column carries the candidate plan.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..errors import FeatureGroupMismatch, ShapeMismatch
from ..pipeline.clips import Clip
from .config import ModelConfig
from .profile import PROFILE_BASE_DIM, PatientProfile, encode_profile


@dataclass
class Batch:
    """Normalized arrays for one forward pass (B leading dimension)."""

    temporal: np.ndarray             # (B, m, C)
    basal: Optional[np.ndarray]      # (B, basal_len) or None
    profile: Optional[np.ndarray]    # (B, PROFILE_DIM) or None
    feed: np.ndarray                 # (B, m) normalized target series
    labels: Optional[np.ndarray]     # (B, future_len) original units

    @property
    def size(self) -> int:
        return self.temporal.shape[0]


def profile_vector(config: ModelConfig, profile: Optional[PatientProfile]) -> Optional[np.ndarray]:
    """Encode and mask the profile according to the feature group."""
    group = config.group
    if not group.uses_profile and not group.uses_medical_record:
        if profile is not None:
            raise FeatureGroupMismatch(
                f"feature group {group.gid} takes no patient profile"
            )
        return None
    vec = encode_profile(profile)
    if not group.uses_profile:
        vec = vec.copy()
        vec[:PROFILE_BASE_DIM] = 0.0
    if not group.uses_medical_record:
        vec = vec.copy()
        vec[PROFILE_BASE_DIM:] = 0.0
    return vec


def clip_arrays(
    config: ModelConfig, clip: Clip, teacher_forcing: bool
) -> tuple[np.ndarray, Optional[np.ndarray], np.ndarray, np.ndarray]:
    """Build (temporal, basal, feed, labels) for one clip."""
    norm = config.norm
    if norm is None:
        raise ShapeMismatch("model config carries no normalization statistics")
    if clip.window != config.window or clip.history_len != config.history_len:
        raise ShapeMismatch(
            f"clip geometry {clip.window}/{clip.history_len} does not match "
            f"config {config.window}/{config.history_len}"
        )
    group = config.group
    n = config.history_len

    temporal = np.stack(
        [norm.normalize(ch, clip.values[ch]) for ch in group.channels], axis=-1
    )
    target_col = group.channels.index(config.target_channel)
    temporal[n:, target_col] = 0.0

    feed = norm.normalize(config.target_channel, clip.values[config.target_channel]).copy()
    if not teacher_forcing:
        feed[n:] = 0.0

    labels = clip.values[config.target_channel][n:].copy()

    basal = None
    if group.uses_basal_history:
        hist = clip.basal_24h
        if len(hist) < config.basal_len:
            hist = np.concatenate([np.zeros(config.basal_len - len(hist)), hist])
        basal = (hist[-config.basal_len :] - norm.basal_mean) / norm.basal_std
    return temporal, basal, feed, labels


def clips_to_batch(
    config: ModelConfig,
    clips: Sequence[Clip],
    profiles: Optional[dict[str, PatientProfile]] = None,
    teacher_forcing: bool = True,
) -> Batch:
    temporals, basals, feeds, labels = [], [], [], []
    profile_vecs = []
    group = config.group
    for clip in clips:
        t, b, f, l = clip_arrays(config, clip, teacher_forcing)
        temporals.append(t)
        basals.append(b)
        feeds.append(f)
        labels.append(l)
        if group.uses_profile or group.uses_medical_record:
            prof = (profiles or {}).get(clip.patient_id)
            profile_vecs.append(profile_vector(config, prof))

    return Batch(
        temporal=np.stack(temporals),
        basal=np.stack(basals) if group.uses_basal_history else None,
        profile=np.stack(profile_vecs) if profile_vecs else None,
        feed=np.stack(feeds),
        labels=np.stack(labels),
    )
