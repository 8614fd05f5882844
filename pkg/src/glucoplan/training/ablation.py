"""Feature-group ablation: one training + evaluation per group."""
from __future__ import annotations

import copy
from dataclasses import dataclass
from typing import Optional, Sequence

from ..model.config import ModelConfig, get_feature_group
from ..model.profile import PatientProfile
from ..pipeline.splits import DatasetSplit
from .config import TrainConfig
from .loop import evaluate, train_foundation


@dataclass
class AblationRow:
    group: str
    val_mae: float
    test_mae: float
    epochs_run: int


def ablation_run(
    feature_groups: Sequence[str],
    split: DatasetSplit,
    config: TrainConfig,
    model_config: ModelConfig,
    profiles: Optional[dict[str, PatientProfile]] = None,
) -> list[AblationRow]:
    """Train the same architecture under each feature group, shared seed."""
    rows = []
    for gid in feature_groups:
        group = get_feature_group(gid)
        cfg = copy.deepcopy(model_config)
        cfg.feature_group = group.gid
        result = train_foundation(split, copy.deepcopy(config), cfg, profiles)
        group_profiles = profiles if (group.uses_profile or group.uses_medical_record) else None
        eval_clips = split.test_clips or split.val_clips or split.train_clips
        report = evaluate(result.model, eval_clips, group_profiles)
        rows.append(
            AblationRow(
                group=group.gid,
                val_mae=result.best_val_mae,
                test_mae=report.mae,
                epochs_run=len(result.history),
            )
        )
    return rows
