"""Two-stage training: foundation fit, then per-patient fine-tuning.

Training is teacher-forced with a mean-absolute-error objective in the
target's original units (the same metric used for evaluation), optimized
with decoupled-weight-decay Adam. Validation uses free-running generation,
matching how the model is ultimately used; the best-validation weights are
restored at the end.
"""
from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..errors import Divergence, InsufficientData
from ..model.config import ModelConfig, NormStats
from ..model.features import clips_to_batch
from ..model.network import GlycemicModel
from ..model.profile import PatientProfile
from ..nn.optim import AdamW
from ..pipeline.clips import Clip
from ..pipeline.records import NUMERIC_CHANNELS
from ..pipeline.splits import DatasetSplit
from .config import TrainConfig, trainable_tags


@dataclass
class EpochStats:
    epoch: int
    train_mae: float
    val_mae: float


@dataclass
class TrainResult:
    model: GlycemicModel
    history: list[EpochStats] = field(default_factory=list)
    best_epoch: int = 0
    best_val_mae: float = float("nan")
    stopped_early: bool = False


@dataclass
class EvalReport:
    mae: float
    per_clip: list[float]
    predictions: np.ndarray
    labels: np.ndarray


def _mae_and_grad(preds: np.ndarray, labels: np.ndarray) -> tuple[float, np.ndarray]:
    residual = preds - labels
    loss = float(np.abs(residual).mean())
    return loss, np.sign(residual) / residual.size


def _train_epoch(
    model: GlycemicModel,
    optimizer: AdamW,
    clips: list[Clip],
    profiles: Optional[dict[str, PatientProfile]],
    batch_size: int,
    rng: np.random.Generator,
    epoch: int,
) -> float:
    order = rng.permutation(len(clips))
    losses = []
    for start in range(0, len(clips), batch_size):
        chunk = [clips[i] for i in order[start : start + batch_size]]
        batch = clips_to_batch(model.config, chunk, profiles, teacher_forcing=True)
        preds = model.forward_train(batch)
        loss, dpreds = _mae_and_grad(preds, batch.labels)
        if not np.isfinite(loss):
            raise Divergence(
                f"non-finite training loss at epoch {epoch}, batch {start // batch_size}"
            )
        model.zero_grad()
        model.backward_train(dpreds)
        optimizer.step()
        losses.append(loss)
    return float(np.mean(losses))


def evaluate(
    model: GlycemicModel,
    clips: Sequence[Clip],
    profiles: Optional[dict[str, PatientProfile]] = None,
    batch_size: int = 64,
) -> EvalReport:
    """Free-running MAE over the future slots, plus a per-clip breakdown."""
    if not clips:
        raise InsufficientData("no clips to evaluate")
    preds_parts, label_parts = [], []
    for start in range(0, len(clips), batch_size):
        chunk = list(clips[start : start + batch_size])
        batch = clips_to_batch(model.config, chunk, profiles, teacher_forcing=False)
        preds_parts.append(model.predict(batch))
        label_parts.append(batch.labels)
    preds = np.concatenate(preds_parts)
    labels = np.concatenate(label_parts)
    per_clip = np.abs(preds - labels).mean(axis=1)
    return EvalReport(
        mae=float(np.abs(preds - labels).mean()),
        per_clip=[float(v) for v in per_clip],
        predictions=preds,
        labels=labels,
    )


def _fit(
    model: GlycemicModel,
    train_clips: list[Clip],
    val_clips: list[Clip],
    config: TrainConfig,
    profiles: Optional[dict[str, PatientProfile]],
    tags: set[str],
) -> TrainResult:
    params = [p for p in model.parameters() if p.tag in tags]
    result = TrainResult(model=model)
    if not params:
        return result  # foundation mode: nothing trains

    optimizer = AdamW(
        params,
        lr=config.learning_rate,
        weight_decay=config.weight_decay,
    )
    rng = np.random.default_rng(config.seed)
    best_val = float("inf")
    best_state: Optional[list[np.ndarray]] = None

    for epoch in range(1, config.max_epochs + 1):
        train_mae = _train_epoch(
            model, optimizer, train_clips, profiles, config.batch_size, rng, epoch
        )
        val_mae = evaluate(model, val_clips, profiles).mae if val_clips else train_mae
        result.history.append(EpochStats(epoch, train_mae, val_mae))
        if val_mae < best_val:
            best_val = val_mae
            best_state = [p.value.copy() for p in params]
            result.best_epoch = epoch
        elif epoch - result.best_epoch >= config.early_stop_patience:
            result.stopped_early = True
            break

    if best_state is not None:
        for p, saved in zip(params, best_state):
            p.value[...] = saved
    result.best_val_mae = best_val
    return result


def train_foundation(
    split: DatasetSplit,
    config: TrainConfig,
    model_config: ModelConfig,
    profiles: Optional[dict[str, PatientProfile]] = None,
) -> TrainResult:
    """Stage one: fit on the pooled training split.

    Normalization statistics come from the training clips only and are
    stored on the model config, so they travel inside every checkpoint.
    """
    config.validate()
    if not split.train_clips:
        raise InsufficientData("training split is empty")
    model_config.validate()
    model_config.norm = NormStats.from_clips(split.train_clips, NUMERIC_CHANNELS)
    model_config.seed = config.seed
    model = GlycemicModel(model_config)
    return _fit(model, split.train_clips, split.val_clips, config, profiles,
                trainable_tags("ft_full"))


def personalize(
    model: GlycemicModel,
    patient_clips: Sequence[Clip],
    mode: str = "ft_dense",
    config: Optional[TrainConfig] = None,
    profiles: Optional[dict[str, PatientProfile]] = None,
) -> TrainResult:
    """Stage two: adapt a foundation model to one patient's recent days.

    Layers outside the mode's trainable set keep bitwise-identical weights.
    Foundation normalization statistics are kept: they are part of the
    knowledge being preserved, and a few days of one patient cannot
    re-estimate them reliably.
    """
    tags = trainable_tags(mode)
    clips = list(patient_clips)
    if mode != "foundation" and not clips:
        raise InsufficientData("no clips in the patient data")
    config = config or TrainConfig()
    config.validate()

    if mode == "single":
        fresh_cfg = copy.deepcopy(model.config)
        fresh_cfg.norm = NormStats.from_clips(clips, NUMERIC_CHANNELS)
        fresh_cfg.seed = config.seed
        fresh = GlycemicModel(fresh_cfg)
        return _fit(fresh, clips, [], config, profiles, tags)

    tuned = copy.deepcopy(model)
    if mode == "foundation":
        return TrainResult(model=tuned)
    return _fit(tuned, clips, [], config, profiles, tags)
