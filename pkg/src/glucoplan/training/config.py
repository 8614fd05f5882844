"""Training hyperparameters and fine-tuning modes."""
from __future__ import annotations

from dataclasses import dataclass

from ..errors import ModeUnknown

# Which parameter tags stay trainable under each personalization mode.
# "single" trains a fresh model on patient data alone; "foundation" applies
# no training at all.
_TRAINABLE_TAGS = {
    "single": {"body", "cnn_head", "dense_head"},
    "foundation": set(),
    "ft_full": {"body", "cnn_head", "dense_head"},
    "ft_cnn_dense": {"cnn_head", "dense_head"},
    "ft_dense": {"dense_head"},
}

FINETUNE_MODES = tuple(_TRAINABLE_TAGS)


def trainable_tags(mode: str) -> set[str]:
    try:
        return set(_TRAINABLE_TAGS[mode])
    except KeyError:
        raise ModeUnknown(f"unknown fine-tune mode {mode!r}; valid: {FINETUNE_MODES}")


@dataclass
class TrainConfig:
    """Defaults match the published training setup; everything overridable."""

    batch_size: int = 32
    learning_rate: float = 0.005
    max_epochs: int = 200
    early_stop_patience: int = 40
    weight_decay: float = 0.01
    seed: int = 0

    def validate(self) -> None:
        if self.batch_size < 1 or self.max_epochs < 1 or self.early_stop_patience < 1:
            raise ValueError("batch_size, max_epochs, early_stop_patience must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
