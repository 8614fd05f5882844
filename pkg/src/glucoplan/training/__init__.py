from .config import FINETUNE_MODES, TrainConfig, trainable_tags
from .loop import EvalReport, TrainResult, evaluate, personalize, train_foundation
from .ablation import AblationRow, ablation_run

__all__ = [
    "FINETUNE_MODES",
    "TrainConfig",
    "trainable_tags",
    "EvalReport",
    "TrainResult",
    "evaluate",
    "personalize",
    "train_foundation",
    "AblationRow",
    "ablation_run",
]
