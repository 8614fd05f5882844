"""Self-describing weight checkpoints.

A checkpoint is a compressed npz holding every parameter by name plus a
JSON metadata block with the format version, the full model configuration
(including feature group and normalization statistics), so loading needs
nothing but the file.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..errors import ModelNotLoaded
from .config import ModelConfig
from .network import GlycemicModel

FORMAT_VERSION = 1


def save_checkpoint(path: str | Path, model: GlycemicModel) -> Path:
    path = Path(path)
    named = dict(model.named_parameters())
    meta = {
        "format_version": FORMAT_VERSION,
        "config": model.config.to_dict(),
        "parameters": list(named),
    }
    arrays = {f"param:{name}": p.value for name, p in named.items()}
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savez_compressed(path, __meta__=np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8),
                        **arrays)
    return path


def load_checkpoint(path: str | Path) -> GlycemicModel:
    path = Path(path)
    if not path.exists():
        raise ModelNotLoaded(f"checkpoint not found: {path}")
    with np.load(path) as data:
        try:
            meta = json.loads(bytes(data["__meta__"]).decode())
        except KeyError:
            raise ModelNotLoaded(f"{path} is not a model checkpoint")
        if meta["format_version"] != FORMAT_VERSION:
            raise ModelNotLoaded(
                f"checkpoint format {meta['format_version']} unsupported "
                f"(expected {FORMAT_VERSION})"
            )
        config = ModelConfig.from_dict(meta["config"])
        model = GlycemicModel(config)
        named = dict(model.named_parameters())
        if set(named) != set(meta["parameters"]):
            raise ModelNotLoaded(f"{path}: parameter names do not match the architecture")
        for name, param in named.items():
            stored = data[f"param:{name}"]
            if stored.shape != param.value.shape:
                raise ModelNotLoaded(
                    f"{path}: shape mismatch on {name}: {stored.shape} vs {param.value.shape}"
                )
            param.value[...] = stored
    return model
