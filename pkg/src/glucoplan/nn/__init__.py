from . import backend, kernels
from .layers import (
    BiLSTM,
    CausalConv1d,
    LayerNorm,
    Linear,
    LSTMLayer,
    Module,
    MultiHeadSelfAttention,
    Parameter,
    PositionalEmbedding,
    ReLU,
    TransformerBlock,
)
from .optim import AdamW

__all__ = [
    "backend",
    "kernels",
    "AdamW",
    "BiLSTM",
    "CausalConv1d",
    "LayerNorm",
    "Linear",
    "LSTMLayer",
    "Module",
    "MultiHeadSelfAttention",
    "Parameter",
    "PositionalEmbedding",
    "ReLU",
    "TransformerBlock",
]
