"""Network building blocks with explicit forward/backward passes.

Every layer caches what its backward pass needs during forward; backward
accumulates parameter gradients in place and returns the input gradient.
All math is float64. Layers tag their parameters so fine-tuning modes can
freeze by group: "body" (default), "cnn_head", "dense_head".
"""
from __future__ import annotations

import math
from typing import Iterator, Optional

import numpy as np

from ..errors import ShapeMismatch
from . import kernels


class Parameter:
    __slots__ = ("value", "grad", "tag", "name")

    def __init__(self, value: np.ndarray, tag: str = "body"):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad = np.zeros_like(self.value)
        self.tag = tag
        self.name = ""

    @property
    def size(self) -> int:
        return self.value.size


class Module:
    """Minimal container: parameter discovery by attribute walk."""

    def parameters(self) -> list[Parameter]:
        return [p for _, p in self.named_parameters()]

    def named_parameters(self, prefix: str = "") -> Iterator[tuple[str, Parameter]]:
        for attr, obj in vars(self).items():
            path = f"{prefix}{attr}"
            if isinstance(obj, Parameter):
                obj.name = path
                yield path, obj
            elif isinstance(obj, Module):
                yield from obj.named_parameters(f"{path}.")
            elif isinstance(obj, (list, tuple)):
                for idx, item in enumerate(obj):
                    if isinstance(item, Module):
                        yield from item.named_parameters(f"{path}.{idx}.")

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.grad[...] = 0.0


def _flat2d(x: np.ndarray) -> np.ndarray:
    return x.reshape(-1, x.shape[-1])


def _ln_apply(ln: "LayerNorm", x: np.ndarray) -> np.ndarray:
    """Cache-free layer norm, used by the generation fast path."""
    mu = x.mean(axis=-1, keepdims=True)
    xc = x - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    return ln.gain.value * (xc / np.sqrt(var + ln.eps)) + ln.bias.value


class Linear(Module):
    def __init__(self, d_in: int, d_out: int, rng: np.random.Generator, tag: str = "body"):
        scale = 1.0 / math.sqrt(d_in)
        self.w = Parameter(rng.uniform(-scale, scale, (d_in, d_out)), tag)
        self.b = Parameter(np.zeros(d_out), tag)
        self._x: Optional[np.ndarray] = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._x = x
        return x @ self.w.value + self.b.value

    def backward(self, dy: np.ndarray) -> np.ndarray:
        x2, dy2 = _flat2d(self._x), _flat2d(dy)
        self.w.grad += x2.T @ dy2
        self.b.grad += dy2.sum(axis=0)
        return dy @ self.w.value.T


class ReLU(Module):
    def forward(self, x: np.ndarray) -> np.ndarray:
        self._mask = x > 0
        return x * self._mask

    def backward(self, dy: np.ndarray) -> np.ndarray:
        return dy * self._mask


class LayerNorm(Module):
    def __init__(self, dim: int, eps: float = 1e-5):
        self.gain = Parameter(np.ones(dim))
        self.bias = Parameter(np.zeros(dim))
        self.eps = eps

    def forward(self, x: np.ndarray) -> np.ndarray:
        mu = x.mean(axis=-1, keepdims=True)
        xc = x - mu
        var = (xc * xc).mean(axis=-1, keepdims=True)
        inv = 1.0 / np.sqrt(var + self.eps)
        self._xhat = xc * inv
        self._inv = inv
        return self.gain.value * self._xhat + self.bias.value

    def backward(self, dy: np.ndarray) -> np.ndarray:
        xhat, inv = self._xhat, self._inv
        dy2, xhat2 = _flat2d(dy), _flat2d(xhat)
        self.gain.grad += (dy2 * xhat2).sum(axis=0)
        self.bias.grad += dy2.sum(axis=0)
        dxhat = dy * self.gain.value
        mean_d = dxhat.mean(axis=-1, keepdims=True)
        mean_dx = (dxhat * xhat).mean(axis=-1, keepdims=True)
        return inv * (dxhat - mean_d - xhat * mean_dx)


class PositionalEmbedding(Module):
    """Learned additive position table over the leading time axis."""

    def __init__(self, max_len: int, dim: int, rng: np.random.Generator):
        self.table = Parameter(rng.normal(0.0, 0.02, (max_len, dim)))
        self.max_len = max_len

    def forward(self, x: np.ndarray) -> np.ndarray:
        T = x.shape[1]
        if T > self.max_len:
            raise ShapeMismatch(f"sequence length {T} exceeds table size {self.max_len}")
        self._T = T
        return x + self.table.value[:T]

    def backward(self, dy: np.ndarray) -> np.ndarray:
        self.table.grad[: self._T] += dy.sum(axis=0)
        return dy


class MultiHeadSelfAttention(Module):
    def __init__(self, dim: int, heads: int, rng: np.random.Generator, causal: bool):
        if dim % heads:
            raise ValueError(f"dim {dim} not divisible by heads {heads}")
        self.qkv = Linear(dim, 3 * dim, rng)
        self.out = Linear(dim, dim, rng)
        self.heads = heads
        self.causal = causal

    def forward_prime(self, x: np.ndarray, state: dict) -> np.ndarray:
        """Vectorized pass over a prefix that seeds the generation cache."""
        y = self.forward(x)
        _, k, v, _, _ = self._cache
        state["k"], state["v"] = k, v
        return y

    def forward_step(self, x_new: np.ndarray, state: dict) -> np.ndarray:
        """Generation fast path: one new position against cached keys/values.

        Inference only; does not touch the training caches.
        """
        qkv = x_new @ self.qkv.w.value + self.qkv.b.value
        q, k, v = (self._split(a) for a in np.split(qkv, 3, axis=-1))
        if "k" in state:
            k = np.concatenate([state["k"], k], axis=2)
            v = np.concatenate([state["v"], v], axis=2)
        state["k"], state["v"] = k, v
        scale = 1.0 / math.sqrt(x_new.shape[-1] // self.heads)
        scores = (q @ k.transpose(0, 1, 3, 2)) * scale
        scores -= scores.max(axis=-1, keepdims=True)
        ex = np.exp(scores)
        probs = ex / ex.sum(axis=-1, keepdims=True)
        return self._merge(probs @ v) @ self.out.w.value + self.out.b.value

    def _split(self, x: np.ndarray) -> np.ndarray:
        B, T, D = x.shape
        return x.reshape(B, T, self.heads, D // self.heads).transpose(0, 2, 1, 3)

    def _merge(self, x: np.ndarray) -> np.ndarray:
        B, H, T, Dh = x.shape
        return x.transpose(0, 2, 1, 3).reshape(B, T, H * Dh)

    def forward(self, x: np.ndarray) -> np.ndarray:
        B, T, D = x.shape
        qkv = self.qkv.forward(x)
        q, k, v = (self._split(a) for a in np.split(qkv, 3, axis=-1))
        scale = 1.0 / math.sqrt(D // self.heads)
        scores = (q @ k.transpose(0, 1, 3, 2)) * scale
        if self.causal:
            scores = scores + np.triu(np.full((T, T), -np.inf), k=1)
        scores -= scores.max(axis=-1, keepdims=True)
        ex = np.exp(scores)
        probs = ex / ex.sum(axis=-1, keepdims=True)
        ctx = probs @ v
        self._cache = (q, k, v, probs, scale)
        return self.out.forward(self._merge(ctx))

    def backward(self, dy: np.ndarray) -> np.ndarray:
        q, k, v, probs, scale = self._cache
        dctx = self._split(self.out.backward(dy))
        dprobs = dctx @ v.transpose(0, 1, 3, 2)
        dv = probs.transpose(0, 1, 3, 2) @ dctx
        dscores = probs * (dprobs - (dprobs * probs).sum(axis=-1, keepdims=True))
        dq = (dscores @ k) * scale
        dk = (dscores.transpose(0, 1, 3, 2) @ q) * scale
        dqkv = np.concatenate([self._merge(d) for d in (dq, dk, dv)], axis=-1)
        return self.qkv.backward(dqkv)


class TransformerBlock(Module):
    """Pre-norm block: x + attn(ln(x)), then x + ffn(ln(x))."""

    def __init__(self, dim: int, heads: int, ffn_dim: int, rng: np.random.Generator,
                 causal: bool):
        self.ln1 = LayerNorm(dim)
        self.attn = MultiHeadSelfAttention(dim, heads, rng, causal)
        self.ln2 = LayerNorm(dim)
        self.ffn_in = Linear(dim, ffn_dim, rng)
        self.ffn_act = ReLU()
        self.ffn_out = Linear(ffn_dim, dim, rng)

    def forward(self, x: np.ndarray) -> np.ndarray:
        x = x + self.attn.forward(self.ln1.forward(x))
        return x + self.ffn_out.forward(self.ffn_act.forward(self.ffn_in.forward(self.ln2.forward(x))))

    def backward(self, dy: np.ndarray) -> np.ndarray:
        d_ffn = self.ln2.backward(
            self.ffn_in.backward(self.ffn_act.backward(self.ffn_out.backward(dy)))
        )
        dy = dy + d_ffn
        d_attn = self.ln1.backward(self.attn.backward(dy))
        return dy + d_attn

    def forward_prime(self, x: np.ndarray, state: dict) -> np.ndarray:
        x = x + self.attn.forward_prime(self.ln1.forward(x), state)
        return x + self.ffn_out.forward(self.ffn_act.forward(self.ffn_in.forward(self.ln2.forward(x))))

    def forward_step(self, x_new: np.ndarray, state: dict) -> np.ndarray:
        x = x_new + self.attn.forward_step(_ln_apply(self.ln1, x_new), state)
        h = np.maximum(_ln_apply(self.ln2, x) @ self.ffn_in.w.value + self.ffn_in.b.value, 0.0)
        return x + h @ self.ffn_out.w.value + self.ffn_out.b.value


class LSTMLayer(Module):
    """Single-direction LSTM over (B, T, d_in), returns (B, T, hidden).

    The recurrent inner loop runs through the kernel dispatch (numba or
    numpy). Forget-gate biases start at +1.
    """

    def __init__(self, d_in: int, hidden: int, rng: np.random.Generator,
                 reverse: bool = False):
        scale = 1.0 / math.sqrt(hidden)
        self.wx = Parameter(rng.uniform(-scale, scale, (d_in, 4 * hidden)))
        self.wh = Parameter(rng.uniform(-scale, scale, (hidden, 4 * hidden)))
        bias = np.zeros(4 * hidden)
        bias[hidden : 2 * hidden] = 1.0
        self.b = Parameter(bias)
        self.hidden = hidden
        self.reverse = reverse

    def forward(self, x: np.ndarray) -> np.ndarray:
        if self.reverse:
            x = x[:, ::-1]
        xt = np.ascontiguousarray(x.transpose(1, 0, 2))  # (T, B, d_in)
        T, B, _ = xt.shape
        xp = xt @ self.wx.value + self.b.value
        h0 = np.zeros((B, self.hidden))
        h_all, c_all, gates, tanh_c = kernels.lstm_forward(xp, self.wh.value, h0, h0)
        self._cache = (xt, h_all, c_all, gates, tanh_c)
        out = h_all[1:].transpose(1, 0, 2)
        return out[:, ::-1] if self.reverse else out

    def backward(self, dy: np.ndarray) -> np.ndarray:
        if self.reverse:
            dy = dy[:, ::-1]
        xt, h_all, c_all, gates, tanh_c = self._cache
        d_h_seq = np.ascontiguousarray(dy.transpose(1, 0, 2))
        dxp, dwh, _, _ = kernels.lstm_backward(
            d_h_seq, self.wh.value, h_all, c_all, gates, tanh_c
        )
        self.wh.grad += dwh
        self.wx.grad += _flat2d(xt).T @ _flat2d(dxp)
        self.b.grad += dxp.sum(axis=(0, 1))
        dx = (dxp @ self.wx.value.T).transpose(1, 0, 2)
        return dx[:, ::-1] if self.reverse else dx

    def forward_prime(self, x: np.ndarray, state: dict) -> np.ndarray:
        y = self.forward(x)
        _, h_all, c_all, _, _ = self._cache
        state["h"], state["c"] = h_all[-1], c_all[-1]
        return y

    def forward_step(self, x_new: np.ndarray, state: dict) -> np.ndarray:
        """One recurrent step for generation; carries (h, c) in ``state``."""
        B = x_new.shape[0]
        H = self.hidden
        h = state.get("h", np.zeros((B, H)))
        c = state.get("c", np.zeros((B, H)))
        s = x_new[:, 0] @ self.wx.value + self.b.value + h @ self.wh.value
        i = 1.0 / (1.0 + np.exp(-s[:, :H]))
        f = 1.0 / (1.0 + np.exp(-s[:, H : 2 * H]))
        g = np.tanh(s[:, 2 * H : 3 * H])
        o = 1.0 / (1.0 + np.exp(-s[:, 3 * H :]))
        c = f * c + i * g
        h = o * np.tanh(c)
        state["h"], state["c"] = h, c
        return h[:, None, :]


class BiLSTM(Module):
    def __init__(self, d_in: int, hidden: int, rng: np.random.Generator):
        self.fwd = LSTMLayer(d_in, hidden, rng)
        self.bwd = LSTMLayer(d_in, hidden, rng, reverse=True)
        self.hidden = hidden

    def forward(self, x: np.ndarray) -> np.ndarray:
        return np.concatenate([self.fwd.forward(x), self.bwd.forward(x)], axis=-1)

    def backward(self, dy: np.ndarray) -> np.ndarray:
        h = self.hidden
        return self.fwd.backward(dy[..., :h]) + self.bwd.backward(dy[..., h:])


class CausalConv1d(Module):
    """Temporal convolution padded on the left: output t sees inputs <= t."""

    def __init__(self, c_in: int, c_out: int, kernel: int, rng: np.random.Generator,
                 tag: str = "body"):
        scale = 1.0 / math.sqrt(kernel * c_in)
        self.w = Parameter(rng.uniform(-scale, scale, (kernel * c_in, c_out)), tag)
        self.b = Parameter(np.zeros(c_out), tag)
        self.kernel = kernel
        self.c_in = c_in

    def forward(self, x: np.ndarray) -> np.ndarray:
        B, T, C = x.shape
        k = self.kernel
        padded = np.concatenate([np.zeros((B, k - 1, C)), x], axis=1)
        cols = np.stack([padded[:, i : i + T] for i in range(k)], axis=2)
        self._cols = cols.reshape(B, T, k * C)
        self._shape = (B, T, C)
        return self._cols @ self.w.value + self.b.value

    def backward(self, dy: np.ndarray) -> np.ndarray:
        B, T, C = self._shape
        k = self.kernel
        dy2 = _flat2d(dy)
        self.w.grad += _flat2d(self._cols).T @ dy2
        self.b.grad += dy2.sum(axis=0)
        dcols = (dy @ self.w.value.T).reshape(B, T, k, C)
        dpadded = np.zeros((B, T + k - 1, C))
        for i in range(k):
            dpadded[:, i : i + T] += dcols[:, :, i]
        return dpadded[:, k - 1 :]
