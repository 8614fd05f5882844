"""The shared glycemic network.

One architecture serves both tasks, switched by configuration: which
channels form the temporal input, whether the profile and basal-history
branches exist, and which series the decoder generates.

Information flow:

    temporal channels -> BiLSTM -> per-slot tokens ---+
    basal 24h history -> BiLSTM -> pooled tokens -----+--> fusion
    profile vector    -> MLP    -> one token ---------+    transformer
                                                           |
              per-slot context X  =  last m fusion outputs |
                                                           v
    [X_i ; target series value_i] -> causal decoder -> causal conv -> dense
                                                       (output i predicts slot i+1)

The fusion transformer attends across all tokens, so the context at
history positions already reflects anticipated future inputs (meal
nutrients, target glucose, projected basal). The decoder is causal in the
generated series; generation appends each new value to the feed before
the next step.
"""
from __future__ import annotations

from typing import Optional

import numpy as np

from ..errors import ShapeMismatch
from ..nn import (
    BiLSTM,
    CausalConv1d,
    LayerNorm,
    Linear,
    LSTMLayer,
    Module,
    PositionalEmbedding,
    ReLU,
    TransformerBlock,
)
from ..nn.layers import _ln_apply
from ..pipeline.records import BOLUS
from .config import ModelConfig
from .features import Batch
from .profile import PROFILE_DIM


class GlycemicModel(Module):
    def __init__(self, config: ModelConfig):
        config.validate()
        self.config = config
        rng = np.random.default_rng(config.seed)
        group = config.group
        d = config.d_model

        self.enc_temporal = BiLSTM(len(group.channels), config.enc_hidden, rng)
        self.proj_temporal = Linear(2 * config.enc_hidden, d, rng)

        n_tokens = config.window
        if group.uses_basal_history:
            self.enc_basal = BiLSTM(1, config.basal_hidden, rng)
            self.proj_basal = Linear(2 * config.basal_hidden, d, rng)
            n_tokens += config.basal_tokens
        if group.uses_profile or group.uses_medical_record:
            self.profile_in = Linear(PROFILE_DIM, config.profile_hidden, rng)
            self.profile_act = ReLU()
            self.profile_out = Linear(config.profile_hidden, d, rng)
            n_tokens += 1
        self._n_tokens = n_tokens

        self.pos_fusion = PositionalEmbedding(n_tokens, d, rng)
        self.fusion = [
            TransformerBlock(d, config.fusion_heads, config.fusion_ffn, rng, causal=False)
            for _ in range(config.fusion_layers)
        ]
        self.ln_fusion = LayerNorm(d)

        self.dec_in = Linear(d + 1, config.dec_width, rng)
        if config.decoder_kind == "transformer":
            self.pos_dec = PositionalEmbedding(config.window, config.dec_width, rng)
            self.decoder = [
                TransformerBlock(config.dec_width, config.dec_heads, config.dec_ffn, rng,
                                 causal=True)
                for _ in range(config.dec_layers)
            ]
        else:
            self.decoder = [
                LSTMLayer(config.dec_width, config.dec_width, rng)
                for _ in range(config.dec_layers)
            ]
        self.ln_dec = LayerNorm(config.dec_width)

        self.conv = CausalConv1d(config.dec_width, config.cnn_channels, config.cnn_kernel,
                                 rng, tag="cnn_head")
        self.conv_act = ReLU()
        self.dense = Linear(config.cnn_channels, 1, rng, tag="dense_head")

    # -- encoding ------------------------------------------------------------

    def encode_temporal(self, temporal: np.ndarray) -> np.ndarray:
        """(B, m, C) channel matrix -> (B, m, d) slot tokens."""
        expect = (self.config.window, len(self.config.group.channels))
        if temporal.ndim != 3 or temporal.shape[1:] != expect:
            raise ShapeMismatch(f"temporal shape {temporal.shape}, expected (B,) + {expect}")
        return self.proj_temporal.forward(self.enc_temporal.forward(temporal))

    def _encode_basal(self, basal: np.ndarray) -> np.ndarray:
        if basal.shape[1] != self.config.basal_len:
            raise ShapeMismatch(f"basal history length {basal.shape[1]}, "
                                f"expected {self.config.basal_len}")
        h = self.enc_basal.forward(basal[..., None])
        B, L, H = h.shape
        k = self.config.basal_tokens
        self._basal_pool_shape = (B, k, L // k, H)
        return self.proj_basal.forward(h.reshape(B, k, L // k, H).mean(axis=2))

    def _encode_profile(self, profile: np.ndarray) -> np.ndarray:
        hidden = self.profile_act.forward(self.profile_in.forward(profile))
        return self.profile_out.forward(hidden)[:, None, :]

    # -- fusion --------------------------------------------------------------

    def fuse(self, batch: Batch) -> np.ndarray:
        """Run the branches and the fusion transformer; return per-slot
        context X of shape (B, m, d)."""
        group = self.config.group
        parts = []
        if group.uses_profile or group.uses_medical_record:
            if batch.profile is None:
                raise ShapeMismatch(f"feature group {group.gid} requires a profile vector")
            parts.append(self._encode_profile(batch.profile))
        elif batch.profile is not None:
            raise ShapeMismatch(f"feature group {group.gid} takes no profile input")
        if group.uses_basal_history:
            if batch.basal is None:
                raise ShapeMismatch(f"feature group {group.gid} requires basal history")
            parts.append(self._encode_basal(batch.basal))
        elif batch.basal is not None:
            raise ShapeMismatch(f"feature group {group.gid} takes no basal history")
        parts.append(self.encode_temporal(batch.temporal))

        tokens = parts[0] if len(parts) == 1 else np.concatenate(parts, axis=1)
        x = self.pos_fusion.forward(tokens)
        for block in self.fusion:
            x = block.forward(x)
        x = self.ln_fusion.forward(x)
        self._prefix = self._n_tokens - self.config.window
        return x[:, self._prefix :, :]

    def _fuse_backward(self, dX: np.ndarray) -> None:
        B = dX.shape[0]
        dtok = np.zeros((B, self._n_tokens, self.config.d_model))
        dtok[:, self._prefix :, :] = dX
        dtok = self.ln_fusion.backward(dtok)
        for block in reversed(self.fusion):
            dtok = block.backward(dtok)
        dtok = self.pos_fusion.backward(dtok)

        group = self.config.group
        offset = 0
        if group.uses_profile or group.uses_medical_record:
            dprof = self.profile_out.backward(dtok[:, 0, :])
            self.profile_in.backward(self.profile_act.backward(dprof))
            offset = 1
        if group.uses_basal_history:
            k = self.config.basal_tokens
            dpool = self.proj_basal.backward(dtok[:, offset : offset + k, :])
            B_, k_, g, H = self._basal_pool_shape
            dh = np.broadcast_to(dpool[:, :, None, :] / g, (B_, k_, g, H)).reshape(B_, k_ * g, H)
            self.enc_basal.backward(dh)
            offset += k
        dtemp = self.proj_temporal.backward(dtok[:, offset:, :])
        self.enc_temporal.backward(dtemp)

    # -- decoding ------------------------------------------------------------

    def _decode(self, X: np.ndarray, feed: np.ndarray) -> np.ndarray:
        """(B, T, d) context + (B, T) feed -> (B, T) one-step predictions."""
        h = self.dec_in.forward(np.concatenate([X, feed[..., None]], axis=-1))
        if self.config.decoder_kind == "transformer":
            h = self.pos_dec.forward(h)
        for block in self.decoder:
            h = block.forward(h)
        h = self.ln_dec.forward(h)
        out = self.dense.forward(self.conv_act.forward(self.conv.forward(h)))
        return out[..., 0]

    def _decode_backward(self, dout: np.ndarray) -> np.ndarray:
        dh = self.conv.backward(self.conv_act.backward(self.dense.backward(dout[..., None])))
        dh = self.ln_dec.backward(dh)
        for block in reversed(self.decoder):
            dh = block.backward(dh)
        if self.config.decoder_kind == "transformer":
            dh = self.pos_dec.backward(dh)
        dcat = self.dec_in.backward(dh)
        return dcat[..., :-1]  # gradient w.r.t. X; the feed is data

    def decode_series(self, X: np.ndarray, history_feed: np.ndarray) -> np.ndarray:
        """Autoregressive generation of the future slots, in original units.

        ``history_feed`` is the normalized target series over the n history
        slots. Positions are processed one at a time with cached decoder
        state (attention keys/values or recurrent cells), so each generated
        value is appended at the cost of one position, not a full pass.
        Bolus output is clamped at zero; a negative dose is not physical.
        """
        cfg = self.config
        n = cfg.history_len
        if history_feed.shape[1] != n:
            raise ShapeMismatch(f"history feed length {history_feed.shape[1]}, expected {n}")
        norm = cfg.norm
        states: list[dict] = [{} for _ in self.decoder]

        # Prefill: one vectorized causal pass over the n history positions
        # seeds the per-layer generation state and yields the first output.
        h = self.dec_in.forward(
            np.concatenate([X[:, :n, :], history_feed[..., None]], axis=-1)
        )
        if cfg.decoder_kind == "transformer":
            h = h + self.pos_dec.table.value[:n]
        for block, state in zip(self.decoder, states):
            h = block.forward_prime(h, state)
        h = self.ln_dec.forward(h)
        k = cfg.cnn_kernel
        conv_buf = [h[:, i] for i in range(max(0, n - (k - 1)), n)]
        y = self.dense.forward(self.conv_act.forward(self.conv.forward(h)))[:, -1, 0]

        outputs = []
        for t in range(n, n + cfg.future_len):
            raw = norm.denormalize(cfg.target_channel, y)  # prediction for slot t
            if cfg.target_channel == BOLUS:
                raw = np.maximum(raw, 0.0)
            outputs.append(raw)
            if t == n + cfg.future_len - 1:
                break
            feed_t = norm.normalize(cfg.target_channel, raw)
            x_t = np.concatenate([X[:, t, :], feed_t[:, None]], axis=-1)
            x_t = (x_t @ self.dec_in.w.value + self.dec_in.b.value)[:, None, :]
            if cfg.decoder_kind == "transformer":
                x_t = x_t + self.pos_dec.table.value[t]
            for block, state in zip(self.decoder, states):
                x_t = block.forward_step(x_t, state)
            h_t = _ln_apply(self.ln_dec, x_t)[:, 0]

            conv_buf.append(h_t)
            if len(conv_buf) > k:
                conv_buf.pop(0)
            window = conv_buf
            if len(window) < k:
                window = [np.zeros_like(h_t)] * (k - len(window)) + window
            col = np.concatenate(window, axis=-1)
            y = np.maximum(col @ self.conv.w.value + self.conv.b.value, 0.0)
            y = (y @ self.dense.w.value + self.dense.b.value)[:, 0]
        return np.stack(outputs, axis=1)

    # -- task-level passes ----------------------------------------------------

    def forward_train(self, batch: Batch) -> np.ndarray:
        """Teacher-forced predictions for the future slots, original units."""
        cfg = self.config
        X = self.fuse(batch)
        preds = self._decode(X, batch.feed)
        # output at position i predicts slot i+1
        window = preds[:, cfg.history_len - 1 : cfg.window - 1]
        return cfg.norm.denormalize(cfg.target_channel, window)

    def backward_train(self, dpreds: np.ndarray) -> None:
        cfg = self.config
        dout = np.zeros((dpreds.shape[0], cfg.window))
        dout[:, cfg.history_len - 1 : cfg.window - 1] = (
            dpreds * cfg.norm.channel_std[cfg.target_channel]
        )
        dX = self._decode_backward(dout)
        self._fuse_backward(dX)

    def predict(self, batch: Batch) -> np.ndarray:
        """Autoregressive prediction over the future slots, original units."""
        X = self.fuse(batch)
        return self.decode_series(X, batch.feed[:, : self.config.history_len])


def count_parameters(model: GlycemicModel) -> int:
    return sum(p.size for p in model.parameters())
