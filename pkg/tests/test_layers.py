"""Finite-difference verification of every layer's backward pass."""
import numpy as np
import pytest

from glucoplan.nn import (
    BiLSTM,
    CausalConv1d,
    LayerNorm,
    Linear,
    LSTMLayer,
    MultiHeadSelfAttention,
    PositionalEmbedding,
    TransformerBlock,
    backend,
)

from gradcheck import fd_param_grads

RNG = np.random.default_rng(42)


def make_loss(layer, x, weights):
    """Scalar loss = fixed random projection of the layer output."""

    def loss_fn(no_grad=False):
        y = layer.forward(x)
        loss = float((y * weights).sum())
        if not no_grad:
            layer.zero_grad()
            layer.backward(weights)
        return loss

    return loss_fn


def check(layer, x, tol=1e-5):
    weights = RNG.normal(size=layer.forward(x).shape)
    err = fd_param_grads(make_loss(layer, x, weights), layer.parameters(), rng=RNG)
    assert err < tol, f"param grad rel err {err}"


def check_input_grad(layer, x, tol=1e-5):
    weights = RNG.normal(size=layer.forward(x).shape)
    layer.forward(x)
    layer.zero_grad()
    dx = layer.backward(weights)
    h = 1e-4
    rng = np.random.default_rng(7)
    flat = x.reshape(-1)
    for idx in rng.choice(flat.size, size=min(15, flat.size), replace=False):
        orig = flat[idx]
        flat[idx] = orig + h
        lp = float((layer.forward(x) * weights).sum())
        flat[idx] = orig - h
        lm = float((layer.forward(x) * weights).sum())
        flat[idx] = orig
        fd = (lp - lm) / (2 * h)
        an = dx.reshape(-1)[idx]
        assert abs(fd - an) / max(abs(fd), abs(an), 1e-4) < tol


def test_linear():
    layer = Linear(5, 3, RNG)
    check(layer, RNG.normal(size=(4, 7, 5)))
    check_input_grad(layer, RNG.normal(size=(4, 7, 5)))


def test_layernorm():
    layer = LayerNorm(6)
    check(layer, RNG.normal(size=(3, 4, 6)))
    check_input_grad(layer, RNG.normal(size=(3, 4, 6)))


def test_positional_embedding():
    layer = PositionalEmbedding(10, 4, RNG)
    check(layer, RNG.normal(size=(2, 8, 4)))


@pytest.mark.parametrize("causal", [False, True])
def test_attention(causal):
    layer = MultiHeadSelfAttention(8, 2, RNG, causal=causal)
    check(layer, RNG.normal(size=(2, 5, 8)))
    check_input_grad(layer, RNG.normal(size=(2, 5, 8)))


@pytest.mark.parametrize("causal", [False, True])
def test_transformer_block(causal):
    layer = TransformerBlock(8, 2, 16, RNG, causal=causal)
    check(layer, RNG.normal(size=(2, 5, 8)))
    check_input_grad(layer, RNG.normal(size=(2, 5, 8)))


@pytest.mark.parametrize("reverse", [False, True])
def test_lstm(reverse):
    layer = LSTMLayer(4, 6, RNG, reverse=reverse)
    check(layer, RNG.normal(size=(3, 7, 4)))
    check_input_grad(layer, RNG.normal(size=(3, 7, 4)))


def test_bilstm():
    layer = BiLSTM(4, 5, RNG)
    check(layer, RNG.normal(size=(2, 6, 4)))
    check_input_grad(layer, RNG.normal(size=(2, 6, 4)))


def test_causal_conv():
    layer = CausalConv1d(5, 4, 3, RNG)
    check(layer, RNG.normal(size=(2, 9, 5)))
    check_input_grad(layer, RNG.normal(size=(2, 9, 5)))


def test_causal_conv_is_causal():
    layer = CausalConv1d(3, 2, 3, RNG)
    x = RNG.normal(size=(1, 10, 3))
    base = layer.forward(x).copy()
    x2 = x.copy()
    x2[:, 7:] += 100.0
    bumped = layer.forward(x2)
    assert np.array_equal(base[:, :7], bumped[:, :7])
    assert not np.allclose(base[:, 7:], bumped[:, 7:])


def test_attention_causal_mask():
    layer = MultiHeadSelfAttention(8, 2, RNG, causal=True)
    x = RNG.normal(size=(1, 6, 8))
    base = layer.forward(x).copy()
    x2 = x.copy()
    x2[:, 4:] += 50.0
    bumped = layer.forward(x2)
    assert np.allclose(base[:, :4], bumped[:, :4])


def test_kernel_paths_agree():
    if not backend.HAS_NUMBA:
        pytest.skip("numba unavailable")
    layer = LSTMLayer(3, 4, np.random.default_rng(1))
    x = np.random.default_rng(2).normal(size=(2, 5, 3))
    dy = np.random.default_rng(3).normal(size=(2, 5, 4))

    results = {}
    for use_numba in (False, True):
        backend.set_numba(use_numba)
        y = layer.forward(x)
        layer.zero_grad()
        dx = layer.backward(dy)
        results[use_numba] = (y, dx, layer.wx.grad.copy(), layer.wh.grad.copy())
    backend.set_numba(backend.HAS_NUMBA)

    for a, b in zip(results[False], results[True]):
        np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-12)
