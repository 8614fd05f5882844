"""Hot recurrent kernels: LSTM sequence forward/backward.

Both paths compute identical math. The numpy versions are the reference;
the numba versions fuse the per-step gate arithmetic, which is where the
Python-loop overhead hurts most at small batch sizes.

Shapes (time-major, float64, C-contiguous):
    xp      (T, B, 4H)  input projections x @ Wx + b, precomputed by the caller
    wh      (H, 4H)     recurrent weights
    h_all   (T+1, B, H) hidden states, h_all[0] = h0
    c_all   (T+1, B, H) cell states,   c_all[0] = c0
    gates   (T, B, 4H)  activated gates in i|f|g|o blocks
    tanh_c  (T, B, H)   tanh of updated cell state

Gate layout: [input, forget, cell-candidate, output].
"""
from __future__ import annotations

import numpy as np

from . import backend


@np.errstate(over="ignore")  # saturated sigmoids are fine, not an error
def _lstm_forward_np(xp, wh, h0, c0):
    T, B, H4 = xp.shape
    H = H4 // 4
    h_all = np.empty((T + 1, B, H))
    c_all = np.empty((T + 1, B, H))
    gates = np.empty((T, B, H4))
    tanh_c = np.empty((T, B, H))
    h_all[0] = h0
    c_all[0] = c0
    for t in range(T):
        s = xp[t] + h_all[t] @ wh
        i = 1.0 / (1.0 + np.exp(-s[:, :H]))
        f = 1.0 / (1.0 + np.exp(-s[:, H : 2 * H]))
        g = np.tanh(s[:, 2 * H : 3 * H])
        o = 1.0 / (1.0 + np.exp(-s[:, 3 * H :]))
        c = f * c_all[t] + i * g
        tc = np.tanh(c)
        h_all[t + 1] = o * tc
        c_all[t + 1] = c
        gates[t, :, :H] = i
        gates[t, :, H : 2 * H] = f
        gates[t, :, 2 * H : 3 * H] = g
        gates[t, :, 3 * H :] = o
        tanh_c[t] = tc
    return h_all, c_all, gates, tanh_c


def _lstm_backward_np(d_h_seq, wh, h_all, c_all, gates, tanh_c):
    T, B, H = d_h_seq.shape
    dxp = np.empty((T, B, 4 * H))
    dwh = np.zeros_like(wh)
    dh = np.zeros((B, H))
    dc = np.zeros((B, H))
    for t in range(T - 1, -1, -1):
        i = gates[t, :, :H]
        f = gates[t, :, H : 2 * H]
        g = gates[t, :, 2 * H : 3 * H]
        o = gates[t, :, 3 * H :]
        tc = tanh_c[t]
        dh = dh + d_h_seq[t]
        do = dh * tc
        dc = dc + dh * o * (1.0 - tc * tc)
        di = dc * g
        dg = dc * i
        df = dc * c_all[t]
        dc = dc * f
        dpre = dxp[t]
        dpre[:, :H] = di * i * (1.0 - i)
        dpre[:, H : 2 * H] = df * f * (1.0 - f)
        dpre[:, 2 * H : 3 * H] = dg * (1.0 - g * g)
        dpre[:, 3 * H :] = do * o * (1.0 - o)
        dwh += h_all[t].T @ dpre
        dh = dpre @ wh.T
    return dxp, dwh, dh, dc


if backend.HAS_NUMBA:
    from numba import njit

    @njit(cache=True)
    def _lstm_forward_nb(xp, wh, h0, c0):  # pragma: no cover - exercised via dispatch
        T, B, H4 = xp.shape
        H = H4 // 4
        h_all = np.empty((T + 1, B, H))
        c_all = np.empty((T + 1, B, H))
        gates = np.empty((T, B, H4))
        tanh_c = np.empty((T, B, H))
        h_all[0] = h0
        c_all[0] = c0
        for t in range(T):
            s = xp[t] + np.dot(h_all[t], wh)
            for b in range(B):
                sb = s[b]
                for j in range(H):
                    i = 1.0 / (1.0 + np.exp(-sb[j]))
                    f = 1.0 / (1.0 + np.exp(-sb[H + j]))
                    g = np.tanh(sb[2 * H + j])
                    o = 1.0 / (1.0 + np.exp(-sb[3 * H + j]))
                    c = f * c_all[t, b, j] + i * g
                    tc = np.tanh(c)
                    h_all[t + 1, b, j] = o * tc
                    c_all[t + 1, b, j] = c
                    gates[t, b, j] = i
                    gates[t, b, H + j] = f
                    gates[t, b, 2 * H + j] = g
                    gates[t, b, 3 * H + j] = o
                    tanh_c[t, b, j] = tc
        return h_all, c_all, gates, tanh_c

    @njit(cache=True)
    def _lstm_backward_nb(d_h_seq, wh, h_all, c_all, gates, tanh_c):  # pragma: no cover
        T, B, H = d_h_seq.shape
        dxp = np.empty((T, B, 4 * H))
        dwh = np.zeros_like(wh)
        dh = np.zeros((B, H))
        dc = np.zeros((B, H))
        for t in range(T - 1, -1, -1):
            for b in range(B):
                for j in range(H):
                    i = gates[t, b, j]
                    f = gates[t, b, H + j]
                    g = gates[t, b, 2 * H + j]
                    o = gates[t, b, 3 * H + j]
                    tc = tanh_c[t, b, j]
                    dhv = dh[b, j] + d_h_seq[t, b, j]
                    dov = dhv * tc
                    dcv = dc[b, j] + dhv * o * (1.0 - tc * tc)
                    dc[b, j] = dcv * f
                    dxp[t, b, j] = dcv * g * i * (1.0 - i)
                    dxp[t, b, H + j] = dcv * c_all[t, b, j] * f * (1.0 - f)
                    dxp[t, b, 2 * H + j] = dcv * i * (1.0 - g * g)
                    dxp[t, b, 3 * H + j] = dov * o * (1.0 - o)
            dwh += np.dot(h_all[t].T, dxp[t])
            dh = np.dot(dxp[t], wh.T)
        return dxp, dwh, dh, dc


def lstm_forward(xp, wh, h0, c0):
    xp = np.ascontiguousarray(xp)
    if backend.use_numba(xp.shape[1]):
        return _lstm_forward_nb(xp, wh, h0, c0)
    return _lstm_forward_np(xp, wh, h0, c0)


def lstm_backward(d_h_seq, wh, h_all, c_all, gates, tanh_c):
    d_h_seq = np.ascontiguousarray(d_h_seq)
    if backend.use_numba(d_h_seq.shape[1]):
        return _lstm_backward_nb(d_h_seq, wh, h_all, c_all, gates, tanh_c)
    return _lstm_backward_np(d_h_seq, wh, h_all, c_all, gates, tanh_c)
