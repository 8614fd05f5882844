"""Compare the numba and numpy LSTM kernel paths.

Run:  python benchmarks/lstm_kernel_bench.py

Shapes mirror real use: the temporal encoder (short sequence, wide state),
the basal-history encoder (long sequence, narrow state), and a training
batch. BLAS threads are capped at one to keep timings stable on small
matrices.
"""
from __future__ import annotations

import time

import numpy as np

try:
    from threadpoolctl import threadpool_limits
except ImportError:  # pragma: no cover
    threadpool_limits = None

from glucoplan.nn import backend, kernels

CASES = [
    ("temporal encoder (B=1)", 32, 1, 384),
    ("basal encoder (B=1)", 96, 1, 96),
    ("temporal encoder (B=32)", 32, 32, 384),
    ("basal encoder (B=32)", 96, 32, 96),
]


def bench(T, B, H, iters=20):
    rng = np.random.default_rng(0)
    xp = rng.normal(size=(T, B, 4 * H))
    wh = rng.normal(size=(H, 4 * H)) * 0.05
    h0 = np.zeros((B, H))
    d_h = rng.normal(size=(T, B, H))

    def run_once():
        h_all, c_all, gates, tanh_c = kernels.lstm_forward(xp, wh, h0, h0)
        kernels.lstm_backward(d_h, wh, h_all, c_all, gates, tanh_c)

    run_once()  # warm-up / JIT
    times = []
    for _ in range(iters):
        t0 = time.perf_counter()
        run_once()
        times.append(time.perf_counter() - t0)
    return float(np.median(times) * 1000)


def main():
    if not backend.HAS_NUMBA:
        print("numba not installed; only the numpy path is available")
    rows = []
    for label, T, B, H in CASES:
        row = {"case": label}
        for use_numba in (False, True) if backend.HAS_NUMBA else (False,):
            backend.set_numba(use_numba)
            row["numba" if use_numba else "numpy"] = bench(T, B, H)
        rows.append(row)

    width = max(len(r["case"]) for r in rows)
    print(f"{'case':<{width}}  {'numpy ms':>9}  {'numba ms':>9}  {'speedup':>7}")
    for r in rows:
        np_ms = r["numpy"]
        nb_ms = r.get("numba")
        speed = f"{np_ms / nb_ms:.2f}x" if nb_ms else "-"
        nb_txt = f"{nb_ms:9.2f}" if nb_ms else "        -"
        print(f"{r['case']:<{width}}  {np_ms:9.2f}  {nb_txt}  {speed:>7}")


if __name__ == "__main__":
    if threadpool_limits is not None:
        with threadpool_limits(limits=1):
            main()
    else:
        main()
