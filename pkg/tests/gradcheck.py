"""Central finite-difference gradient checking used across nn tests."""
from __future__ import annotations

import numpy as np


def fd_param_grads(loss_fn, params, n_samples=20, h=1e-4, floor=1e-4, rng=None):
    """Compare analytic parameter gradients against central differences.

    ``loss_fn()`` must recompute forward+backward from scratch, leaving
    gradients populated on ``params``; ``loss_fn(no_grad=True)`` is forward
    only. Returns the max relative error over sampled entries. ``floor``
    bounds the denominator so exactly-zero gradients (softmax row shifts,
    dead ReLU paths) are compared on an absolute scale instead of
    amplifying FD round-off.
    """
    rng = rng or np.random.default_rng(0)
    for p in params:
        p.grad[...] = 0.0
    loss_fn()
    analytic = {id(p): p.grad.copy() for p in params}

    worst = 0.0
    for p in params:
        flat = p.value.reshape(-1)
        count = min(n_samples, flat.size)
        idxs = rng.choice(flat.size, size=count, replace=False)
        for idx in idxs:
            orig = flat[idx]
            flat[idx] = orig + h
            lp = loss_fn(no_grad=True)
            flat[idx] = orig - h
            lm = loss_fn(no_grad=True)
            flat[idx] = orig
            fd = (lp - lm) / (2 * h)
            an = analytic[id(p)].reshape(-1)[idx]
            denom = max(abs(fd), abs(an), floor)
            worst = max(worst, abs(fd - an) / denom)
    return worst
