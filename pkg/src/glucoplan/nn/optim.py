"""Adam with decoupled weight decay."""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .layers import Parameter


class AdamW:
    """Updates only the parameters it was built over; everything else is
    frozen by construction, which is what the fine-tuning modes rely on."""

    def __init__(
        self,
        params: Sequence[Parameter],
        lr: float = 0.005,
        betas: tuple[float, float] = (0.9, 0.999),
        eps: float = 1e-8,
        weight_decay: float = 0.01,
    ):
        self.params = list(params)
        self.lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.weight_decay = weight_decay
        self.step_count = 0
        self._m = [np.zeros_like(p.value) for p in self.params]
        self._v = [np.zeros_like(p.value) for p in self.params]

    # over="ignore": a diverging run saturates the second moment before the
    # loss turns non-finite; aborting is the training loop's job, not ours.
    @np.errstate(over="ignore")
    def step(self) -> None:
        self.step_count += 1
        bc1 = 1.0 - self.beta1 ** self.step_count
        bc2 = 1.0 - self.beta2 ** self.step_count
        for p, m, v in zip(self.params, self._m, self._v):
            g = p.grad
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            update = (m / bc1) / (np.sqrt(v / bc2) + self.eps)
            p.value -= self.lr * (update + self.weight_decay * p.value)

    def zero_grad(self) -> None:
        for p in self.params:
            p.grad[...] = 0.0
