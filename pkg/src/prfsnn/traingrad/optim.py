from __future__ import annotations

import numpy as np

from .tape import Param


class AdamW:
    """Adam with decoupled weight decay and one learning rate per parameter group.

    Weight decay applies to the ``"weight"`` group only; ``"frozen"``
    parameters are never touched.
    """

    def __init__(
        self,
        params: list[Param],
        lr: float,
        neuron_lr: float,
        weight_decay: float = 0.0,
        betas: tuple[float, float] = (0.9, 0.999),
        eps: float = 1e-8,
    ):
        self.params = params
        self.lrs = {"weight": lr, "neuron": neuron_lr, "frozen": 0.0}
        self.weight_decay = weight_decay
        self.betas = betas
        self.eps = eps
        self.step_count = 0
        self._m = [np.zeros_like(p.value) for p in params]
        self._v = [np.zeros_like(p.value) for p in params]

    def zero_grad(self):
        for p in self.params:
            p.zero_grad()

    def step(self):
        self.step_count += 1
        b1, b2 = self.betas
        c1 = 1 - b1**self.step_count
        c2 = 1 - b2**self.step_count
        for p, m, v in zip(self.params, self._m, self._v):
            lr = self.lrs[p.group]
            if lr == 0.0:
                continue
            g = p.grad
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * g * g
            if p.group == "weight" and self.weight_decay:
                p.value *= 1 - lr * self.weight_decay
            p.value -= lr * (m / c1) / (np.sqrt(v / c2) + self.eps)
