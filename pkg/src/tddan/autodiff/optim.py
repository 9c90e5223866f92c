"""Trainable parameters and the Adam optimizer."""

from __future__ import annotations

import numpy as np

from ..errors import InvalidState
from .tensor import Tensor


class Parameter(Tensor):
    """A leaf tensor that carries its own Adam moments."""

    __slots__ = ("m", "v", "step")

    def __init__(self, values, name=None):
        super().__init__(np.array(values, dtype=np.float64), requires_grad=True, name=name)
        self.m = np.zeros_like(self.values)
        self.v = np.zeros_like(self.values)
        self.step = 0


def uniform_init(rng, shape, fan_in, name=None):
    bound = 1.0 / np.sqrt(fan_in)
    return Parameter(rng.uniform(-bound, bound, size=shape), name=name)


def zero_grad(params):
    for p in params:
        p.zero_grad()


class Adam:
    def __init__(self, params, lr=1e-3, betas=(0.9, 0.999), eps=1e-8):
        self.params = list(params)
        self.lr = lr
        self.betas = betas
        self.eps = eps

    def step(self):
        adam_step(self.params, self.lr, *self.betas, self.eps)


def adam_step(params, lr, beta1=0.9, beta2=0.999, eps=1e-8):
    """Bias-corrected Adam update; gradients are zeroed afterwards."""
    params = list(params)
    missing = [p.name or repr(p) for p in params if p.grad is None]
    if missing:
        raise InvalidState(f"no gradient for {', '.join(map(str, missing[:5]))}")
    for p in params:
        g = p.grad
        p.step += 1
        p.m = beta1 * p.m + (1.0 - beta1) * g
        p.v = beta2 * p.v + (1.0 - beta2) * g * g
        m_hat = p.m / (1.0 - beta1 ** p.step)
        v_hat = p.v / (1.0 - beta2 ** p.step)
        p.values = p.values - lr * m_hat / (np.sqrt(v_hat) + eps)
        p.grad = np.zeros_like(p.values)
