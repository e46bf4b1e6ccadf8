"""Adam with L2 or decoupled weight decay and a restarting cosine schedule."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

BETA1 = 0.9
BETA2 = 0.999
EPS = 1e-8


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    step: int = 0

    @classmethod
    def zeros(cls, n: int) -> "AdamState":
        return cls(np.zeros(n), np.zeros(n), 0)

    def copy(self) -> "AdamState":
        return AdamState(self.m.copy(), self.v.copy(), self.step)


def adam_step(params, grads, state: AdamState, lr: float, weight_decay: float = 0.0, decay_mask=None, decoupled=False):
    """One bias-corrected Adam update; returns ``(params, state)`` as new objects.

    Weight decay touches the entries selected by ``decay_mask`` (all entries
    when it is None). By default it is an L2 penalty, ``weight_decay * params``
    added to the gradient before the moment updates. With ``decoupled`` it is
    instead ``params -= lr * weight_decay * params`` on the pre-update
    parameters.
    """
    params = np.asarray(params, dtype=np.float64)
    grads = np.asarray(grads, dtype=np.float64)
    if params.shape != grads.shape or params.shape != state.m.shape:
        raise ValueError("params, grads and optimizer state must share a shape")
    decay = np.zeros_like(params)
    if weight_decay:
        decay = weight_decay * params
        if decay_mask is not None:
            decay = np.where(decay_mask, decay, 0.0)
        if not decoupled:
            grads = grads + decay
    step = state.step + 1
    m = BETA1 * state.m + (1 - BETA1) * grads
    v = BETA2 * state.v + (1 - BETA2) * grads * grads
    m_hat = m / (1 - BETA1**step)
    v_hat = v / (1 - BETA2**step)
    new = params.copy()
    if weight_decay and decoupled:
        new -= lr * decay
    new -= lr * m_hat / (np.sqrt(v_hat) + EPS)
    return new, AdamState(m, v, step)


def lr_schedule(step: int, T: int, lr_max: float, lr_min: float = 0.0) -> float:
    """Cosine annealing from ``lr_max`` to ``lr_min`` over ``T`` steps, restarting."""
    if T < 1:
        raise ValueError("cycle length T must be at least 1")
    return lr_min + 0.5 * (lr_max - lr_min) * (1 + math.cos(math.pi * (step % T) / T))
