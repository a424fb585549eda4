"""Adam with bias correction."""
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, DimensionError


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def zeros_like(cls, param):
        return cls(np.zeros_like(param.data), np.zeros_like(param.data), 0)


def adam_step(param, state, lr, beta1=0.9, beta2=0.999, eps=1e-8):
    """Apply one in-place Adam update to ``param`` from its accumulated grad."""
    if lr <= 0:
        raise ConfigError(f"learning rate must be > 0, got {lr}")
    if state.m.shape != param.data.shape or state.v.shape != param.data.shape:
        raise DimensionError(
            f"Adam state shape {state.m.shape} does not match parameter {param.data.shape}")
    g = param.grad
    state.t += 1
    state.m *= beta1
    state.m += (1.0 - beta1) * g
    state.v *= beta2
    state.v += (1.0 - beta2) * g * g
    m_hat = state.m / (1.0 - beta1 ** state.t)
    v_hat = state.v / (1.0 - beta2 ** state.t)
    param.data -= lr * m_hat / (np.sqrt(v_hat) + eps)
    return param, state


class Adam:
    def __init__(self, params, lr=8e-4, beta1=0.9, beta2=0.999, eps=1e-8):
        if lr <= 0:
            raise ConfigError(f"learning rate must be > 0, got {lr}")
        self.params = list(params)
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.states = [AdamState.zeros_like(p) for p in self.params]

    def zero_grad(self):
        for p in self.params:
            p.zero_grad()

    def step(self):
        for p, s in zip(self.params, self.states):
            adam_step(p, s, self.lr, self.beta1, self.beta2, self.eps)
