"""Adam with bias correction."""

from __future__ import annotations

import numpy as np

from ..errors import ShapeMismatch
from .tensor import Tensor


class Adam:
    def __init__(self, params: list[Tensor], lr: float = 2e-4,
                 beta1: float = 0.5, beta2: float = 0.999, eps: float = 1e-8):
        self.params = list(params)
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]
        self.t = 0

    def step(self):
        """One update from the gradients currently stored on the parameters."""
        self.t += 1
        b1t = 1.0 - self.beta1 ** self.t
        b2t = 1.0 - self.beta2 ** self.t
        for p, m, v in zip(self.params, self.m, self.v):
            g = p.grad
            if g is None:
                g = np.zeros_like(p.data)
            elif g.shape != p.data.shape:
                raise ShapeMismatch("gradient/parameter shape mismatch")
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p.data = p.data - self.lr * (m / b1t) / (np.sqrt(v / b2t) + self.eps)

    def zero_grad(self):
        for p in self.params:
            p.grad = None

    def state_arrays(self) -> list[np.ndarray]:
        """Moment arrays in parameter order, first moments then second."""
        return list(self.m) + list(self.v)

    def load_state_arrays(self, arrays: list[np.ndarray], t: int):
        n = len(self.params)
        if len(arrays) != 2 * n:
            raise ShapeMismatch("optimizer state array count mismatch")
        self.m = [np.array(a, dtype=np.float64) for a in arrays[:n]]
        self.v = [np.array(a, dtype=np.float64) for a in arrays[n:]]
        self.t = int(t)
