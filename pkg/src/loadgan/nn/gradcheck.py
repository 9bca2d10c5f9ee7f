"""Finite-difference verification of reverse-mode gradients."""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from ..errors import NumericError
from .tensor import Tensor


def grad_check(f: Callable[[], Tensor], wrt: Sequence[Tensor], eps: float = 1e-4,
               max_coords: int | None = None, seed: int = 0) -> float:
    """Max relative error between reverse-mode and central-difference gradients.

    `f` rebuilds the scalar loss from the tensors in `wrt` on every call. For
    large tensors, `max_coords` caps how many coordinates are probed (chosen
    with a seeded rng); None probes every coordinate.
    """
    rng = np.random.default_rng(seed)

    loss = f()
    if not np.isfinite(loss.data):
        raise NumericError("non-finite loss in grad_check")
    for t in wrt:
        t.grad = None
    loss.backward()
    analytic = [np.zeros_like(t.data) if t.grad is None else t.grad.copy() for t in wrt]

    worst = 0.0
    for t, g in zip(wrt, analytic):
        flat = t.data.reshape(-1)
        n = flat.size
        coords = np.arange(n) if max_coords is None or n <= max_coords \
            else rng.choice(n, size=max_coords, replace=False)
        for idx in coords:
            orig = flat[idx]
            flat[idx] = orig + eps
            hi = float(f().data)
            flat[idx] = orig - eps
            lo = float(f().data)
            flat[idx] = orig
            fd = (hi - lo) / (2.0 * eps)
            ga = g.reshape(-1)[idx]
            denom = max(abs(fd), abs(ga), 1e-8)
            worst = max(worst, abs(fd - ga) / denom)
    if not np.isfinite(worst):
        raise NumericError("non-finite value in grad_check")
    return worst
