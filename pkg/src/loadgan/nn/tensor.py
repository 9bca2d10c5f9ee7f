"""Reverse-mode autodiff over batched float64 numpy arrays.

A Tensor wraps an ndarray plus an optional gradient accumulator. Ops build a
graph of closures; Tensor.backward() walks it in reverse topological order.
Every op result is finiteness-checked, so NaN/Inf surfaces immediately as
NumericError instead of corrupting a training run.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import NumericError, ShapeMismatch

__all__ = [
    "Tensor", "add", "sub", "mul", "neg", "scale", "matmul", "reshape",
    "concat", "narrow", "relu", "leaky_relu", "sigmoid", "tanh", "clip",
    "mean", "total", "conv1d", "tconv1d", "bce_loss", "no_grad",
]

_GRAD_ENABLED = True


class no_grad:
    """Context manager that skips graph construction (pure inference)."""

    def __enter__(self):
        global _GRAD_ENABLED
        self._prev = _GRAD_ENABLED
        _GRAD_ENABLED = False
        return self

    def __exit__(self, *exc):
        global _GRAD_ENABLED
        _GRAD_ENABLED = self._prev
        return False


class Tensor:
    """Node of the autodiff graph. Data is always float64."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False, _parents=(), _backward=None):
        arr = np.asarray(data, dtype=np.float64)
        if not np.all(np.isfinite(arr)):
            raise NumericError("non-finite values in tensor")
        self.data = arr
        self.grad = None
        self.requires_grad = requires_grad
        self._parents = _parents
        self._backward = _backward

    @property
    def shape(self):
        return self.data.shape

    def zero_grad(self):
        self.grad = None

    def backward(self, grad=None):
        """Accumulate gradients of self into every upstream requires_grad tensor."""
        if grad is None:
            if self.data.size != 1:
                raise ShapeMismatch("backward() without seed gradient needs a scalar")
            grad = np.ones_like(self.data)
        else:
            grad = np.asarray(grad, dtype=np.float64)
            if grad.shape != self.data.shape:
                raise ShapeMismatch("seed gradient shape mismatch")

        order = _toposort(self)
        self.grad = grad if self.grad is None else self.grad + grad
        for node in order:
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"


def _toposort(root: Tensor) -> list[Tensor]:
    # iterative DFS (graphs from unrolled LSTMs overflow the recursion limit)
    order, visited, stack = [], set(), [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if id(p) not in visited:
                stack.append((p, False))
    order.reverse()
    return order


def _accum(t: Tensor, g: np.ndarray):
    if t.requires_grad or t._backward is not None:
        t.grad = g if t.grad is None else t.grad + g


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _needs_grad(*ts: Tensor) -> bool:
    return _GRAD_ENABLED and any(t.requires_grad or t._backward is not None for t in ts)


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum gradient over axes introduced or stretched by broadcasting."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g


# ---------------------------------------------------------------- arithmetic

def add(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    out = Tensor(a.data + b.data, _parents=(a, b) if _needs_grad(a, b) else ())

    if out._parents:
        def backward(g):
            _accum(a, _unbroadcast(g, a.data.shape))
            _accum(b, _unbroadcast(g, b.data.shape))
        out._backward = backward
    return out


def sub(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    out = Tensor(a.data - b.data, _parents=(a, b) if _needs_grad(a, b) else ())

    if out._parents:
        def backward(g):
            _accum(a, _unbroadcast(g, a.data.shape))
            _accum(b, _unbroadcast(-g, b.data.shape))
        out._backward = backward
    return out


def mul(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    out = Tensor(a.data * b.data, _parents=(a, b) if _needs_grad(a, b) else ())

    if out._parents:
        def backward(g):
            _accum(a, _unbroadcast(g * b.data, a.data.shape))
            _accum(b, _unbroadcast(g * a.data, b.data.shape))
        out._backward = backward
    return out


def neg(a) -> Tensor:
    return scale(a, -1.0)


def scale(a, c: float) -> Tensor:
    a = _as_tensor(a)
    out = Tensor(a.data * c, _parents=(a,) if _needs_grad(a) else ())
    if out._parents:
        out._backward = lambda g: _accum(a, g * c)
    return out


def matmul(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    if a.data.ndim != 2 or b.data.ndim != 2 or a.data.shape[1] != b.data.shape[0]:
        raise ShapeMismatch(f"matmul {a.data.shape} x {b.data.shape}")
    out = Tensor(a.data @ b.data, _parents=(a, b) if _needs_grad(a, b) else ())

    if out._parents:
        def backward(g):
            _accum(a, g @ b.data.T)
            _accum(b, a.data.T @ g)
        out._backward = backward
    return out


# ------------------------------------------------------------------- shaping

def reshape(a, shape) -> Tensor:
    a = _as_tensor(a)
    out = Tensor(a.data.reshape(shape), _parents=(a,) if _needs_grad(a) else ())
    if out._parents:
        out._backward = lambda g: _accum(a, g.reshape(a.data.shape))
    return out


def concat(tensors, axis: int = 1) -> Tensor:
    tensors = [_as_tensor(t) for t in tensors]
    data = np.concatenate([t.data for t in tensors], axis=axis)
    out = Tensor(data, _parents=tuple(tensors) if _needs_grad(*tensors) else ())

    if out._parents:
        sizes = [t.data.shape[axis] for t in tensors]
        offsets = np.cumsum([0] + sizes)

        def backward(g):
            for t, lo, hi in zip(tensors, offsets[:-1], offsets[1:]):
                idx = [slice(None)] * g.ndim
                idx[axis] = slice(lo, hi)
                _accum(t, g[tuple(idx)])
        out._backward = backward
    return out


def narrow(a, axis: int, start: int, length: int) -> Tensor:
    """Contiguous slice of `length` entries along `axis`."""
    a = _as_tensor(a)
    idx = [slice(None)] * a.data.ndim
    idx[axis] = slice(start, start + length)
    idx = tuple(idx)
    out = Tensor(a.data[idx], _parents=(a,) if _needs_grad(a) else ())

    if out._parents:
        def backward(g):
            full = np.zeros_like(a.data)
            full[idx] = g
            _accum(a, full)
        out._backward = backward
    return out


# --------------------------------------------------------------- activations

def relu(a) -> Tensor:
    a = _as_tensor(a)
    out = Tensor(np.maximum(a.data, 0.0), _parents=(a,) if _needs_grad(a) else ())
    if out._parents:
        out._backward = lambda g: _accum(a, g * (a.data > 0.0))
    return out


def leaky_relu(a, alpha: float = 0.2) -> Tensor:
    a = _as_tensor(a)
    out = Tensor(np.where(a.data > 0.0, a.data, alpha * a.data),
                 _parents=(a,) if _needs_grad(a) else ())
    if out._parents:
        out._backward = lambda g: _accum(a, g * np.where(a.data > 0.0, 1.0, alpha))
    return out


def sigmoid(a) -> Tensor:
    a = _as_tensor(a)
    x = a.data
    # split by sign to avoid exp overflow
    s = np.where(x >= 0.0, 1.0 / (1.0 + np.exp(-np.abs(x))),
                 np.exp(-np.abs(x)) / (1.0 + np.exp(-np.abs(x))))
    out = Tensor(s, _parents=(a,) if _needs_grad(a) else ())
    if out._parents:
        out._backward = lambda g: _accum(a, g * s * (1.0 - s))
    return out


def tanh(a) -> Tensor:
    a = _as_tensor(a)
    t = np.tanh(a.data)
    out = Tensor(t, _parents=(a,) if _needs_grad(a) else ())
    if out._parents:
        out._backward = lambda g: _accum(a, g * (1.0 - t * t))
    return out


def clip(a, lo: float, hi: float) -> Tensor:
    """Clamp; gradient passes through only where the clamp is inactive."""
    a = _as_tensor(a)
    out = Tensor(np.clip(a.data, lo, hi), _parents=(a,) if _needs_grad(a) else ())
    if out._parents:
        mask = (a.data > lo) & (a.data < hi)
        out._backward = lambda g: _accum(a, g * mask)
    return out


# ---------------------------------------------------------------- reductions

def mean(a) -> Tensor:
    a = _as_tensor(a)
    out = Tensor(a.data.mean(), _parents=(a,) if _needs_grad(a) else ())
    if out._parents:
        out._backward = lambda g: _accum(a, np.full(a.data.shape, float(g) / a.data.size))
    return out


def total(a) -> Tensor:
    """Sum of all elements."""
    a = _as_tensor(a)
    out = Tensor(a.data.sum(), _parents=(a,) if _needs_grad(a) else ())
    if out._parents:
        out._backward = lambda g: _accum(a, np.full(a.data.shape, float(g)))
    return out


# -------------------------------------------------------------- convolutions

def conv1d_out_len(length: int, k: int, stride: int, padding: int) -> int:
    return (length + 2 * padding - k) // stride + 1


def tconv1d_out_len(length: int, k: int, stride: int, padding: int) -> int:
    return (length - 1) * stride + k - 2 * padding


def conv1d(x, w, stride: int = 1, padding: int = 0) -> Tensor:
    """Batched cross-correlation. x: (B, C, L), w: (O, C, K) -> (B, O, L_out)."""
    x, w = _as_tensor(x), _as_tensor(w)
    if x.data.ndim != 3 or w.data.ndim != 3 or x.data.shape[1] != w.data.shape[1]:
        raise ShapeMismatch(f"conv1d x{x.data.shape} w{w.data.shape}")
    B, C, L = x.data.shape
    O, _, K = w.data.shape
    if L + 2 * padding < K:
        raise ShapeMismatch("kernel longer than padded input")
    lout = conv1d_out_len(L, K, stride, padding)

    xp = np.pad(x.data, ((0, 0), (0, 0), (padding, padding))) if padding else x.data
    windows = sliding_window_view(xp, K, axis=2)[:, :, ::stride, :][:, :, :lout, :]
    y = np.tensordot(windows, w.data, axes=([1, 3], [1, 2]))  # (B, L_out, O)
    out = Tensor(np.ascontiguousarray(y.transpose(0, 2, 1)),
                 _parents=(x, w) if _needs_grad(x, w) else ())

    if out._parents:
        def backward(g):
            # g: (B, O, L_out)
            _accum(w, np.einsum("bol,bclk->ock", g, windows, optimize=True))
            contrib = np.tensordot(g, w.data, axes=([1], [0]))  # (B, L_out, C, K)
            contrib = contrib.transpose(0, 2, 1, 3)             # (B, C, L_out, K)
            gxp = np.zeros((B, C, L + 2 * padding))
            for k in range(K):
                gxp[:, :, k:k + stride * lout:stride] += contrib[:, :, :, k]
            _accum(x, gxp[:, :, padding:padding + L] if padding else gxp)
        out._backward = backward
    return out


def tconv1d(x, w, stride: int = 1, padding: int = 0) -> Tensor:
    """Transposed conv, the adjoint of conv1d with the same geometry.

    x: (B, C_in, L), w: (C_in, C_out, K) -> (B, C_out, (L-1)*stride + K - 2*padding).
    """
    x, w = _as_tensor(x), _as_tensor(w)
    if x.data.ndim != 3 or w.data.ndim != 3 or x.data.shape[1] != w.data.shape[0]:
        raise ShapeMismatch(f"tconv1d x{x.data.shape} w{w.data.shape}")
    B, C, L = x.data.shape
    _, O, K = w.data.shape
    lout = tconv1d_out_len(L, K, stride, padding)
    if lout <= 0:
        raise ShapeMismatch("non-positive transposed-conv output length")
    full = (L - 1) * stride + K

    contrib = np.tensordot(x.data, w.data, axes=([1], [0]))  # (B, L, O, K)
    contrib = contrib.transpose(0, 2, 1, 3)                  # (B, O, L, K)
    yp = np.zeros((B, O, full))
    for k in range(K):
        yp[:, :, k:k + stride * L:stride] += contrib[:, :, :, k]
    out = Tensor(np.ascontiguousarray(yp[:, :, padding:padding + lout]),
                 _parents=(x, w) if _needs_grad(x, w) else ())

    if out._parents:
        def backward(g):
            gp = np.zeros((B, O, full))
            gp[:, :, padding:padding + lout] = g
            windows = sliding_window_view(gp, K, axis=2)[:, :, ::stride, :][:, :, :L, :]
            gx = np.tensordot(windows, w.data, axes=([1, 3], [1, 2]))  # (B, L, C_in)
            _accum(x, np.ascontiguousarray(gx.transpose(0, 2, 1)))
            _accum(w, np.einsum("bcl,bolk->cok", x.data, windows, optimize=True))
        out._backward = backward
    return out


# -------------------------------------------------------------------- losses

BCE_EPS = 1e-7


def bce_loss(pred, target) -> Tensor:
    """Mean binary cross-entropy; predictions clamped to [eps, 1-eps]."""
    pred = _as_tensor(pred)
    t = np.asarray(target, dtype=np.float64)
    if t.shape != pred.data.shape:
        raise ShapeMismatch(f"bce targets {t.shape} vs preds {pred.data.shape}")
    p = np.clip(pred.data, BCE_EPS, 1.0 - BCE_EPS)
    loss = -np.mean(t * np.log(p) + (1.0 - t) * np.log1p(-p))
    out = Tensor(loss, _parents=(pred,) if _needs_grad(pred) else ())

    if out._parents:
        active = (pred.data > BCE_EPS) & (pred.data < 1.0 - BCE_EPS)

        def backward(g):
            _accum(pred, float(g) * active * (p - t) / (p * (1.0 - p)) / p.size)
        out._backward = backward
    return out
