"""Layer kinds used by the generator, discriminator and forecaster."""

from __future__ import annotations

import numpy as np

from ..errors import ShapeMismatch
from . import tensor as T
from .tensor import Tensor

ACTIVATIONS = ("relu", "leaky_relu", "sigmoid", "tanh", "none")


def apply_activation(x: Tensor, kind: str) -> Tensor:
    if kind == "relu":
        return T.relu(x)
    if kind == "leaky_relu":
        return T.leaky_relu(x, 0.2)
    if kind == "sigmoid":
        return T.sigmoid(x)
    if kind == "tanh":
        return T.tanh(x)
    if kind == "none":
        return x
    raise ValueError(f"unknown activation {kind!r}")


def glorot_uniform(rng: np.random.Generator, shape: tuple, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


class Dense:
    """y = x W + b for x of shape (B, n_in)."""

    kind = "dense"

    def __init__(self, n_in: int, n_out: int, activation: str = "none",
                 rng: np.random.Generator | None = None):
        if n_in <= 0 or n_out <= 0:
            raise ShapeMismatch("dense dims must be positive")
        rng = rng or np.random.default_rng(0)
        self.n_in, self.n_out, self.activation = n_in, n_out, activation
        self.w = Tensor(glorot_uniform(rng, (n_in, n_out), n_in, n_out), requires_grad=True)
        self.b = Tensor(np.zeros(n_out), requires_grad=True)

    def __call__(self, x: Tensor) -> Tensor:
        return apply_activation(T.add(T.matmul(x, self.w), self.b), self.activation)

    def parameters(self) -> list[Tensor]:
        return [self.w, self.b]

    def spec(self) -> dict:
        return {"kind": self.kind, "in": self.n_in, "out": self.n_out,
                "activation": self.activation}


class Conv1d:
    """Strided cross-correlation over (B, C, L) inputs."""

    kind = "conv1d"

    def __init__(self, c_in: int, c_out: int, k: int, stride: int = 1, padding: int = 0,
                 activation: str = "none", rng: np.random.Generator | None = None):
        if min(c_in, c_out, k, stride) <= 0 or padding < 0:
            raise ShapeMismatch("conv1d dims must be positive")
        rng = rng or np.random.default_rng(0)
        self.c_in, self.c_out, self.k = c_in, c_out, k
        self.stride, self.padding, self.activation = stride, padding, activation
        self.w = Tensor(glorot_uniform(rng, (c_out, c_in, k), c_in * k, c_out * k),
                        requires_grad=True)
        self.b = Tensor(np.zeros(c_out), requires_grad=True)

    def __call__(self, x: Tensor) -> Tensor:
        y = T.conv1d(x, self.w, self.stride, self.padding)
        y = T.add(y, T.reshape(self.b, (1, self.c_out, 1)))
        return apply_activation(y, self.activation)

    def out_len(self, length: int) -> int:
        return T.conv1d_out_len(length, self.k, self.stride, self.padding)

    def parameters(self) -> list[Tensor]:
        return [self.w, self.b]

    def spec(self) -> dict:
        return {"kind": self.kind, "in": self.c_in, "out": self.c_out, "k": self.k,
                "stride": self.stride, "padding": self.padding,
                "activation": self.activation}


class TConv1d:
    """Transposed convolution, adjoint geometry of Conv1d."""

    kind = "tconv1d"

    def __init__(self, c_in: int, c_out: int, k: int, stride: int = 1, padding: int = 0,
                 activation: str = "none", rng: np.random.Generator | None = None):
        if min(c_in, c_out, k, stride) <= 0 or padding < 0:
            raise ShapeMismatch("tconv1d dims must be positive")
        rng = rng or np.random.default_rng(0)
        self.c_in, self.c_out, self.k = c_in, c_out, k
        self.stride, self.padding, self.activation = stride, padding, activation
        self.w = Tensor(glorot_uniform(rng, (c_in, c_out, k), c_in * k, c_out * k),
                        requires_grad=True)
        self.b = Tensor(np.zeros(c_out), requires_grad=True)

    def __call__(self, x: Tensor) -> Tensor:
        y = T.tconv1d(x, self.w, self.stride, self.padding)
        y = T.add(y, T.reshape(self.b, (1, self.c_out, 1)))
        return apply_activation(y, self.activation)

    def out_len(self, length: int) -> int:
        n = T.tconv1d_out_len(length, self.k, self.stride, self.padding)
        if n <= 0:
            raise ShapeMismatch(f"tconv1d output length {n} for input length {length}")
        return n

    def parameters(self) -> list[Tensor]:
        return [self.w, self.b]

    def spec(self) -> dict:
        return {"kind": self.kind, "in": self.c_in, "out": self.c_out, "k": self.k,
                "stride": self.stride, "padding": self.padding,
                "activation": self.activation}


class LSTMCell:
    """Standard LSTM gates: sigmoid input/forget/output, tanh candidate.

    Gate pre-activations are one fused affine map of (x, h); weight columns
    are ordered (input, forget, candidate, output).
    """

    kind = "lstm"

    def __init__(self, n_in: int, n_hidden: int, rng: np.random.Generator | None = None):
        if n_in <= 0 or n_hidden <= 0:
            raise ShapeMismatch("lstm dims must be positive")
        rng = rng or np.random.default_rng(0)
        self.n_in, self.n_hidden = n_in, n_hidden
        self.wx = Tensor(glorot_uniform(rng, (n_in, 4 * n_hidden), n_in, 4 * n_hidden),
                         requires_grad=True)
        self.wh = Tensor(glorot_uniform(rng, (n_hidden, 4 * n_hidden), n_hidden, 4 * n_hidden),
                         requires_grad=True)
        self.b = Tensor(np.zeros(4 * n_hidden), requires_grad=True)

    def __call__(self, x: Tensor, h: Tensor, c: Tensor) -> tuple[Tensor, Tensor]:
        if x.data.shape[1] != self.n_in or h.data.shape[1] != self.n_hidden:
            raise ShapeMismatch("lstm input/hidden width mismatch")
        H = self.n_hidden
        z = T.add(T.add(T.matmul(x, self.wx), T.matmul(h, self.wh)), self.b)
        i = T.sigmoid(T.narrow(z, 1, 0, H))
        f = T.sigmoid(T.narrow(z, 1, H, H))
        g = T.tanh(T.narrow(z, 1, 2 * H, H))
        o = T.sigmoid(T.narrow(z, 1, 3 * H, H))
        c_next = T.add(T.mul(f, c), T.mul(i, g))
        h_next = T.mul(o, T.tanh(c_next))
        return h_next, c_next

    def initial_state(self, batch: int) -> tuple[Tensor, Tensor]:
        zeros = np.zeros((batch, self.n_hidden))
        return Tensor(zeros), Tensor(zeros.copy())

    def parameters(self) -> list[Tensor]:
        return [self.wx, self.wh, self.b]

    def spec(self) -> dict:
        return {"kind": self.kind, "in": self.n_in, "hidden": self.n_hidden}
