from .tensor import (
    Tensor, add, sub, mul, neg, scale, matmul, reshape, concat, narrow,
    relu, leaky_relu, sigmoid, tanh, clip, mean, total,
    conv1d, tconv1d, bce_loss, conv1d_out_len, tconv1d_out_len, no_grad,
)
from .layers import Dense, Conv1d, TConv1d, LSTMCell, apply_activation, glorot_uniform
from .optim import Adam
from .gradcheck import grad_check
from .checkpoint import save_checkpoint, load_checkpoint, MAGIC

__all__ = [
    "Tensor", "add", "sub", "mul", "neg", "scale", "matmul", "reshape",
    "concat", "narrow", "relu", "leaky_relu", "sigmoid", "tanh", "clip",
    "mean", "total", "conv1d", "tconv1d", "bce_loss", "no_grad",
    "conv1d_out_len", "tconv1d_out_len",
    "Dense", "Conv1d", "TConv1d", "LSTMCell", "apply_activation",
    "glorot_uniform", "Adam", "grad_check",
    "save_checkpoint", "load_checkpoint", "MAGIC",
]
