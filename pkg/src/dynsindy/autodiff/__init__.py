"""Minimal reverse-mode autodiff used by the dynamic SINDy trainer."""
from .tensor import (Tensor, absolute, add, backward, concat, elu, exp, grad, log, matmul, mean,
                     mul, relu, reshape, scale, sigmoid, split, square, tanh, tensor, tsum)
from .nn import MLP, Dense, named_parameters
from .optim import Adam, OptimizerSpec, RMSprop, clip_grad_norm, step

__all__ = [
    "Tensor", "absolute", "add", "backward", "concat", "elu", "exp", "grad", "log", "matmul",
    "mean", "mul", "relu", "reshape", "scale", "sigmoid", "split", "square", "tanh", "tensor",
    "tsum", "MLP", "Dense", "named_parameters", "Adam", "OptimizerSpec", "RMSprop",
    "clip_grad_norm", "step",
]
