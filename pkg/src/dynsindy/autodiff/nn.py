"""Dense layers and multilayer perceptrons on top of :mod:`.tensor`."""
from __future__ import annotations

from typing import Dict, List, Sequence

import numpy as np

from .tensor import Tensor, elu, matmul, relu, sigmoid, tanh

ACTIVATIONS = {
    "elu": elu,
    "relu": relu,
    "tanh": tanh,
    "sigmoid": sigmoid,
    None: lambda x: x,
    "linear": lambda x: x,
}


class Dense:
    """``y = x @ W + b`` with ``W`` of shape ``[n_in, n_out]``.

    Weights and bias start uniform on ``±1/sqrt(n_in)``.
    """

    def __init__(self, n_in: int, n_out: int, rng: np.random.Generator, name: str = "dense"):
        bound = 1.0 / np.sqrt(n_in)
        self.name = name
        self.weight = Tensor(rng.uniform(-bound, bound, size=(n_in, n_out)), requires_grad=True,
                             name=f"{name}.weight")
        self.bias = Tensor(rng.uniform(-bound, bound, size=(n_out,)), requires_grad=True,
                           name=f"{name}.bias")

    def __call__(self, x: Tensor) -> Tensor:
        return matmul(x, self.weight) + self.bias

    def parameters(self) -> List[Tensor]:
        return [self.weight, self.bias]


class MLP:
    def __init__(self, sizes: Sequence[int], rng: np.random.Generator, activation: str = "elu",
                 name: str = "mlp"):
        if len(sizes) < 2:
            raise ValueError("an MLP needs at least input and output sizes")
        if activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {activation!r}")
        self.activation = activation
        self.layers = [Dense(a, b, rng, name=f"{name}.{i}") for i, (a, b) in enumerate(zip(sizes[:-1], sizes[1:]))]

    def __call__(self, x: Tensor) -> Tensor:
        act = ACTIVATIONS[self.activation]
        for layer in self.layers[:-1]:
            x = act(layer(x))
        return self.layers[-1](x)

    def parameters(self) -> List[Tensor]:
        return [p for layer in self.layers for p in layer.parameters()]


def named_parameters(*modules) -> Dict[str, Tensor]:
    out = {}
    for module in modules:
        for p in module.parameters():
            out[p.name] = p
    return out
