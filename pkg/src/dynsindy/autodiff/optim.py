"""Adam/AdamW and RMSprop with global-norm clipping and an exponential LR schedule."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .tensor import Tensor


def clip_grad_norm(grads: Sequence[Optional[np.ndarray]], max_norm: Optional[float]):
    """Rescale ``grads`` jointly so their global 2-norm is at most ``max_norm``.

    ``None`` entries (frozen parameters) are passed through. Returns
    ``(clipped, original_norm)``.
    """
    total = float(np.sqrt(sum(float(np.vdot(g, g)) for g in grads if g is not None)))
    if max_norm is None or max_norm <= 0 or total <= max_norm:
        return list(grads), total
    factor = max_norm / total
    return [None if g is None else g * factor for g in grads], total


class Optimizer:
    def __init__(self, params: Sequence[Tensor], lr: float, gamma: float = 1.0):
        self.params = list(params)
        self.lr = float(lr)
        self.base_lr = float(lr)
        self.gamma = float(gamma)
        self.step_count = 0

    def update(self, grads: Sequence[np.ndarray]) -> None:
        raise NotImplementedError

    def schedule_step(self) -> None:
        """ExponentialLR: ``lr ← gamma · lr`` once per call."""
        self.lr *= self.gamma

    def state_dict(self) -> dict:
        return {"lr": self.lr, "step_count": self.step_count}


class Adam(Optimizer):
    """Adam with optional AMSGrad.

    ``decoupled=False`` adds ``weight_decay · p`` to the gradient (L2, as in
    classic Adam); ``decoupled=True`` shrinks parameters directly (AdamW).
    """

    def __init__(self, params, lr=1e-3, betas=(0.9, 0.999), eps=1e-8, weight_decay=0.0,
                 amsgrad=False, decoupled=False, gamma=1.0):
        super().__init__(params, lr, gamma)
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.weight_decay = weight_decay
        self.amsgrad = amsgrad
        self.decoupled = decoupled
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]
        self.vmax = [np.zeros_like(p.data) for p in self.params] if amsgrad else None

    def update(self, grads):
        """One step; parameters whose gradient is ``None`` are left untouched."""
        self.step_count += 1
        t = self.step_count
        b1, b2 = self.beta1, self.beta2
        bc1 = 1.0 - b1**t
        bc2 = 1.0 - b2**t
        for i, (p, g) in enumerate(zip(self.params, grads)):
            if g is None:
                continue
            if self.weight_decay:
                if self.decoupled:
                    p.data *= 1.0 - self.lr * self.weight_decay
                else:
                    g = g + self.weight_decay * p.data
            m, v = self.m[i], self.v[i]
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            g = g * g
            g *= 1.0 - b2
            v += g
            if self.amsgrad:
                np.maximum(self.vmax[i], v, out=self.vmax[i])
                v_hat = self.vmax[i]
            else:
                v_hat = v
            # g is reused as scratch: step = lr/bc1 * m / (sqrt(v_hat/bc2) + eps)
            np.sqrt(v_hat, out=g)
            g *= 1.0 / np.sqrt(bc2)
            g += self.eps
            np.divide(m, g, out=g)
            g *= self.lr / bc1
            p.data -= g


class RMSprop(Optimizer):
    def __init__(self, params, lr=1e-3, decay=0.99, eps=1e-8, weight_decay=0.0, gamma=1.0):
        super().__init__(params, lr, gamma)
        self.decay = decay
        self.eps = eps
        self.weight_decay = weight_decay
        self.sq = [np.zeros_like(p.data) for p in self.params]

    def update(self, grads):
        self.step_count += 1
        for i, (p, g) in enumerate(zip(self.params, grads)):
            if g is None:
                continue
            if self.weight_decay:
                g = g + self.weight_decay * p.data
            sq = self.sq[i]
            sq *= self.decay
            sq += (1.0 - self.decay) * g * g
            p.data -= self.lr * g / (np.sqrt(sq) + self.eps)


@dataclass
class OptimizerSpec:
    kind: str = "adam"          # adam | adamw | rmsprop
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 1e-5
    amsgrad: bool = False
    decay: float = 0.99         # rmsprop smoothing constant
    gamma: float = 1.0          # ExponentialLR factor per epoch

    def build(self, params) -> Optimizer:
        if self.kind == "adam":
            return Adam(params, self.lr, (self.beta1, self.beta2), self.eps, self.weight_decay,
                        self.amsgrad, decoupled=False, gamma=self.gamma)
        if self.kind == "adamw":
            return Adam(params, self.lr, (self.beta1, self.beta2), self.eps, self.weight_decay,
                        self.amsgrad, decoupled=True, gamma=self.gamma)
        if self.kind == "rmsprop":
            return RMSprop(params, self.lr, self.decay, self.eps, self.weight_decay, gamma=self.gamma)
        raise ValueError(f"unknown optimizer kind {self.kind!r}")


def step(opt: Optimizer, params: Sequence[Tensor], grads: Sequence[np.ndarray],
         clip_norm: Optional[float] = None, advance_schedule: bool = True):
    """Clip to ``clip_norm``, apply one optimizer update, advance the LR schedule.

    Returns the parameters (updated in place) and the pre-clip gradient norm.
    """
    if len(params) != len(opt.params) or any(a is not b for a, b in zip(params, opt.params)):
        raise ValueError("params do not match the optimizer's parameter list")
    for p, g in zip(params, grads):
        if g is not None and p.data.shape != np.shape(g):
            raise ValueError(f"gradient shape {np.shape(g)} does not match parameter {p.data.shape}")
    clipped, norm = clip_grad_norm(grads, clip_norm)
    opt.update(clipped)
    if advance_schedule:
        opt.schedule_step()
    return params, norm
