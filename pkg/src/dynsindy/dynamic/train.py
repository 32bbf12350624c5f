"""Phased training of the dynamic SINDy VAE, sample generation."""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .. import autodiff as ad
from ..autodiff.optim import OptimizerSpec, step
from ..errors import TrainingError
from ..sindy import CoefficientSeries, build_library
from .model import LossWeights, VaeModel, loss, reparameterize

log = logging.getLogger(__name__)


@dataclass
class PhaseConfig:
    """One training phase.

    With ``prune`` set, every ``threshold_interval`` epochs the terms whose
    time-mean ``|ξ|`` (decoded at ``z = μ``, averaged over trajectories) is
    below ``threshold`` are removed from the active mask; afterwards the
    threshold and ``lambda_sp`` advance by their increments up to their caps.
    """

    epochs: int
    lambda_mse: float = 3.0
    lambda_kl: float = 1000.0
    lambda_sp: float = 0.0
    lambda_tv: float = 0.0
    prune: bool = False
    threshold: float = 0.01
    threshold_interval: int = 50
    threshold_increment: float = 0.0
    threshold_max: Optional[float] = None
    lambda_sp_increment: float = 0.0
    lambda_sp_max: Optional[float] = None
    batch_size: Optional[int] = None  # None: all trajectories in one batch

    def __post_init__(self):
        for name in ("lambda_mse", "lambda_kl", "lambda_sp", "lambda_tv", "threshold"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.epochs < 0 or self.threshold_interval < 1 or (self.batch_size is not None and self.batch_size < 1):
            raise ValueError("epochs >= 0, threshold_interval >= 1, batch_size >= 1 required")


@dataclass
class TrainConfig:
    phases: List[PhaseConfig]
    optimizer: OptimizerSpec = field(default_factory=OptimizerSpec)
    clip_norm: Optional[float] = 1.0
    mse_reduction: str = "sum"
    seed: int = 0


@dataclass
class TrainResult:
    model: VaeModel
    active_mask: np.ndarray
    history: List[dict]
    final_mse: float
    empty_model: bool = False
    prune_events: List[dict] = field(default_factory=list)


def posterior_mean_series(model: VaeModel, states) -> np.ndarray:
    """Decoded Ξ at ``z = μ`` for each trajectory, ``[n_traj, T, n_terms, d]``."""
    mu, _ = model.encode(states)
    return model.decode(mu.detach()).data


def _prune(model, states, threshold):
    xi = posterior_mean_series(model, states)
    stat = np.mean(np.abs(xi), axis=(0, 1))
    keep = model.active_mask & (stat >= threshold)
    removed = model.active_mask & ~keep
    model.active_mask = keep
    return stat, removed


def train(model: VaeModel, states, derivatives, config: TrainConfig,
          callback=None) -> TrainResult:
    """Train ``model`` on normalized ``states [n_traj, T, d]`` against ``derivatives``.

    Phases run in order. An epoch visits all trajectories in a seeded random
    order in batches of the phase's ``batch_size`` (default: one batch); the learning-rate
    schedule advances once per epoch. Raises :class:`TrainingError` when the
    loss stops being finite.
    """
    states = np.asarray(states, dtype=float)
    derivatives = np.asarray(derivatives, dtype=float)
    if states.ndim == 2:
        states, derivatives = states[None], derivatives[None]
    if states.shape != derivatives.shape:
        raise ValueError("states and derivatives must have the same shape")
    library = build_library(states, model.library)
    params = model.parameters()
    opt = config.optimizer.build(params)
    rng = np.random.default_rng(config.seed)
    n_traj = states.shape[0]
    history: List[dict] = []
    prune_events: List[dict] = []
    empty = False
    global_epoch = 0

    for phase_idx, phase in enumerate(config.phases):
        threshold, lam_sp = phase.threshold, phase.lambda_sp
        for epoch in range(phase.epochs):
            weights = LossWeights(phase.lambda_mse, phase.lambda_kl, lam_sp, phase.lambda_tv)
            order = rng.permutation(n_traj)
            size = n_traj if phase.batch_size is None else phase.batch_size
            batches = [order[i:i + size] for i in range(0, n_traj, size)]
            sums = {}
            for b, idx in enumerate(batches):
                mu, log_sigma = model.encode(states[idx])
                z = reparameterize(mu, log_sigma, rng=rng)
                xi = model.decode(z)
                total, breakdown = loss(xi, library[idx], derivatives[idx], mu, log_sigma, weights,
                                        config.mse_reduction)
                if not math.isfinite(breakdown["total"]):
                    raise TrainingError(
                        f"non-finite loss in phase {phase_idx} epoch {epoch}: {breakdown}; "
                        "check learning rate and loss weights")
                grads = ad.grad(total, params, unused="none")
                step(opt, params, grads, config.clip_norm, advance_schedule=(b == len(batches) - 1))
                for k, v in breakdown.items():
                    sums[k] = sums.get(k, 0.0) + v * len(idx)
            record = {k: v / n_traj for k, v in sums.items()}
            record.update(phase=phase_idx, epoch=global_epoch, lambda_sp=lam_sp, threshold=threshold,
                          n_active=int(model.active_mask.sum()))
            history.append(record)
            global_epoch += 1
            if callback is not None:
                callback(record)

            boundary = (epoch + 1) % phase.threshold_interval == 0 or epoch == phase.epochs - 1
            if phase.prune and boundary:
                stat, removed = _prune(model, states, threshold)
                if removed.any():
                    prune_events.append({"epoch": global_epoch, "threshold": threshold,
                                         "removed": np.argwhere(removed).tolist()})
                    log.info("epoch %d: pruned %d terms at threshold %g", global_epoch,
                             int(removed.sum()), threshold)
                threshold += phase.threshold_increment
                if phase.threshold_max is not None:
                    threshold = min(threshold, phase.threshold_max)
                lam_sp += phase.lambda_sp_increment
                if phase.lambda_sp_max is not None:
                    lam_sp = min(lam_sp, phase.lambda_sp_max)
                if not model.active_mask.any():
                    empty = True
                    warnings.warn("all library terms pruned; the model is empty", RuntimeWarning)
                    break
        if empty:
            break

    final_mse = evaluate_mse(model, states, derivatives, library) if states.size else float("nan")
    return TrainResult(model, model.active_mask.copy(), history, final_mse, empty, prune_events)


def evaluate_mse(model: VaeModel, states, derivatives, library=None) -> float:
    """Per-entry mean squared derivative error at ``z = μ``."""
    if library is None:
        library = build_library(states, model.library)
    xi = posterior_mean_series(model, states)
    pred = np.einsum("btk,btkd->btd", library, xi)
    return float(np.mean((pred - derivatives) ** 2))


def generate(model: VaeModel, n_samples: int, seed: int = 0, times=None) -> List[CoefficientSeries]:
    """Decode ``n_samples`` draws ``z ~ N(0, I)``; the encoder is not used."""
    if n_samples <= 0:
        return []
    times = np.arange(model.n_times, dtype=float) if times is None else np.asarray(times, dtype=float)
    z = np.random.default_rng(seed).standard_normal((n_samples, model.latent_dim))
    return model.decode_series(z, times)
