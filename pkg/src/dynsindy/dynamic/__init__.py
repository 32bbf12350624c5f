"""Dynamic SINDy: a VAE that emits time-varying SINDy coefficients."""
from .model import (LossWeights, ModelConfig, VaeModel, kld, load_checkpoint, loss, loss_terms,
                    reparameterize, save_checkpoint, total_loss)
from .train import PhaseConfig, TrainConfig, TrainResult, evaluate_mse, generate, posterior_mean_series, train
from .uq import uq_std_over_samples, uq_std_over_time

__all__ = [
    "LossWeights", "ModelConfig", "VaeModel", "kld", "load_checkpoint", "loss", "loss_terms",
    "reparameterize", "save_checkpoint", "total_loss", "PhaseConfig", "TrainConfig", "TrainResult", "evaluate_mse",
    "generate", "posterior_mean_series", "train", "uq_std_over_samples", "uq_std_over_time",
]
