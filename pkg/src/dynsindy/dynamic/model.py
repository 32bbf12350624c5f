"""Dense VAE that maps a trajectory to a coefficient time series Ξ(t)."""
from __future__ import annotations

import io
import json
import zipfile
from dataclasses import asdict, dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from .. import autodiff as ad
from ..autodiff import MLP, Dense, Tensor
from ..autodiff.nn import ACTIVATIONS
from ..errors import ShapeError
from ..sindy import CoefficientSeries, LibrarySpec

EPS = np.finfo(np.float64).eps


@dataclass
class ModelConfig:
    latent_dim: int = 2
    encoder_hidden: Tuple[int, ...] = (256, 128)
    decoder_hidden: Tuple[int, ...] = (128, 256)
    activation: str = "elu"
    max_encoder_inputs: int = 512

    def __post_init__(self):
        self.encoder_hidden = tuple(int(h) for h in self.encoder_hidden)
        self.decoder_hidden = tuple(int(h) for h in self.decoder_hidden)
        if self.latent_dim < 1:
            raise ValueError("latent_dim must be at least 1")


class VaeModel:
    """Encoder ``[T'·d] → (μ, logσ)`` and decoder ``z → [T, n_terms, d]``.

    The encoder sees the trajectory strided down to at most
    ``max_encoder_inputs`` samples per dimension. The decoder trunk feeds one
    linear head per (term, equation); heads outside ``active_mask`` are not
    evaluated, so pruned terms are exactly zero.
    """

    def __init__(self, n_times: int, dim: int, library: LibrarySpec, config: ModelConfig = ModelConfig(),
                 seed: int = 0):
        self.n_times = int(n_times)
        self.dim = int(dim)
        self.library = library
        self.config = config
        self.term_names = library.term_names(dim)
        self.n_terms = len(self.term_names)
        self.stride = int(np.ceil(self.n_times / config.max_encoder_inputs))
        self.n_enc_times = len(range(0, self.n_times, self.stride))
        rng = np.random.default_rng(seed)
        self.encoder = MLP([self.n_enc_times * dim, *config.encoder_hidden, 2 * config.latent_dim], rng,
                           config.activation, name="encoder")
        if not config.decoder_hidden:
            raise ValueError("decoder needs at least one hidden layer")
        self.decoder = MLP([config.latent_dim, *config.decoder_hidden], rng, config.activation, name="decoder")
        width = config.decoder_hidden[-1]
        # one output head per (term, equation): together they form a single dense
        # layer, but pruned entries drop out of the forward pass and the optimizer
        self.heads = {(k, j): Dense(width, self.n_times, rng, name=f"decoder.out.{k}.{j}")
                      for k in range(self.n_terms) for j in range(dim)}
        self.active_mask = np.ones((self.n_terms, dim), dtype=bool)
        self.scale: Optional[np.ndarray] = None

    @property
    def latent_dim(self):
        return self.config.latent_dim

    def parameters(self) -> List[Tensor]:
        heads = [p for key in sorted(self.heads) for p in self.heads[key].parameters()]
        return self.encoder.parameters() + self.decoder.parameters() + heads

    def active_parameters(self) -> List[Tensor]:
        """Parameters that influence the decoded series under the current mask."""
        heads = [p for key in sorted(self.heads) if self.active_mask[key] for p in self.heads[key].parameters()]
        return self.encoder.parameters() + self.decoder.parameters() + heads

    def named_parameters(self) -> Dict[str, Tensor]:
        return {p.name: p for p in self.parameters()}

    # -- forward pieces -------------------------------------------------
    def encoder_input(self, trajectories) -> np.ndarray:
        x = np.asarray(trajectories, dtype=float)
        if x.ndim == 2:
            x = x[None]
        if x.shape[1:] != (self.n_times, self.dim):
            raise ShapeError(f"expected trajectories [B, {self.n_times}, {self.dim}], got {x.shape}")
        return x[:, ::self.stride, :].reshape(x.shape[0], -1)

    def encode(self, trajectories):
        """``(μ, logσ)`` tensors of shape ``[B, latent_dim]``."""
        out = self.encoder(Tensor(self.encoder_input(trajectories)))
        mu, log_sigma = ad.split(out, 2, axis=1)
        return mu, log_sigma

    def decode(self, z) -> Tensor:
        z = ad.tensor(z)
        if z.ndim == 1:
            z = z.reshape(1, -1)
        if z.shape[1] != self.latent_dim:
            raise ShapeError(f"latent vector must have length {self.latent_dim}")
        batch = z.shape[0]
        active = [key for key in sorted(self.heads) if self.active_mask[key]]
        if not active:
            return Tensor(np.zeros((batch, self.n_times, self.n_terms, self.dim)))
        h = ACTIVATIONS[self.config.activation](self.decoder(z))
        cols = [self.heads[key](h).reshape(batch * self.n_times, 1) for key in active]
        stacked = ad.concat(cols, axis=1) if len(cols) > 1 else cols[0]
        select = np.zeros((len(active), self.n_terms * self.dim))
        for row, (k, j) in enumerate(active):
            select[row, k * self.dim + j] = 1.0
        full = ad.matmul(stacked, select)
        return full.reshape(batch, self.n_times, self.n_terms, self.dim)

    def decode_series(self, z, times) -> List[CoefficientSeries]:
        xi = self.decode(z).data
        return [CoefficientSeries(xi[b], list(self.term_names), times) for b in range(xi.shape[0])]

    # -- persistence ---------------------------------------------------
    def state_dict(self) -> Dict[str, np.ndarray]:
        return {name: p.data.copy() for name, p in self.named_parameters().items()}

    def load_state_dict(self, state: Dict[str, np.ndarray]) -> None:
        params = self.named_parameters()
        missing = set(params) - set(state)
        if missing:
            raise KeyError(f"checkpoint lacks parameters {sorted(missing)}")
        for name, p in params.items():
            if state[name].shape != p.data.shape:
                raise ShapeError(f"parameter {name}: shape {state[name].shape} != {p.data.shape}")
            p.data[...] = state[name]


def reparameterize(mu, log_sigma, seed=None, rng: Optional[np.random.Generator] = None) -> Tensor:
    """``z = μ + exp(logσ) ⊙ η`` with ``η ~ N(0, I)`` drawn from ``seed`` or ``rng``."""
    mu, log_sigma = ad.tensor(mu), ad.tensor(log_sigma)
    if mu.shape != log_sigma.shape:
        raise ShapeError("mu and log_sigma shapes differ")
    rng = np.random.default_rng(seed) if rng is None else rng
    eta = rng.standard_normal(mu.shape)
    return mu + ad.exp(log_sigma) * eta


@dataclass
class LossWeights:
    mse: float = 3.0
    kl: float = 1000.0
    sp: float = 0.0
    tv: float = 0.0


def kld(mu, log_sigma) -> Tensor:
    """Closed-form KL to N(0, I), averaged over batch and latent dimensions."""
    inner = 1.0 + 2.0 * log_sigma - ad.square(mu) - ad.exp(2.0 * log_sigma)
    return ad.scale(ad.mean(inner), -0.5)


def loss_terms(xi: Tensor, library: np.ndarray, derivatives: np.ndarray, mu: Tensor, log_sigma: Tensor,
               mse_reduction: str = "sum") -> Dict[str, Tensor]:
    """Unweighted loss components.

    ``xi`` is ``[B, T, n_terms, d]``, ``library`` ``[B, T, n_terms]`` and
    ``derivatives`` ``[B, T, d]``. The reconstruction term is the squared
    residual summed over time and dimensions (``"sum"``) or averaged over
    them (``"mean"``), then averaged over the batch.
    """
    lib = np.asarray(library, dtype=float)[..., None]
    pred = ad.tsum(xi * lib, axis=2)
    resid = pred - np.asarray(derivatives, dtype=float)
    sq = ad.square(resid)
    if mse_reduction == "sum":
        mse = ad.scale(ad.tsum(sq), 1.0 / xi.shape[0])
    elif mse_reduction == "mean":
        mse = ad.mean(sq)
    else:
        raise ValueError(f"unknown mse_reduction {mse_reduction!r}")
    abs_xi = ad.absolute(xi)
    sp = ad.mean(abs_xi)
    diff = xi[:, 1:] - xi[:, :-1]
    tv = ad.mean(ad.absolute(diff)) / (sp + EPS)
    return {"mse": mse, "kl": kld(mu, log_sigma), "sp": sp, "tv": tv}


def total_loss(terms: Dict[str, Tensor], weights: LossWeights) -> Tensor:
    total = ad.scale(terms["mse"], weights.mse) + ad.scale(terms["kl"], weights.kl)
    if weights.sp:
        total = total + ad.scale(terms["sp"], weights.sp)
    if weights.tv:
        total = total + ad.scale(terms["tv"], weights.tv)
    return total


def loss(xi, library, derivatives, mu, log_sigma, weights: LossWeights, mse_reduction="sum"):
    """Weighted scalar loss and a float breakdown of its components."""
    terms = loss_terms(xi, library, derivatives, mu, log_sigma, mse_reduction)
    total = total_loss(terms, weights)
    breakdown = {k: v.item() for k, v in terms.items()}
    breakdown["total"] = total.item()
    return total, breakdown


# -- checkpoints -------------------------------------------------------------

_ZIP_DATE = (1980, 1, 1, 0, 0, 0)


def _zip_write(zf, name, payload: bytes):
    info = zipfile.ZipInfo(name, date_time=_ZIP_DATE)
    info.compress_type = zipfile.ZIP_DEFLATED
    info.external_attr = 0o644 << 16
    zf.writestr(info, payload)


def save_checkpoint(path, model: VaeModel, extra: Optional[dict] = None) -> None:
    """Parameters as ``.npy`` members plus ``meta.json`` in a zip archive.

    Member timestamps are pinned, so identical models give identical bytes.
    """
    meta = {
        "n_times": model.n_times,
        "dim": model.dim,
        "library": model.library.to_dict(),
        "model": {**asdict(model.config), "encoder_hidden": list(model.config.encoder_hidden),
                  "decoder_hidden": list(model.config.decoder_hidden)},
        "term_names": list(model.term_names),
        "active_mask": model.active_mask.tolist(),
        "scale": None if model.scale is None else np.asarray(model.scale).tolist(),
        "parameters": sorted(model.named_parameters()),
        "extra": extra or {},
    }
    with zipfile.ZipFile(path, "w") as zf:
        _zip_write(zf, "meta.json", json.dumps(meta, indent=2, sort_keys=True).encode())
        for name, value in sorted(model.state_dict().items()):
            buf = io.BytesIO()
            np.lib.format.write_array(buf, value, allow_pickle=False)
            _zip_write(zf, f"{name}.npy", buf.getvalue())


def load_checkpoint(path):
    """Return ``(model, extra)`` from a file written by :func:`save_checkpoint`."""
    with zipfile.ZipFile(path) as zf:
        meta = json.loads(zf.read("meta.json"))
        state = {name: np.lib.format.read_array(io.BytesIO(zf.read(f"{name}.npy")), allow_pickle=False)
                 for name in meta["parameters"]}
    lib = meta["library"]
    library = LibrarySpec(lib["degree"], lib["include_bias"],
                          None if lib["variable_subset"] is None else tuple(lib["variable_subset"]))
    model = VaeModel(meta["n_times"], meta["dim"], library, ModelConfig(**meta["model"]))
    model.load_state_dict(state)
    model.active_mask = np.array(meta["active_mask"], dtype=bool)
    model.scale = None if meta["scale"] is None else np.array(meta["scale"], dtype=float)
    return model, meta["extra"]
