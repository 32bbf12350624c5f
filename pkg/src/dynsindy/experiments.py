"""Pipelines driven by an :class:`ExperimentConfig`; the CLI and scripts call these."""
from __future__ import annotations

import copy
import logging
from dataclasses import dataclass
from typing import Dict, List, Optional

import numpy as np

from . import group_sparse, latent, metrics
from .config import ExperimentConfig
from .dynamic import VaeModel, generate, posterior_mean_series, train
from .dynamic.train import TrainResult
from .dynamic.uq import uq_std_over_samples, uq_std_over_time
from .numdiff import central_difference, smooth
from .sindy import CoefficientMatrix, CoefficientSeries, build_library, stlsq
from .synth import TrajectoryDataset, add_noise, normalize, simulate

log = logging.getLogger(__name__)


def simulate_dataset(cfg: ExperimentConfig) -> TrajectoryDataset:
    sim = cfg.simulation
    ds = simulate(cfg.system(), sim.x0, sim.dt, sim.n_steps, method=sim.method, n_traj=sim.n_traj,
                  x0_jitter_std=sim.x0_jitter_std, seed=cfg.seed, t0=sim.t0,
                  coefficient_noise_std=sim.coefficient_noise_std)
    return add_noise(ds, sim.noise_std, seed=cfg.seed)


def derivatives_for(ds: TrajectoryDataset, cfg: ExperimentConfig) -> np.ndarray:
    """Exact derivatives when requested and available, else central differences of the states."""
    if cfg.derivatives == "exact":
        if ds.derivatives is None:
            raise ValueError("config asks for exact derivatives but the dataset has none")
        return ds.derivatives
    return central_difference(ds)


def fit_stlsq(ds: TrajectoryDataset, cfg: ExperimentConfig) -> CoefficientMatrix:
    """One coefficient matrix fitted to all trajectories stacked."""
    derivs = derivatives_for(ds, cfg)
    lib = build_library(ds.states, cfg.library).reshape(-1, cfg.library.n_terms(ds.dim))
    return stlsq(lib, derivs.reshape(-1, ds.dim), cfg.stlsq.threshold, cfg.stlsq.max_iters,
                 term_names=cfg.library.term_names(ds.dim))


def fit_group(ds: TrajectoryDataset, cfg: ExperimentConfig) -> group_sparse.GroupResult:
    g = cfg.group
    spec = cfg.library if g.library is None else g.library
    problem = group_sparse.partition_windows(ds, g.window_len, spec, derivatives_for(ds, cfg)[g.trajectory],
                                             trajectory=g.trajectory)
    if g.algorithm == "ght":
        return group_sparse.ght_dynamics(problem, g.gamma, g.tol, g.max_iters)
    return group_sparse.simple_sequential_threshold(problem, g.threshold)


@dataclass
class DynamicRun:
    model: VaeModel
    result: TrainResult
    dataset: TrajectoryDataset  # normalized training data

    def posterior_series(self) -> List[CoefficientSeries]:
        """Rescaled posterior-mean series, one per training trajectory."""
        xi = posterior_mean_series(self.model, self.dataset.states)
        out = []
        for b in range(xi.shape[0]):
            s = CoefficientSeries(xi[b], list(self.model.term_names), self.dataset.times)
            out.append(metrics.rescale_coefficients(s, self.dataset.scale))
        return out

    def samples(self, n: int, seed: int = 0) -> List[CoefficientSeries]:
        """Rescaled decoder samples with ``z ~ N(0, I)``."""
        raw = generate(self.model, n, seed=seed, times=self.dataset.times)
        return [metrics.rescale_coefficients(s, self.dataset.scale) for s in raw]


def train_dynamic(ds: TrajectoryDataset, cfg: ExperimentConfig, callback=None, spec=None,
                  model=None) -> DynamicRun:
    spec = cfg.library if spec is None else spec
    ds = ds.replace(derivatives=derivatives_for(ds, cfg))
    ds = normalize(ds)
    tcfg = cfg.dynamic.training
    if model is None:
        model = VaeModel(ds.n_times, ds.dim, spec, cfg.dynamic.model, seed=tcfg.seed)
    model.scale = ds.scale
    result = train(model, ds.states, ds.derivatives, tcfg, callback=callback)
    return DynamicRun(model, result, ds)


def ground_truth_errors(series: CoefficientSeries, ds: TrajectoryDataset) -> Dict[str, dict]:
    """RMSE/correlation of every ground-truth coefficient, plus unexpected support."""
    out: Dict[str, dict] = {}
    truth = ds.ground_truth or {}
    for (eq, term), sched in sorted(truth.items()):
        key = f"eq{eq}:{term}"
        if term not in series.term_names:
            out[key] = {"rmse": None, "corr": None, "missing_term": True}
            continue
        rmse, corr = metrics.coeff_error(series.term(eq, term), sched, series.times)
        out[key] = {"rmse": rmse, "corr": corr}
    return out


def true_mask(term_names, ds: TrajectoryDataset) -> np.ndarray:
    mask = np.zeros((len(term_names), ds.dim), dtype=bool)
    for (eq, term) in (ds.ground_truth or {}):
        if term in term_names:
            mask[term_names.index(term), eq] = True
    return mask


def evaluate(series: CoefficientSeries, ds: TrajectoryDataset) -> dict:
    """Flat metrics record for a recovered series against a dataset's ground truth."""
    errors = ground_truth_errors(series, ds)
    support = series.support
    exact, jaccard = metrics.support_match(support, true_mask(series.term_names, ds))
    return {"coefficients": errors, "support_exact": exact, "support_jaccard": jaccard,
            "n_active": int(support.sum())}


@dataclass
class LatentRun:
    hidden: latent.HiddenCoefficient
    closure: CoefficientMatrix
    reconstructed: Optional[np.ndarray]  # hidden state from the inversion, when alpha/beta given
    observed: np.ndarray


def discover_latent(ds: TrajectoryDataset, cfg: ExperimentConfig, callback=None) -> LatentRun:
    """Train on the observed dimensions, read off the hidden coefficient and close the system."""
    lc = cfg.latent
    if lc is None:
        raise ValueError("config has no latent section")
    derivs = derivatives_for(ds, cfg)
    obs = ds.replace(states=ds.states[..., lc.observed], derivatives=derivs[..., lc.observed],
                     ground_truth=None)
    tcfg = cfg.dynamic.training
    hidden = latent.infer_hidden_coefficient(obs, tcfg, lc.library, cfg.dynamic.model, lc.term, lc.equation,
                                             seed=tcfg.seed, callback=callback)
    trace = hidden.values
    if lc.smooth_window > 1:
        trace = smooth(trace, lc.smooth_window, axis=1)
    raw_obs = ds.states[..., lc.observed]
    closure = latent.fit_augmented_system([raw_obs[i] for i in range(ds.n_traj)],
                                          [trace[i] for i in range(ds.n_traj)], ds.dt,
                                          lc.closure_library, lc.closure_threshold)
    recon = None
    if lc.alpha is not None and lc.beta is not None:
        recon = latent.reconstruct_hidden(trace, lc.q, lc.alpha, lc.beta)
    return LatentRun(hidden, closure, recon, raw_obs)


def uq_sweep(cfg: ExperimentConfig, levels, kind: str = "coefficient", n_samples: Optional[int] = None,
             callback=None) -> List[dict]:
    """Train one model per noise level (same seeds) and average both spread estimates over the true support.

    ``kind="coefficient"`` sets ``simulation.coefficient_noise_std``; ``kind="state"`` sets
    ``simulation.noise_std``.
    """
    if kind not in ("coefficient", "state"):
        raise ValueError(f"kind must be coefficient or state, got {kind!r}")
    rows = []
    for level in levels:
        c = copy.deepcopy(cfg)
        if kind == "coefficient":
            c.simulation.coefficient_noise_std = float(level)
        else:
            c.simulation.noise_std = float(level)
        ds = simulate_dataset(c)
        run = train_dynamic(ds, c, callback=callback)
        samples = run.samples(n_samples or c.dynamic.n_samples, seed=c.seed)
        true = true_mask(run.model.term_names, ds)
        rows.append({
            "level": float(level),
            "over_samples": float(uq_std_over_samples(samples)[true].mean()),
            "over_time": float(uq_std_over_time(samples)[true].mean()),
            "support_exact": bool(np.array_equal(run.result.active_mask, true)),
        })
    return rows
