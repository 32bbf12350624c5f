"""Hidden-variable recovery, system closure and cubic switching-model analysis."""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from scipy.special import expit

from .dynamic import ModelConfig, TrainConfig, TrainResult, VaeModel, posterior_mean_series, train
from .errors import DivergenceError
from .metrics import rescale_factors
from .numdiff import central_difference, cubic_spline_refine
from .sindy import CoefficientMatrix, LibrarySpec, build_library, stlsq
from .synth import TrajectoryDataset, normalize

log = logging.getLogger(__name__)

OBSERVED_ONLY = LibrarySpec(degree=3, include_bias=False)


@dataclass
class HiddenCoefficient:
    """Recovered coefficient trace ``values [n_traj, T]`` in raw units."""

    values: np.ndarray
    times: np.ndarray
    term: str
    equation: int
    support: np.ndarray
    result: TrainResult


def coefficient_trace(model: VaeModel, states, equation: int, term: str, scale=None) -> np.ndarray:
    """Posterior-mean trace of one coefficient for every trajectory, rescaled if ``scale`` is given."""
    xi = posterior_mean_series(model, states)
    k = model.term_names.index(term)
    trace = xi[:, :, k, equation]
    if scale is not None:
        trace = trace * rescale_factors(model.term_names, scale)[k, equation]
    return trace


def infer_hidden_coefficient(dataset: TrajectoryDataset, train_config: TrainConfig,
                             spec: LibrarySpec = OBSERVED_ONLY, model_config: Optional[ModelConfig] = None,
                             term: str = "x0", equation: int = 0, seed: int = 0,
                             callback=None) -> HiddenCoefficient:
    """Train dynamic SINDy on the observed series and return the trace of ``term``.

    With the default library ``{x, x^2, x^3}`` on a one-dimensional series the
    surviving coefficient is ỹ(t) in ``ẋ = x·ỹ(t)``. A warning is issued when
    the pruned support is not exactly ``{term}`` in ``equation``.
    """
    if dataset.derivatives is None:
        dataset = dataset.replace(derivatives=central_difference(dataset))
    ds = dataset if dataset.scale is not None else normalize(dataset)
    model = VaeModel(ds.n_times, ds.dim, spec, model_config or ModelConfig(), seed=seed)
    model.scale = ds.scale
    result = train(model, ds.states, ds.derivatives, train_config, callback=callback)
    support = result.active_mask.copy()
    expected = np.zeros_like(support)
    expected[model.term_names.index(term), equation] = True
    if not np.array_equal(support, expected):
        names = [model.term_names[k] for k in np.flatnonzero(support[:, equation])]
        warnings.warn(f"surviving terms in equation {equation} are {names}, expected only {term}",
                      RuntimeWarning)
    values = coefficient_trace(model, ds.states, equation, term, ds.scale)
    return HiddenCoefficient(values, ds.times.copy(), term, equation, support, result)


def reconstruct_hidden(ytilde, q: float, alpha: float, beta: float) -> np.ndarray:
    """Invert ``ỹ = q·(α − β·y)`` for the hidden predator population."""
    if q == 0 or beta == 0:
        raise ValueError("q and beta must be nonzero")
    return (q * alpha - np.asarray(ytilde, dtype=float)) / (q * beta)


def lv_closed_coefficients(alpha: float, beta: float, gamma: float, delta: float, q: float = 1.0):
    """Analytic ``(a, b, c, d, e)`` of the closed predator-prey model in ``(x, ỹ)``.

    ``ẋ = a·xỹ`` and ``dỹ/dt = b + c·x + d·ỹ + e·xỹ`` with ``ỹ = q(α − βy)``.
    ``beta`` does not appear; it is taken for symmetry with the system spec.
    """
    if q == 0:
        raise ValueError("q must be nonzero")
    return 1.0 / q, q * alpha * gamma, -q * alpha * delta, -gamma, delta


def _rows(a):
    a = np.asarray(a, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    return a


def fit_augmented_system(observed, inferred, dt: Optional[float] = None, spec: LibrarySpec = LibrarySpec(2),
                         threshold: float = 0.05, derivatives=None) -> CoefficientMatrix:
    """Stack observed states with inferred hidden traces and identify an autonomous model.

    ``observed`` is ``[T, k]`` (or ``[T]``), ``inferred`` ``[T, m]`` (or
    ``[T]``); lists of such arrays are treated as separate trajectories.
    Derivatives default to central differences with step ``dt``.
    """
    if isinstance(observed, (list, tuple)):
        pieces = [_augment(o, h) for o, h in zip(observed, inferred)]
    else:
        pieces = [_augment(observed, inferred)]
    if derivatives is None:
        if dt is None:
            raise ValueError("dt is required when derivatives are not supplied")
        derivs = [central_difference(p, dt) for p in pieces]
    else:
        derivs = [_rows(d) for d in (derivatives if isinstance(derivatives, (list, tuple)) else [derivatives])]
    states = np.concatenate(pieces)
    target = np.concatenate(derivs)
    library = build_library(states, spec)
    return stlsq(library, target, threshold, term_names=spec.term_names(states.shape[1]))


def _augment(observed, inferred):
    return np.hstack([_rows(observed), _rows(inferred)])


# -- cubic switching model -----------------------------------------------------

def cubic_fixed_points(a3: float, a2: float, a1: float, u: float,
                       imag_tol: float = 1e-9) -> List[Tuple[float, str]]:
    """Real roots of ``f(x) = a3·x³ + a2·x² + a1·x + u`` with their stability.

    For ``ẋ = y, ẏ = f(x) + ay·y`` (``ay < 0``) a root is stable when
    ``f'(root) < 0``. Roots are sorted ascending.
    """
    if a3 == 0:
        raise ValueError("a3 must be nonzero for a cubic")
    roots = np.roots([a3, a2, a1, u])
    # companion-matrix eigenvalues; keep the numerically real ones and polish
    real = [r.real for r in roots if abs(r.imag) <= imag_tol * max(1.0, abs(r))]

    def f(x):
        return ((a3 * x + a2) * x + a1) * x + u

    out = []
    for r in real:
        for _ in range(3):
            fp = 3 * a3 * r * r + 2 * a2 * r + a1
            if fp == 0:
                break
            cand = r - f(r) / fp
            # near a double root Newton can jump away; keep only improving steps
            if abs(f(cand)) >= abs(f(r)):
                break
            r = cand
        slope = 3 * a3 * r * r + 2 * a2 * r + a1
        out.append((float(r), "stable" if slope < 0 else "unstable"))
    return sorted(out)


def postprocess_switch(u, gain: float = 1000.0) -> np.ndarray:
    """Turn an inferred control trace into a two-level switch.

    Removes the time mean, squashes ``gain`` times the residual with a
    logistic, maps the result onto the residual's range and restores the mean.
    """
    u = np.asarray(u, dtype=float)
    mean = u.mean()
    centered = u - mean
    lo, hi = centered.min(), centered.max()
    if hi - lo == 0:
        raise ValueError("constant input has no switch levels")
    squashed = expit(gain * centered)
    return lo + (hi - lo) * squashed + mean


def reconstruct_with_switch(coefficients, u, x0, dt: float, substeps: int = 100, hold: str = "zoh",
                            times=None, bound: float = 1e8) -> np.ndarray:
    """Euler-integrate the cubic control model at ``dt / substeps``.

    ``coefficients`` is ``(a3, a2, a1, ay)``; ``u`` is sampled on the data
    grid and refined by zero-order hold (``hold="zoh"``, for switch signals)
    or a natural cubic spline (``hold="spline"``). Returns ``[T, 2]``.
    """
    a3, a2, a1, ay = (float(c) for c in coefficients)
    u = np.asarray(u, dtype=float)
    n = u.size
    if hold == "zoh":
        fine = np.repeat(u, substeps)
    elif hold == "spline":
        grid = dt * np.arange(n) if times is None else np.asarray(times, dtype=float)
        fine, _ = cubic_spline_refine(u, grid, substeps)
    else:
        raise ValueError(f"unknown hold {hold!r}")
    h = dt / substeps
    x, y = (float(v) for v in x0)
    out = np.empty((n, 2))
    out[0] = x, y
    for k in range(n - 1):
        for s in range(k * substeps, (k + 1) * substeps):
            acc = ((a3 * x + a2) * x + a1) * x + ay * y + fine[s]
            x, y = x + h * y, y + h * acc
        if not (abs(x) <= bound and abs(y) <= bound):
            raise DivergenceError(f"state exceeded bound {bound:g} at sample {k + 1}")
        out[k + 1] = x, y
    return out
