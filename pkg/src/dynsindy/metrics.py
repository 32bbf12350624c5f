"""Scoring helpers: coefficient rescaling, schedule errors, trajectory replay, support overlap."""
from __future__ import annotations

from typing import Optional, Tuple

import numpy as np

from .errors import DivergenceError, ShapeError
from .sindy import CoefficientSeries, LibrarySpec, parse_term


def rescale_factors(term_names, scale) -> np.ndarray:
    """``[n_terms, d]`` factors ``s_j / prod_v s_v**p_v`` undoing max-abs normalization."""
    if scale is None:
        raise ValueError("no normalization scale recorded; nothing to rescale with")
    scale = np.asarray(scale, dtype=float)
    powers = np.stack([parse_term(name, scale.size) for name in term_names])
    denom = np.prod(scale[None, :] ** powers, axis=1)
    return scale[None, :] / denom[:, None]


def rescale_coefficients(series: CoefficientSeries, scale) -> CoefficientSeries:
    """Map coefficients learned on normalized data back to raw units."""
    factors = rescale_factors(series.term_names, scale)
    if factors.shape[1] != series.n_equations:
        raise ShapeError(f"scale has {factors.shape[1]} entries for {series.n_equations} equations")
    return CoefficientSeries(series.values * factors[None], list(series.term_names), series.times.copy())


def _values(x):
    return np.asarray(getattr(x, "values", x), dtype=float)


def coeff_error(estimate, truth, times=None) -> Tuple[float, Optional[float]]:
    """RMSE and Pearson correlation between a coefficient trace and the truth.

    ``truth`` is either sampled values or a schedule evaluated at ``times``.
    The correlation is ``None`` when either trace is constant.
    """
    est = np.asarray(estimate, dtype=float).ravel()
    if callable(truth):
        if times is None:
            raise ValueError("times are needed to evaluate a schedule")
        ref = np.broadcast_to(np.asarray(truth(np.asarray(times, dtype=float)), dtype=float), est.shape)
    else:
        ref = np.asarray(truth, dtype=float).ravel()
    if ref.shape != est.shape:
        raise ShapeError(f"estimate has {est.size} samples, truth {ref.size}")
    rmse = float(np.sqrt(np.mean((est - ref) ** 2)))
    if np.ptp(est) == 0 or np.ptp(ref) == 0:
        return rmse, None
    return rmse, float(np.corrcoef(est, ref)[0, 1])


def reconstruct_trajectory(series, spec: LibrarySpec, x0, dt: float, substeps: int = 100,
                           bound: float = 1e8) -> np.ndarray:
    """Replay ``ẋ = Θ(x)·Ξ(t)`` by forward Euler at ``dt / substeps``.

    ``Ξ`` is held constant over each sampling interval. Returns ``[T, d]`` on
    the original grid, starting at ``x0``.
    """
    xi = _values(series)
    if xi.ndim != 3:
        raise ShapeError("series must be [T, n_terms, d]")
    x = np.array(x0, dtype=float)
    dim = x.size
    powers = spec.powers(dim)
    if powers.shape[0] != xi.shape[1] or xi.shape[2] != dim:
        raise ShapeError("series does not match the library for this state dimension")
    h = dt / substeps
    out = np.empty((xi.shape[0], dim))
    out[0] = x
    for k in range(xi.shape[0] - 1):
        coeffs = xi[k]
        with np.errstate(over="ignore", invalid="ignore"):
            for _ in range(substeps):
                theta = np.prod(x[None, :] ** powers, axis=1)
                x = x + h * (theta @ coeffs)
        if not np.all(np.isfinite(x)) or np.max(np.abs(x)) > bound:
            raise DivergenceError(f"reconstruction left |x| <= {bound:g} at sample {k + 1}")
        out[k + 1] = x
    return out


def support_match(mask_a, mask_b) -> Tuple[bool, float]:
    """Exact equality flag and Jaccard index of two boolean support masks."""
    a = np.asarray(mask_a, dtype=bool)
    b = np.asarray(mask_b, dtype=bool)
    if a.shape != b.shape:
        raise ShapeError(f"mask shapes differ: {a.shape} vs {b.shape}")
    union = np.count_nonzero(a | b)
    jaccard = 1.0 if union == 0 else np.count_nonzero(a & b) / union
    return bool(np.array_equal(a, b)), float(jaccard)
