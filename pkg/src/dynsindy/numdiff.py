"""Finite-difference derivatives, moving-average smoothing and spline refinement."""
from __future__ import annotations

import numpy as np
from scipy.interpolate import CubicSpline

from .synth import TrajectoryDataset


def central_difference(data, dt: float | None = None, axis: int | None = None) -> np.ndarray:
    """Second-order derivative estimate along time.

    Accepts a :class:`TrajectoryDataset` (differentiates ``states`` along the
    time axis, returns ``[n_traj, T, d]``) or a plain array with ``dt`` given,
    differentiated along ``axis`` (default 0). Interior points use central
    differences, endpoints second-order one-sided stencils.
    """
    if isinstance(data, TrajectoryDataset):
        values, dt, axis = data.states, data.dt, 1
    else:
        if dt is None:
            raise ValueError("dt is required for array input")
        values, axis = np.asarray(data, dtype=float), 0 if axis is None else axis
    if values.shape[axis] < 3:
        raise ValueError("need at least 3 samples")
    return np.gradient(values, dt, axis=axis, edge_order=2)


def smooth(series, window: int, axis: int = 0) -> np.ndarray:
    """Centered moving average; the window shrinks symmetrically at the edges."""
    series = np.asarray(series, dtype=float)
    n = series.shape[axis]
    if window < 1 or window % 2 == 0:
        raise ValueError("window must be a positive odd integer")
    if window > n:
        raise ValueError("window longer than series")
    if window == 1:
        return series.copy()
    moved = np.moveaxis(series, axis, 0)
    csum = np.concatenate([np.zeros((1,) + moved.shape[1:]), np.cumsum(moved, axis=0)])
    half = window // 2
    idx = np.arange(n)
    half_eff = np.minimum(half, np.minimum(idx, n - 1 - idx))
    lo, hi = idx - half_eff, idx + half_eff + 1
    counts = (hi - lo).reshape((-1,) + (1,) * (moved.ndim - 1))
    out = (csum[hi] - csum[lo]) / counts
    return np.moveaxis(out, 0, axis)


def cubic_spline_refine(series, times, factor: int):
    """Natural cubic spline through the samples, evaluated on a grid ``dt / factor``.

    Returns ``(values, refined_times)``; the refined grid contains every
    original time, so original samples are reproduced exactly.
    """
    series = np.asarray(series, dtype=float)
    times = np.asarray(times, dtype=float)
    if factor < 1:
        raise ValueError("factor must be >= 1")
    if factor == 1:
        return series.copy(), times.copy()
    if times.size < 4:
        raise ValueError("need at least 4 samples for spline refinement")
    frac = np.arange(factor) / factor
    fine = (times[:-1, None] + np.diff(times)[:, None] * frac[None, :]).ravel()
    fine = np.append(fine, times[-1])
    spline = CubicSpline(times, series, axis=0, bc_type="natural")
    values = spline(fine)
    # pin knots to the input bitwise
    values[::factor] = series
    return values, fine
