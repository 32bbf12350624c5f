"""Windowed sparse regression with one support shared by all time windows.

Two solvers are provided: group hard-iterative thresholding (gradient step,
joint hard threshold on stacked row norms, constrained refit) and the simple
sequential thresholding variant that averages absolute coefficients across
windows before pruning.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from .errors import WindowTooSmallError
from .sindy import CoefficientMatrix, CoefficientSeries, LibrarySpec, build_library, lstsq_qr


@dataclass
class Window:
    library: np.ndarray      # [l_i, n_terms]
    derivatives: np.ndarray  # [l_i, d]
    span: Tuple[float, float]

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.span[0] + self.span[1])


@dataclass
class WindowedProblem:
    windows: List[Window]
    window_len: int
    term_names: List[str]

    @property
    def midpoints(self) -> np.ndarray:
        return np.array([w.midpoint for w in self.windows])


@dataclass
class GroupResult:
    """Per-window coefficient matrices plus solver diagnostics."""

    coefficients: List[CoefficientMatrix]
    midpoints: np.ndarray
    converged: bool = True
    iterations: int = 0

    def __iter__(self):
        return iter(self.coefficients)

    def __len__(self):
        return len(self.coefficients)

    def __getitem__(self, i):
        return self.coefficients[i]

    def stacked(self) -> np.ndarray:
        """``[M, n_terms, d]``."""
        return np.stack([c.values for c in self.coefficients])

    def to_series(self) -> CoefficientSeries:
        return CoefficientSeries(self.stacked(), list(self.coefficients[0].term_names), self.midpoints)


def partition_windows(dataset, window_len: int, spec: LibrarySpec, derivatives=None,
                      trajectory: int = 0) -> WindowedProblem:
    """Cut one trajectory into ``floor(T / window_len)`` contiguous windows.

    ``derivatives`` defaults to the dataset's exact derivatives. The trailing
    remainder is dropped.
    """
    states = dataset.states[trajectory]
    derivs = dataset.derivatives[trajectory] if derivatives is None else np.asarray(derivatives)
    if derivs is None:
        raise ValueError("no derivatives available for partitioning")
    n_terms = spec.n_terms(dataset.dim)
    if window_len < n_terms:
        raise WindowTooSmallError(f"window_len {window_len} smaller than library size {n_terms}")
    n_times = states.shape[0]
    if n_times < 2 * window_len:
        raise ValueError("trajectory must hold at least two windows")
    windows = []
    for i in range(n_times // window_len):
        sl = slice(i * window_len, (i + 1) * window_len)
        t = dataset.times[sl]
        windows.append(Window(build_library(states[sl], spec), derivs[sl], (float(t[0]), float(t[-1]))))
    return WindowedProblem(windows, window_len, spec.term_names(dataset.dim))


def l20_norm(stacked) -> int:
    """Number of rows with nonzero Euclidean norm."""
    stacked = np.asarray(stacked, dtype=float)
    if stacked.ndim == 1:
        stacked = stacked[:, None]
    rows = stacked.reshape(stacked.shape[0], -1)
    return int(np.count_nonzero(np.any(rows != 0, axis=1)))


def _refit(problem: WindowedProblem, support: np.ndarray) -> np.ndarray:
    """Least squares per window and equation restricted to ``support [n_terms, d]``."""
    n_terms = len(problem.term_names)
    d = problem.windows[0].derivatives.shape[1]
    out = np.zeros((len(problem.windows), n_terms, d))
    for i, w in enumerate(problem.windows):
        for j in range(d):
            active = support[:, j]
            if active.any():
                out[i, active, j] = lstsq_qr(w.library[:, active], w.derivatives[:, j])
    return out


def _result(problem, stacked, converged=True, iterations=0):
    coeffs = [CoefficientMatrix(stacked[i], list(problem.term_names)) for i in range(stacked.shape[0])]
    return GroupResult(coeffs, problem.midpoints, converged, iterations)


def ght_dynamics(problem: WindowedProblem, gamma: float, tol: float = 1e-8, max_iters: int = 500,
                 init: Optional[np.ndarray] = None) -> GroupResult:
    """Group hard-iterative thresholding.

    Each sweep takes a gradient step ``ξ ← ξ − Θᵀ(Θξ − Ẋ) / ‖Θ‖₂²`` in every
    window, keeps the (term, equation) rows whose norm stacked over windows is
    at least ``sqrt(gamma)``, and refits every window by least squares on that
    shared support. The result carries ``converged=False`` if ``max_iters``
    sweeps did not bring successive iterates within ``tol``.
    """
    if gamma <= 0 or tol <= 0:
        raise ValueError("gamma and tol must be positive")
    n_terms = len(problem.term_names)
    d = problem.windows[0].derivatives.shape[1]
    if init is None:
        xi = _refit(problem, np.ones((n_terms, d), dtype=bool))
    else:
        xi = np.array(init, dtype=float)
    steps = [1.0 / np.linalg.norm(w.library, 2) ** 2 for w in problem.windows]
    cut = np.sqrt(gamma)
    for it in range(1, max_iters + 1):
        grad_step = np.empty_like(xi)
        for i, w in enumerate(problem.windows):
            grad_step[i] = xi[i] - steps[i] * w.library.T @ (w.library @ xi[i] - w.derivatives)
        row_norms = np.sqrt(np.sum(grad_step**2, axis=0))
        support = row_norms >= cut
        new = _refit(problem, support)
        delta = np.linalg.norm(new - xi)
        xi = new
        if delta <= tol:
            return _result(problem, xi, True, it)
    return _result(problem, xi, False, max_iters)


def simple_sequential_threshold(problem: WindowedProblem, threshold: float, iters: int = 100) -> GroupResult:
    """Sequential thresholding on window-averaged coefficient magnitudes.

    Starts from per-window least squares; each iteration zeroes, in every
    window, the (term, equation) entries whose mean ``|ξ|`` over windows falls
    below ``threshold`` and refits the remaining entries window by window.
    """
    if threshold < 0:
        raise ValueError("threshold must be non-negative")
    n_terms = len(problem.term_names)
    d = problem.windows[0].derivatives.shape[1]
    active = np.ones((n_terms, d), dtype=bool)
    xi = _refit(problem, active)
    done = 0
    for done in range(1, iters + 1):
        big = active & (np.mean(np.abs(xi), axis=0) >= threshold)
        if np.array_equal(big, active):
            break
        active = big
        xi = _refit(problem, active)
    return _result(problem, xi, True, done)
