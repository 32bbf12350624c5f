"""Polynomial candidate library and sequential thresholded least squares.

Term ordering is part of the public contract: bias first, then degree-1
monomials in variable order, then degree-2 monomials in lexicographic order,
then degree-3. Terms are named from the variable indices, e.g. ``"1"``,
``"x0"``, ``"x0^2 x1"``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import solve_triangular

from .errors import RankDeficiencyError, ShapeError

RANK_TOL = 1e-10


def monomial_name(combo: Tuple[int, ...]) -> str:
    if not combo:
        return "1"
    parts = []
    for var, group in itertools.groupby(combo):
        power = len(list(group))
        parts.append(f"x{var}" if power == 1 else f"x{var}^{power}")
    return " ".join(parts)


@dataclass(frozen=True)
class LibrarySpec:
    degree: int = 3
    include_bias: bool = True
    variable_subset: Optional[Tuple[int, ...]] = None

    def __post_init__(self):
        if not 1 <= self.degree <= 3:
            raise ValueError("library degree must be in [1, 3]")
        if self.variable_subset is not None:
            object.__setattr__(self, "variable_subset", tuple(int(v) for v in self.variable_subset))

    def variables(self, dim: int) -> Tuple[int, ...]:
        variables = tuple(range(dim)) if self.variable_subset is None else self.variable_subset
        if any(v < 0 or v >= dim for v in variables):
            raise ValueError(f"variable_subset {variables} out of range for dimension {dim}")
        return variables

    def combos(self, dim: int) -> List[Tuple[int, ...]]:
        """Monomials as sorted tuples of variable indices, in library order."""
        out = [()] if self.include_bias else []
        variables = self.variables(dim)
        for k in range(1, self.degree + 1):
            out.extend(itertools.combinations_with_replacement(variables, k))
        return out

    def term_names(self, dim: int) -> List[str]:
        return [monomial_name(c) for c in self.combos(dim)]

    def n_terms(self, dim: int) -> int:
        return len(self.combos(dim))

    def powers(self, dim: int) -> np.ndarray:
        """Exponent matrix ``[n_terms, dim]``."""
        combos = self.combos(dim)
        out = np.zeros((len(combos), dim), dtype=int)
        for row, combo in enumerate(combos):
            for var in combo:
                out[row, var] += 1
        return out

    def to_dict(self):
        return {"degree": self.degree, "include_bias": self.include_bias,
                "variable_subset": None if self.variable_subset is None else list(self.variable_subset)}


def build_library(states, spec: LibrarySpec) -> np.ndarray:
    """Evaluate the library on ``states`` of shape ``[N, d]`` (or ``[..., N, d]``)."""
    states = np.asarray(states, dtype=float)
    dim = states.shape[-1]
    cols = []
    for combo in spec.combos(dim):
        col = np.ones(states.shape[:-1])
        for var in combo:
            col = col * states[..., var]
        cols.append(col)
    return np.stack(cols, axis=-1)


def parse_term(name: str, dim: int) -> np.ndarray:
    """Exponent vector of a term name such as ``"x0^2 x1"``."""
    powers = np.zeros(dim, dtype=int)
    if name == "1":
        return powers
    for part in name.split():
        var, _, power = part[1:].partition("^")
        powers[int(var)] += int(power) if power else 1
    return powers


@dataclass
class CoefficientMatrix:
    values: np.ndarray  # [n_terms, d]
    term_names: List[str]

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2 or self.values.shape[0] != len(self.term_names):
            raise ShapeError("coefficient matrix must be [n_terms, d] matching term_names")

    @property
    def support(self) -> np.ndarray:
        return self.values != 0

    def coefficient(self, equation: int, term: str) -> float:
        return float(self.values[self.term_names.index(term), equation])

    def to_dict(self):
        return {"term_names": list(self.term_names), "values": self.values.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(np.array(d["values"], dtype=float), list(d["term_names"]))

    def equations(self, precision=4) -> List[str]:
        out = []
        for j in range(self.values.shape[1]):
            parts = [f"{self.values[k, j]:+.{precision}g} {name}"
                     for k, name in enumerate(self.term_names) if self.values[k, j] != 0]
            out.append(f"x{j}' = " + (" ".join(parts) if parts else "0"))
        return out


@dataclass
class CoefficientSeries:
    """Time-varying coefficients ``values[t, term, equation]``."""

    values: np.ndarray
    term_names: List[str]
    times: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.times = np.asarray(self.times, dtype=float)
        if self.values.ndim != 3 or self.values.shape[1] != len(self.term_names):
            raise ShapeError("coefficient series must be [T, n_terms, d] matching term_names")
        if self.values.shape[0] != self.times.shape[0]:
            raise ShapeError("coefficient series length must match times")

    @property
    def n_equations(self):
        return self.values.shape[2]

    def term(self, equation: int, term: str) -> np.ndarray:
        return self.values[:, self.term_names.index(term), equation]

    @property
    def support(self) -> np.ndarray:
        return np.any(self.values != 0, axis=0)

    def to_dict(self):
        return {"term_names": list(self.term_names), "times": self.times.tolist(),
                "values": self.values.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(np.array(d["values"], dtype=float), list(d["term_names"]),
                   np.array(d["times"], dtype=float))


def lstsq_qr(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Least squares through a thin QR factorization.

    Raises :class:`RankDeficiencyError` if ``|R_ii| / max |R_ii| < RANK_TOL``.
    """
    if A.shape[1] == 0:
        return np.zeros((0,) + b.shape[1:])
    if A.shape[0] < A.shape[1]:
        raise RankDeficiencyError(f"underdetermined system: {A.shape[0]} rows, {A.shape[1]} columns")
    q, r = np.linalg.qr(A, mode="reduced")
    diag = np.abs(np.diag(r))
    if diag.max() == 0 or diag.min() < RANK_TOL * diag.max():
        raise RankDeficiencyError(
            f"active-set least squares is singular (min/max |R_ii| = {diag.min() / max(diag.max(), 1e-300):.2e})")
    return solve_triangular(r, q.T @ b)


def stlsq(library: np.ndarray, derivatives: np.ndarray, threshold: float, max_iters: int = 20,
          term_names: Optional[Sequence[str]] = None, return_info: bool = False):
    """Sequential thresholded least squares, one equation (column) at a time.

    Each iteration solves least squares on the active terms and then prunes
    coefficients with ``|xi| < threshold``. Stops as soon as the support stops
    changing or after ``max_iters`` prune rounds.
    """
    library = np.asarray(library, dtype=float)
    derivatives = np.asarray(derivatives, dtype=float)
    if derivatives.ndim == 1:
        derivatives = derivatives[:, None]
    if threshold < 0:
        raise ValueError("threshold must be non-negative")
    n, n_terms = library.shape
    if n < n_terms:
        raise ValueError("need at least as many samples as library terms")
    coef = np.zeros((n_terms, derivatives.shape[1]))
    converged = True
    iterations = []
    for j in range(derivatives.shape[1]):
        active = np.ones(n_terms, dtype=bool)
        it = 0
        stable = False
        while True:
            xi = np.zeros(n_terms)
            xi[active] = lstsq_qr(library[:, active], derivatives[:, j])
            keep = active & (np.abs(xi) >= threshold)
            if np.array_equal(keep, active):
                stable = True
                break
            active = keep
            it += 1
            if it >= max_iters:
                # refit on the final support so retained values are least squares
                xi = np.zeros(n_terms)
                xi[active] = lstsq_qr(library[:, active], derivatives[:, j])
                break
        converged &= stable
        iterations.append(it)
        coef[:, j] = xi
    names = list(term_names) if term_names is not None else [f"t{k}" for k in range(n_terms)]
    result = CoefficientMatrix(coef, names)
    if return_info:
        return result, {"converged": bool(converged), "iterations": iterations}
    return result


def predict_derivative(library_row, coeffs) -> np.ndarray:
    """``Θ(x) · Ξ`` for one library row (or rows ``[..., n_terms]``)."""
    coeffs = coeffs.values if isinstance(coeffs, CoefficientMatrix) else np.asarray(coeffs)
    return np.asarray(library_row) @ coeffs


def predict_series(library: np.ndarray, series) -> np.ndarray:
    """Row-wise ``Θ(x(t)) · Ξ(t)`` for ``library [T, n_terms]`` and ``Ξ [T, n_terms, d]``."""
    values = series.values if isinstance(series, CoefficientSeries) else np.asarray(series)
    return np.einsum("tk,tkd->td", library, values)
