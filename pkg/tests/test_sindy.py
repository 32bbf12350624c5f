import numpy as np
import pytest
from hypothesis import given, strategies as st

from dynsindy.errors import RankDeficiencyError
from dynsindy.sindy import (CoefficientMatrix, CoefficientSeries, LibrarySpec, build_library, monomial_name,
                            parse_term, predict_derivative, predict_series, stlsq)
from dynsindy.synth import Constant, Lorenz, simulate


def test_term_count_and_order():
    spec = LibrarySpec(3)
    assert spec.n_terms(2) == 10
    assert spec.term_names(2) == ["1", "x0", "x1", "x0^2", "x0 x1", "x1^2", "x0^3", "x0^2 x1", "x0 x1^2", "x1^3"]
    row = build_library(np.array([[2.0, 3.0]]), spec)[0]
    assert list(row) == [1, 2, 3, 4, 6, 9, 8, 12, 18, 27]


def test_degree_one_and_subset():
    x = np.array([[2.0, 3.0, 5.0]])
    assert list(build_library(x, LibrarySpec(1))[0]) == [1, 2, 3, 5]
    sub = LibrarySpec(3, include_bias=False, variable_subset=(0,))
    assert sub.term_names(3) == ["x0", "x0^2", "x0^3"]
    assert list(build_library(x, sub)[0]) == [2, 4, 8]
    with pytest.raises(ValueError):
        LibrarySpec(4)
    with pytest.raises(ValueError):
        LibrarySpec(2, variable_subset=(3,)).term_names(2)


@given(st.integers(1, 3), st.booleans(), st.integers(1, 4))
def test_names_parse_to_powers(degree, bias, dim):
    spec = LibrarySpec(degree, bias)
    names = spec.term_names(dim)
    powers = np.array([parse_term(n, dim) for n in names])
    assert np.array_equal(powers, spec.powers(dim))
    assert len(set(names)) == len(names)
    assert (names[0] == "1") == bias


def test_monomial_name():
    assert monomial_name(()) == "1"
    assert monomial_name((0, 0, 1)) == "x0^2 x1"


def test_stlsq_constructed_oracle():
    rng = np.random.default_rng(1)
    x = rng.normal(size=(300, 3))
    spec = LibrarySpec(2)
    lib = build_library(x, spec)
    true = np.zeros((spec.n_terms(3), 3))
    true[1, 0], true[5, 1], true[8, 2], true[0, 2] = 1.5, -0.7, 2.0, 0.3
    est = stlsq(lib, lib @ true, 0.1)
    assert np.allclose(est.values, true, atol=1e-8)
    assert np.array_equal(est.support, true != 0)


def test_stlsq_total_pruning():
    rng = np.random.default_rng(2)
    lib = rng.normal(size=(100, 4))
    y = lib @ np.array([0.1, -0.2, 0.05, 0.0])
    assert np.all(stlsq(lib, y, 10.0).values == 0)


def test_stlsq_lorenz():
    lor = Lorenz(Constant(10.0), Constant(28.0), Constant(8 / 3))
    ds = simulate(lor, (-8.0, 7.0, 27.0), 0.01, 2000)
    spec = LibrarySpec(3)
    coef = stlsq(build_library(ds.states[0], spec), ds.derivatives[0], 0.1, term_names=spec.term_names(3))
    expected = {(0, "x0"): -10, (0, "x1"): 10, (1, "x0"): 28, (1, "x1"): -1, (1, "x0 x2"): -1,
                (2, "x2"): -8 / 3, (2, "x0 x1"): 1}
    mask = np.zeros_like(coef.support)
    for (eq, term), v in expected.items():
        mask[coef.term_names.index(term), eq] = True
        assert coef.coefficient(eq, term) == pytest.approx(v, rel=0.02)
    assert np.array_equal(coef.support, mask)


def test_stlsq_retained_above_threshold_and_idempotent():
    rng = np.random.default_rng(3)
    lib = rng.normal(size=(200, 6))
    y = lib @ rng.normal(size=(6, 2)) + 0.05 * rng.normal(size=(200, 2))
    est = stlsq(lib, y, 0.5)
    nz = est.values[est.support]
    assert np.all(np.abs(nz) >= 0.5)
    for j in range(2):
        act = est.support[:, j]
        again = stlsq(lib[:, act], y[:, j], 0.5)
        assert np.allclose(again.values[:, 0], est.values[act, j])


def test_stlsq_ties_retained():
    lib = np.eye(3)
    res = stlsq(lib, np.array([0.5, 0.2, 1.0]), 0.5)
    assert list(res.values[:, 0]) == [0.5, 0.0, 1.0]


def test_rank_deficiency():
    x = np.linspace(0, 1, 50)
    lib = np.stack([x, 2 * x], axis=1)
    with pytest.raises(RankDeficiencyError):
        stlsq(lib, x, 0.0)


def test_predict():
    row = np.array([1.0, 2.0, 3.0])
    assert np.all(predict_derivative(row, np.zeros((3, 2))) == 0)
    c = np.zeros((3, 2))
    c[0, 1] = 4.5
    assert list(predict_derivative(row, c)) == [0.0, 4.5]
    rng = np.random.default_rng(0)
    c = rng.normal(size=(3, 2))
    assert np.allclose(predict_derivative(row, 2 * c), 2 * predict_derivative(row, c))
    lib = rng.normal(size=(5, 3))
    vals = rng.normal(size=(5, 3, 2))
    series = CoefficientSeries(vals, ["1", "x0", "x1"], np.arange(5.0))
    assert np.allclose(predict_series(lib, series)[2], lib[2] @ vals[2])


def test_serialization_keeps_term_mapping():
    names = LibrarySpec(2).term_names(2)
    vals = np.arange(4 * 6 * 2, dtype=float).reshape(4, 6, 2)
    s = CoefficientSeries(vals, names, np.arange(4.0))
    back = CoefficientSeries.from_dict(s.to_dict())
    assert back.term_names == names and np.array_equal(back.values, vals)
    m = CoefficientMatrix(vals[0], names)
    assert CoefficientMatrix.from_dict(m.to_dict()).coefficient(1, "x0 x1") == m.coefficient(1, "x0 x1")
