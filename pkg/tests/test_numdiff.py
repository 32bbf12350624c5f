import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import cumulative_trapezoid

from dynsindy.numdiff import central_difference, cubic_spline_refine, smooth
from dynsindy.synth import TrajectoryDataset


def test_linear_exact():
    t = np.arange(50) * 0.1
    ds = TrajectoryDataset(t, (3 * t)[None, :, None], 0.1)
    assert np.allclose(central_difference(ds), 3.0, atol=1e-10)


@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3))
def test_quadratic_exact_including_edges(a, b, c):
    t = np.arange(20) * 0.05
    d = central_difference(a * t**2 + b * t + c, 0.05)
    assert np.allclose(d, 2 * a * t + b, atol=1e-9)


def test_sine_accuracy_and_order():
    def err(dt):
        t = np.arange(0, 10, dt)
        return np.max(np.abs(central_difference(np.sin(t), dt)[1:-1] - np.cos(t)[1:-1]))

    e1, e2 = err(0.01), err(0.005)
    assert e1 <= 2e-5
    assert 3.5 <= e1 / e2 <= 4.5


def test_constant_zero_and_shape():
    ds = TrajectoryDataset(np.arange(10.0), np.full((2, 10, 3), 7.0), 1.0)
    d = central_difference(ds)
    assert d.shape == (2, 10, 3) and np.all(d == 0)
    with pytest.raises(ValueError):
        central_difference(np.arange(5.0))
    with pytest.raises(ValueError):
        central_difference(np.arange(2.0), 1.0)


def test_differentiate_then_integrate():
    dt = 0.01
    t = np.arange(0, 5, dt)
    x = np.sin(t) + 0.3 * t**2
    back = cumulative_trapezoid(central_difference(x, dt), dx=dt, initial=0)
    assert np.max(np.abs(back - (x - x[0]))) <= 10 * dt**2


@given(st.lists(st.floats(-1e3, 1e3), min_size=3, max_size=40), st.sampled_from([1, 3, 5]))
def test_smooth_constant_and_identity(values, window):
    x = np.array(values)
    assert np.array_equal(smooth(x, 1), x)
    if window <= x.size:
        c = np.full(x.size, values[0])
        assert np.allclose(smooth(c, window), c)


def test_smooth_noise_reduction():
    rng = np.random.default_rng(0)
    x = rng.normal(0, 2.0, 100_000)
    w = 9
    out = smooth(x, w)[w:-w]
    assert abs(out.std() - 2.0 / np.sqrt(w)) <= 0.15 * 2.0 / np.sqrt(w)


def test_smooth_preconditions():
    with pytest.raises(ValueError):
        smooth(np.zeros(10), 2)
    with pytest.raises(ValueError):
        smooth(np.zeros(10), 11)


def test_spline_identity_and_knots():
    t = np.arange(10) * 0.3
    x = np.cos(t)
    v, g = cubic_spline_refine(x, t, 1)
    assert np.array_equal(v, x) and np.array_equal(g, t)
    v, g = cubic_spline_refine(x, t, 7)
    assert np.array_equal(v[::7], x)
    assert np.allclose(np.diff(g), 0.3 / 7)


def test_spline_linear_and_sine():
    t = np.arange(12) * 0.5
    v, g = cubic_spline_refine(2 * t - 1, t, 10)
    assert np.allclose(v, 2 * g - 1, atol=1e-10)
    t = np.arange(0, 10, 0.35)
    v, g = cubic_spline_refine(np.sin(t), t, 100)
    # natural end conditions match sin'' = 0 only at multiples of pi; measure away from the edges
    inner = (g > 1.0) & (g < t[-1] - 1.0)
    assert np.max(np.abs(v[inner] - np.sin(g[inner]))) <= 1e-3


def test_spline_preconditions():
    with pytest.raises(ValueError):
        cubic_spline_refine(np.zeros(3), np.arange(3.0), 2)
    with pytest.raises(ValueError):
        cubic_spline_refine(np.zeros(5), np.arange(5.0), 0)
