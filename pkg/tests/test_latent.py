import numpy as np
import pytest
from hypothesis import given, strategies as st

from dynsindy.errors import DivergenceError
from dynsindy.latent import (cubic_fixed_points, fit_augmented_system, lv_closed_coefficients,
                             postprocess_switch, reconstruct_hidden, reconstruct_with_switch)
from dynsindy.sindy import LibrarySpec
from dynsindy.synth import LotkaVolterra, simulate

A, B, G, D = 1.0, 0.5, 1.0, 0.2


@pytest.fixture(scope="module")
def lv():
    return simulate(LotkaVolterra(A, B, G, D), [4.0, 2.0], 0.01, 2000)


# -- predator-prey closure -----------------------------------------------------

@given(st.floats(0.1, 5), st.floats(0.1, 3), st.floats(0.2, 4))
def test_reconstruct_hidden_roundtrip(alpha, beta, q):
    y = np.linspace(0.1, 6.0, 17)
    ytilde = q * (alpha - beta * y)
    assert np.allclose(reconstruct_hidden(ytilde, q, alpha, beta), y, atol=1e-10)


def test_reconstruct_hidden_constant_and_errors():
    # ỹ = qα means y = 0
    assert np.array_equal(reconstruct_hidden(np.full(4, 2.0), 2.0, 1.0, 0.5), np.zeros(4))
    with pytest.raises(ValueError):
        reconstruct_hidden([1.0], 0.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        reconstruct_hidden([1.0], 1.0, 1.0, 0.0)


def test_exact_trace_recovers_predator(lv):
    y = lv.states[0, :, 1]
    ytilde = A - B * y
    assert np.abs(reconstruct_hidden(ytilde, 1.0, A, B) - y).max() <= 1e-8


@pytest.mark.parametrize("q", [1.0, 0.5, 3.0])
def test_closed_coefficients_change_of_variables(lv, q):
    # dỹ/dt = −qβ·ẏ computed from exact derivatives must match the closed form
    x, y = lv.states[0, :, 0], lv.states[0, :, 1]
    dx, dy = lv.derivatives[0, :, 0], lv.derivatives[0, :, 1]
    ytilde = q * (A - B * y)
    a, b, c, d, e = lv_closed_coefficients(A, B, G, D, q)
    assert np.abs(dx - a * x * ytilde).max() <= 1e-6
    assert np.abs(-q * B * dy - (b + c * x + d * ytilde + e * x * ytilde)).max() <= 1e-6


def test_closed_coefficients_values():
    assert lv_closed_coefficients(1.0, 0.5, 1.0, 0.2) == pytest.approx((1.0, 1.0, -0.2, -1.0, 0.2))
    with pytest.raises(ValueError):
        lv_closed_coefficients(1.0, 0.5, 1.0, 0.2, q=0.0)


def test_fit_augmented_system_on_exact_trace(lv):
    x = lv.states[0, :, 0]
    ytilde = A - B * lv.states[0, :, 1]
    fit = fit_augmented_system(x, ytilde, lv.dt, LibrarySpec(2), 0.05)
    a, b, c, d, e = lv_closed_coefficients(A, B, G, D)
    assert fit.coefficient(0, "x0 x1") == pytest.approx(a, abs=1e-2)
    assert fit.coefficient(1, "1") == pytest.approx(b, abs=1e-2)
    assert fit.coefficient(1, "x0") == pytest.approx(c, abs=1e-2)
    assert fit.coefficient(1, "x1") == pytest.approx(d, abs=1e-2)
    assert fit.coefficient(1, "x0 x1") == pytest.approx(e, abs=1e-2)
    expected = {(0, "x0 x1"), (1, "1"), (1, "x0"), (1, "x1"), (1, "x0 x1")}
    got = {(j, fit.term_names[k]) for k, j in zip(*np.nonzero(fit.support))}
    assert got == expected


def test_fit_augmented_system_lists_and_supplied_derivatives(lv):
    x = lv.states[0, :, 0]
    ytilde = A - B * lv.states[0, :, 1]
    derivs = np.stack([lv.derivatives[0, :, 0], -B * lv.derivatives[0, :, 1]], axis=1)
    fit = fit_augmented_system([x[:1000], x[1000:]], [ytilde[:1000], ytilde[1000:]],
                               derivatives=[derivs[:1000], derivs[1000:]])
    assert fit.coefficient(1, "x0") == pytest.approx(-0.2, abs=1e-8)
    with pytest.raises(ValueError):
        fit_augmented_system(x, ytilde)


# -- cubic switching model -----------------------------------------------------

def test_fixed_points_published_values():
    low = cubic_fixed_points(-0.002, 0.0087, 0.05, -0.266)
    assert len(low) == 1
    assert low[0][0] == pytest.approx(-5.25, abs=0.02) and low[0][1] == "stable"
    high = cubic_fixed_points(-0.002, 0.0087, 0.05, 0.044)
    assert [s for _, s in high] == ["stable", "unstable", "stable"]
    assert [r for r, _ in high] == pytest.approx([-2.32, -1.19, 7.88], abs=0.02)


@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3), st.floats(-5, 5).filter(lambda v: abs(v) > 0.05))
def test_fixed_points_are_roots(a2, a1, u, a3):
    pts = cubic_fixed_points(a3, a2, a1, u)
    assert 1 <= len(pts) <= 3
    roots = [r for r, _ in pts]
    assert roots == sorted(roots)
    for r, stab in pts:
        scale = max(1.0, abs(a3 * r**3), abs(a2 * r * r), abs(a1 * r), abs(u))
        assert abs(((a3 * r + a2) * r + a1) * r + u) <= 1e-8 * scale
        slope = 3 * a3 * r * r + 2 * a2 * r + a1
        if abs(slope) > 1e-6:
            assert stab == ("stable" if slope < 0 else "unstable")


def test_fixed_points_simple_cubic():
    # f = −x³ + x has roots −1, 0, 1; the outer two attract
    assert cubic_fixed_points(-1.0, 0.0, 1.0, 0.0) == [(-1.0, "stable"), (0.0, "unstable"), (1.0, "stable")]
    with pytest.raises(ValueError):
        cubic_fixed_points(0.0, 1.0, 1.0, 1.0)


def test_postprocess_switch_two_levels():
    t = np.linspace(0, 4 * np.pi, 400)
    u = 0.3 + np.sin(t)
    out = postprocess_switch(u)
    lo, hi = out.min(), out.max()
    assert np.allclose(sorted({round(v, 6) for v in out[np.abs(np.sin(t)) > 0.05]}), [lo, hi])
    assert np.array_equal(out > u.mean(), np.sin(t) > 0)
    assert lo == pytest.approx(u.min(), abs=1e-6) and hi == pytest.approx(u.max(), abs=1e-6)
    off_level = np.minimum(np.abs(out - u.min()), np.abs(out - u.max())) > 1e-3
    assert off_level.mean() <= 0.01


def test_postprocess_switch_idempotent_on_square_wave():
    u = np.where(np.arange(200) % 50 < 25, -0.266, 0.044)
    out = postprocess_switch(u)
    assert np.allclose(out, u, atol=1e-12)
    assert np.allclose(postprocess_switch(out), out, atol=1e-12)
    switches = np.count_nonzero(np.diff(out > out.mean()))
    assert switches == 7


def test_postprocess_switch_constant_raises():
    with pytest.raises(ValueError):
        postprocess_switch(np.ones(10))


def test_switch_model_constant_input_settles_on_stable_root():
    coef = (-0.002, 0.0087, 0.05, -0.22)
    traj = reconstruct_with_switch(coef, np.full(3000, -0.266), [0.0, 0.0], 0.1)
    root = cubic_fixed_points(*coef[:3], -0.266)[0][0]
    assert traj[-1, 0] == pytest.approx(root, abs=1e-3)
    assert abs(traj[-1, 1]) < 1e-3


def test_switch_model_zero_dynamics():
    traj = reconstruct_with_switch((0.0, 0.0, 0.0, 0.0), np.zeros(50), [1.5, 0.0], 0.1)
    assert np.array_equal(traj, np.tile([1.5, 0.0], (50, 1)))


def test_switch_model_alternates_with_published_levels():
    # u steps between the two published levels every 40 time units. The low phases sit at the
    # −5.25 point; in the high phases the state stays on the −2.32 side of the midpoint and never
    # approaches the far stable point at 7.88.
    dt, n = 0.1, 2000
    t = dt * np.arange(n)
    u = np.where((t // 40) % 2 == 0, -0.266, 0.044)
    traj = reconstruct_with_switch((-0.002, 0.0087, 0.05, -0.22), u, [-5.25, 0.0], dt)
    mid = (-5.25 - 2.32) / 2
    for k in range(5):
        seg = traj[(t >= 40 * k + 15) & (t < 40 * (k + 1)), 0]
        if k % 2 == 0:
            assert np.abs(seg + 5.25).max() < 0.7
        else:
            assert seg.min() > mid and seg.max() < 0.0


def test_switch_model_spline_hold_and_errors():
    coef = (-0.002, 0.0087, 0.05, -0.22)
    u = np.full(100, 0.044)
    a = reconstruct_with_switch(coef, u, [-2.32, 0.0], 0.1, hold="zoh")
    b = reconstruct_with_switch(coef, u, [-2.32, 0.0], 0.1, hold="spline")
    assert np.allclose(a, b, atol=1e-10)
    with pytest.raises(ValueError):
        reconstruct_with_switch(coef, u, [0.0, 0.0], 0.1, hold="linear")
    with pytest.raises(DivergenceError):
        reconstruct_with_switch((1.0, 0.0, 0.0, 0.0), np.zeros(100), [10.0, 0.0], 0.1)
