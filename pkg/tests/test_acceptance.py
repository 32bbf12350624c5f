"""Acceptance criteria 1-10. Each test prints one PASS/FAIL line.

The slow criteria (4, 5, 7, 8) train full presets on one core and take
several minutes each. Run just this file with

    pytest tests/test_acceptance.py -v -s
"""
import time
import warnings

import numpy as np
import pytest
from threadpoolctl import threadpool_limits

from dynsindy import autodiff as ad
from dynsindy import experiments as ex
from dynsindy.cli import main as cli_main
from dynsindy.config import list_presets, load_config
from dynsindy.dynamic import LossWeights, ModelConfig, VaeModel, kld, loss_terms, total_loss
from dynsindy.latent import cubic_fixed_points, fit_augmented_system, lv_closed_coefficients
from dynsindy.sindy import LibrarySpec, build_library, stlsq
from dynsindy.synth import Constant, HarmonicOscillator, Lorenz, LotkaVolterra, integrate, simulate


@pytest.fixture(autouse=True)
def single_thread():
    with threadpool_limits(1):
        yield


def _fd_errors(f, params, h=1e-5):
    """Worst relative error of every output of ``f`` against central differences.

    ``f`` returns a dict of scalar tensors, so one forward pass per perturbation
    serves all of them. Entries where both the analytic and the FD value sit
    below the FD roundoff floor (100 ulp of the loss over ``h``) cannot be
    resolved by the oracle and are skipped.
    """
    out = f()
    # backward frees the tape, so each output gets its own forward pass
    grads = {k: ad.grad(f()[k], params) for k in out}
    worst = {k: 0.0 for k in out}
    eps = np.finfo(float).eps
    for n, p in enumerate(params):
        for idx in np.ndindex(p.shape):
            old = p.data[idx]
            p.data[idx] = old + h
            up = {k: v.item() for k, v in f().items()}
            p.data[idx] = old - h
            down = {k: v.item() for k, v in f().items()}
            p.data[idx] = old
            for k in out:
                fd = (up[k] - down[k]) / (2 * h)
                g = grads[k][n][idx]
                scale = max(abs(fd), abs(g))
                if scale <= 100 * eps * max(abs(up[k]), abs(down[k]), 1.0) / h:
                    continue
                worst[k] = max(worst[k], abs(fd - g) / scale)
    return worst


def test_c01_gradients(acceptance):
    t = time.time()
    rng = np.random.default_rng(0)
    X, D, eta = rng.normal(size=(2, 20, 2)), rng.normal(size=(2, 20, 2)), rng.standard_normal((2, 2))
    model = VaeModel(20, 2, LibrarySpec(2), ModelConfig(latent_dim=2, encoder_hidden=(6,), decoder_hidden=(6,)),
                     seed=3)
    lib = build_library(X, model.library)
    weights = LossWeights(3.0, 10.0, 2.0, 5.0)

    def f():
        mu, ls = model.encode(X)
        xi = model.decode(mu + ad.exp(ls) * eta)
        out = {}
        for reduction in ("sum", "mean"):
            terms = loss_terms(xi, lib, D, mu, ls, reduction)
            out.update({f"{k}/{reduction}": v for k, v in terms.items()})
            out[f"total/{reduction}"] = total_loss(terms, weights)
        return out

    errors = _fd_errors(f, model.parameters())
    worst = max(errors.values())
    acceptance(1, worst <= 1e-5, f"max rel. gradient error {worst:.2e} over {len(errors)} loss terms (<= 1e-5)",
               time.time() - t, 10)


def test_c02_stlsq_lorenz(acceptance):
    t = time.time()
    lor = Lorenz(Constant(10.0), Constant(28.0), Constant(8 / 3))
    ds = simulate(lor, (-8.0, 7.0, 27.0), 0.01, 2000)
    spec = LibrarySpec(3)
    names = spec.term_names(3)
    fit = stlsq(build_library(ds.states[0], spec), ds.derivatives[0], 0.1, term_names=names)
    truth = np.zeros((len(names), 3))
    for (eq, term), val in {(0, "x0"): -10.0, (0, "x1"): 10.0, (1, "x0"): 28.0, (1, "x1"): -1.0,
                            (1, "x0 x2"): -1.0, (2, "x2"): -8 / 3, (2, "x0 x1"): 1.0}.items():
        truth[names.index(term), eq] = val
    support_ok = np.array_equal(fit.support, truth != 0)
    rel = np.max(np.abs(fit.values - truth)[truth != 0] / np.abs(truth[truth != 0]))
    acceptance(2, support_ok and rel <= 0.02, f"support exact={support_ok}, max rel. coefficient error {rel:.1e}",
               time.time() - t, 5)


def test_c03_group_sigmoid(acceptance):
    t = time.time()
    cfg = load_config("osc-sigmoid")
    ds = ex.simulate_dataset(cfg)
    series = ex.fit_group(ds, cfg).to_series()
    names = series.term_names
    expected = np.zeros((len(names), 2), dtype=bool)
    expected[names.index("x1"), 0] = expected[names.index("x0"), 1] = True
    per_window = np.all(np.abs(series.values) > 0, axis=0)
    shared = np.array_equal(per_window, expected) and np.array_equal(series.support, expected)
    a_true = ds.ground_truth[(0, "x1")](series.times)
    full = ds.ground_truth[(0, "x1")](ds.times)
    err = np.max(np.abs(series.term(0, "x1") - a_true)) / (full.max() - full.min())
    acceptance(3, shared and err <= 0.15,
               f"shared support {{y in x', x in y'}} in all {series.times.size} windows={shared}, "
               f"max |A error|/range(A) {err:.3f} (<= 0.15)", time.time() - t, 10)


def test_c04_switch_support(acceptance):
    t = time.time()
    cfg = load_config("osc-switch2")
    ds = ex.simulate_dataset(cfg)
    run = ex.train_dynamic(ds, cfg)
    truth = ex.true_mask(run.model.term_names, ds)
    exact = np.array_equal(run.result.active_mask, truth)
    corr = min(ex.evaluate(s, ds)["coefficients"]["eq0:x1"]["corr"] for s in run.posterior_series())
    epochs = sum(p.epochs for p in cfg.dynamic.training.phases)
    acceptance(4, exact and corr >= 0.9,
               f"active mask exact={exact}, min corr with switch A over {ds.n_traj} trajectories {corr:.4f} (>= 0.9); "
               f"{epochs} epochs, T={ds.n_times}", time.time() - t, 15 * 60)


def test_c05_uq_ordering(acceptance):
    t = time.time()
    levels = [0.01, 0.1, 0.5]
    rows = ex.uq_sweep(load_config("osc-switch2"), levels, kind="coefficient")
    s = [r["over_samples"] for r in rows]
    o = [r["over_time"] for r in rows]
    ok = all(a < b for a, b in zip(s, s[1:])) and all(a < b for a, b in zip(o, o[1:]))
    acceptance(5, ok, "coefficient noise " + "/".join(map(str, levels)) + ": over-samples "
               + "/".join(f"{v:.5f}" for v in s) + ", over-time " + "/".join(f"{v:.5f}" for v in o)
               + " (required: both strictly increasing)", time.time() - t, 45 * 60)


def test_c06_fixed_points(acceptance):
    t = time.time()
    low = cubic_fixed_points(-0.002, 0.0087, 0.05, -0.266)
    high = cubic_fixed_points(-0.002, 0.0087, 0.05, 0.044)
    ok = (len(low) == 1 and abs(low[0][0] + 5.25) <= 0.02 and low[0][1] == "stable"
          and len(high) == 3 and [s for _, s in high] == ["stable", "unstable", "stable"]
          and all(abs(r - e) <= 0.02 for (r, _), e in zip(high, (-2.32, -1.19, 7.88))))
    text = "; ".join(f"{r:.3f} {s}" for r, s in low + high)
    acceptance(6, ok, f"u=-0.266 / u=0.044 roots: {text}", time.time() - t, 1)


def test_c07_latent_lv(acceptance):
    t = time.time()
    a_, b_, g_, d_ = 1.0, 0.5, 1.0, 0.2
    ds = simulate(LotkaVolterra(a_, b_, g_, d_), (4.0, 2.0), 0.01, 2000)
    x, ytilde = ds.states[0, :, 0], a_ - b_ * ds.states[0, :, 1]
    fit = fit_augmented_system(x, ytilde, ds.dt, LibrarySpec(2), 0.05)
    got = (fit.coefficient(0, "x0 x1"), fit.coefficient(1, "1"), fit.coefficient(1, "x0"),
           fit.coefficient(1, "x1"), fit.coefficient(1, "x0 x1"))
    oracle_err = max(abs(g - e) for g, e in zip(got, lv_closed_coefficients(a_, b_, g_, d_)))

    cfg = load_config("lv-latent")
    data = ex.simulate_dataset(cfg)
    run = ex.discover_latent(data, cfg)
    corr = float(np.corrcoef(run.reconstructed[0], data.states[0, :, 1])[0, 1])
    acceptance(7, oracle_err <= 1e-2 and corr >= 0.95,
               f"exact-trace closure max error {oracle_err:.1e} (<= 1e-2); trained pipeline corr(y_hat, y) "
               f"{corr:.4f} (>= 0.95)", time.time() - t, 20 * 60)


def test_c08_latent_oscillator(acceptance):
    t = time.time()
    cfg = load_config("osc-latent-B")
    ds = ex.simulate_dataset(cfg)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", RuntimeWarning)
        run = ex.discover_latent(ds, cfg)
    c = run.closure
    xdot = c.coefficient(0, "x1")
    bdot = np.array([c.coefficient(2, "1"), c.coefficient(2, "x2"), c.coefficient(2, "x2^2")])
    pattern = np.array([6.0, 5.0, 1.0])
    mag_err = np.max(np.abs(np.abs(bdot) - pattern) / pattern)
    x_err = abs(xdot + 3.997) / 3.997
    signs = "".join("+" if v > 0 else "-" for v in bdot)
    acceptance(8, x_err <= 0.03 and mag_err <= 0.10,
               f"x' = {xdot:.3f} y (rel. err {x_err:.4f}); B' = {bdot[0]:+.3f} {bdot[1]:+.3f} B {bdot[2]:+.3f} B^2, "
               f"max magnitude error vs (6, 5, 1) {mag_err:.3f}; sign pattern {signs} (published -+-); "
               f"{len(caught)} support warning(s)",
               time.time() - t)


def test_c09_integrators(acceptance):
    t = time.time()
    # order: the error of one step of size h against a fine reference shrinks 16x per halving
    osc = HarmonicOscillator(Constant(1.0), Constant(-1.0))
    x0 = np.array([1.0, 0.0])
    exact = np.stack([np.cos(0.05 * np.arange(81)), -np.sin(0.05 * np.arange(81))], axis=1)
    e1 = np.max(np.abs(integrate(osc, x0, 0.0, 0.05, 81) - exact))
    e2 = np.max(np.abs(integrate(osc, x0, 0.0, 0.05, 81, substeps=2) - exact))
    ratio = e1 / e2
    ds = simulate(osc, x0, 0.01, 10_001)
    energy = -ds.states[0, :, 0] ** 2 - ds.states[0, :, 1] ** 2
    drift_e = np.max(np.abs(energy - energy[0]))
    lv = LotkaVolterra(1.0, 0.5, 1.0, 0.2)
    v = lv.first_integral(simulate(lv, (4.0, 2.0), 0.01, 1200).states[0])
    drift_v = np.max(np.abs(v - v[0]))
    k0 = kld(ad.Tensor(np.zeros((1, 2))), ad.Tensor(np.zeros((1, 2)))).item()
    k1 = kld(ad.Tensor(np.ones((1, 1))), ad.Tensor(np.zeros((1, 1)))).item()
    ok = 14 <= ratio <= 18 and drift_e <= 1e-6 and drift_v <= 1e-5 and k0 == 0.0 and abs(k1 - 0.5) <= 1e-12
    acceptance(9, ok, f"RK4 halving ratio {ratio:.2f}, oscillator energy drift {drift_e:.1e}, LV integral drift "
               f"{drift_v:.1e}, KLD {k0} and {k1}", time.time() - t, 30)


def _snap(d):
    return {p.name: p.read_bytes() for p in sorted(d.iterdir())}


def test_c10_determinism(acceptance, tmp_path):
    t = time.time()
    runs = []
    for name in list_presets():
        runs.append(["simulate", "--config", name])
        runs.append(["fit-stlsq", "--config", name])
        if name != "celegans-style-cubic":  # windows resting at a fixed point are singular
            runs.append(["fit-group", "--config", name])
    runs.append(["train-dynsindy", "--config", "osc-sigmoid", "--epochs", "30"])
    runs.append(["train-dynsindy", "--config", "lorenz-sigmoid", "--epochs", "10"])
    mismatched, codes = [], []
    for k, argv in enumerate(runs):
        outs = []
        for rep in (0, 1):
            out = tmp_path / f"{k}-{rep}"
            codes.append(cli_main(argv + ["--out", str(out)]))
            outs.append(_snap(out))
        if outs[0] != outs[1]:
            mismatched.append(" ".join(argv))
    ok = not mismatched and all(c == 0 for c in codes)
    acceptance(10, ok, f"{len(runs)} CLI runs repeated, byte-identical outputs and manifests; "
               f"mismatches {mismatched or 'none'}", time.time() - t)
