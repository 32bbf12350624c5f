"""Run the full pipeline for one or more presets and print a short report.

    python scripts/run_preset.py osc-switch2 lorenz-sigmoid --out runs/

For each preset: simulate, constant-coefficient fit, windowed group fit,
dynamic training and scoring of the posterior-mean series. Presets with a
latent section run hidden-variable discovery instead of plain training.
"""
import argparse
import json
import time
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from dynsindy import experiments as ex
from dynsindy import io
from dynsindy.config import list_presets, load_config


def run_one(name, out, skip_train=False):
    cfg = load_config(name)
    ds = ex.simulate_dataset(cfg)
    report = {"preset": name}
    t = time.time()
    report["stlsq"] = ex.fit_stlsq(ds, cfg).equations()
    group = ex.fit_group(ds, cfg)
    report["group_support"] = group.to_series().support.astype(int).tolist()
    report["fit_seconds"] = round(time.time() - t, 2)
    if skip_train:
        return report
    t = time.time()
    if cfg.latent is not None:
        run = ex.discover_latent(ds, cfg)
        report["closure"] = run.closure.equations()
        if run.reconstructed is not None:
            y = ds.states[0, :, 1]
            report["hidden_corr"] = float(np.corrcoef(y, run.reconstructed[0])[0, 1])
    else:
        run = ex.train_dynamic(ds, cfg)
        series = run.posterior_series()
        report["active_mask"] = run.result.active_mask.astype(int).tolist()
        report["evaluate"] = ex.evaluate(series[0], ds)
        if out is not None:
            io.write_series_csv(out / f"{name}.series.csv", series)
    report["train_seconds"] = round(time.time() - t, 1)
    return report


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("presets", nargs="*", help="preset names (default: all)")
    ap.add_argument("--out", type=Path, default=None, help="write <preset>.json reports here")
    ap.add_argument("--fits-only", action="store_true", help="skip the variational training")
    args = ap.parse_args()
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
    with threadpool_limits(1):
        for name in args.presets or list_presets():
            report = run_one(name, args.out, args.fits_only)
            text = json.dumps(report, indent=2, sort_keys=True)
            print(text)
            if args.out is not None:
                (args.out / f"{name}.json").write_text(text + "\n")


if __name__ == "__main__":
    main()
