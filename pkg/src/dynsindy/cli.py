"""Command-line runner: ``dynsindy <subcommand> --config PRESET_OR_YAML --out DIR``.

Every subcommand writes ``manifest.json`` beside its outputs with the hash of
the resolved config, the seed, package versions and digests of all input and
output files. Output files carry no timestamps, so a rerun with the same
config and seed reproduces them byte for byte.
"""
from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np
from threadpoolctl import threadpool_limits

from . import experiments as ex
from . import io
from .config import ExperimentConfig, dump_config, list_presets, load_config, to_dict
from .dynamic import load_checkpoint, save_checkpoint
from .dynamic.uq import uq_std_over_samples, uq_std_over_time
from .errors import DynSindyError
from .sindy import CoefficientSeries
from .synth import TrajectoryDataset, eval_schedule

log = logging.getLogger("dynsindy")


def truth_series(ds: TrajectoryDataset, term_names: List[str]) -> CoefficientSeries:
    """Ground-truth coefficients of a simulated dataset on the given library."""
    values = np.zeros((ds.n_times, len(term_names), ds.dim))
    for (eq, term), sched in (ds.ground_truth or {}).items():
        if term not in term_names:
            raise ValueError(f"ground-truth term {term} is not in the library")
        values[:, term_names.index(term), eq] = eval_schedule(sched, ds.times)
    return CoefficientSeries(values, list(term_names), ds.times.copy())


def _resolve(args) -> ExperimentConfig:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
        cfg.dynamic.training.seed = args.seed
    return cfg


def _out(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _dataset(args, cfg) -> TrajectoryDataset:
    """The dataset named by ``--data``, else a fresh simulation from the config."""
    if args.data:
        return io.read_dataset(args.data)
    return ex.simulate_dataset(cfg)


def _inputs(args):
    out = []
    for name in ("data", "series", "checkpoint"):
        p = getattr(args, name, None)
        if p:
            out.append(p)
            if name == "data":
                out += [q for q in (Path(p).with_name(Path(p).stem + s) for s in (".meta.json", ".derivatives.csv"))
                        if q.exists()]
    return out


def _finish(args, cfg, outputs, extra_config=None) -> None:
    config = to_dict(cfg) if cfg is not None else {}
    if extra_config:
        config = {**config, **extra_config}
    seed = cfg.seed if cfg is not None else (args.seed or 0)
    io.write_manifest(args.out, args.command, config, seed, outputs, _inputs(args))
    for p in outputs:
        print(p)


# -- subcommands ---------------------------------------------------------------

def cmd_simulate(args):
    cfg = _resolve(args)
    out = _out(args)
    ds = ex.simulate_dataset(cfg)
    written = io.write_dataset(out / "dataset.csv", ds)
    if ds.ground_truth:
        path = out / "truth.csv"
        io.write_series_csv(path, [truth_series(ds, cfg.library.term_names(ds.dim))])
        written.append(path)
    _finish(args, cfg, written)


def cmd_fit_stlsq(args):
    cfg = _resolve(args)
    out = _out(args)
    coef = ex.fit_stlsq(_dataset(args, cfg), cfg)
    path = out / "coefficients.json"
    io.write_coefficients(path, coef)
    _finish(args, cfg, [path])


def cmd_fit_group(args):
    cfg = _resolve(args)
    if args.algorithm:
        cfg.group = dataclasses.replace(cfg.group, algorithm=args.algorithm)
    out = _out(args)
    result = ex.fit_group(_dataset(args, cfg), cfg)
    series = result.to_series()
    csv_path, json_path = out / "windows.csv", out / "windows.json"
    io.write_series_csv(csv_path, [series])
    io.write_json(json_path, {"algorithm": cfg.group.algorithm, "converged": bool(result.converged),
                              "iterations": int(result.iterations), "series": series.to_dict(),
                              "support": series.support.astype(int).tolist()})
    _finish(args, cfg, [csv_path, json_path])


def cmd_train(args):
    cfg = _resolve(args)
    if args.epochs is not None:
        tr = cfg.dynamic.training
        tr.phases = [dataclasses.replace(p, epochs=args.epochs if i == 0 else 0) for i, p in enumerate(tr.phases)]
    out = _out(args)
    ds = _dataset(args, cfg)
    run = ex.train_dynamic(ds, cfg, callback=_progress(args))
    ckpt = out / "checkpoint.zip"
    save_checkpoint(ckpt, run.model, extra={"t0": float(ds.times[0]), "dt": float(ds.dt)})
    series_path, hist_path, metrics_path = out / "series.csv", out / "history.json", out / "metrics.json"
    series = run.posterior_series()
    io.write_series_csv(series_path, series)
    io.write_json(hist_path, {"history": run.result.history, "prune_events": _plain(run.result.prune_events)})
    per_traj = [ex.evaluate(s, ds) for s in series] if ds.ground_truth else []
    io.write_json(metrics_path, {"final_mse": float(run.result.final_mse), "empty_model": run.result.empty_model,
                                 "active_mask": run.result.active_mask.astype(int).tolist(),
                                 "term_names": list(run.model.term_names), "trajectories": per_traj})
    written = [ckpt, series_path, hist_path, metrics_path]
    if cfg.dynamic.n_samples > 0:
        samples = run.samples(cfg.dynamic.n_samples, seed=cfg.seed)
        sp = out / "samples.csv"
        io.write_series_csv(sp, samples)
        written.append(sp)
    _finish(args, cfg, written)


def cmd_generate(args):
    out = _out(args)
    model, extra = load_checkpoint(args.checkpoint)
    from . import metrics
    from .dynamic import generate
    times = extra.get("t0", 0.0) + extra.get("dt", 1.0) * np.arange(model.n_times)
    samples = generate(model, args.n, seed=args.seed or 0, times=times)
    if model.scale is not None:
        samples = [metrics.rescale_coefficients(s, model.scale) for s in samples]
    path = out / "samples.csv"
    io.write_series_csv(path, samples)
    _finish(args, None, [path], {"checkpoint": Path(args.checkpoint).name, "n": args.n})


def cmd_evaluate(args):
    cfg = _resolve(args)
    out = _out(args)
    ds = _dataset(args, cfg)
    series = io.read_series(args.series)
    records = [ex.evaluate(s, ds) for s in series]
    report = {"samples": records}
    if len(series) > 1:
        report["uq_std_over_samples"] = _named(uq_std_over_samples(series), series[0])
        report["uq_std_over_time"] = _named(uq_std_over_time(series), series[0])
    path = out / "metrics.json"
    io.write_json(path, report)
    _finish(args, cfg, [path])


def cmd_discover_latent(args):
    cfg = _resolve(args)
    out = _out(args)
    ds = _dataset(args, cfg)
    run = ex.discover_latent(ds, cfg, callback=_progress(args))
    hidden = out / "hidden.csv"
    with open(hidden, "w", newline="") as fh:
        cols = ["t", "traj", "trace"] + (["reconstructed"] if run.reconstructed is not None else [])
        fh.write(",".join(cols) + "\n")
        for i in range(run.hidden.values.shape[0]):
            for k, t in enumerate(run.hidden.times):
                row = [io.fmt(t), str(i), io.fmt(run.hidden.values[i, k])]
                if run.reconstructed is not None:
                    row.append(io.fmt(run.reconstructed[i, k]))
                fh.write(",".join(row) + "\n")
    closure = out / "closure.json"
    io.write_coefficients(closure, run.closure)
    support = out / "support.json"
    io.write_json(support, {"term": run.hidden.term, "equation": run.hidden.equation,
                            "active_mask": run.hidden.support.astype(int).tolist()})
    _finish(args, cfg, [hidden, closure, support])


def cmd_presets(args):
    for name in list_presets():
        print(name)


def cmd_show_config(args):
    sys.stdout.write(dump_config(_resolve(args)))


# -- helpers -------------------------------------------------------------------

def _named(arr, series: CoefficientSeries):
    return {f"eq{j}:{t}": float(arr[k, j]) for k, t in enumerate(series.term_names) for j in range(arr.shape[1])}


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _progress(args):
    if not args.verbose:
        return None

    def cb(rec):
        if rec["epoch"] % 100 == 0:
            log.info("epoch %d total %.4g active %d", rec["epoch"], rec["total"], rec["n_active"])
    return cb


COMMANDS = {
    "simulate": (cmd_simulate, "simulate a configured system and write the dataset"),
    "fit-stlsq": (cmd_fit_stlsq, "constant-coefficient sparse fit of all trajectories"),
    "fit-group": (cmd_fit_group, "windowed fit with a support shared by all windows"),
    "train-dynsindy": (cmd_train, "train the variational model, write checkpoint and series"),
    "generate": (cmd_generate, "draw coefficient series from a checkpoint"),
    "evaluate": (cmd_evaluate, "score a series file against the dataset ground truth"),
    "discover-latent": (cmd_discover_latent, "recover a hidden variable and close the system"),
    "presets": (cmd_presets, "list bundled configs"),
    "show-config": (cmd_show_config, "print the resolved config as YAML"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dynsindy", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        needs_config = name not in ("generate", "presets")
        if name != "presets":
            p.add_argument("--config", required=needs_config, help="YAML file or preset name")
            p.add_argument("--seed", type=int, default=None, help="override the config seed")
            p.add_argument("--threads", type=int, default=1, help="BLAS threads (default 1, deterministic)")
            p.add_argument("-v", "--verbose", action="store_true")
        if name not in ("presets", "show-config"):
            p.add_argument("--out", required=True, help="output directory")
        if name in ("fit-stlsq", "fit-group", "train-dynsindy", "evaluate", "discover-latent"):
            p.add_argument("--data", help="dataset CSV; simulated from the config when omitted")
        if name == "fit-group":
            p.add_argument("--algorithm", choices=["ght", "simple"], default=None)
        if name == "train-dynsindy":
            p.add_argument("--epochs", type=int, default=None,
                           help="run only the first phase for this many epochs")
        if name == "generate":
            p.add_argument("--checkpoint", required=True)
            p.add_argument("-n", type=int, default=20, help="number of samples")
        if name == "evaluate":
            p.add_argument("--series", required=True, help="series CSV or JSON")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(message)s")
    func = COMMANDS[args.command][0]
    try:
        with threadpool_limits(getattr(args, "threads", 1)):
            func(args)
    except (DynSindyError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
