"""File formats: dataset CSV with JSON sidecar, coefficient series CSV/JSON, metrics and manifests.

Numbers are written with ``repr(float)``, the shortest string that
round-trips exactly, so files are locale-independent and lossless.
"""
from __future__ import annotations

import csv
import hashlib
import json
import platform
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from .errors import FileFormatError
from .sindy import CoefficientMatrix, CoefficientSeries
from .synth import TrajectoryDataset, schedule_from_dict


def fmt(value) -> str:
    return repr(float(value))


def _parse_float(text, filename, line):
    try:
        return float(text)
    except ValueError:
        raise FileFormatError(filename, line, f"not a number: {text!r}") from None


def _sidecar(path: Path, suffix: str) -> Path:
    return path.with_name(path.stem + suffix)


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def read_json(path):
    path = Path(path)
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise FileFormatError(str(path), exc.lineno, exc.msg) from None


# -- datasets ------------------------------------------------------------------

def _write_table(path: Path, times, arrays, prefix: str):
    """Rows ``t, traj, <prefix>0..`` ordered by trajectory, then time."""
    n_traj, n_times, dim = arrays.shape
    with open(path, "w", newline="") as fh:
        fh.write(",".join(["t", "traj"] + [f"{prefix}{j}" for j in range(dim)]) + "\n")
        for i in range(n_traj):
            for k in range(n_times):
                fh.write(",".join([fmt(times[k]), str(i)] + [fmt(v) for v in arrays[i, k]]) + "\n")


def _read_table(path: Path, prefix: str):
    name = str(path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise FileFormatError(name, 1, "empty file")
    header = rows[0]
    dim = len(header) - 2
    expected = ["t", "traj"] + [f"{prefix}{j}" for j in range(dim)]
    if dim < 1 or header != expected:
        raise FileFormatError(name, 1, f"header must be {','.join(expected[:3])}..., got {','.join(header)}")
    per_traj: Dict[int, list] = {}
    for line, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != dim + 2:
            raise FileFormatError(name, line, f"expected {dim + 2} fields, got {len(row)}")
        try:
            traj = int(row[1])
        except ValueError:
            raise FileFormatError(name, line, f"trajectory index must be an integer: {row[1]!r}") from None
        values = [_parse_float(v, name, line) for v in (row[0], *row[2:])]
        per_traj.setdefault(traj, []).append((line, values))
    if not per_traj:
        raise FileFormatError(name, 2, "no data rows")
    if sorted(per_traj) != list(range(len(per_traj))):
        raise FileFormatError(name, 2, f"trajectory indices must be 0..n-1, got {sorted(per_traj)}")
    lengths = {len(v) for v in per_traj.values()}
    if len(lengths) != 1:
        raise FileFormatError(name, 2, "trajectories have different lengths")
    times = np.array([vals[0] for _, vals in per_traj[0]])
    data = np.empty((len(per_traj), times.size, dim))
    for i in range(len(per_traj)):
        for k, (line, vals) in enumerate(per_traj[i]):
            if vals[0] != times[k]:
                raise FileFormatError(name, line, f"time {vals[0]!r} does not match trajectory 0")
            data[i, k] = vals[1:]
    return times, data


def ground_truth_to_list(ground_truth) -> Optional[list]:
    if ground_truth is None:
        return None
    return [{"equation": int(eq), "term": term, "schedule": sched.to_dict()}
            for (eq, term), sched in sorted(ground_truth.items())]


def ground_truth_from_list(items):
    if items is None:
        return None
    return {(int(it["equation"]), it["term"]): schedule_from_dict(it["schedule"]) for it in items}


def write_dataset(path, dataset: TrajectoryDataset) -> List[Path]:
    """Write ``path`` (states), ``<stem>.meta.json`` and, if present, ``<stem>.derivatives.csv``.

    Returns the written paths.
    """
    path = Path(path)
    _write_table(path, dataset.times, dataset.states, "x")
    written = [path]
    meta = {
        "dt": float(dataset.dt),
        "noise_std": float(dataset.noise_std),
        "scale": None if dataset.scale is None else np.asarray(dataset.scale, dtype=float).tolist(),
        "ground_truth": ground_truth_to_list(dataset.ground_truth),
        "derivatives": None,
    }
    if dataset.derivatives is not None:
        dpath = _sidecar(path, ".derivatives.csv")
        _write_table(dpath, dataset.times, dataset.derivatives, "dx")
        meta["derivatives"] = dpath.name
        written.append(dpath)
    mpath = _sidecar(path, ".meta.json")
    write_json(mpath, meta)
    written.append(mpath)
    return written


def read_dataset(path) -> TrajectoryDataset:
    """Read a dataset CSV; the sidecar files are optional."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"dataset file {path} does not exist")
    times, states = _read_table(path, "x")
    mpath = _sidecar(path, ".meta.json")
    meta = read_json(mpath) if mpath.exists() else {}
    dt = meta.get("dt")
    if dt is None:
        if times.size < 2:
            raise FileFormatError(str(path), 2, "cannot infer dt from a single sample")
        dt = float(times[1] - times[0])
    derivs = None
    if meta.get("derivatives"):
        dtimes, derivs = _read_table(path.with_name(meta["derivatives"]), "dx")
        if derivs.shape != states.shape or not np.array_equal(dtimes, times):
            raise FileFormatError(meta["derivatives"], 1, "derivatives do not match the states table")
    scale = meta.get("scale")
    try:
        return TrajectoryDataset(times=times, states=states, dt=float(dt),
                                 noise_std=float(meta.get("noise_std", 0.0)),
                                 ground_truth=ground_truth_from_list(meta.get("ground_truth")),
                                 scale=None if scale is None else np.array(scale, dtype=float),
                                 derivatives=derivs)
    except ValueError as exc:
        raise FileFormatError(str(path), 2, str(exc)) from None


# -- coefficient series --------------------------------------------------------

SERIES_HEADER = ["t", "term", "equation", "value", "sample_id"]


def write_series_csv(path, series: Sequence[CoefficientSeries], sample_ids=None) -> None:
    """Long format, one row per (sample, time, term, equation)."""
    series = list(series)
    ids = list(range(len(series))) if sample_ids is None else list(sample_ids)
    with open(path, "w", newline="") as fh:
        fh.write(",".join(SERIES_HEADER) + "\n")
        for sid, s in zip(ids, series):
            for k, t in enumerate(s.times):
                tt = fmt(t)
                for m, term in enumerate(s.term_names):
                    for j in range(s.n_equations):
                        fh.write(f"{tt},{term},{j},{fmt(s.values[k, m, j])},{sid}\n")


def read_series_csv(path) -> List[CoefficientSeries]:
    name = str(path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != SERIES_HEADER:
        raise FileFormatError(name, 1, f"header must be {','.join(SERIES_HEADER)}")
    samples: Dict[int, dict] = {}
    for line, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 5:
            raise FileFormatError(name, line, f"expected 5 fields, got {len(row)}")
        try:
            eq, sid = int(row[2]), int(row[4])
        except ValueError:
            raise FileFormatError(name, line, "equation and sample_id must be integers") from None
        t = _parse_float(row[0], name, line)
        value = _parse_float(row[3], name, line)
        s = samples.setdefault(sid, {"times": {}, "terms": {}, "eqs": set(), "cells": {}})
        s["times"].setdefault(t, len(s["times"]))
        s["terms"].setdefault(row[1], len(s["terms"]))
        s["eqs"].add(eq)
        s["cells"][(t, row[1], eq)] = value
    out = []
    for sid in sorted(samples):
        s = samples[sid]
        times, terms = list(s["times"]), list(s["terms"])
        n_eq = max(s["eqs"]) + 1
        if len(s["cells"]) != len(times) * len(terms) * n_eq:
            raise FileFormatError(name, len(rows), f"sample {sid} is not a complete time x term x equation grid")
        values = np.empty((len(times), len(terms), n_eq))
        for (t, term, eq), v in s["cells"].items():
            values[s["times"][t], s["terms"][term], eq] = v
        out.append(CoefficientSeries(values, terms, np.array(times)))
    return out


def write_series_json(path, series: Sequence[CoefficientSeries]) -> None:
    write_json(path, {"samples": [s.to_dict() for s in series]})


def read_series_json(path) -> List[CoefficientSeries]:
    data = read_json(path)
    try:
        return [CoefficientSeries.from_dict(s) for s in data["samples"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise FileFormatError(str(path), 1, f"malformed series file: {exc}") from None


def read_series(path) -> List[CoefficientSeries]:
    return read_series_json(path) if str(path).endswith(".json") else read_series_csv(path)


def write_coefficients(path, coefficients: CoefficientMatrix) -> None:
    write_json(path, {**coefficients.to_dict(), "equations": coefficients.equations()})


def read_coefficients(path) -> CoefficientMatrix:
    data = read_json(path)
    return CoefficientMatrix(np.array(data["values"], dtype=float), list(data["term_names"]))


# -- manifests -----------------------------------------------------------------

def canonical_hash(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()).hexdigest()


def file_hash(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def versions() -> dict:
    import scipy
    import yaml

    from . import __version__
    return {"dynsindy": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "pyyaml": yaml.__version__, "python": platform.python_version()}


def write_manifest(out_dir, command: str, config: dict, seed: int, outputs: Sequence, inputs=()) -> Path:
    """``manifest.json`` beside the outputs: config hash, seed, versions, file digests."""
    out_dir = Path(out_dir)
    manifest = {
        "command": command,
        "config_hash": canonical_hash(config),
        "config": config,
        "seed": int(seed),
        "versions": versions(),
        "inputs": {Path(p).name: file_hash(p) for p in inputs},
        "outputs": {Path(p).name: file_hash(p) for p in sorted(map(str, outputs))},
    }
    path = out_dir / "manifest.json"
    write_json(path, manifest)
    return path
