"""File formats: trajectory CSV, parameter/prior JSON, chain JSON-lines,
diagnostics CSV, and summary outputs.

All text is UTF-8 with \\n line endings.  CSV reals carry 17 significant
digits; JSON floats use Python's shortest exact repr.  Both round-trip
doubles bit-exactly, so identical runs produce byte-identical files.
"""

from __future__ import annotations

import dataclasses
import json
from pathlib import Path

import numpy as np

from .config import ChainSample
from .diagnostics import PosteriorSummary, SweepDiagnostics
from .generate import Trajectory
from .model import EdhmmError, ModelParams, Priors

__all__ = [
    "FormatError",
    "read_chain_jsonl",
    "read_observations_csv",
    "read_params_json",
    "read_priors_json",
    "read_trajectory_csv",
    "write_chain_jsonl",
    "write_diagnostics_csv",
    "write_histogram_csvs",
    "write_params_json",
    "write_summary_json",
    "write_trajectory_csv",
]

_CSV_HEADER = "t,y,x_true,d_true"
_PARAM_KEYS = {"K", "A", "lambda", "theta", "priors"}
_THETA_KEYS = {"mu", "sigma2"}
_PRIOR_KEYS = {f.name for f in dataclasses.fields(Priors)}


class FormatError(EdhmmError):
    """A file violates its schema."""


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_trajectory_csv(path, traj: Trajectory) -> None:
    lines = [_CSV_HEADER]
    for t in range(traj.T):
        lines.append(f"{t + 1},{_fmt(traj.Y[t])},{int(traj.X[t])},{int(traj.D[t])}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _parse_trajectory_rows(path):
    text = Path(path).read_text(encoding="utf-8")
    lines = text.splitlines()
    if not lines or lines[0] != _CSV_HEADER:
        raise FormatError(f"line 1: expected header {_CSV_HEADER!r}")
    rows = []
    for n, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != 4:
            raise FormatError(f"line {n}: expected 4 columns, got {len(parts)}")
        try:
            rows.append((int(parts[0]), float(parts[1]), int(parts[2]), int(parts[3])))
        except ValueError as exc:
            raise FormatError(f"line {n}: {exc}") from exc
    if not rows:
        raise FormatError("line 2: no data rows")
    for i, row in enumerate(rows):
        if row[0] != i + 1:
            raise FormatError(f"line {i + 2}: t must run 1..T, got {row[0]}")
    return rows


def read_trajectory_csv(path) -> Trajectory:
    """Parse a trajectory file.  The pre-window dummy state is not stored in
    the format; a canonical stand-in differing from the first state is
    used."""
    rows = _parse_trajectory_rows(path)
    X = np.array([r[2] for r in rows], dtype=np.int64)
    D = np.array([r[3] for r in rows], dtype=np.int64)
    Y = np.array([r[1] for r in rows], dtype=float)
    k_est = max(int(X.max()) + 1, 2)
    x0 = int((X[0] + 1) % k_est)
    return Trajectory(X=X, D=D, Y=Y, x0=x0, d0=1)


def read_observations_csv(path) -> np.ndarray:
    """Just the observation column; what inference consumes."""
    rows = _parse_trajectory_rows(path)
    return np.array([r[1] for r in rows], dtype=float)


def _priors_to_dict(priors: Priors) -> dict:
    return {f.name: getattr(priors, f.name) for f in dataclasses.fields(Priors)}


def write_params_json(path, params: ModelParams, priors: Priors | None = None) -> None:
    doc = {
        "K": params.K,
        "A": [[float(v) for v in row] for row in params.A],
        "lambda": [float(v) for v in params.rates],
        "theta": [{"mu": float(m), "sigma2": float(s)}
                  for m, s in zip(params.mu, params.sigma2)],
    }
    if priors is not None:
        doc["priors"] = _priors_to_dict(priors)
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def _priors_from_dict(obj, where: str) -> Priors:
    if not isinstance(obj, dict):
        raise FormatError(f"{where} must be an object")
    unknown = set(obj) - _PRIOR_KEYS
    if unknown:
        raise FormatError(f"{where}: unknown keys {sorted(unknown)}")
    if "dirichlet_mass" not in obj:
        raise FormatError(f"{where}: dirichlet_mass is required")
    try:
        return Priors(**obj)
    except (TypeError, ValueError) as exc:
        raise FormatError(f"{where}: {exc}") from exc


def read_params_json(path) -> tuple[ModelParams, Priors | None]:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise FormatError("top level must be an object")
    unknown = set(doc) - _PARAM_KEYS
    if unknown:
        raise FormatError(f"unknown keys {sorted(unknown)}")
    missing = {"K", "A", "lambda", "theta"} - set(doc)
    if missing:
        raise FormatError(f"missing keys {sorted(missing)}")
    theta = doc["theta"]
    if not isinstance(theta, list):
        raise FormatError("theta must be a list of objects")
    for i, entry in enumerate(theta):
        if not isinstance(entry, dict) or set(entry) != _THETA_KEYS:
            raise FormatError(f"theta[{i}] must have exactly keys mu, sigma2")
    try:
        params = ModelParams(
            K=doc["K"],
            A=np.array(doc["A"], dtype=float),
            rates=np.array(doc["lambda"], dtype=float),
            mu=np.array([e["mu"] for e in theta], dtype=float),
            sigma2=np.array([e["sigma2"] for e in theta], dtype=float),
        )
    except (TypeError, ValueError) as exc:
        raise FormatError(str(exc)) from exc
    priors = _priors_from_dict(doc["priors"], "priors") if "priors" in doc else None
    return params, priors


def read_priors_json(path) -> Priors:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"line {exc.lineno}: {exc.msg}") from exc
    return _priors_from_dict(doc, "priors")


def _sample_to_obj(sample: ChainSample) -> dict:
    obj = {
        "sweep": sample.sweep,
        "A": [[float(v) for v in row] for row in sample.params.A],
        "lambda": [float(v) for v in sample.params.rates],
        "mu": [float(v) for v in sample.params.mu],
        "sigma2": [float(v) for v in sample.params.sigma2],
        "log_joint": float(sample.log_joint),
    }
    if sample.latent is not None:
        obj["X"] = [int(v) for v in sample.latent.X]
        obj["D"] = [int(v) for v in sample.latent.D]
        obj["x0"] = int(sample.latent.x0)
    return obj


def write_chain_jsonl(path, samples: list[ChainSample]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for sample in samples:
            fh.write(json.dumps(_sample_to_obj(sample)) + "\n")


def read_chain_jsonl(path) -> list[dict]:
    records = []
    required = {"sweep", "A", "lambda", "mu", "sigma2", "log_joint"}
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"line {n}: {exc.msg}") from exc
            if not isinstance(obj, dict) or not required <= set(obj):
                raise FormatError(f"line {n}: missing chain fields")
            records.append(obj)
    return records


def write_diagnostics_csv(path, diags: list[SweepDiagnostics]) -> None:
    lines = ["sweep,mean_transitions_per_t,active_set_max,log_lik,mean_evaluated_per_t"]
    for d in diags:
        lines.append(
            f"{d.sweep},{_fmt(d.mean_transitions_per_t)},{d.max_active_set},"
            f"{_fmt(d.log_joint)},{_fmt(d.mean_evaluated_per_t)}"
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_summary_json(path, summary: PosteriorSummary) -> None:
    doc = {"n_samples": summary.n_samples, "params": {}}
    for name in sorted(summary.stats):
        s = summary.stats[name]
        doc["params"][name] = {
            "mean": float(s.mean),
            "std": float(s.std),
            "q025": float(s.q025),
            "q975": float(s.q975),
        }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def _safe_name(name: str) -> str:
    return name.replace("[", "_").replace("]", "").replace(",", "_")


def write_histogram_csvs(dirpath, summary: PosteriorSummary) -> list[Path]:
    out = Path(dirpath)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name in sorted(summary.stats):
        s = summary.stats[name]
        lines = ["bin_left,bin_right,count"]
        for i, count in enumerate(s.counts):
            lines.append(f"{_fmt(s.bin_edges[i])},{_fmt(s.bin_edges[i + 1])},{int(count)}")
        p = out / f"{_safe_name(name)}.csv"
        p.write_text("\n".join(lines) + "\n", encoding="utf-8")
        written.append(p)
    return written
