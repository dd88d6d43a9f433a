"""Trajectory CSV files, demo manifests and JSON skill-model files.

Floats are written in their shortest round-tripping form (``repr``) so that
load/save cycles are byte-identical.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from .baselines import DmpModel, LteModel, lte_train
from .elastic_map import ElasticMap
from .errors import FormatError, InvalidTrajectory
from .failure_aware import StatModel
from .numsolve import settings
from .trajectory import LABELS, DemoSet, Trajectory

FORMAT_VERSION = "1.0"
MODEL_KINDS = ("elastic_map", "dmp", "lte", "failure_aware")


def fmt(x) -> str:
    return repr(float(x))


def atomic_write(path, data, mode="w"):
    """Write via a temporary file in the target directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, mode, newline="" if "b" not in mode else None) as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def trajectory_to_csv(traj: Trajectory) -> str:
    lines = [",".join(["t"] + [f"x{k + 1}" for k in range(traj.dim)])]
    for t, p in zip(traj.times, traj.points):
        lines.append(",".join([fmt(t)] + [fmt(v) for v in p]))
    return "\n".join(lines) + "\n"


def trajectory_from_csv(text: str) -> Trajectory:
    """Parse ``t,x1,...,xd`` CSV text. Row numbers in errors count data rows from 1."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise FormatError("empty trajectory file")
    header = [h.strip() for h in lines[0].split(",")]
    expected = ["t"] + [f"x{k + 1}" for k in range(len(header) - 1)]
    if len(header) < 2 or header != expected:
        raise FormatError(f"missing or malformed header (expected 't,x1,...'), got {lines[0]!r}")
    rows = []
    for i, ln in enumerate(lines[1:], start=1):
        cells = ln.split(",")
        if len(cells) != len(header):
            raise FormatError(f"row {i}: expected {len(header)} fields, got {len(cells)}", row=i)
        try:
            vals = [float(c) for c in cells]
        except ValueError:
            raise FormatError(f"row {i}: unparsable number in {ln!r}", row=i) from None
        if not all(np.isfinite(vals)):
            raise FormatError(f"row {i}: NaN or infinite value", row=i)
        if rows and vals[0] <= rows[-1][0]:
            raise InvalidTrajectory(f"row {i}: time {cells[0]} is not increasing", row=i)
        rows.append(vals)
    if len(rows) < 2:
        raise FormatError("a trajectory file needs at least 2 data rows")
    arr = np.array(rows)
    return Trajectory(arr[:, 1:], arr[:, 0])


def load_trajectory(path) -> Trajectory:
    with open(path, encoding="utf-8", newline="") as f:
        return trajectory_from_csv(f.read())


def save_trajectory(traj: Trajectory, path):
    atomic_write(path, trajectory_to_csv(traj))


def trajectory_to_dict(traj: Trajectory) -> dict:
    return {"times": traj.times.tolist(), "points": traj.points.tolist()}


def trajectory_from_dict(d: dict) -> Trajectory:
    return Trajectory(np.array(d["points"], dtype=float), np.array(d["times"], dtype=float))


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n"


# ---------------------------------------------------------------- manifests

def load_manifest(path) -> DemoSet:
    """Read a manifest ``{"format_version", "entries": [{"path", "label"}]}``.

    Paths are relative to the manifest's directory.
    """
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"manifest is not valid JSON: {exc}") from None
    entries = doc.get("entries") or []
    if not entries:
        raise FormatError("manifest lists no demonstrations")
    demos, labels = [], []
    for e in entries:
        label = e.get("label")
        if label not in LABELS:
            raise FormatError(f"unknown label {label!r} in manifest")
        p = path.parent / e["path"]
        if not p.exists():
            raise FormatError(f"manifest entry {e['path']!r} does not exist")
        demos.append(load_trajectory(p))
        labels.append(label)
    return DemoSet(demos, labels)


def manifest_dict(entries, units=None) -> dict:
    doc = {"format_version": FORMAT_VERSION,
           "entries": [{"path": str(p), "label": lab} for p, lab in entries]}
    if units is not None:
        doc["units"] = units
    return doc


# ------------------------------------------------------------- model files

def _arr(a):
    return None if a is None else np.asarray(a).tolist()


def _np(a):
    return None if a is None else np.array(a, dtype=float)


def demoset_to_dict(demos: DemoSet) -> dict:
    return {"demos": [trajectory_to_dict(d) for d in demos.demos], "labels": list(demos.labels)}


def demoset_from_dict(d: dict) -> DemoSet:
    return DemoSet([trajectory_from_dict(x) for x in d["demos"]], d["labels"])


def model_payload(model, demos: DemoSet = None) -> tuple:
    """``(kind, payload)`` for a model object."""
    if isinstance(model, ElasticMap):
        payload = {"nodes": model.nodes.tolist(), "lam": model.lam, "mu": model.mu,
                   "weighting": model.weighting, "init": model.init}
        if demos is not None:
            payload["data"] = demoset_to_dict(demos)
        return "elastic_map", payload
    if isinstance(model, DmpModel):
        return "dmp", {
            "weights": model.weights.tolist(), "centers": model.centers.tolist(),
            "widths": model.widths.tolist(), "start": model.start.tolist(),
            "goal": model.goal.tolist(), "tau": model.tau, "alpha_z": model.alpha_z,
            "beta_z": model.beta_z, "alpha_x": model.alpha_x,
            "scaled": [bool(s) for s in model.scaled], "n_steps": model.n_steps,
            "v0": _arr(model.v0),
        }
    if isinstance(model, LteModel):
        return "lte", {"demo": trajectory_to_dict(model.demo)}
    if isinstance(model, StatModel):
        return "failure_aware", {
            "times": model.times.tolist(), "eps_reg": model.eps_reg,
            "mu_s": _arr(model.mu_s), "W_s": _arr(model.W_s), "cov_s": _arr(model.cov_s),
            "mu_f": _arr(model.mu_f), "W_f": _arr(model.W_f), "cov_f": _arr(model.cov_f),
        }
    raise TypeError(f"cannot serialize {type(model).__name__}")


def model_from_payload(kind: str, p: dict):
    """Rebuild a model; elastic maps come back as ``(map, demos or None)``."""
    if kind == "elastic_map":
        m = ElasticMap(np.array(p["nodes"], dtype=float), p["lam"], p["mu"],
                       p["weighting"], p["init"])
        return m, (demoset_from_dict(p["data"]) if "data" in p else None)
    if kind == "dmp":
        return DmpModel(_np(p["weights"]), _np(p["centers"]), _np(p["widths"]),
                        _np(p["start"]), _np(p["goal"]), p["tau"], p["alpha_z"], p["beta_z"],
                        p["alpha_x"], np.array(p["scaled"], dtype=bool), p["n_steps"],
                        _np(p["v0"]))
    if kind == "lte":
        return lte_train(trajectory_from_dict(p["demo"]))
    if kind == "failure_aware":
        return StatModel(_np(p["times"]), _np(p["mu_s"]), _np(p["W_s"]), _np(p["mu_f"]),
                         _np(p["W_f"]), p["eps_reg"], _np(p["cov_s"]), _np(p["cov_f"]))
    raise FormatError(f"unknown model kind {kind!r}")


def model_document(model, demos=None, provenance=None) -> dict:
    kind, payload = model_payload(model, demos)
    return {
        "format_version": FORMAT_VERSION,
        "kind": kind,
        "payload": payload,
        "provenance": dict(provenance or {}, tool_version=__version__),
        "numeric_settings": settings.snapshot(),
    }


def save_model(model, path, demos=None, provenance=None) -> dict:
    doc = model_document(model, demos, provenance)
    atomic_write(path, dumps(doc))
    return doc


def read_model_document(path) -> dict:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"model file is not valid JSON: {exc}") from None
    version = str(doc.get("format_version", ""))
    if version.split(".")[:2] != FORMAT_VERSION.split(".")[:2]:
        raise FormatError(f"model format {version!r} is not readable by {FORMAT_VERSION}")
    if doc.get("kind") not in MODEL_KINDS:
        raise FormatError(f"unknown model kind {doc.get('kind')!r}")
    return doc


def load_model(path):
    """Return ``(kind, model_object, document)``."""
    doc = read_model_document(path)
    return doc["kind"], model_from_payload(doc["kind"], doc["payload"]), doc


def resave_model(path_in, path_out):
    """Load a model file and save it again through the object layer."""
    kind, obj, doc = load_model(path_in)
    demos = None
    if kind == "elastic_map":
        obj, demos = obj
    return save_model(obj, path_out, demos, {k: v for k, v in doc["provenance"].items()
                                             if k != "tool_version"})
