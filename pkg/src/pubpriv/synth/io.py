"""Dataset CSV and mixture JSON serialization."""

import json
from pathlib import Path

import numpy as np

from ..errors import InputError
from ..gmm_est.types import MixtureParams
from .data import LabeledDataset


def _meta_path(path):
    path = Path(path)
    return path.with_name(path.name + ".meta.json")


def save_dataset(data, path):
    """Write rows as plain CSV; labels, if any, go in a trailing column flagged in the sidecar."""
    path = Path(path)
    has_labels = data.labels is not None
    cols = data.rows if not has_labels else np.column_stack([data.rows, data.labels])
    fmt = ["%.17g"] * data.dim + (["%d"] if has_labels else [])
    with open(path, "w", newline="") as fh:
        if cols.shape[0]:
            np.savetxt(fh, cols, fmt=fmt, delimiter=",")
    meta = {"rows": len(data), "dim": data.dim, "label_column": has_labels}
    _meta_path(path).write_text(json.dumps(meta, sort_keys=True) + "\n")


def load_dataset(path, dim=None):
    """Read a CSV written by save_dataset; without a sidecar every column is a coordinate."""
    path = Path(path)
    meta_file = _meta_path(path)
    meta = json.loads(meta_file.read_text()) if meta_file.exists() else {}
    try:
        raw = np.loadtxt(path, delimiter=",", ndmin=2)
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from exc
    labeled = bool(meta.get("label_column", False))
    d = meta.get("dim", dim)
    if raw.size == 0:
        return LabeledDataset(np.zeros((0, d or 0)), np.zeros(0, dtype=np.int64) if labeled else None)
    rows = raw[:, :-1] if labeled else raw
    if d is not None and rows.shape[1] != d:
        raise InputError(f"{path}: expected {d} coordinates per row, found {rows.shape[1]}")
    labels = raw[:, -1].astype(np.int64) if labeled else None
    return LabeledDataset(rows, labels)


def save_mixture(params, path):
    Path(path).write_text(json.dumps(params.to_dict(), indent=2) + "\n")


def load_mixture(path):
    try:
        obj = json.loads(Path(path).read_text())
        return MixtureParams.from_dict(obj)
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise InputError(f"{path}: not a mixture document ({exc})") from exc
