"""Deterministic CSV / JSON writers shared by the persisted artifacts."""

import csv
import json
from pathlib import Path

import numpy as np


def fmt(v) -> str:
    """Shortest round-tripping text for a float (repr semantics)."""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if v is None:
        return ""
    return repr(float(v))


def write_matrix_csv(path, values, header, index=None, index_name="model"):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(([index_name] if index is not None else []) + list(header))
        for i, row in enumerate(np.asarray(values, dtype=float)):
            lead = [index[i]] if index is not None else []
            w.writerow(lead + [fmt(v) for v in row])


def read_matrix_csv(path, has_index=False):
    """Returns ``(header, values)`` or ``(header, index, values)``."""
    with Path(path).open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    header = rows[0][1:] if has_index else rows[0]
    body = rows[1:]
    if has_index:
        index = [r[0] for r in body]
        values = np.array([[float(c) for c in r[1:]] for r in body], dtype=float).reshape(len(body), len(header))
        return header, index, values
    values = np.array([[float(c) for c in r] for r in body], dtype=float).reshape(len(body), len(header))
    return header, values


def write_records_csv(path, records, columns):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for rec in records:
            w.writerow([v if isinstance(v, str) else fmt(v) for v in (rec[c] for c in columns)])


def read_records_csv(path):
    with Path(path).open(newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if np.isfinite(f) else None
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dump_json(path, obj):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def load_json(path):
    return json.loads(Path(path).read_text(encoding="utf-8"))
