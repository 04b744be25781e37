"""Reading data files and writing path/benchmark records."""
import csv
import json
import math
from pathlib import Path

import numpy as np

RECORD_FIELDS = ("lambda1", "lambda2", "ratio", "n_zero_screened", "n_fused",
                 "n_actual_inactive", "solve_ms", "screen_ms", "iterations")


class DataError(ValueError):
    """Malformed input file; the message carries the location."""


def _read_lines(path):
    path = Path(path)
    if not path.is_file():
        raise DataError(f"{path}: no such file")
    return path.read_text().splitlines()


def read_dense_csv(path):
    """Comma-separated numeric rows; the last column is the response.

    Returns
    -------
    X : ndarray, shape (n, p)
    y : ndarray, shape (n,)
    """
    rows = []
    width = None
    for lineno, line in enumerate(_read_lines(path), start=1):
        if not line.strip():
            continue
        cells = line.split(",")
        if width is None:
            width = len(cells)
        elif len(cells) != width:
            raise DataError(f"{path}:{lineno}: expected {width} columns, found {len(cells)}")
        vals = []
        for col, cell in enumerate(cells, start=1):
            try:
                v = float(cell)
            except ValueError:
                raise DataError(f"{path}:{lineno}:{col}: not a number: {cell.strip()!r}") from None
            if not math.isfinite(v):
                raise DataError(f"{path}:{lineno}:{col}: non-finite value")
            vals.append(v)
        rows.append(vals)
    if not rows:
        raise DataError(f"{path}: no rows")
    if width < 3:
        raise DataError(f"{path}: need at least 2 feature columns plus the response")
    data = np.array(rows)
    return np.asfortranarray(data[:, :-1]), data[:, -1].copy()


def read_sparse_labeled(path, dims=None):
    """Lines of ``label idx:val ...`` with 1-based, strictly increasing indices.

    Parameters
    ----------
    dims : int, optional
        Number of features; defaults to the largest index seen.
    """
    labels, entries = [], []
    top = 0
    for lineno, line in enumerate(_read_lines(path), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        head, *pairs = line.split()
        try:
            labels.append(float(head))
        except ValueError:
            raise DataError(f"{path}:{lineno}: bad label {head!r}") from None
        prev = 0
        row = []
        for tok in pairs:
            idx, sep, val = tok.partition(":")
            try:
                j = int(idx)
                v = float(val)
            except ValueError:
                raise DataError(f"{path}:{lineno}: bad entry {tok!r}") from None
            if not sep:
                raise DataError(f"{path}:{lineno}: bad entry {tok!r}")
            if j < 1:
                raise DataError(f"{path}:{lineno}: indices are 1-based, got {j}")
            if j <= prev:
                raise DataError(f"{path}:{lineno}: index {j} does not increase")
            prev = j
            row.append((j - 1, v))
        top = max(top, prev)
        entries.append(row)
    if not labels:
        raise DataError(f"{path}: no rows")
    p = top if dims is None else int(dims)
    if p < top:
        raise DataError(f"{path}: index {top} exceeds dims={p}")
    X = np.zeros((len(labels), p), order="F")
    for i, row in enumerate(entries):
        for j, v in row:
            X[i, j] = v
    return X, np.array(labels)


def _num(v):
    # 17 significant digits round-trip every double
    if isinstance(v, (int, np.integer)):
        return int(v)
    return float(format(float(v), ".17g"))


def write_results(path, records, metadata=None):
    """Write ``<stem>.json`` and ``<stem>.csv`` with identical columns.

    ``records`` are mappings or objects with a ``record()`` method. Returns
    the two paths written.
    """
    rows = [r.record() if hasattr(r, "record") else dict(r) for r in records]
    path = Path(path)
    json_path = path.with_suffix(".json")
    csv_path = path.with_suffix(".csv")
    doc = {
        "metadata": dict(metadata or {}),
        "fields": list(RECORD_FIELDS),
        "points": [{k: _num(r[k]) for k in RECORD_FIELDS} for r in rows],
    }
    try:
        json_path.write_text(json.dumps(doc, indent=1) + "\n")
        with open(csv_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(RECORD_FIELDS)
            for r in doc["points"]:
                w.writerow([format(r[k], ".17g") if isinstance(r[k], float) else r[k]
                            for k in RECORD_FIELDS])
    except OSError as e:
        raise OSError(f"cannot write results to {path}: {e.strerror}") from e
    return json_path, csv_path


def read_results(path):
    """Read a JSON document written by :func:`write_results`."""
    doc = json.loads(Path(path).with_suffix(".json").read_text())
    return doc["points"], doc.get("metadata", {})


def write_dense_csv(path, X, y):
    data = np.column_stack([X, y])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        for row in data:
            w.writerow([format(v, ".17g") for v in row])
