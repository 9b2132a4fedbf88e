"""Parsers for the experiment runner's versioned CSV/JSON outputs.

This package is a pure view layer: it re-implements the file parsing and
never imports the numerical package, so plots cannot accidentally recompute
mathematics.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

SCHEMA = "v1"


class SchemaError(Exception):
    pass


def read_csv(path):
    """Returns (metadata dict, column names, float data array)."""
    meta = {}
    cols = None
    rows = []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            key, _, val = line[1:].strip().partition("=")
            meta[key] = val
        elif cols is None:
            cols = line.split(",")
        elif line:
            rows.append([float(x) for x in line.split(",")])
    if meta.get("schema") != SCHEMA:
        raise SchemaError(f"{path}: expected schema={SCHEMA}, got {meta.get('schema')!r}")
    if "config" in meta:
        meta["config"] = json.loads(meta["config"])
    return meta, cols, np.asarray(rows)


def read_manifest(path):
    doc = json.loads(Path(path).read_text())
    if doc.get("schema") != SCHEMA:
        raise SchemaError(f"{path}: expected schema={SCHEMA}, got {doc.get('schema')!r}")
    return doc


def read_grid(path):
    """Landscape grid: (metadata, axis extent [-N/2, N/2), res, value matrix)."""
    meta, cols, data = read_csv(path)
    if cols != ["xi1", "xi2", "value"]:
        raise SchemaError(f"{path}: unexpected grid columns {cols}")
    res = int(round(np.sqrt(data.shape[0])))
    if res * res != data.shape[0]:
        raise SchemaError(f"{path}: grid is not square ({data.shape[0]} rows)")
    values = data[:, 2].reshape(res, res)  # row-major in xi1
    n_len = int(meta["config"]["n_len"])
    return meta, n_len, res, values


def read_profile(path):
    """PSD-style profile: (metadata, xi grid, values)."""
    meta, cols, data = read_csv(path)
    if cols[0] != "xi" or len(cols) != 2:
        raise SchemaError(f"{path}: unexpected profile columns {cols}")
    return meta, data[:, 0], data[:, 1]


def read_trajectory(path):
    """Trajectory: (metadata, iterations, schemes, smoothed or None, values)."""
    meta, cols, data = read_csv(path)
    if cols[0] != "iteration" or cols[-1] != "J":
        raise SchemaError(f"{path}: unexpected trajectory columns {cols}")
    m = sum(c.startswith("xi_") for c in cols)
    has_smooth = any(c.startswith("xs_") for c in cols)
    schemes = data[:, 1 : 1 + m]
    smoothed = data[:, 1 + m : 1 + 2 * m] if has_smooth else None
    return meta, data[:, 0], schemes, smoothed, data[:, -1]
