"""Versioned CSV/JSON export shared by the CLI and the tests.

Every file carries the schema tag, the full resolved run configuration and a
hash of its semantic fields (output location excluded), so results are
reproducible from the file alone.  Floats are serialized with 17 significant
digits and round-trip exactly.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

SCHEMA = "v1"
SCHEMA_LINE = f"# schema={SCHEMA}"

# config keys that do not affect results
_NON_SEMANTIC = {"out_dir"}


def fmt(x) -> str:
    return f"{float(x):.17g}"


def config_hash(config: dict) -> str:
    semantic = {k: v for k, v in config.items() if k not in _NON_SEMANTIC}
    blob = json.dumps(semantic, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def _header_lines(config: dict) -> list[str]:
    return [
        SCHEMA_LINE,
        "# config=" + json.dumps(config, sort_keys=True, separators=(",", ":")),
        "# config_hash=" + config_hash(config),
    ]


def write_csv(path, header_cols, rows, config: dict) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = _header_lines(config)
    lines.append(",".join(header_cols))
    for row in rows:
        lines.append(",".join(fmt(x) if not isinstance(x, str) else x for x in row))
    path.write_text("\n".join(lines) + "\n")


def read_csv(path, numeric: bool = True) -> tuple[dict, list[str], np.ndarray]:
    """Returns (metadata, column names, data).

    With numeric=True (the default) every cell is parsed as a float and the
    data comes back as a 2D array; otherwise rows are returned as raw string
    lists (e.g. for the strategy/score table).
    """
    meta = {}
    cols = None
    data = []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            body = line[1:].strip()
            key, _, val = body.partition("=")
            meta[key] = val
        elif cols is None:
            cols = line.split(",")
        elif line:
            cells = line.split(",")
            data.append([float(x) for x in cells] if numeric else cells)
    if meta.get("schema") != SCHEMA:
        raise ValueError(f"unsupported schema in {path}: {meta.get('schema')!r}")
    if "config" in meta:
        meta["config"] = json.loads(meta["config"])
    return meta, cols, (np.asarray(data) if numeric else data)


def write_json(path, payload: dict, config: dict) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = {"schema": SCHEMA, **payload, "config": config, "config_hash": config_hash(config)}
    path.write_text(json.dumps(doc, indent=2, sort_keys=True, default=_jsonable) + "\n")


def read_json(path) -> dict:
    doc = json.loads(Path(path).read_text())
    if doc.get("schema") != SCHEMA:
        raise ValueError(f"unsupported schema in {path}: {doc.get('schema')!r}")
    return doc


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    raise TypeError(f"not JSON-serializable: {type(obj)}")


def write_grid_csv(path, grid, config: dict) -> None:
    axis = grid.axis
    res = grid.res
    ii, jj = np.meshgrid(np.arange(res), np.arange(res), indexing="ij")
    rows = np.column_stack(
        [axis[ii.ravel()], axis[jj.ravel()], grid.values.ravel()]
    )
    write_csv(path, ["xi1", "xi2", "value"], rows, config)


def write_minima_json(path, grid, config: dict) -> None:
    write_json(
        path,
        {
            "term": grid.term,
            "count": len(grid.minima),
            "minima": grid.minima_coords().tolist(),
        },
        config,
    )


def write_psd_csv(path, profile, config: dict) -> None:
    write_csv(path, ["xi", "rho"], np.column_stack([profile.grid, profile.rho]), config)


def write_psd_maxima_json(path, profile, config: dict) -> None:
    write_json(
        path,
        {
            "count": len(profile.maxima),
            "maxima": profile.maxima_coords().tolist(),
            "curvatures": profile.max_curvatures().tolist(),
        },
        config,
    )


def write_trajectory_csv(path, traj, config: dict) -> None:
    m = traj.schemes[0].size
    cols = ["iteration"] + [f"xi_{i + 1}" for i in range(m)]
    if traj.smoothed is not None:
        cols += [f"xs_{i + 1}" for i in range(m)]
    cols.append("J")
    rows = []
    for k, it in enumerate(traj.iterations):
        row = [float(it), *traj.schemes[k]]
        if traj.smoothed is not None:
            row += list(traj.smoothed[k])
        row.append(traj.values[k])
        rows.append(row)
    write_csv(path, cols, rows, config)


def read_trajectory_csv(path):
    """Returns (metadata, iterations, schemes, smoothed or None, values)."""
    meta, cols, data = read_csv(path)
    m = sum(c.startswith("xi_") for c in cols)
    has_smooth = any(c.startswith("xs_") for c in cols)
    iters = data[:, 0].astype(int)
    schemes = data[:, 1 : 1 + m]
    smoothed = data[:, 1 + m : 1 + 2 * m] if has_smooth else None
    values = data[:, -1]
    return meta, iters, schemes, smoothed, values
