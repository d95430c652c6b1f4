"""CSV and JSON writers with deterministic formatting.

Floats are written with ``repr`` (shortest round-trip form), so equal
inputs produce byte-identical files and reading a field back recovers the
exact samples.  JSON keys are sorted.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from ..grid import ConfigurationError, PeriodicGrid, ValueField


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def write_rows(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def write_field(path, u: ValueField) -> Path:
    """Columns ``x_index[,y_index],value``; nodes in C order (x index slowest)."""
    g = u.grid
    idx = np.indices(g.shape).reshape(g.dim, -1).T
    header = ["x_index", "value"] if g.dim == 1 else ["x_index", "y_index", "value"]
    rows = ([*map(int, ij), v] for ij, v in zip(idx, u.samples))
    return write_rows(path, header, rows)


def read_field(path, grid: PeriodicGrid | None = None) -> ValueField:
    """Inverse of :func:`write_field`; the grid is inferred when not given."""
    try:
        with Path(path).open(encoding="utf-8", newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ConfigurationError(f"cannot read field {path}: {exc}") from exc
    if not rows:
        raise ConfigurationError(f"field file {path} is empty")
    header, body = rows[0], rows[1:]
    dim = len(header) - 1
    if dim not in (1, 2) or header[-1] != "value":
        raise ConfigurationError(f"unexpected field header {header}")
    try:
        idx = np.array([[int(c) for c in r[:dim]] for r in body])
        vals = np.array([float(r[dim]) for r in body])
    except (ValueError, IndexError) as exc:
        raise ConfigurationError(f"malformed field row in {path}: {exc}") from exc
    n = int(round(len(body) ** (1.0 / dim)))
    if grid is None:
        grid = PeriodicGrid(dim, n)
    if grid.dim != dim or grid.size != len(body):
        raise ConfigurationError(f"field {path} does not match grid {grid}")
    flat = np.ravel_multi_index(tuple(idx.T), grid.shape)
    out = np.empty(grid.size)
    out[flat] = vals
    return ValueField(grid, out)


def write_matrix(path, M: np.ndarray, row_label: str = "y_index") -> Path:
    """Dense table: one row per source index, one column per target index."""
    header = [row_label] + [str(j) for j in range(M.shape[1])]
    return write_rows(path, header, ([i, *M[i]] for i in range(M.shape[0])))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if np.isfinite(v) else str(v)
    return obj


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(_jsonable(obj), sort_keys=True, indent=2)
    path.write_text(text + "\n", encoding="utf-8")
    return path
