"""Run-directory files: atomic writes and the fixed CSV layout."""

from __future__ import annotations

import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

FIELD_COLUMNS = ("t", "x", "w")
ENERGY_COLUMNS = ("t", "kinetic", "potential", "dissipation", "total")
APPROX_COLUMNS = ("s", "K", "A2W", "F", "D", "W", "H", "L", "damping_integral")
CONVERGENCE_COLUMNS = ("eps", "error", "iterations", "status", "slope")
FMT = "%.17e"


def atomic_write(path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_text(columns, rows, fmt=FMT, sep=","):
    buf = io.StringIO()
    np.savetxt(buf, np.atleast_2d(rows), fmt=fmt, delimiter=sep, header=sep.join(columns), comments="")
    return buf.getvalue()


def write_csv(path, columns, rows):
    atomic_write(path, csv_text(columns, rows))


def field_rows(times, x, values):
    """Long format: one ``t, x, w`` row per node, time-major."""
    n_t, n_x = values.shape
    return np.column_stack([np.repeat(times, n_x), np.tile(x, n_t), values.ravel()])


def write_json(path, data):
    atomic_write(path, json.dumps(data, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"not serializable: {type(obj).__name__}")


def read_csv(path):
    """Return ``(columns, data)``; raises ``ValueError`` on malformed content."""
    path = Path(path)
    with open(path) as fh:
        header = fh.readline().strip()
    if not header:
        raise ValueError(f"{path} is empty")
    columns = tuple(header.split(","))
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.size and data.shape[1] != len(columns):
        raise ValueError(f"{path}: {data.shape[1]} values per row, header names {len(columns)}")
    return columns, data


def read_field(path):
    """Read a long-format field file back into ``(times, x, values)``."""
    columns, data = read_csv(path)
    if columns != FIELD_COLUMNS:
        raise ValueError(f"{path} is not a field file (columns {columns})")
    t, x = np.unique(data[:, 0]), np.unique(data[:, 1])
    if len(t) * len(x) != len(data):
        raise ValueError(f"{path} is not a complete (t, x) lattice")
    return t, x, data[:, 2].reshape(len(t), len(x))
