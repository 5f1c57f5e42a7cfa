"""Readers for the ovsde CLI's result files.

CSVs carry an optional leading ``# config: {...}`` comment with the resolved
run configuration, then a header row; JSON files are plain.  Readers never
import the simulation package: the file formats are the only contract.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np


class InputError(Exception):
    """Missing, unreadable, or schema-violating input file."""


def read_table(path, required_columns):
    """Read one CSV into a dict of float columns, plus the config echo (or None)."""
    p = Path(path)
    if not p.is_file():
        raise InputError(f"input file not found: {p}")
    config = None
    lines = p.read_text(encoding="utf-8").splitlines()
    data_lines = []
    for ln in lines:
        if ln.startswith("#"):
            if ln.startswith("# config:") and config is None:
                try:
                    config = json.loads(ln.removeprefix("# config:"))
                except json.JSONDecodeError:
                    config = None
            continue
        if ln.strip():
            data_lines.append(ln)
    if not data_lines:
        raise InputError(f"{p} contains no data rows")
    header = [c.strip() for c in data_lines[0].split(",")]
    missing = [c for c in required_columns if c not in header]
    if missing:
        raise InputError(f"{p} lacks required columns {missing}; found {header}")
    try:
        raw = np.array(
            [[float(cell) for cell in ln.split(",")] for ln in data_lines[1:]]
        )
    except ValueError as exc:
        raise InputError(f"{p} has a malformed numeric row: {exc}") from exc
    if raw.ndim != 2 or raw.shape[1] != len(header):
        raise InputError(f"{p} has ragged rows")
    cols = {name: raw[:, i] for i, name in enumerate(header)}
    return cols, config


def read_json(path):
    p = Path(path)
    if not p.is_file():
        raise InputError(f"input file not found: {p}")
    try:
        return json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InputError(f"{p} is not valid JSON: {exc}") from exc


def grid_from_long(cols, xname="x", yname="y", vname="h"):
    """Pivot a long-form (x, y, value) table into plottable 2-D arrays."""
    xs = np.unique(cols[xname])
    ys = np.unique(cols[yname])
    if len(xs) * len(ys) != len(cols[vname]):
        raise InputError("grid table is not a complete cartesian product")
    order = np.lexsort((cols[xname], cols[yname]))
    values = cols[vname][order].reshape(len(ys), len(xs))
    return xs, ys, values


def model_label(config) -> str:
    """Short parameter-set caption from a config echo, when available."""
    if not config or "model" not in config:
        return ""
    m = config["model"]
    try:
        return (f"alpha={m['alpha']:g}, beta={m['beta']:g}, d={m['d']:g}, "
                f"v={m['v_circ']:g}, start=({m['x_circ']:g}, {m['y_circ']:g})")
    except (KeyError, TypeError, ValueError):
        return ""
