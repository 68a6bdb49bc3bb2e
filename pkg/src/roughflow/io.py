"""Readers and writers for the command-line outputs.

- trajectory CSV: header ``t,y_1,...,y_W``, one row per node, ``%.17g``
- table CSV: header row, then values; numbers are written with ``repr``
- report JSON: UTF-8, sorted keys, non-finite numbers stored as ``null``
"""

from __future__ import annotations

import csv
import json
import math

import numpy as np

__all__ = [
    "write_trajectory",
    "read_trajectory",
    "write_table",
    "read_table",
    "write_report",
    "read_report",
    "jsonable",
]


def write_trajectory(path, times, y) -> None:
    y = np.asarray(y, dtype=float)
    header = ",".join(["t"] + [f"y_{k + 1}" for k in range(y.shape[1])])
    np.savetxt(path, np.column_stack([times, y]), delimiter=",", header=header, comments="", fmt="%.17g")


def read_trajectory(path) -> tuple[np.ndarray, np.ndarray]:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, 0], data[:, 1:]


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _parse(text: str):
    if text in ("true", "false"):
        return text == "true"
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def write_table(path, rows: list[dict], fieldnames: list[str] | None = None) -> None:
    fieldnames = fieldnames or (list(rows[0]) if rows else [])
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(fieldnames)
        for row in rows:
            writer.writerow([_cell(row[k]) for k in fieldnames])


def read_table(path) -> list[dict]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        return [{k: _parse(v) for k, v in zip(header, row)} for row in reader]


def jsonable(obj):
    """Convert numpy containers and scalars to plain JSON values."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else None
    return obj


def write_report(path, report: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(jsonable(report), fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


def read_report(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)
