"""Readers for the splinepic output schemas.

The schemas are re-implemented here from their documentation on purpose:
this package must work against the files alone, without importing the
producing library.
"""

from __future__ import annotations

import csv
import json

import numpy as np

ERROR_SERIES_COLUMNS = ("time", "l2_error", "h1_error", "cg_iters", "sum_wu")
EOC_COLUMNS = ("sigma", "l2_error", "h1_error")


class FigtoolsError(Exception):
    """Any input or rendering failure."""


def read_error_series(path) -> dict:
    """Error-series CSV -> dict of numpy columns; fails on schema mismatch."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(ERROR_SERIES_COLUMNS) - set(reader.fieldnames or [])
        if missing:
            raise FigtoolsError(
                f"{path}: error-series CSV is missing columns {sorted(missing)}; "
                f"expected header {','.join(ERROR_SERIES_COLUMNS)}"
            )
        rows = list(reader)
    if not rows:
        raise FigtoolsError(f"{path}: error-series CSV has no data rows")
    return {
        "time": np.array([float(r["time"]) for r in rows]),
        "l2_error": np.array([float(r["l2_error"]) for r in rows]),
        "h1_error": np.array([float(r["h1_error"]) for r in rows]),
        "cg_iters": np.array([int(r["cg_iters"]) for r in rows]),
        "sum_wu": np.array([float(r["sum_wu"]) for r in rows]),
    }


def read_eoc_table(path) -> list[dict]:
    """EOC CSV -> list of row dicts; the eoc columns may be absent or empty."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(EOC_COLUMNS) - set(reader.fieldnames or [])
        if missing:
            raise FigtoolsError(
                f"{path}: EOC CSV is missing columns {sorted(missing)}"
            )
        rows = []
        for r in reader:
            rows.append({
                "sigma": float(r["sigma"]),
                "l2_error": float(r["l2_error"]),
                "h1_error": float(r["h1_error"]),
                "l2_eoc": _opt_float(r.get("l2_eoc")),
                "h1_eoc": _opt_float(r.get("h1_eoc")),
            })
    if not rows:
        raise FigtoolsError(f"{path}: EOC CSV has no data rows")
    return rows


def _opt_float(s):
    if s is None or s == "":
        return None
    return float(s)


def read_manifest(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def read_field_snapshot(path):
    """'# splinepic-field v1' snapshot -> (xs, ys, value grid, metadata)."""
    with open(path, newline="") as fh:
        tag = fh.readline().strip()
        if not tag.startswith("# splinepic-field"):
            raise FigtoolsError(f"{path}: not a splinepic field snapshot (got {tag!r})")
        meta = json.loads(fh.readline().strip().lstrip("# "))
        reader = csv.DictReader(fh)
        xs, ys, vals = [], [], []
        for row in reader:
            xs.append(float(row["x"]))
            ys.append(float(row["y"]))
            vals.append(float(row["value"]))
    xu = np.unique(xs)
    yu = np.unique(ys)
    if len(xu) * len(yu) != len(vals):
        raise FigtoolsError(f"{path}: snapshot rows do not form a full grid")
    return xu, yu, np.asarray(vals).reshape(len(xu), len(yu)), meta
