"""Delimited output for benchmark runs: error-series CSV, run manifests,
EOC tables and field snapshots."""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .. import __version__
from ..errors import ConfigurationError

ERROR_SERIES_COLUMNS = ["time", "l2_error", "h1_error", "cg_iters", "sum_wu"]


@dataclass
class ErrorSeries:
    """Per-time error norms of the reconstructed field."""

    times: list = field(default_factory=list)
    l2: list = field(default_factory=list)
    h1: list = field(default_factory=list)
    cg_iters: list = field(default_factory=list)
    sum_wu: list = field(default_factory=list)

    def append(self, time, l2, h1, cg_iters, sum_wu):
        if self.times and time <= self.times[-1]:
            raise ConfigurationError("error-series times must be strictly increasing")
        if l2 < 0 or h1 < 0:
            raise ConfigurationError("error norms must be nonnegative")
        self.times.append(float(time))
        self.l2.append(float(l2))
        self.h1.append(float(h1))
        self.cg_iters.append(int(cg_iters))
        self.sum_wu.append(float(sum_wu))

    def __len__(self):
        return len(self.times)


def write_error_series(series: ErrorSeries, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(ERROR_SERIES_COLUMNS)
        for row in zip(series.times, series.l2, series.h1, series.cg_iters, series.sum_wu):
            writer.writerow([f"{row[0]:.17g}", f"{row[1]:.17g}", f"{row[2]:.17g}",
                             row[3], f"{row[4]:.17g}"])


def read_error_series(path) -> ErrorSeries:
    series = ErrorSeries()
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(ERROR_SERIES_COLUMNS) - set(reader.fieldnames or [])
        if missing:
            raise ConfigurationError(f"error-series CSV misses columns {sorted(missing)}")
        for row in reader:
            series.append(float(row["time"]), float(row["l2_error"]), float(row["h1_error"]),
                          int(row["cg_iters"]), float(row["sum_wu"]))
    return series


def write_manifest(params: dict, path) -> None:
    """JSON manifest with everything needed to reproduce the run."""
    doc = {"version": __version__, **params}
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def read_manifest(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serialisable: {type(obj)}")


# -- EOC tables -----------------------------------------------------------------------


def eoc_from_errors(sigmas, errors):
    """EOC_k = log(e_{k-1}/e_k) / log(sigma_{k-1}/sigma_k); first entry None."""
    out = [None]
    for k in range(1, len(errors)):
        if errors[k] <= 0 or errors[k - 1] <= 0:
            out.append(None)
            continue
        out.append(math.log(errors[k - 1] / errors[k]) / math.log(sigmas[k - 1] / sigmas[k]))
    return out


def write_eoc_table(sigmas, l2_errors, h1_errors, path_csv, path_txt=None, label="") -> None:
    """CSV (sigma, l2_error, l2_eoc, h1_error, h1_eoc) plus an aligned text table."""
    l2_eoc = eoc_from_errors(sigmas, l2_errors)
    h1_eoc = eoc_from_errors(sigmas, h1_errors)
    with open(path_csv, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sigma", "l2_error", "l2_eoc", "h1_error", "h1_eoc"])
        for s, e2, q2, e1, q1 in zip(sigmas, l2_errors, l2_eoc, h1_errors, h1_eoc):
            writer.writerow([
                f"{s:.17g}", f"{e2:.6e}", "" if q2 is None else f"{q2:.2f}",
                f"{e1:.6e}", "" if q1 is None else f"{q1:.2f}",
            ])
    if path_txt is not None:
        with open(path_txt, "w") as fh:
            fh.write(format_eoc_table(sigmas, l2_errors, h1_errors, label=label))


def format_eoc_table(sigmas, l2_errors, h1_errors, label="") -> str:
    l2_eoc = eoc_from_errors(sigmas, l2_errors)
    h1_eoc = eoc_from_errors(sigmas, h1_errors)
    head = f"{label:<12} {'L2 error':>12} {'EOC':>6} {'W12 error':>12} {'EOC':>6}"
    lines = [head, "-" * len(head)]
    for s, e2, q2, e1, q1 in zip(sigmas, l2_errors, l2_eoc, h1_errors, h1_eoc):
        lines.append(
            f"{s:<12.6g} {e2:>12.3e} {'---' if q2 is None else f'{q2:.2f}':>6} "
            f"{e1:>12.3e} {'---' if q1 is None else f'{q1:.2f}':>6}"
        )
    return "\n".join(lines) + "\n"


# -- field snapshots ------------------------------------------------------------------


def write_field_snapshot(path, xs, ys, values, meta: dict) -> None:
    """Grid snapshot CSV: metadata in '#' comment lines, then x,y,value rows."""
    with open(path, "w", newline="") as fh:
        fh.write("# splinepic-field v1\n")
        fh.write("# " + json.dumps(meta, default=_json_default) + "\n")
        writer = csv.writer(fh)
        writer.writerow(["x", "y", "value"])
        for i, x in enumerate(xs):
            for j, y in enumerate(ys):
                writer.writerow([f"{x:.17g}", f"{y:.17g}", f"{values[i, j]:.17g}"])


def read_field_snapshot(path):
    with open(path, newline="") as fh:
        tag = fh.readline().strip()
        if not tag.startswith("# splinepic-field"):
            raise ConfigurationError(f"not a field snapshot: {tag!r}")
        meta = json.loads(fh.readline().strip().lstrip("# "))
        reader = csv.DictReader(fh)
        xs, ys, vals = [], [], []
        for row in reader:
            xs.append(float(row["x"]))
            ys.append(float(row["y"]))
            vals.append(float(row["value"]))
    xu = np.unique(xs)
    yu = np.unique(ys)
    grid = np.asarray(vals).reshape(len(xu), len(yu))
    return xu, yu, grid, meta


def make_run_dir(root=None, name="run") -> str:
    """Timestamped run directory under ``root`` (or $SPLINEPIC_OUTPUT_ROOT, or cwd)."""
    import datetime

    root = root or os.environ.get("SPLINEPIC_OUTPUT_ROOT") or os.getcwd()
    stamp = datetime.datetime.now().strftime("%Y%m%d-%H%M%S")
    path = os.path.join(root, f"{name}-{stamp}")
    suffix = 0
    candidate = path
    while os.path.exists(candidate):
        suffix += 1
        candidate = f"{path}-{suffix}"
    os.makedirs(candidate)
    return candidate
