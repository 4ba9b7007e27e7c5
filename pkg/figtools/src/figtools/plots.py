"""Rendering operations: error curves, Zalesak panels, EOC tables."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .io import FigtoolsError, read_eoc_table, read_error_series, read_field_snapshot, read_manifest

# strip the writer's software tag so identical inputs give identical bytes
_PNG_META = {"Software": None}


@dataclass
class PlotSpec:
    """One error-series figure: input CSVs, output image, styling."""

    inputs: list
    output: str
    labels: list | None = None
    column: str = "l2_error"
    title: str = ""
    marker_every: int = 1
    styles: list = field(default_factory=lambda: ["o-", "s--", "^-.", "d:"])

    def __post_init__(self):
        if not self.inputs:
            raise FigtoolsError("PlotSpec needs at least one input CSV")
        if self.labels is not None and len(self.labels) != len(self.inputs):
            raise FigtoolsError(
                f"got {len(self.labels)} labels for {len(self.inputs)} inputs"
            )


def _label_for(csv_path) -> str:
    """Legend entry from the run manifest next to the CSV, if there is one."""
    stem = os.path.splitext(os.path.basename(csv_path))[0]
    manifest_path = os.path.join(os.path.dirname(csv_path) or ".", "manifest.json")
    if not os.path.exists(manifest_path):
        return stem
    manifest = read_manifest(manifest_path)
    name = manifest.get("command", stem)
    suffix = stem.removeprefix("errors").lstrip("-")
    return f"{name} {suffix}" if suffix else name


def plot_error_series(spec: PlotSpec) -> str:
    """Semilog-y error curves, one per input CSV; returns the output path."""
    if spec.column not in ("l2_error", "h1_error"):
        raise FigtoolsError(f"unknown error column {spec.column!r}")
    labels = spec.labels or [_label_for(p) for p in spec.inputs]
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for k, (path, label) in enumerate(zip(spec.inputs, labels)):
        series = read_error_series(path)
        style = spec.styles[k % len(spec.styles)]
        ax.semilogy(series["time"], series[spec.column], style,
                    markevery=spec.marker_every, label=label, markersize=4)
    ax.set_xlabel("time")
    ax.set_ylabel(spec.column.replace("_", " "))
    if spec.title:
        ax.set_title(spec.title)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(spec.output, dpi=150, metadata=_PNG_META)
    plt.close(fig)
    return spec.output


def plot_zalesak_panels(snapshot_paths, output) -> str:
    """3x3 grid of level-set snapshots with the zero contour overlaid."""
    paths = list(snapshot_paths)
    if len(paths) != 9:
        raise FigtoolsError(f"need exactly 9 snapshots for the 3x3 panel, got {len(paths)}")
    snaps = [read_field_snapshot(p) for p in paths]
    snaps.sort(key=lambda s: s[3].get("time", 0.0))
    fig, axes = plt.subplots(3, 3, figsize=(9.0, 9.0), sharex=True, sharey=True)
    for ax, (xs, ys, vals, meta) in zip(axes.ravel(), snaps):
        # rows are x-major, so transpose for (y, x)-oriented display
        ax.pcolormesh(xs, ys, vals.T, cmap="RdBu_r", shading="auto")
        ax.contour(xs, ys, vals.T, levels=[0.0], colors="k", linewidths=1.2)
        ax.set_title(f"t = {meta.get('time', '?'):g}", fontsize=9)
        ax.set_aspect("equal")
    fig.tight_layout()
    fig.savefig(output, dpi=150, metadata=_PNG_META)
    plt.close(fig)
    return output


def _computed_eocs(rows, err_key, eoc_key):
    out = []
    for k, row in enumerate(rows):
        if row[eoc_key] is not None:
            out.append(row[eoc_key])
        elif k == 0:
            out.append(None)
        else:
            e0, e1 = rows[k - 1][err_key], row[err_key]
            s0, s1 = rows[k - 1]["sigma"], row["sigma"]
            out.append(math.log(e0 / e1) / math.log(s0 / s1)
                       if e0 > 0 and e1 > 0 and s0 != s1 else None)
    return out


def render_eoc_table(source, fmt="text") -> str:
    """EOC CSV (path or pre-read rows) -> aligned text or markdown table.

    EOC columns are computed from the errors when the CSV does not carry
    them; rows where an error grew under refinement are flagged with '!'.
    """
    rows = read_eoc_table(source) if isinstance(source, (str, os.PathLike)) else source
    if fmt not in ("text", "markdown"):
        raise FigtoolsError(f"unknown table format {fmt!r}")
    l2_eoc = _computed_eocs(rows, "l2_error", "l2_eoc")
    h1_eoc = _computed_eocs(rows, "h1_error", "h1_eoc")
    cells = []
    for k, row in enumerate(rows):
        flag = ""
        if k > 0 and (row["l2_error"] > rows[k - 1]["l2_error"]
                      or row["h1_error"] > rows[k - 1]["h1_error"]):
            flag = "!"
        cells.append([
            f"{row['sigma']:.6g}",
            f"{row['l2_error']:.3e}",
            "---" if l2_eoc[k] is None else f"{l2_eoc[k]:.2f}",
            f"{row['h1_error']:.3e}",
            "---" if h1_eoc[k] is None else f"{h1_eoc[k]:.2f}",
            flag,
        ])
    header = ["sigma", "L2 error", "EOC", "H1 error", "EOC", ""]
    if fmt == "markdown":
        lines = ["| " + " | ".join(header).rstrip() + " |",
                 "|" + "|".join(["---"] * len(header)) + "|"]
        lines += ["| " + " | ".join(c).rstrip() + " |" for c in cells]
        return "\n".join(lines) + "\n"
    widths = [max(len(header[j]), max(len(c[j]) for c in cells)) for j in range(len(header))]
    def line(parts):
        return "  ".join(p.rjust(widths[j]) for j, p in enumerate(parts)).rstrip()
    lines = [line(header), "-" * (sum(widths) + 2 * (len(widths) - 1))]
    lines += [line(c) for c in cells]
    return "\n".join(lines) + "\n"
