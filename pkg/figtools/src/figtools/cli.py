"""Render figures for a splinepic run directory, next to its CSVs."""

from __future__ import annotations

import glob
import os
import sys

import click

from . import __version__
from .io import FigtoolsError, read_error_series, read_field_snapshot
from .plots import PlotSpec, plot_error_series, plot_zalesak_panels, render_eoc_table


@click.command()
@click.version_option(version=__version__)
@click.argument("run_dir", type=click.Path(exists=True, file_okay=False))
@click.option("--format", "fmt", default="text", show_default=True,
              type=click.Choice(["text", "markdown"]), help="EOC table format.")
def main(run_dir, fmt):
    """Render every recognised CSV in RUN_DIR to images/tables alongside it."""
    made = []

    error_csvs = sorted(glob.glob(os.path.join(run_dir, "errors*.csv")))
    series = []
    for path in error_csvs:
        try:
            read_error_series(path)
            series.append(path)
        except FigtoolsError:
            pass  # not an error-series file; other renderers may claim it
    if series:
        out = os.path.join(run_dir, "errors.png")
        plot_error_series(PlotSpec(inputs=series, output=out))
        made.append(out)

    eoc_csv = os.path.join(run_dir, "eoc.csv")
    if os.path.exists(eoc_csv):
        table = render_eoc_table(eoc_csv, fmt=fmt)
        ext = "md" if fmt == "markdown" else "txt"
        out = os.path.join(run_dir, f"eoc-table.{ext}")
        with open(out, "w") as fh:
            fh.write(table)
        click.echo(table, nl=False)
        made.append(out)

    snapshots = []
    for path in sorted(glob.glob(os.path.join(run_dir, "snapshot-*.csv"))):
        try:
            read_field_snapshot(path)
            snapshots.append(path)
        except FigtoolsError:
            pass
    level_set = [p for p in snapshots
                 if os.path.basename(p).startswith("snapshot-t")]
    if len(level_set) == 9:
        out = os.path.join(run_dir, "panels.png")
        plot_zalesak_panels(level_set, out)
        made.append(out)
        snapshots = [p for p in snapshots if p not in level_set]
    for path in snapshots:
        out = os.path.splitext(path)[0] + ".png"
        _render_single_snapshot(path, out)
        made.append(out)

    if not made:
        raise FigtoolsError(f"{run_dir}: no renderable CSVs found")
    for path in made:
        click.echo(f"wrote {path}")


def _render_single_snapshot(path, out):
    import matplotlib.pyplot as plt

    from .plots import _PNG_META

    xs, ys, vals, meta = read_field_snapshot(path)
    fig, ax = plt.subplots(figsize=(4.0, 4.0))
    ax.pcolormesh(xs, ys, vals.T, cmap="RdBu_r", shading="auto")
    ax.contour(xs, ys, vals.T, levels=[0.0], colors="k", linewidths=1.2)
    ax.set_aspect("equal")
    ax.set_title(f"t = {meta.get('time', '?'):g}", fontsize=10)
    fig.tight_layout()
    fig.savefig(out, dpi=150, metadata=_PNG_META)
    plt.close(fig)


def run():
    try:
        main(standalone_mode=False)
    except click.ClickException as exc:
        exc.show()
        sys.exit(exc.exit_code)
    except FigtoolsError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)


if __name__ == "__main__":
    run()
