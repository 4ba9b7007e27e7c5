"""Figure rendering for splinepic benchmark outputs.

Consumes only the delimited files the splinepic CLI documents: error-series
CSVs, EOC tables, field snapshots and JSON manifests.
"""

__version__ = "1.0.0"

from .io import FigtoolsError, read_eoc_table, read_error_series, read_field_snapshot, read_manifest
from .plots import PlotSpec, plot_error_series, plot_zalesak_panels, render_eoc_table

__all__ = [
    "FigtoolsError",
    "PlotSpec",
    "plot_error_series",
    "plot_zalesak_panels",
    "read_eoc_table",
    "read_error_series",
    "read_field_snapshot",
    "read_manifest",
    "render_eoc_table",
]
