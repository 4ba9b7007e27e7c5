"""Benchmark drivers and experiment plumbing."""

from .advection import run_advection_convergence, run_disc_demo, run_zalesak
from .io import ErrorSeries, read_error_series, write_error_series, write_manifest
from .ns import run_abc, run_ns2d
from .scenarios import Scenario, zalesak_initial_data

__all__ = [
    "ErrorSeries",
    "Scenario",
    "read_error_series",
    "run_abc",
    "run_advection_convergence",
    "run_disc_demo",
    "run_ns2d",
    "run_zalesak",
    "write_error_series",
    "write_manifest",
    "zalesak_initial_data",
]
