import numpy as np
import pytest

from splinepic.bench.io import (
    ErrorSeries,
    eoc_from_errors,
    format_eoc_table,
    make_run_dir,
    read_error_series,
    read_field_snapshot,
    read_manifest,
    write_error_series,
    write_eoc_table,
    write_field_snapshot,
    write_manifest,
)
from splinepic.errors import ConfigurationError


def test_error_series_roundtrip(tmp_path):
    s = ErrorSeries()
    s.append(0.0, 1e-3, 2e-3, 10, 0.5)
    s.append(0.5, 1.5e-3, 2.5e-3, 12, 0.5)
    path = tmp_path / "errors.csv"
    write_error_series(s, path)
    back = read_error_series(path)
    assert back.times == s.times
    assert back.l2 == s.l2
    assert back.h1 == s.h1
    assert back.cg_iters == s.cg_iters
    assert back.sum_wu == s.sum_wu


def test_error_series_validation():
    s = ErrorSeries()
    s.append(0.0, 1.0, 1.0, 1, 0.0)
    with pytest.raises(ConfigurationError):
        s.append(0.0, 1.0, 1.0, 1, 0.0)  # times must increase
    with pytest.raises(ConfigurationError):
        s.append(1.0, -1.0, 1.0, 1, 0.0)


def test_error_series_rejects_missing_columns(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("time,l2_error\n0,1\n")
    with pytest.raises(ConfigurationError):
        read_error_series(path)


def test_manifest_roundtrip_with_numpy_values(tmp_path):
    path = tmp_path / "manifest.json"
    params = {"sigma": np.float64(0.125), "cells": np.int64(8),
              "errors": np.array([1.0, 2.0]), "name": "run"}
    write_manifest(params, path)
    back = read_manifest(path)
    assert back["sigma"] == 0.125
    assert back["cells"] == 8
    assert back["errors"] == [1.0, 2.0]
    assert "version" in back


def test_eoc_from_errors():
    sigmas = [1 / 8, 1 / 16, 1 / 32]
    errors = [1.0, 1 / 16, 1 / 256]  # exact order 4
    eocs = eoc_from_errors(sigmas, errors)
    assert eocs[0] is None
    assert eocs[1] == pytest.approx(4.0)
    assert eocs[2] == pytest.approx(4.0)


def test_eoc_table_files(tmp_path):
    sigmas = [0.25, 0.125]
    l2 = [1e-2, 1e-3]
    h1 = [1e-1, 2e-2]
    csv_path = tmp_path / "eoc.csv"
    txt_path = tmp_path / "eoc.txt"
    write_eoc_table(sigmas, l2, h1, csv_path, txt_path, label="sigma")
    lines = csv_path.read_text().strip().splitlines()
    assert lines[0] == "sigma,l2_error,l2_eoc,h1_error,h1_eoc"
    assert len(lines) == 3
    text = txt_path.read_text()
    assert "3.32" in text  # log2(10)
    assert "---" in text  # first-row placeholder


def test_format_eoc_table_single_row():
    out = format_eoc_table([0.1], [1e-3], [1e-2], label="sigma")
    assert "---" in out


def test_field_snapshot_roundtrip(tmp_path):
    xs = np.linspace(0, 1, 4)
    ys = np.linspace(0, 2, 3)
    vals = np.arange(12, dtype=float).reshape(4, 3)
    path = tmp_path / "field.csv"
    write_field_snapshot(path, xs, ys, vals, {"time": 1.5})
    bx, by, bv, meta = read_field_snapshot(path)
    assert np.allclose(bx, xs)
    assert np.allclose(by, ys)
    assert np.allclose(bv, vals)
    assert meta["time"] == 1.5


def test_field_snapshot_rejects_other_files(tmp_path):
    path = tmp_path / "junk.csv"
    path.write_text("x,y,value\n0,0,1\n")
    with pytest.raises(ConfigurationError):
        read_field_snapshot(path)


def test_make_run_dir_unique(tmp_path):
    a = make_run_dir(root=tmp_path, name="run")
    b = make_run_dir(root=tmp_path, name="run")
    assert a != b


def test_make_run_dir_env_root(tmp_path, monkeypatch):
    monkeypatch.setenv("SPLINEPIC_OUTPUT_ROOT", str(tmp_path))
    path = make_run_dir(name="envrun")
    assert path.startswith(str(tmp_path))
