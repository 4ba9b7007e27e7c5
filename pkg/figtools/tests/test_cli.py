import shutil
from pathlib import Path

import pytest
from click.testing import CliRunner

import figtools
from figtools.cli import main

SAMPLES = Path(figtools.__file__).parent / "samples"


@pytest.fixture
def run_dir(tmp_path):
    target = tmp_path / "run"
    shutil.copytree(SAMPLES, target)
    return target


def test_render_run_directory(run_dir):
    res = CliRunner().invoke(main, [str(run_dir)])
    assert res.exit_code == 0, res.output
    assert (run_dir / "errors.png").stat().st_size > 0
    assert (run_dir / "panels.png").stat().st_size > 0
    assert (run_dir / "eoc-table.txt").exists()
    assert "wrote" in res.output


def test_render_markdown_table(run_dir):
    res = CliRunner().invoke(main, [str(run_dir), "--format", "markdown"])
    assert res.exit_code == 0, res.output
    assert (run_dir / "eoc-table.md").read_text().startswith("| sigma |")


def test_partial_run_renders_individual_snapshots(tmp_path):
    target = tmp_path / "run"
    target.mkdir()
    for name in ("snapshot-t0.csv", "snapshot-t79.csv", "snapshot-t157.csv"):
        shutil.copy(SAMPLES / name, target / name)
    res = CliRunner().invoke(main, [str(target)])
    assert res.exit_code == 0, res.output
    assert (target / "snapshot-t0.png").exists()
    assert not (target / "panels.png").exists()


def test_empty_directory_fails(tmp_path):
    res = CliRunner().invoke(main, [str(tmp_path)])
    assert res.exit_code != 0


def test_missing_directory_fails():
    res = CliRunner().invoke(main, ["/nonexistent-run-dir"])
    assert res.exit_code == 2
