import numpy as np
import pytest

from splinepic.errors import ConfigurationError, DomainError
from splinepic.grid import CartesianGrid, grid_from_spacing
from splinepic.integrators import TimeIntegrator
from splinepic.particles import (
    ParticleLayout,
    ScenarioField,
    advect,
    check_trajectory_consistency,
    init_particles,
    load_particles,
    save_particles,
)


def unit_box(cells=8, periodic=False):
    return CartesianGrid((0.0, 0.0), (1.0, 1.0), (cells, cells), (periodic,) * 2)


def rotation_velocity(points, t=0.0):
    pts = np.atleast_2d(points)
    x = pts[:, 0] - 0.5
    y = pts[:, 1] - 0.5
    return 2 * np.pi * np.stack([-y, x], axis=-1)


def test_init_particles_cell_center():
    box = unit_box(8)
    field = init_particles(box, 1 / 16, ParticleLayout(), lambda p: p[:, 0])
    assert field.count == 256
    assert np.allclose(field.weights, (1 / 16) ** 2)
    assert np.allclose(field.values, field.positions[:, 0])
    # total quadrature weight equals the box volume
    assert field.weights.sum() == pytest.approx(1.0)


def test_init_particles_spacing_must_divide():
    with pytest.raises(ConfigurationError):
        init_particles(unit_box(8), 0.3, ParticleLayout(), lambda p: p[:, 0])


def test_random_placement_stays_in_cell_and_is_deterministic():
    box = unit_box(4)
    lay = ParticleLayout("random_in_cell", seed=42)
    f1 = init_particles(box, 1 / 8, lay, lambda p: np.zeros(p.shape[0]))
    f2 = init_particles(box, 1 / 8, lay, lambda p: np.zeros(p.shape[0]))
    assert np.array_equal(f1.positions, f2.positions)
    f3 = init_particles(box, 1 / 8, ParticleLayout("random_in_cell", seed=43),
                        lambda p: np.zeros(p.shape[0]))
    assert not np.array_equal(f1.positions, f3.positions)
    # each particle stays inside its own h-cell
    cells = f1.tracking_box.cell_multi_index(f1.positions)
    centers_cells = f1.tracking_box.cell_multi_index(f1.tracking_box.cell_centers())
    assert np.array_equal(np.sort(cells.tolist()), np.sort(centers_cells.tolist()))


def test_advection_values_bitwise_invariant():
    box = CartesianGrid((-0.5, -0.5), (1.5, 1.5), (16, 16))
    field = init_particles(box, 1 / 8, ParticleLayout(), lambda p: np.sin(p[:, 0]))
    keep = np.linalg.norm(field.positions - 0.5, axis=1) < 0.4
    field.positions = field.positions[keep]
    field.weights = field.weights[keep]
    field.values = field.values[keep]
    field.born_positions = field.born_positions[keep]
    before = field.values.copy()
    moved = advect(field, rotation_velocity, TimeIntegrator("rk4", 0.01), 0.0, 0.13)
    assert np.array_equal(moved.values, before)
    assert moved.values.dtype == before.dtype


def test_advection_full_revolution_returns():
    box = CartesianGrid((-0.5, -0.5), (1.5, 1.5), (16, 16))
    field = init_particles(box, 1 / 8, ParticleLayout(), lambda p: np.zeros(p.shape[0]))
    # keep only particles near the rotation centre so none leaves the box
    keep = np.linalg.norm(field.positions - 0.5, axis=1) < 0.4
    field.positions = field.positions[keep]
    field.weights = field.weights[keep]
    field.values = field.values[keep]
    field.born_positions = field.born_positions[keep]
    start = field.positions.copy()
    moved = advect(field, rotation_velocity, TimeIntegrator("rk4", 1 / 256), 0.0, 1.0)
    assert np.allclose(moved.positions, start, atol=1e-6)


def test_advection_escape_raises_domain_error():
    box = unit_box(4)
    field = init_particles(box, 1 / 8, ParticleLayout(), lambda p: np.zeros(p.shape[0]))
    wind = lambda p, t=0.0: np.ones_like(np.atleast_2d(p))
    with pytest.raises(DomainError):
        advect(field, wind, TimeIntegrator("rk4", 0.1), 0.0, 1.0)


def test_advection_periodic_wrap():
    box = unit_box(4, periodic=True)
    field = init_particles(box, 1 / 8, ParticleLayout(), lambda p: np.zeros(p.shape[0]))
    wind = lambda p, t=0.0: np.ones_like(np.atleast_2d(p))
    moved = advect(field, wind, TimeIntegrator("rk4", 0.1), 0.0, 1.3)
    assert (moved.positions >= 0.0).all() and (moved.positions < 1.0).all()


def test_value_rhs_integration_order():
    # transported values with du/dt = u along still particles: u(T) = u0 e^T
    box = unit_box(2)
    field = init_particles(box, 0.5, ParticleLayout(), lambda p: np.ones(p.shape[0]))
    still = lambda p, t=0.0: np.zeros_like(np.atleast_2d(p))
    grow = lambda pos, val, t: val
    errs = []
    for dt in (0.1, 0.05):
        out = advect(field, still, TimeIntegrator("rk4", dt), 0.0, 1.0, value_rhs=grow)
        errs.append(abs(out.values[0] - np.e))
    assert errs[1] < errs[0] / 8


def test_check_trajectory_consistency():
    def trajectory(points, tau, t):
        ang = 2 * np.pi * (t - tau)
        c, s = np.cos(ang), np.sin(ang)
        x = points[:, 0] - 0.5
        y = points[:, 1] - 0.5
        return np.stack([0.5 + c * x - s * y, 0.5 + s * x + c * y], axis=-1)

    scen = ScenarioField(velocity=rotation_velocity, exact_trajectory=trajectory)
    pts = np.array([[0.7, 0.5], [0.5, 0.9]])
    assert check_trajectory_consistency(scen, pts) < 1e-5


def test_snapshot_roundtrip(tmp_path):
    box = grid_from_spacing((0.0, 0.0), (1.0, 1.0), 0.25, periodic=(True, False))
    field = init_particles(box, 0.25, ParticleLayout("random_in_cell", seed=7),
                           lambda p: p[:, 0] * p[:, 1])
    path = tmp_path / "snap.csv"
    save_particles(field, path)
    back = load_particles(path)
    assert np.array_equal(back.positions, field.positions)
    assert np.array_equal(back.weights, field.weights)
    assert np.array_equal(back.values, field.values)
    assert back.h == field.h
    assert back.tracking_box == field.tracking_box


def test_snapshot_rejects_other_files(tmp_path):
    path = tmp_path / "junk.csv"
    path.write_text("x,y\n1,2\n")
    with pytest.raises(ConfigurationError):
        load_particles(path)
