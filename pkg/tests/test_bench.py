import numpy as np
import pytest

from splinepic.bench.advection import (
    ZALESAK_SNAPSHOT_TIMES,
    contour_area,
    run_advection_convergence,
    run_disc_demo,
    run_zalesak,
)
from splinepic.bench.ns import run_ns2d
from splinepic.bench.scenarios import (
    abc_exact_velocity_gradient,
    abc_velocity,
    disc_velocity,
    disc_vorticity,
    ns2d_exact_velocity,
    ns2d_exact_velocity_gradient,
    ns2d_vorticity,
    rotating_bump,
    zalesak_initial_data,
    zalesak_velocity,
)


# -- scenario oracles -------------------------------------------------------------------


def test_zalesak_initial_data_frozen_values():
    pts = np.array([
        [0.0, 0.25],   # disk centre, inside, distance to slot wall
        [0.45, 0.25],  # far outside, distance to disk boundary
        [0.0, 0.05],   # below the disk, nearest feature is the slot-mouth arc
        [0.1, 0.25],   # inside the slot
        [0.0, 0.38],   # inside the disk above the slot
    ])
    vals = zalesak_initial_data(pts)
    assert vals[0] == pytest.approx(-0.025, abs=1e-12)
    assert vals[1] == pytest.approx(-0.30, abs=1e-12)
    assert vals[2] == pytest.approx(-0.057785830175, abs=1e-9)
    assert vals[3] == pytest.approx(0.05, abs=1e-12)
    assert vals[4] == pytest.approx(0.02, abs=1e-12)


def test_zalesak_signed_distance_signs():
    # negative outside the body, positive inside
    rng = np.random.default_rng(0)
    outside = rng.uniform(-0.5, 0.5, size=(100, 2))
    outside = outside[np.hypot(outside[:, 0], outside[:, 1] - 0.25) > 0.16]
    assert (zalesak_initial_data(outside) < 0).all()
    assert zalesak_initial_data(np.array([[0.1, 0.25]]))[0] > 0


def test_zalesak_velocity_rigid_rotation_core():
    pts = np.array([[0.2, 0.1], [-0.3, 0.0]])
    v = zalesak_velocity(pts)
    expected = 2 * np.pi / 628 * np.stack([-pts[:, 1], pts[:, 0]], axis=-1)
    assert np.allclose(v, expected, atol=1e-15)
    # damped to zero far out
    assert np.allclose(zalesak_velocity(np.array([[0.99, 0.0]])), 0.0)


def test_disc_velocity_matches_cone_vorticity():
    # u_theta(1/2) = 25/3 at the cone edge; 1/r tail beyond
    v = disc_velocity(np.array([[0.5, 0.0]]))
    assert v[0, 1] == pytest.approx(25.0 / 3.0, rel=1e-12)
    v_out = disc_velocity(np.array([[1.0, 0.0]]))
    assert v_out[0, 1] == pytest.approx(25.0 / 6.0, rel=1e-12)
    # curl u = omega, checked by finite differences at an interior point
    eps = 1e-6
    p = np.array([[0.17, 0.23]])
    duy_dx = (disc_velocity(p + [eps, 0])[0, 1] - disc_velocity(p - [eps, 0])[0, 1]) / (2 * eps)
    dux_dy = (disc_velocity(p + [0, eps])[0, 0] - disc_velocity(p - [0, eps])[0, 0]) / (2 * eps)
    assert duy_dx - dux_dy == pytest.approx(disc_vorticity(p)[0], rel=1e-5)


def test_rotating_bump_exact_solution_consistency():
    initial, velocity, exact = rotating_bump()
    rng = np.random.default_rng(1)
    pts = rng.uniform(0.2, 0.8, size=(100, 2))
    assert np.allclose(exact(pts, 0.0), initial(pts), atol=1e-14)
    assert np.allclose(exact(pts, 1.0), initial(pts), atol=1e-12)  # full period


def test_ns2d_vorticity_is_curl_of_velocity():
    rng = np.random.default_rng(2)
    pts = rng.uniform(0, 1, size=(50, 2))
    eps = 1e-6
    duy_dx = (ns2d_exact_velocity(pts + [eps, 0], 0.3)[:, 1]
              - ns2d_exact_velocity(pts - [eps, 0], 0.3)[:, 1]) / (2 * eps)
    dux_dy = (ns2d_exact_velocity(pts + [0, eps], 0.3)[:, 0]
              - ns2d_exact_velocity(pts - [0, eps], 0.3)[:, 0]) / (2 * eps)
    assert np.allclose(duy_dx - dux_dy, ns2d_vorticity(pts, 0.3), atol=1e-5)


def test_ns2d_gradient_matches_finite_differences():
    rng = np.random.default_rng(3)
    pts = rng.uniform(0, 1, size=(20, 2))
    g = ns2d_exact_velocity_gradient(pts, 0.1)
    eps = 1e-6
    for j in range(2):
        shift = np.zeros(2)
        shift[j] = eps
        fd = (ns2d_exact_velocity(pts + shift, 0.1) - ns2d_exact_velocity(pts - shift, 0.1)) / (2 * eps)
        assert np.allclose(fd, g[:, :, j], atol=1e-6)


def test_abc_velocity_is_beltrami():
    # curl u = u, by finite differences
    rng = np.random.default_rng(4)
    pts = rng.uniform(0, 2 * np.pi, size=(20, 3))
    eps = 1e-6
    d = []
    for j in range(3):
        shift = np.zeros(3)
        shift[j] = eps
        d.append((abc_velocity(pts + shift) - abc_velocity(pts - shift)) / (2 * eps))
    curl = np.stack([
        d[1][:, 2] - d[2][:, 1],
        d[2][:, 0] - d[0][:, 2],
        d[0][:, 1] - d[1][:, 0],
    ], axis=-1)
    assert np.allclose(curl, abc_velocity(pts), atol=1e-6)


def test_abc_gradient_matches_finite_differences():
    rng = np.random.default_rng(5)
    pts = rng.uniform(0, 2 * np.pi, size=(10, 3))
    g = abc_exact_velocity_gradient(pts, 0.2)
    eps = 1e-6
    from splinepic.bench.scenarios import abc_exact_velocity

    for j in range(3):
        shift = np.zeros(3)
        shift[j] = eps
        fd = (abc_exact_velocity(pts + shift, 0.2) - abc_exact_velocity(pts - shift, 0.2)) / (2 * eps)
        assert np.allclose(fd, g[:, :, j], atol=1e-6)


# -- driver behaviour --------------------------------------------------------------------


def test_contour_area_circle():
    xs = np.linspace(-1, 1, 201)
    ys = xs
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    vals = 0.5**2 - (X**2 + Y**2)  # positive inside radius 1/2
    area = contour_area(xs, ys, vals)
    assert area == pytest.approx(np.pi * 0.25, rel=1e-3)


def test_advection_convergence_short_ladder():
    res = run_advection_convergence(sigmas=(1 / 8, 1 / 16), t_final=0.25)
    assert res["errors"][1] < res["errors"][0] / 8
    assert res["eocs"][1] > 3.0


def test_zalesak_quick_run():
    res = run_zalesak(sigma=0.05, dt=1.0, t_final=157.0,
                      snapshot_times=(0, 79, 157))
    assert res["values_bitwise_invariant"]
    assert len(res["snapshots"]) == 3
    assert all(s["slit_crossings"] == 4 for s in res["snapshots"])
    assert res["area_drift"] < 0.01


def test_zalesak_snapshot_times_cover_one_revolution():
    assert ZALESAK_SNAPSHOT_TIMES[0] == 0
    assert ZALESAK_SNAPSHOT_TIMES[-1] == 628
    assert len(ZALESAK_SNAPSHOT_TIMES) == 9


def test_disc_demo_sampled_beats_exact_mass():
    res = run_disc_demo(sigma=0.1, t_final=0.15)
    assert res["deviation_sampled"][-1] < res["deviation_exact_mass"][-1]
    # the sampled-mass reconstruction stays near its initial deviation
    assert res["deviation_sampled"][-1] < 3 * res["deviation_sampled"][0]


def test_ns2d_short_run_stable():
    res = run_ns2d(t_final=0.5, record_every=8)
    assert res["stable"]
    series = res["series"]
    assert series.times[0] == 0.0
    assert series.times[-1] == 0.5
    assert all(np.isfinite(series.l2))
    # sum of w * omega stays essentially constant for tiny nu
    assert abs(series.sum_wu[-1] - series.sum_wu[0]) < 1e-3


def test_ns2d_deterministic_for_fixed_seed():
    a = run_ns2d(t_final=0.25, record_every=8, seed=3)
    b = run_ns2d(t_final=0.25, record_every=8, seed=3)
    assert a["series"].l2 == b["series"].l2
    assert a["series"].h1 == b["series"].h1
    c = run_ns2d(t_final=0.25, record_every=8, seed=4)
    assert c["series"].l2 != a["series"].l2
