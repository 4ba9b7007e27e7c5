import numpy as np
import pytest

from splinepic.errors import ConfigurationError, UsageError
from splinepic.integrators import (
    TimeIntegrator,
    extrapolated_midpoint_tableau,
    get_tableau,
    rk4_tableau,
    rk_step,
)


def test_rk4_tableau_consistency():
    tab = rk4_tableau()
    assert tab.stages == 4
    assert sum(tab.b) == pytest.approx(1.0, abs=1e-15)
    assert tab.row_sum_defect() < 1e-15


def test_midpoint10_tableau_consistency():
    tab = extrapolated_midpoint_tableau(5)
    assert tab.stages == 26
    assert sum(tab.b) == pytest.approx(1.0, abs=1e-13)
    assert tab.row_sum_defect() < 1e-13


def test_get_tableau_schemes():
    assert get_tableau("rk4").stages == 4
    assert get_tableau("midpoint10").stages == 26
    with pytest.raises(UsageError):
        get_tableau("euler99")


def integrate(tableau, rhs, y0, t0, t1, nsteps):
    dt = (t1 - t0) / nsteps
    state = (np.asarray(y0, dtype=float),)
    t = t0
    for _ in range(nsteps):
        state = rk_step(tableau, lambda tt, s: (rhs(tt, s[0]),), t, state, dt)
        t += dt
    return state[0]


def test_rk4_order():
    # y' = y, y(0) = 1 -> e; halving dt should reduce the error ~16x
    tab = rk4_tableau()
    errs = []
    for n in (4, 8, 16):
        y = integrate(tab, lambda t, y: y, [1.0], 0.0, 1.0, n)
        errs.append(abs(float(y[0]) - np.e))
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(rates > 3.7)


def test_midpoint10_order():
    # nonlinear scalar problem y' = y^2, y(0)=1/2, exact y(t) = 1/(2-t)
    tab = extrapolated_midpoint_tableau(5)
    errs = []
    for n in (2, 3, 4):
        y = integrate(tab, lambda t, y: y * y, [0.5], 0.0, 1.0, n)
        errs.append(abs(float(y[0]) - 1.0))
    rates = np.log(np.array(errs[:-1]) / np.array(errs[1:])) / np.log([3 / 2, 4 / 3])
    assert rates[-1] > 8.5


def test_midpoint10_high_accuracy_single_step():
    # one step of the order-10 scheme on y' = -y over dt = 0.5
    tab = extrapolated_midpoint_tableau(5)
    y = integrate(tab, lambda t, y: -y, [1.0], 0.0, 0.5, 1)
    assert abs(float(y[0]) - np.exp(-0.5)) < 1e-10


def test_rk_step_multi_component_state():
    # circular motion: positions and values advanced together
    tab = rk4_tableau()

    def rhs(t, state):
        pos, val = state
        return np.stack([-pos[:, 1], pos[:, 0]], axis=-1), np.zeros_like(val)

    pos = np.array([[1.0, 0.0]])
    val = np.array([7.0])
    state = (pos, val)
    dt = 2 * np.pi / 200
    for _ in range(200):
        state = rk_step(tab, rhs, 0.0, state, dt)
    assert np.allclose(state[0], [[1.0, 0.0]], atol=1e-6)
    assert state[1][0] == 7.0  # untouched values stay bitwise identical


def test_time_integrator_wrapper():
    ti = TimeIntegrator("rk4", 0.1)
    assert ti.tableau.stages == 4
    with pytest.raises(ConfigurationError):
        TimeIntegrator("rk4", -0.1)
