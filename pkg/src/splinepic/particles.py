"""Particle fields as moving quadrature rules.

A particle field carries positions, the fixed weights w_i = h^D of the
first-order quadrature rule it represents, and the transported values u_i.
Pure advection never touches the values: the carried samples are an exact
weak solution of the transport equation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, DomainError
from .grid import CartesianGrid, grid_from_spacing
from .integrators import TimeIntegrator, rk_step

SNAPSHOT_TAG = "splinepic-particles v1"


@dataclass(frozen=True)
class ParticleLayout:
    """Placement rule for the one-particle-per-cell seeding of the h-grid.

    ``random_in_cell`` uses the counter-based Philox generator so layouts are
    reproducible bitwise across platforms for a fixed seed.
    """

    placement: str = "cell_center"
    seed: int = 0
    d: float | None = None  # recorded particle/grid spacing ratio h/sigma

    def __post_init__(self):
        if self.placement not in ("cell_center", "random_in_cell"):
            raise ConfigurationError(f"unknown placement {self.placement!r}")


@dataclass(frozen=True)
class ScenarioField:
    """Analytic velocity field with optional exact trajectory map and solution."""

    velocity: object  # (points, t) -> (N, D)
    exact_trajectory: object = None  # (points, tau, t) -> (N, D)
    exact_solution: object = None  # (points, t) -> values
    viscosity: float = 0.0


@dataclass
class ParticleField:
    positions: np.ndarray  # (N, D)
    weights: np.ndarray  # (N,)
    values: np.ndarray  # (N,) or (N, k)
    h: float
    tracking_box: CartesianGrid
    born_positions: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=float)
        self.weights = np.asarray(self.weights, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.born_positions is None:
            self.born_positions = self.positions.copy()

    @property
    def count(self) -> int:
        return self.positions.shape[0]

    @property
    def dim(self) -> int:
        return self.positions.shape[1]

    def copy(self) -> "ParticleField":
        return ParticleField(
            self.positions.copy(), self.weights.copy(), self.values.copy(),
            self.h, self.tracking_box, self.born_positions.copy(),
        )


def init_particles(box: CartesianGrid, h: float, layout: ParticleLayout, initial_data) -> ParticleField:
    """One particle per cell of the h-grid covering ``box``, weight h^D.

    ``initial_data(points) -> values`` is sampled at the birth positions;
    pass a quasi-interpolant of the initial data for the L^p-initialisation
    variant.
    """
    hgrid = grid_from_spacing(box.lo, box.hi, h, periodic=box.periodic)
    centers = hgrid.cell_centers()
    if layout.placement == "cell_center":
        positions = centers
    else:
        rng = np.random.Generator(np.random.Philox(key=layout.seed))
        jitter = rng.uniform(-0.5, 0.5, size=centers.shape)
        positions = centers + jitter * hgrid.widths[None, :]
    n = positions.shape[0]
    weights = np.full(n, hgrid.cell_volume)
    values = np.asarray(initial_data(positions), dtype=float)
    if values.shape[0] != n:
        raise ConfigurationError("initial_data must return one value per particle")
    return ParticleField(positions, weights, values, float(h), hgrid)


def advect(
    field_: ParticleField,
    velocity,
    integrator: TimeIntegrator,
    t0: float,
    t1: float,
    value_rhs=None,
) -> ParticleField:
    """Transport particles from t0 to t1 with the given explicit RK scheme.

    ``velocity(points, t)`` is evaluated at unwrapped stage positions
    (periodic extension is the callee's business); completed steps wrap
    positions back into the tracking box on periodic axes.  Without
    ``value_rhs`` the carried values are returned untouched (same array
    contents, bitwise); with it, ``value_rhs(points, values, t)`` is
    integrated alongside the positions.
    """
    if t1 < t0:
        raise ConfigurationError("t1 must be >= t0")
    tableau = integrator.tableau
    box = field_.tracking_box
    out = field_.copy()
    if t1 == t0:
        return out
    nsteps = max(1, int(round((t1 - t0) / integrator.dt)))
    dt = (t1 - t0) / nsteps

    pos = out.positions
    vals = out.values
    t = t0
    for _ in range(nsteps):
        if value_rhs is None:
            def rhs(tt, state):
                return (velocity(state[0], tt),)

            (pos,) = rk_step(tableau, rhs, t, (pos,), dt)
        else:
            def rhs(tt, state):
                return (velocity(state[0], tt), value_rhs(state[0], state[1], tt))

            pos, vals = rk_step(tableau, rhs, t, (pos, vals), dt)
        t += dt
        pos = box.wrap(pos)
        inside = box.contains(pos)
        if not inside.all():
            bad = int(np.flatnonzero(~inside)[0])
            raise DomainError(
                f"particle {bad} left the tracking box at t={t:.6g}; "
                "enlarge the tracking domain"
            )
    out.positions = pos
    if value_rhs is not None:
        out.values = vals
    return out


def check_trajectory_consistency(scenario: ScenarioField, points, tau=0.0, dt=1e-4) -> float:
    """Max defect between the velocity and the finite-differenced trajectory map."""
    if scenario.exact_trajectory is None:
        raise ConfigurationError("scenario has no exact trajectory")
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    ahead = scenario.exact_trajectory(pts, tau, tau + dt)
    behind = scenario.exact_trajectory(pts, tau, tau - dt)
    fd = (ahead - behind) / (2 * dt)
    return float(np.abs(fd - scenario.velocity(pts, tau)).max())


# -- snapshot files -------------------------------------------------------------------


def save_particles(field_: ParticleField, path) -> None:
    """Columnar CSV snapshot: id, x..., w, u... with a version-tagged header."""
    d = field_.dim
    vals = field_.values if field_.values.ndim > 1 else field_.values[:, None]
    cols = ["id"] + [f"x{k}" for k in range(d)] + ["w"] + [f"u{k}" for k in range(vals.shape[1])]
    data = np.column_stack([np.arange(field_.count), field_.positions, field_.weights, vals])
    box = field_.tracking_box
    meta = {
        "h": field_.h,
        "lo": list(box.lo),
        "hi": list(box.hi),
        "cells": list(box.cells_per_axis),
        "periodic": [bool(p) for p in box.periodic],
    }
    header = "\n".join([SNAPSHOT_TAG, json.dumps(meta), ",".join(cols)])
    np.savetxt(path, data, delimiter=",", header=header, comments="# ", fmt="%.17g")


def load_particles(path) -> ParticleField:
    with open(path) as fh:
        tag = fh.readline().strip().lstrip("# ")
        if tag != SNAPSHOT_TAG:
            raise ConfigurationError(f"not a particle snapshot (tag {tag!r})")
        meta = json.loads(fh.readline().strip().lstrip("# "))
    lo, hi, cells = meta["lo"], meta["hi"], meta["cells"]
    periodic = [bool(v) for v in meta["periodic"]]
    h = float(meta["h"])
    data = np.loadtxt(path, delimiter=",", skiprows=3, ndmin=2)
    d = len(lo)
    positions = data[:, 1 : 1 + d]
    weights = data[:, 1 + d]
    values = data[:, 2 + d :]
    if values.shape[1] == 1:
        values = values[:, 0]
    box = CartesianGrid(tuple(lo), tuple(hi), tuple(cells), tuple(periodic))
    return ParticleField(positions, weights, values, h, box)
