"""Benchmark scenario definitions and analytic reference fields."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigurationError
from ..grid import CartesianGrid, grid_from_spacing

__all__ = [
    "Scenario",
    "zalesak_initial_data",
    "zalesak_velocity",
    "disc_vorticity",
    "disc_velocity",
    "rotating_bump",
    "ns2d_exact_velocity",
    "ns2d_vorticity",
    "abc_velocity",
    "abc_exact_velocity",
]


@dataclass(frozen=True)
class Scenario:
    """One benchmark configuration: spaces, particle layout and time stepping."""

    name: str
    domain: CartesianGrid  # assembly box Omega at spacing sigma
    tracking: CartesianGrid  # tracking box Xi at spacing h = d * sigma
    sigma: float
    d: float
    order: int
    scheme: str
    dt: float
    t_final: float
    mode: str  # advection | levelset | ns2d | ns3d
    initial_data: object = None
    exact_solution: object = None
    viscosity: float = 0.0

    def __post_init__(self):
        if self.mode not in ("advection", "levelset", "ns2d", "ns3d"):
            raise ConfigurationError(f"unknown mode {self.mode!r}")
        h = self.d * self.sigma
        widths = self.tracking.widths
        if not np.allclose(widths, h, rtol=1e-9):
            raise ConfigurationError(
                f"tracking grid spacing {widths} does not equal h = d*sigma = {h}"
            )
        # Omega cell boundaries must fall on Xi cell boundaries
        for k in range(self.domain.dim):
            for edge in (self.domain.lo[k], self.domain.hi[k]):
                offset = (edge - self.tracking.lo[k]) / h
                if abs(offset - round(offset)) > 1e-9 * max(1.0, abs(offset)):
                    raise ConfigurationError(
                        f"domain edge {edge} on axis {k} does not align with the tracking cells"
                    )

    @property
    def h(self) -> float:
        return self.d * self.sigma


def make_scenario(name, lo, hi, xi_lo, xi_hi, sigma, d, order, scheme, dt, t_final,
                  mode, periodic=False, **kwargs) -> Scenario:
    dim = len(lo)
    per = (periodic,) * dim if isinstance(periodic, bool) else tuple(periodic)
    domain = grid_from_spacing(lo, hi, sigma, periodic=per)
    tracking = grid_from_spacing(xi_lo, xi_hi, d * sigma,
                                 periodic=per if (tuple(lo), tuple(hi)) == (tuple(xi_lo), tuple(xi_hi))
                                 else (False,) * dim)
    return Scenario(name, domain, tracking, sigma, d, order, scheme, dt, t_final, mode, **kwargs)


# -- Zalesak's disk -------------------------------------------------------------------


def zalesak_initial_data(points) -> np.ndarray:
    """Signed distance to the slitted disk, positive inside the disk body.

    Faithful port of the reference branch structure: a disk of radius
    R = 0.15 centred at B = (0, 0.25) with a slot of half-width 0.025
    reaching up to y = 0.35; E and F are the bottom corners of the slot,
    phi the half-opening angle of the cone the slot subtends from B.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    out = np.empty(pts.shape[0])
    a = np.array([0.0, 0.0])
    b = np.array([0.0, 0.25])
    r = 0.15
    cx, cy = -0.025, 0.35  # slot top-left corner C; D mirrors it at +0.025
    dx_, dy_ = 0.025, 0.35
    phi = math.asin(0.025 / 0.15)
    ey = 0.25 - r * math.cos(phi)
    e = np.array([-0.025, ey])
    f = np.array([0.025, ey])

    for i, x in enumerate(pts):
        dist_b = math.hypot(x[0] - b[0], x[1] - b[1])
        in_box = (x[0] > cx) and (x[0] < dx_) and (x[1] < dy_)
        if dist_b < r:
            if in_box:
                if x[1] < f[1]:
                    out[i] = -min(_dist(x, e), _dist(x, f))
                else:
                    out[i] = -min(min(x[0] - e[0], f[0] - x[0]), cy - x[1])
            else:
                if x[1] > dy_:
                    dist = min(min(_dist(x, (cx, cy)), _dist(x, (dx_, dy_))), r - dist_b)
                    if cx < x[0] < dx_:
                        out[i] = min(dist, x[1] - cy)
                    else:
                        out[i] = dist
                else:
                    if x[0] < b[0]:
                        out[i] = min(cx - x[0], r - dist_b)
                    else:
                        out[i] = min(x[0] - dx_, r - dist_b)
        else:
            xb = x - b
            ab = a - b
            denom = dist_b * math.hypot(*ab)
            in_cone = denom > 0 and math.acos(
                min(1.0, max(-1.0, float(np.dot(xb, ab)) / denom))
            ) < phi
            if in_cone:
                out[i] = -min(_dist(x, e), _dist(x, f))
            else:
                out[i] = -(dist_b - r)
    return out


def _dist(x, p):
    return math.hypot(x[0] - p[0], x[1] - p[1])


def zalesak_velocity(points, t=0.0) -> np.ndarray:
    """Rigid rotation a(x, y) = 2*pi/628 * (-y, x), smoothly damped outside
    radius 0.75 so that no tracked particle can leave Xi = [-1, 1]^2.

    Only particles with radius below sqrt(1/2) can ever enter the assembly
    box Omega = [-1/2, 1/2]^2; the damping region is strictly outside that,
    so every observable quantity matches the undamped rotation.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    rr = np.hypot(pts[:, 0], pts[:, 1])
    s = np.clip((0.95 - rr) / 0.2, 0.0, 1.0)
    damp = s * s * (3.0 - 2.0 * s)
    return (2.0 * np.pi / 628.0) * damp[:, None] * np.stack([-pts[:, 1], pts[:, 0]], axis=-1)


# -- disc demo (steady cone vortex) ---------------------------------------------------


def disc_vorticity(points) -> np.ndarray:
    """Steady cone vorticity 100 * max(1 - 2|x|, 0)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    rr = np.linalg.norm(pts, axis=1)
    return 100.0 * np.maximum(1.0 - 2.0 * rr, 0.0)


def disc_velocity(points, t=0.0) -> np.ndarray:
    """Azimuthal velocity induced by the cone vorticity.

    u_theta(r) = (1/r) * int_0^r omega(s) s ds
               = 100 (r/2 - 2 r^2 / 3)  for r <= 1/2, else 25 / (6 r);
    returned as the Cartesian field u = u_theta(r)/r * (-y, x), whose factor
    u_theta/r = 50 - 200 r / 3 is regular at the origin.

    The swirl is smoothly damped outside radius 1.5 so particles tracked on
    Xi = (-2,2)^2 cannot leave it; particles out there can never reach
    Omega = (-1,1)^2, so the damping is unobservable.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    rr = np.linalg.norm(pts, axis=1)
    inner = 50.0 - 200.0 * rr / 3.0
    with np.errstate(divide="ignore"):
        outer = 25.0 / (6.0 * np.where(rr > 0, rr**2, 1.0))
    factor = np.where(rr <= 0.5, inner, outer)
    s = np.clip((1.9 - rr) / 0.4, 0.0, 1.0)
    factor = factor * s * s * (3.0 - 2.0 * s)
    return factor[:, None] * np.stack([-pts[:, 1], pts[:, 0]], axis=-1)


# -- rotating bump for the advection convergence study --------------------------------


def rotating_bump(center=(0.5, 0.35), width=0.30):
    """Compactly supported C^5 bump and its rigid-body rotation about (1/2, 1/2).

    Returns (initial_data, velocity, exact_solution) with one revolution per
    unit time; the exact solution rotates the initial data backwards along
    the trajectories.  The (1 - s^2)^6 profile keeps high derivatives small
    enough for the order-4 convergence regime to be visible on coarse grids.
    """
    cx, cy = center

    def initial_data(points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        r2 = ((pts[:, 0] - cx) ** 2 + (pts[:, 1] - cy) ** 2) / width**2
        vals = np.zeros(pts.shape[0])
        mask = r2 < 1.0
        vals[mask] = (1.0 - r2[mask]) ** 6
        return vals

    def velocity(points, t=0.0):
        # rigid rotation about (1/2, 1/2), smoothly damped to zero well
        # outside the bump's orbit so that no particle can leave the
        # tracking box; on the orbit itself (r < 0.75) it is exact.
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        x = pts[:, 0] - 0.5
        y = pts[:, 1] - 0.5
        rr = np.hypot(x, y)
        s = np.clip((0.95 - rr) / 0.2, 0.0, 1.0)
        damp = s * s * (3.0 - 2.0 * s)
        return 2.0 * np.pi * damp[:, None] * np.stack([-y, x], axis=-1)

    def exact_solution(points, t):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        ang = -2.0 * np.pi * t
        c, s = np.cos(ang), np.sin(ang)
        x = pts[:, 0] - 0.5
        y = pts[:, 1] - 0.5
        back = np.stack([0.5 + c * x - s * y, 0.5 + s * x + c * y], axis=-1)
        return initial_data(back)

    return initial_data, velocity, exact_solution


# -- Navier-Stokes reference solutions ------------------------------------------------


def ns2d_exact_velocity(points, t, nu=1e-5) -> np.ndarray:
    """u(x, t) = exp(-8 pi^2 nu t) (sin sin, cos cos) on the periodic unit box."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    decay = math.exp(-8.0 * math.pi**2 * nu * t)
    x, y = 2.0 * np.pi * pts[:, 0], 2.0 * np.pi * pts[:, 1]
    return decay * np.stack([np.sin(x) * np.sin(y), np.cos(x) * np.cos(y)], axis=-1)


def ns2d_exact_velocity_gradient(points, t, nu=1e-5) -> np.ndarray:
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    decay = math.exp(-8.0 * math.pi**2 * nu * t)
    x, y = 2.0 * np.pi * pts[:, 0], 2.0 * np.pi * pts[:, 1]
    g = np.empty((pts.shape[0], 2, 2))
    g[:, 0, 0] = np.cos(x) * np.sin(y)
    g[:, 0, 1] = np.sin(x) * np.cos(y)
    g[:, 1, 0] = -np.sin(x) * np.cos(y)
    g[:, 1, 1] = -np.cos(x) * np.sin(y)
    return 2.0 * np.pi * decay * g


def ns2d_vorticity(points, t=0.0, nu=1e-5) -> np.ndarray:
    """omega = curl u = -4 pi sin(2 pi x1) cos(2 pi x2), decaying like u."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    decay = math.exp(-8.0 * math.pi**2 * nu * t)
    return -4.0 * np.pi * decay * np.sin(2 * np.pi * pts[:, 0]) * np.cos(2 * np.pi * pts[:, 1])


def abc_velocity(points) -> np.ndarray:
    """Arnold-Beltrami-Childress field; Beltrami, so curl u = u."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    x, y, z = pts[:, 0], pts[:, 1], pts[:, 2]
    return np.stack(
        [np.sin(z) + np.cos(y), np.sin(x) + np.cos(z), np.sin(y) + np.cos(x)], axis=-1
    )


def abc_exact_velocity(points, t, nu=1e-3) -> np.ndarray:
    return math.exp(-nu * t) * abc_velocity(points)


def abc_exact_velocity_gradient(points, t, nu=1e-3) -> np.ndarray:
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    x, y, z = pts[:, 0], pts[:, 1], pts[:, 2]
    g = np.zeros((pts.shape[0], 3, 3))
    g[:, 0, 1] = -np.sin(y)
    g[:, 0, 2] = np.cos(z)
    g[:, 1, 0] = np.cos(x)
    g[:, 1, 2] = -np.sin(z)
    g[:, 2, 0] = -np.sin(x)
    g[:, 2, 1] = np.cos(y)
    return math.exp(-nu * t) * g
