"""Periodic Poisson solves and stream-function velocities for the
vorticity-form Navier-Stokes drivers.

The vorticity lives in a spline space of order n; the stream function is the
Galerkin solution of -Delta psi = omega in the order n+2 space on the same
grid.  The velocity is the rotated gradient of psi in 2D and the curl of the
component-wise stream function in 3D, hence pointwise divergence-free by
construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import ConfigurationError, UsageError
from .projection import CgConfig, conjugate_gradient
from .splines import SplineFunction, SplineSpace, _axis_gauss

__all__ = [
    "PoissonProblem",
    "VelocityState",
    "mass_matrix",
    "stiffness_matrix",
    "cross_mass_matrix",
    "solve_poisson",
    "velocity_2d",
    "velocity_3d",
    "viscous_rhs",
    "stretching_rhs",
]


def _axis_pair_matrices(ax, q: int, deriv: int = 0):
    pts, wts = _axis_gauss(ax.lo, ax.hi, ax.cells, q)
    return ax.sample_matrix(pts, deriv=deriv), wts


def mass_matrix(space: SplineSpace, q: int | None = None) -> sp.csr_matrix:
    q = q or space.order
    m = None
    for ax in space.axes:
        s, w = _axis_pair_matrices(ax, q)
        m1 = (s.T @ sp.diags(w) @ s).tocsr()
        m1 = (m1 + m1.T) * 0.5
        m = m1 if m is None else sp.kron(m, m1, format="csr")
    return m


def stiffness_matrix(space: SplineSpace, q: int | None = None) -> sp.csr_matrix:
    """Galerkin stiffness sum_k kron(M, ..., K_k, ..., M) with 1D mass M and
    1D stiffness K = int phi' phi'."""
    q = q or space.order
    masses, stiffs = [], []
    for ax in space.axes:
        s0, w = _axis_pair_matrices(ax, q)
        s1, _ = _axis_pair_matrices(ax, q, deriv=1)
        m1 = (s0.T @ sp.diags(w) @ s0).tocsr()
        k1 = (s1.T @ sp.diags(w) @ s1).tocsr()
        masses.append((m1 + m1.T) * 0.5)
        stiffs.append((k1 + k1.T) * 0.5)
    total = None
    for k in range(space.dim):
        term = None
        for j in range(space.dim):
            f = stiffs[j] if j == k else masses[j]
            term = f if term is None else sp.kron(term, f, format="csr")
        total = term if total is None else total + term
    return total.tocsr()


def cross_mass_matrix(test_space: SplineSpace, trial_space: SplineSpace, q: int | None = None) -> sp.csr_matrix:
    """Rectangular pairing int phi_i^test phi_j^trial over the shared grid."""
    if test_space.grid != trial_space.grid:
        raise ConfigurationError("cross mass requires both spaces on the same grid")
    q = q or max(test_space.order, trial_space.order) + 1
    m = None
    for ax_t, ax_u in zip(test_space.axes, trial_space.axes):
        st, w = _axis_pair_matrices(ax_t, q)
        su, _ = _axis_pair_matrices(ax_u, q)
        m1 = (st.T @ sp.diags(w) @ su).tocsr()
        m = m1 if m is None else sp.kron(m, m1, format="csr")
    return m


@dataclass(frozen=True)
class PoissonProblem:
    """-Delta psi = rhs in ``space`` (order n+2 relative to the vorticity)."""

    space: SplineSpace
    rhs: SplineFunction
    mean_zero: bool = True


class _DeflatedOperator:
    """Stiffness matrix with the constant mode projected out of the output."""

    def __init__(self, matrix: sp.csr_matrix):
        self._matrix = matrix
        self._diag = np.asarray(matrix.diagonal())

    def matvec(self, x):
        y = self._matrix @ x
        return y - y.mean(axis=0)

    def diagonal(self):
        return self._diag


def solve_poisson(
    problem: PoissonProblem,
    config: CgConfig = CgConfig(),
    stiffness: sp.csr_matrix | None = None,
    cross_mass: sp.csr_matrix | None = None,
    x0: np.ndarray | None = None,
):
    """Galerkin solve of -Delta psi = rhs with periodic boundary conditions.

    Returns (psi, report).  Vector right-hand sides (stacked coefficient
    columns) are solved component-wise in one CG call.  Pass pre-assembled
    ``stiffness``/``cross_mass`` matrices to amortise assembly across steps
    and ``x0`` for warm starts.
    """
    space = problem.space
    if not all(space.grid.periodic):
        raise UsageError("solve_poisson supports fully periodic boxes only")
    k = stiffness if stiffness is not None else stiffness_matrix(space)
    c = cross_mass if cross_mass is not None else cross_mass_matrix(space, problem.rhs.space)
    b = np.asarray(c @ problem.rhs.coeffs)

    # constants span the stiffness nullspace: the rhs must be mean-free
    total = np.atleast_1d(b.sum(axis=0))
    scale = max(float(np.abs(b).sum()), 1e-30)
    if np.any(np.abs(total) / scale > 1e-10):
        raise ConfigurationError(
            "Poisson right-hand side does not integrate to zero on a "
            f"fully periodic box (relative defect {np.abs(total).max() / scale:.3e})"
        )
    b = b - b.mean(axis=0)
    coeffs, report = conjugate_gradient(_DeflatedOperator(k), b, config, x0=x0)
    if problem.mean_zero:
        coeffs = coeffs - coeffs.mean(axis=0)
    return SplineFunction(space, coeffs), report


class VelocityState:
    """Divergence-free velocity derived from a stream function.

    2D: u = (d psi/dy, -d psi/dx); 3D: u = curl psi applied component-wise to
    the three stacked coefficient columns of psi.
    """

    def __init__(self, psi: SplineFunction):
        space = psi.space
        dim = space.dim
        coeffs = psi.coeffs
        if dim == 2 and coeffs.ndim != 1:
            raise UsageError("2D stream function must be scalar")
        if dim == 3 and (coeffs.ndim != 2 or coeffs.shape[1] != 3):
            raise UsageError("3D stream function must carry three components")
        if dim == 1:
            raise UsageError("stream-function velocities need 2 or 3 dimensions")
        self.psi = psi
        self.space = space
        self.dim = dim

    _FIRST_2D = [(1, 0), (0, 1)]
    _SECOND_2D = [(2, 0), (1, 1), (0, 2)]
    _FIRST_3D = [(1, 0, 0), (0, 1, 0), (0, 0, 1)]
    _SECOND_3D = [(2, 0, 0), (0, 2, 0), (0, 0, 2), (1, 1, 0), (1, 0, 1), (0, 1, 1)]

    def __call__(self, points, t=None) -> np.ndarray:
        """Velocity at scattered points, shape (N, dim); t accepted and
        ignored so the accessor plugs into the advection signature."""
        alphas = self._FIRST_2D if self.dim == 2 else self._FIRST_3D
        return self._velocity_from(self.space.eval_many(self.psi.coeffs, points, alphas))

    def gradient(self, points) -> np.ndarray:
        """Velocity gradient G[m, i, j] = d u_i / d x_j at each point."""
        alphas = self._SECOND_2D if self.dim == 2 else self._SECOND_3D
        return self._gradient_from(self.space.eval_many(self.psi.coeffs, points, alphas))

    def velocity_and_gradient(self, points):
        """Velocity and its gradient from a single evaluation pass."""
        if self.dim == 2:
            d = self.space.eval_many(self.psi.coeffs, points, self._FIRST_2D + self._SECOND_2D)
        else:
            d = self.space.eval_many(self.psi.coeffs, points, self._FIRST_3D + self._SECOND_3D)
        return self._velocity_from(d[: self.dim]), self._gradient_from(d[self.dim :])

    def _velocity_from(self, d):
        if self.dim == 2:
            dx, dy = d
            return np.stack([dy, -dx], axis=-1)
        # u = curl psi: u_i = eps_ijk d_j psi_k
        u0 = d[1][:, 2] - d[2][:, 1]
        u1 = d[2][:, 0] - d[0][:, 2]
        u2 = d[0][:, 1] - d[1][:, 0]
        return np.stack([u0, u1, u2], axis=-1)

    def _gradient_from(self, d):
        if self.dim == 2:
            dxx, dxy, dyy = d
            g = np.empty((len(dxx), 2, 2))
            g[:, 0, 0] = dxy
            g[:, 0, 1] = dyy
            g[:, 1, 0] = -dxx
            g[:, 1, 1] = -dxy
            return g
        dxx, dyy, dzz, dxy, dxz, dyz = d
        second = {
            (0, 0): dxx, (1, 1): dyy, (2, 2): dzz,
            (0, 1): dxy, (1, 0): dxy,
            (0, 2): dxz, (2, 0): dxz,
            (1, 2): dyz, (2, 1): dyz,
        }
        n = dxx.shape[0]
        g = np.empty((n, 3, 3))
        eps = {(0, 1, 2): 1, (1, 2, 0): 1, (2, 0, 1): 1, (0, 2, 1): -1, (2, 1, 0): -1, (1, 0, 2): -1}
        for i in range(3):
            for j in range(3):
                acc = np.zeros(n)
                for (a, bb, cc), sign in eps.items():
                    if a == i:
                        acc += sign * second[(bb, j)][:, cc]
                g[:, i, j] = acc
        return g

    def divergence(self, points) -> np.ndarray:
        g = self.gradient(points)
        return np.trace(g, axis1=1, axis2=2)

    def curl(self, points) -> np.ndarray:
        """Vorticity omega = curl u (3D only; in 2D the scalar curl)."""
        g = self.gradient(points)
        if self.dim == 2:
            return g[:, 1, 0] - g[:, 0, 1]
        return np.stack(
            [
                g[:, 2, 1] - g[:, 1, 2],
                g[:, 0, 2] - g[:, 2, 0],
                g[:, 1, 0] - g[:, 0, 1],
            ],
            axis=-1,
        )

    def eval_tensor(self, axis_points) -> np.ndarray:
        """Velocity on a tensor grid (fast path for error norms)."""
        space = self.space
        c = self.psi.coeffs
        if self.dim == 2:
            dx = space.eval_tensor(c, axis_points, alpha=(1, 0))
            dy = space.eval_tensor(c, axis_points, alpha=(0, 1))
            return np.stack([dy, -dx], axis=-1)
        d = [space.eval_tensor(c, axis_points, alpha=tuple(int(i == k) for i in range(3)))
             for k in range(3)]
        u0 = d[1][..., 2] - d[2][..., 1]
        u1 = d[2][..., 0] - d[0][..., 2]
        u2 = d[0][..., 1] - d[1][..., 0]
        return np.stack([u0, u1, u2], axis=-1)


def velocity_2d(psi: SplineFunction) -> VelocityState:
    if psi.space.dim != 2:
        raise UsageError("velocity_2d expects a 2D stream function")
    return VelocityState(psi)


def velocity_3d(psi: SplineFunction) -> VelocityState:
    if psi.space.dim != 3:
        raise UsageError("velocity_3d expects a 3D stream function")
    return VelocityState(psi)


def viscous_rhs(omega: SplineFunction, positions, nu: float) -> np.ndarray:
    """Per-particle viscous value derivative nu * Laplacian(omega)(x_i)."""
    if nu == 0.0:
        pts = np.atleast_2d(np.asarray(positions, dtype=float))
        shape = (pts.shape[0],) + omega.coeffs.shape[1:]
        return np.zeros(shape)
    return nu * omega.laplacian(positions)


def stretching_rhs(velocity: VelocityState, positions, gradient=None) -> np.ndarray:
    """Vortex stretching (grad u) . omega at each particle, omega = curl u.

    Pass a precomputed ``gradient`` to reuse an existing evaluation; the
    vorticity is read off the same gradient tensor.
    """
    if velocity.dim != 3:
        raise UsageError("vortex stretching exists only in 3D")
    g = velocity.gradient(positions) if gradient is None else gradient
    w = np.stack(
        [g[:, 2, 1] - g[:, 1, 2], g[:, 0, 2] - g[:, 2, 0], g[:, 1, 0] - g[:, 0, 1]],
        axis=-1,
    )
    return np.einsum("mij,mj->mi", g, w)
