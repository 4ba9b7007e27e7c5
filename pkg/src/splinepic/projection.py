"""Projection of particle fields onto spline spaces.

The particle field is read as a quadrature rule: sampling the basis at the
particle positions gives the matrix B and the quadrature-sampled mass
operator A_h = B^T diag(w) B.  Projection solves A_h c = B^T (w * u) by
preconditioned conjugate gradients; the same machinery yields the discrete
blob function zeta(., y) = A_h^{-1} delta_y whose moments and spatial decay
are the method's key diagnostics.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import ConfigurationError, ConvergenceFailure, StabilityViolation, UsageError
from .particles import ParticleField
from .splines import SplineFunction, SplineSpace, _axis_gauss

__all__ = [
    "CgConfig",
    "DiscreteOperator",
    "assemble_exact",
    "assemble_sampled",
    "particle_rhs",
    "delta_rhs",
    "conjugate_gradient",
    "mass_preconditioner",
    "project_particles",
    "blob_function",
    "moment_defect",
    "indicator_rhs",
    "decay_profile",
    "tail_norms",
]


@dataclass(frozen=True)
class CgConfig:
    rel_tolerance: float = 1e-10
    max_iterations: int = 500
    preconditioner: str = "jacobi"

    def __post_init__(self):
        if self.preconditioner not in ("jacobi", "none"):
            raise ConfigurationError(f"unknown preconditioner {self.preconditioner!r}")
        if self.rel_tolerance <= 0 or self.max_iterations < 1:
            raise ConfigurationError("rel_tolerance must be positive, max_iterations >= 1")


class DiscreteOperator:
    """Symmetric positive (semi-)definite operator on spline coefficients.

    ``kind`` is either ``exact_mass`` (Galerkin Gram matrix, stored sparse)
    or ``sampled_mass`` (A_h applied matrix-free through the particle sample
    matrix B and the weights w; the explicit sparse matrix is only formed on
    demand for diagnostics).
    """

    def __init__(self, space: SplineSpace, kind: str, matrix=None, sample=None, weights=None):
        if kind not in ("exact_mass", "sampled_mass"):
            raise ConfigurationError(f"unknown operator kind {kind!r}")
        self.space = space
        self.kind = kind
        self._matrix = matrix.tocsr() if matrix is not None else None
        self._sample = sample
        self._weights = weights
        self._diag = None

    @property
    def shape(self):
        n = self.space.dof_count
        return (n, n)

    def matvec(self, x: np.ndarray) -> np.ndarray:
        if self._matrix is not None:
            return self._matrix @ x
        return self._sample.T @ (self._weights[:, None] * (self._sample @ x) if x.ndim > 1
                                 else self._weights * (self._sample @ x))

    __call__ = matvec

    def diagonal(self) -> np.ndarray:
        if self._diag is None:
            if self._matrix is not None:
                self._diag = np.asarray(self._matrix.diagonal())
            else:
                b2 = self._sample.multiply(self._sample)
                self._diag = np.asarray(b2.T @ self._weights).ravel()
        return self._diag

    def matrix(self) -> sp.csr_matrix:
        """Explicit sparse matrix, symmetrised to remove round-off skew."""
        if self._matrix is None:
            m = (self._sample.T @ sp.diags(self._weights) @ self._sample).tocsr()
            self._matrix = (m + m.T) * 0.5
        return self._matrix

    def dump(self, path) -> None:
        """Write the matrix in coordinate text format: i j value per line."""
        coo = self.matrix().tocoo()
        with open(path, "w") as fh:
            fh.write(f"# {self.kind} {coo.shape[0]} {coo.shape[1]} {coo.nnz}\n")
            for i, j, v in zip(coo.row, coo.col, coo.data):
                fh.write(f"{i} {j} {v:.17g}\n")


def _axis_quadrature_matrices(space: SplineSpace, q: int):
    """Per-axis (sample matrix, weights) at q-point Gauss rules on every cell."""
    out = []
    for ax in space.axes:
        pts, wts = _axis_gauss(ax.lo, ax.hi, ax.cells, q)
        out.append((ax.sample_matrix(pts), wts))
    return out


def assemble_exact(space: SplineSpace, q: int | None = None) -> DiscreteOperator:
    """Exact Gram matrix of the spline basis, as a Kronecker product of 1D
    mass matrices integrated by Gauss quadrature of sufficient order."""
    q = q or space.order
    mats = []
    for s, w in _axis_quadrature_matrices(space, q):
        m1 = (s.T @ sp.diags(w) @ s).tocsr()
        mats.append((m1 + m1.T) * 0.5)
    m = mats[0]
    for m1 in mats[1:]:
        m = sp.kron(m, m1, format="csr")
    return DiscreteOperator(space, "exact_mass", matrix=m)


def assemble_sampled(
    space: SplineSpace, particles: ParticleField, restrict: bool = False
) -> DiscreteOperator:
    """Quadrature-sampled mass operator A_h = B^T diag(w) B.

    With ``restrict`` the rule keeps only particles currently inside the
    spline space's box: the two-box pattern where particles are tracked on a
    larger domain but only the window over the assembly box contributes.
    """
    pos, w, _ = _restricted(space, particles, restrict)
    sample = space.value_matrix(pos)
    return DiscreteOperator(space, "sampled_mass", sample=sample, weights=w)


def _restricted(space: SplineSpace, particles: ParticleField, restrict: bool):
    pos, w, u = particles.positions, particles.weights, particles.values
    if restrict:
        grid = space.grid
        lo = np.asarray(grid.lo)
        hi = np.asarray(grid.hi)
        keep = np.all((pos >= lo) & (pos <= hi), axis=1)
        pos, w, u = pos[keep], w[keep], u[keep]
    else:
        space.grid.require_inside(space.grid.wrap(pos))
    return pos, w, u


def particle_rhs(space: SplineSpace, particles: ParticleField, restrict: bool = False) -> np.ndarray:
    """Moment vector b_j = sum_i w_i u_i phi_j(x_i)."""
    pos, w, u = _restricted(space, particles, restrict)
    sample = space.value_matrix(pos)
    if u.ndim > 1:
        return np.asarray(sample.T @ (w[:, None] * u))
    return np.asarray(sample.T @ (w * u))


def delta_rhs(space: SplineSpace, y) -> np.ndarray:
    """Point-evaluation functional (delta_y, phi_j) = phi_j(y)."""
    y = np.atleast_2d(np.asarray(y, dtype=float))
    dense = np.asarray(space.value_matrix(y).todense())
    return dense.ravel() if y.shape[0] == 1 else dense.T


def mass_preconditioner(space: SplineSpace):
    """Inverse of the exact Gram matrix, applied through its Kronecker factors.

    The sampled mass operator is a small relative perturbation of the exact
    one, so this callable makes CG on A_h converge in a few iterations.  Pass
    it as the ``precond`` argument of :func:`conjugate_gradient`.
    """
    inverses = []
    for mat, wts in _axis_quadrature_matrices(space, space.order + 1):
        mass = (mat.T.multiply(wts) @ mat).toarray()
        inverses.append(np.linalg.inv(0.5 * (mass + mass.T)))
    shape = space.dof_shape

    def apply(r):
        work = r.reshape(shape + (r.shape[1],))
        for k, inv in enumerate(inverses):
            work = np.moveaxis(np.tensordot(inv, np.moveaxis(work, k, 0), axes=(1, 0)), 0, k)
        return work.reshape(-1, r.shape[1])

    return apply


def conjugate_gradient(
    operator,
    rhs: np.ndarray,
    config: CgConfig = CgConfig(),
    x0: np.ndarray | None = None,
    diagonal: np.ndarray | None = None,
    precond=None,
):
    """Preconditioned CG for one or several right-hand sides (columns).

    Returns (solution, report).  The report is JSON-serialisable and records
    the iteration count and the worst-column relative residual history.
    Raises StabilityViolation on negative curvature (operator not SPD) and
    ConvergenceFailure when the iteration budget runs out.  ``precond``
    overrides the config preconditioner with an explicit callable.
    """
    b = np.asarray(rhs, dtype=float)
    single = b.ndim == 1
    if single:
        b = b[:, None]
    precond_name = "custom" if precond is not None else config.preconditioner
    if precond is not None:
        pass
    elif config.preconditioner == "jacobi":
        diag = diagonal if diagonal is not None else operator.diagonal()
        if np.any(diag <= 0):
            raise StabilityViolation("operator has non-positive diagonal entries")
        inv_diag = 1.0 / diag
        precond = lambda r: inv_diag[:, None] * r
    else:
        precond = lambda r: r

    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float, copy=True)
    if x.ndim == 1:
        x = x[:, None]
    norm_b = np.linalg.norm(b, axis=0)
    scale = np.where(norm_b > 0, norm_b, 1.0)

    r = b - operator.matvec(x)
    z = precond(r)
    p = z.copy()
    rz = np.einsum("ij,ij->j", r, z)
    history = [float((np.linalg.norm(r, axis=0) / scale).max())]
    if history[0] <= config.rel_tolerance:
        report = {"iterations": 0, "converged": True, "relative_residuals": history,
                  "preconditioner": precond_name, "rhs_count": b.shape[1]}
        return (x[:, 0] if single else x), report

    for it in range(1, config.max_iterations + 1):
        ap = operator.matvec(p)
        pap = np.einsum("ij,ij->j", p, ap)
        active = np.linalg.norm(r, axis=0) / scale > config.rel_tolerance
        if np.any(pap[active] <= 0):
            raise StabilityViolation(
                "negative curvature in CG: the sampled mass operator is not "
                "positive definite (particle spacing ratio d too close to 1?)"
            )
        alpha = np.where(pap > 0, rz / np.where(pap > 0, pap, 1.0), 0.0)
        x += alpha * p
        r -= alpha * ap
        rel = np.linalg.norm(r, axis=0) / scale
        history.append(float(rel.max()))
        if history[-1] <= config.rel_tolerance:
            report = {"iterations": it, "converged": True, "relative_residuals": history,
                      "preconditioner": precond_name, "rhs_count": b.shape[1]}
            return (x[:, 0] if single else x), report
        z = precond(r)
        rz_new = np.einsum("ij,ij->j", r, z)
        beta = np.where(rz > 0, rz_new / np.where(rz > 0, rz, 1.0), 0.0)
        p = z + beta * p
        rz = rz_new
    raise ConvergenceFailure(
        f"CG did not reach rel_tolerance={config.rel_tolerance} within "
        f"{config.max_iterations} iterations (last residual {history[-1]:.3e})",
        residuals=history,
    )


def project_particles(
    space: SplineSpace,
    particles: ParticleField,
    config: CgConfig = CgConfig(),
    restrict: bool = False,
    operator: DiscreteOperator | None = None,
    x0: np.ndarray | None = None,
):
    """Project the particle field onto the spline space: A_h c = B^T(w*u).

    Returns (SplineFunction, solve report).  Pass a pre-assembled operator
    to amortise the sampling across several projections from the same
    particle positions, and x0 to warm-start the CG iteration.
    """
    op = operator if operator is not None else assemble_sampled(space, particles, restrict)
    rhs = particle_rhs(space, particles, restrict)
    coeffs, report = conjugate_gradient(op, rhs, config, x0=x0)
    return SplineFunction(space, coeffs), report


def blob_function(
    space: SplineSpace,
    particles: ParticleField,
    y,
    config: CgConfig = CgConfig(),
    operator: DiscreteOperator | None = None,
):
    """Discrete blob zeta(., y) = A_h^{-1} delta_y as a spline function."""
    op = operator if operator is not None else assemble_sampled(space, particles)
    coeffs, report = conjugate_gradient(op, delta_rhs(space, y), config)
    return SplineFunction(space, coeffs), report


def moment_defect(space: SplineSpace, particles: ParticleField, blob: SplineFunction, y) -> np.ndarray:
    """Defect of the discrete moment conditions sum_i w_i zeta(x_i, y) x_i^a = y^a
    for all multi-indices with |a| < order; returned in graded order."""
    y = np.asarray(y, dtype=float).ravel()
    vals = blob(particles.positions)
    w = particles.weights
    defects = []
    for alpha in _multi_indices(space.grid.dim, space.order - 1):
        mono = np.prod(particles.positions ** np.asarray(alpha), axis=1)
        defects.append(float(np.sum(w * vals * mono) - np.prod(y ** np.asarray(alpha))))
    return np.asarray(defects)


def _multi_indices(dim: int, max_total: int):
    if dim == 1:
        return [(a,) for a in range(max_total + 1)]
    out = []
    for total in range(max_total + 1):
        if dim == 2:
            out.extend((a, total - a) for a in range(total + 1))
        else:
            for a in range(total + 1):
                out.extend((a, b, total - a - b) for b in range(total - a + 1))
    return out


def indicator_rhs(space: SplineSpace, cell, q: int | None = None) -> np.ndarray:
    """Load vector of the indicator of a single grid cell, f_j = 1 on Q_j,
    integrated cell-locally by Gauss quadrature."""
    grid = space.grid
    cell = tuple(int(c) for c in np.atleast_1d(cell))
    if len(cell) != grid.dim:
        raise UsageError(f"cell index must have {grid.dim} components")
    q = q or space.order
    pts_1d, wts_1d = [], []
    for k in range(grid.dim):
        nodes = grid.axis_nodes(k)
        gx, gw = np.polynomial.legendre.leggauss(q)
        a, b = nodes[cell[k]], nodes[cell[k] + 1]
        pts_1d.append(0.5 * (a + b) + 0.5 * (b - a) * gx)
        wts_1d.append(0.5 * (b - a) * gw)
    mesh = np.meshgrid(*pts_1d, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=-1)
    w = wts_1d[0]
    for wk in wts_1d[1:]:
        w = np.multiply.outer(w, wk)
    return np.asarray(space.value_matrix(pts).T @ w.ravel())


def decay_profile(
    space: SplineSpace,
    particles: ParticleField,
    cell,
    config: CgConfig = CgConfig(),
    operator: DiscreteOperator | None = None,
):
    """Spatial decay of A_h^{-1} applied to a single-cell indicator load.

    Solves A_h c = f_j for f_j the indicator of cell j and returns
    (distances, norms, rho) where norms[k] is the L2 norm of the solution
    over the cells at Chebyshev distance >= k from the source cell
    (norms[0] is the global norm) and rho is the fitted geometric per-ring
    decay factor.
    """
    op = operator if operator is not None else assemble_sampled(space, particles)
    rhs = indicator_rhs(space, cell)
    coeffs, _ = conjugate_gradient(op, rhs, config)
    return tail_norms(SplineFunction(space, coeffs), cell)


def tail_norms(func: SplineFunction, cell, q: int | None = None):
    """L2 norms of a spline over the complements of growing Chebyshev-cell
    neighbourhoods of a source cell, plus the fitted geometric decay factor."""
    space = func.space
    grid = space.grid
    q = q or space.order
    dim = grid.dim
    cells = grid.cells_per_axis
    yc = tuple(int(c) for c in np.atleast_1d(cell))

    # energy of each cell, computed on a per-axis Gauss tensor rule
    axis_pts, axis_wts = [], []
    for k in range(dim):
        pts, wts = _axis_gauss(grid.lo[k], grid.hi[k], cells[k], q)
        axis_pts.append(pts)
        axis_wts.append(wts)
    vals = space.eval_tensor(func.coeffs, axis_pts)
    wgrid = axis_wts[0]
    for wk in axis_wts[1:]:
        wgrid = np.multiply.outer(wgrid, wk)
    energy = (vals**2 * wgrid).reshape(*(c * q for c in cells))
    cell_energy = energy
    for k in range(dim):
        cell_energy = cell_energy.reshape(
            cell_energy.shape[:k] + (cells[k], q) + cell_energy.shape[k + 1 :]
        ).sum(axis=k + 1)

    # Chebyshev distance of every cell to the cell containing y
    dist = np.zeros(cells, dtype=int)
    for k in range(dim):
        d1 = np.abs(np.arange(cells[k]) - yc[k])
        if grid.periodic[k]:
            d1 = np.minimum(d1, cells[k] - d1)
        shape = [1] * dim
        shape[k] = cells[k]
        dist = np.maximum(dist, d1.reshape(shape))

    dmax = int(dist.max())
    ring_energy = np.bincount(dist.ravel(), weights=cell_energy.ravel(), minlength=dmax + 1)
    # norms[k] = L2 norm over all cells at Chebyshev distance >= k; norms[0]
    # is the global norm (empty neighbourhood).
    norms = np.sqrt(np.maximum(ring_energy[::-1].cumsum()[::-1], 0.0))

    # geometric decay factor from successive tail ratios over the clean range
    ratios = []
    for k in range(len(norms) - 1):
        if norms[k] > 1e-14 and norms[k + 1] > 1e-15:
            ratios.append(norms[k + 1] / norms[k])
    rho = float(np.exp(np.mean(np.log(ratios)))) if ratios else 0.0
    return np.arange(len(norms)), norms, rho
