"""Uniform tensor-product B-spline spaces on axis-aligned boxes.

Provides basis evaluation (values and derivatives), a local least-squares
quasi-interpolant, composite Gauss quadrature, and the norm/seminorm helpers
used by the assembly and benchmark code.  Spaces of order n consist of
piecewise polynomials of coordinate-wise degree n-1 with C^{n-2} smoothness.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .errors import ConfigurationError, DomainError, UsageError
from .grid import CartesianGrid

__all__ = [
    "SplineSpace",
    "SplineFunction",
    "quasi_interpolate",
    "tensor_quadrature",
    "function_norm",
    "spline_norm",
    "error_norm",
    "seminorm_w11",
    "inverse_estimate_probe",
]


class _AxisBasis:
    """Univariate B-spline basis on a uniform knot vector (clamped or periodic)."""

    def __init__(self, lo: float, hi: float, cells: int, order: int, periodic: bool):
        if order < 2:
            raise ConfigurationError("spline order must be >= 2 (continuous splines)")
        p = order - 1
        self.lo, self.hi = float(lo), float(hi)
        self.cells = int(cells)
        self.order = order
        self.degree = p
        self.periodic = bool(periodic)
        self.width = (hi - lo) / cells
        if periodic:
            self.knots = lo + self.width * np.arange(-p, cells + p + 1)
            self.ndof = cells
            self.raw_ndof = cells + p
        else:
            interior = np.linspace(lo, hi, cells + 1)
            self.knots = np.concatenate([np.full(p, lo), interior, np.full(p, hi)])
            self.ndof = cells + p
            self.raw_ndof = self.ndof

    def prepare(self, x: np.ndarray) -> np.ndarray:
        """Wrap/validate coordinates, returning values safe for span lookup."""
        x = np.asarray(x, dtype=float)
        if self.periodic:
            return self.lo + np.mod(x - self.lo, self.hi - self.lo)
        if np.any(x < self.lo - 1e-12) or np.any(x > self.hi + 1e-12):
            raise DomainError("evaluation point outside the box on a non-periodic axis")
        return np.clip(x, self.lo, self.hi)

    def spans(self, x: np.ndarray) -> np.ndarray:
        p = self.degree
        cell = np.floor((x - self.lo) / self.width).astype(np.int64)
        cell = np.clip(cell, 0, self.cells - 1)
        return cell + p

    def nonzero_basis(self, x: np.ndarray, nderiv: int = 0):
        """Nonzero basis values (and derivatives) at each point.

        Returns ``(first_raw, vals)`` where ``vals[d, m, r]`` is the d-th
        derivative of basis function ``first_raw[m] + r`` at ``x[m]`` and
        ``first_raw`` indexes raw (unwrapped) dofs.
        """
        x = self.prepare(x)
        p = self.degree
        n = self.order
        m = x.shape[0]
        t = self.knots
        i = self.spans(x)

        # Triangular table: levels[q][:, r] = N_{i-q+r, q}(x), r = 0..q.
        levels = [np.ones((m, 1))]
        left = np.zeros((m, p + 1))
        right = np.zeros((m, p + 1))
        for q in range(1, p + 1):
            left[:, q] = x - t[i + 1 - q]
            right[:, q] = t[i + q] - x
            cur = np.zeros((m, q + 1))
            saved = np.zeros(m)
            prev = levels[q - 1]
            for r in range(q):
                den = right[:, r + 1] + left[:, q - r]
                temp = prev[:, r] / den
                cur[:, r] = saved + right[:, r + 1] * temp
                saved = left[:, q - r] * temp
            cur[:, q] = saved
            levels.append(cur)

        def raise_deriv(vals, q):
            # Derivative recurrence: lift derivative values at degree q to q+1.
            out = np.zeros((m, q + 2))
            for r in range(q + 2):
                acc = np.zeros(m)
                if r >= 1:
                    den = t[i + r] - t[i - q - 1 + r]
                    good = den > 0
                    acc += np.where(good, vals[:, r - 1] / np.where(good, den, 1.0), 0.0)
                if r <= q:
                    den = t[i + r + 1] - t[i - q + r]
                    good = den > 0
                    acc -= np.where(good, vals[:, r] / np.where(good, den, 1.0), 0.0)
                out[:, r] = (q + 1) * acc
            return out

        vals = np.zeros((nderiv + 1, m, n))
        vals[0] = levels[p]
        for d in range(1, nderiv + 1):
            if d > p:
                break  # derivative order exceeds the local polynomial degree
            cur = levels[p - d]
            for q in range(p - d, p):
                cur = raise_deriv(cur, q)
            vals[d] = cur
        first_raw = i - p
        return first_raw, vals

    def dof_indices(self, first_raw: np.ndarray) -> np.ndarray:
        idx = first_raw[:, None] + np.arange(self.order)[None, :]
        if self.periodic:
            idx = np.mod(idx, self.ndof)
        return idx

    def sample_matrix(self, x: np.ndarray, deriv: int = 0) -> sp.csr_matrix:
        """Sparse (len(x), ndof) matrix of basis (derivative) values."""
        first, vals = self.nonzero_basis(x, nderiv=deriv)
        cols = self.dof_indices(first)
        rows = np.repeat(np.arange(len(cols)), self.order)
        mat = sp.coo_matrix(
            (vals[deriv].ravel(), (rows, cols.ravel())),
            shape=(len(cols), self.ndof),
        )
        return mat.tocsr()

    def greville(self) -> np.ndarray:
        """Greville abscissae (raw dofs; periodic values may exceed hi)."""
        p = self.degree
        t = self.knots
        return np.array([t[j + 1 : j + p + 1].mean() for j in range(self.raw_ndof)])

    def support_cells(self, raw_dof: int) -> range:
        """Raw cell index range covered by a raw dof (clamped: clipped)."""
        if self.periodic:
            return range(raw_dof - self.degree, raw_dof + 1)
        return range(max(0, raw_dof - self.degree), min(self.cells - 1, raw_dof) + 1)


class SplineSpace:
    """Tensor-product spline space of order n on a Cartesian grid.

    Boundary treatment follows the grid's per-axis periodicity flags:
    clamped (open knot vector) on non-periodic axes, uniform wrap-around
    on periodic ones.
    """

    def __init__(self, grid: CartesianGrid, order: int):
        if order < 2:
            raise ConfigurationError("spline order must be >= 2")
        self.grid = grid
        self.order = order
        self.axes = [
            _AxisBasis(grid.lo[k], grid.hi[k], grid.cells_per_axis[k], order, grid.periodic[k])
            for k in range(grid.dim)
        ]
        self.dof_shape = tuple(ax.ndof for ax in self.axes)
        self.dof_count = int(np.prod(self.dof_shape))

    @property
    def dim(self) -> int:
        return self.grid.dim

    def __repr__(self):
        bc = "periodic" if all(self.grid.periodic) else "clamped"
        return f"SplineSpace(order={self.order}, cells={self.grid.cells_per_axis}, {bc})"

    # -- scattered-point evaluation ------------------------------------------------

    def basis_at(self, points: np.ndarray, nderiv: int = 0):
        """Per-axis nonzero basis data at scattered points.

        Returns ``(dofs, vals)`` with ``dofs[k]`` of shape (M, n) holding the
        wrapped dof indices along axis k and ``vals[k]`` of shape
        (nderiv+1, M, n) the basis values/derivatives.
        """
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        dofs, vals = [], []
        for k, ax in enumerate(self.axes):
            first, v = ax.nonzero_basis(pts[:, k], nderiv=nderiv)
            dofs.append(ax.dof_indices(first))
            vals.append(v)
        return dofs, vals

    def eval_basis(self, x) -> list[tuple[int, float]]:
        """Nonzero (flat dof index, value) pairs at a single point."""
        pts = np.atleast_2d(np.asarray(x, dtype=float))
        dofs, vals = self.basis_at(pts)
        flat = self._flat_dofs(dofs)[0]
        w = vals[0][0][0]
        for k in range(1, self.dim):
            w = np.multiply.outer(w, vals[k][0][0])
        return list(zip(flat.ravel().tolist(), w.ravel().tolist()))

    def _flat_dofs(self, dofs):
        """Combine per-axis dof indices into flat indices, shape (M, n, ..., n)."""
        d = self.dim
        if d == 1:
            return dofs[0]
        if d == 2:
            s1 = self.dof_shape[1]
            return dofs[0][:, :, None] * s1 + dofs[1][:, None, :]
        s1, s2 = self.dof_shape[1], self.dof_shape[2]
        return (
            dofs[0][:, :, None, None] * (s1 * s2)
            + dofs[1][:, None, :, None] * s2
            + dofs[2][:, None, None, :]
        )

    def value_matrix(self, points: np.ndarray, alpha=None) -> sp.csr_matrix:
        """Sparse (M, dof_count) matrix of basis values (or derivative alpha)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        alpha = self._check_alpha(alpha)
        dofs, vals = self.basis_at(pts, nderiv=max(alpha))
        flat = self._flat_dofs(dofs)
        w = vals[0][alpha[0]]
        if self.dim == 2:
            w = np.einsum("mi,mj->mij", w, vals[1][alpha[1]])
        elif self.dim == 3:
            w = np.einsum("mi,mj,mk->mijk", w, vals[1][alpha[1]], vals[2][alpha[2]])
        m = pts.shape[0]
        stencil = self.order**self.dim
        rows = np.repeat(np.arange(m), stencil)
        mat = sp.coo_matrix(
            (w.reshape(m, -1).ravel(), (rows, flat.reshape(m, -1).ravel())),
            shape=(m, self.dof_count),
        )
        return mat.tocsr()

    def _check_alpha(self, alpha):
        if alpha is None:
            return (0,) * self.dim
        alpha = tuple(int(a) for a in np.atleast_1d(alpha))
        if len(alpha) != self.dim or any(a < 0 for a in alpha):
            raise UsageError(f"bad derivative multi-index {alpha}")
        if sum(alpha) > 2:
            raise UsageError("derivatives only supported up to total order 2")
        return alpha

    def eval(self, coeffs: np.ndarray, points: np.ndarray, alpha=None) -> np.ndarray:
        """Evaluate a coefficient vector (or stacked columns) at scattered points."""
        return self.eval_many(coeffs, points, [alpha])[0]

    def eval_many(self, coeffs, points, alphas) -> list[np.ndarray]:
        """Evaluate several derivative multi-indices, reusing one gather pass."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        alphas = [self._check_alpha(a) for a in alphas]
        nd = max(max(a) for a in alphas)
        coeffs = np.asarray(coeffs, dtype=float)
        dofs, vals = self.basis_at(pts, nderiv=nd)
        flat = self._flat_dofs(dofs)
        block = coeffs[flat]  # (M, n[, n[, n]][, k])
        out = []
        for a in alphas:
            if self.dim == 1:
                r = np.einsum("mi...,mi->m...", block, vals[0][a[0]])
            elif self.dim == 2:
                r = np.einsum(
                    "mij...,mi,mj->m...",
                    block, vals[0][a[0]], vals[1][a[1]],
                    optimize=True,
                )
            else:
                r = np.einsum(
                    "mijk...,mi,mj,mk->m...",
                    block, vals[0][a[0]], vals[1][a[1]], vals[2][a[2]],
                    optimize=True,
                )
            out.append(r)
        return out

    # -- tensor-grid evaluation (fast path for quadrature) --------------------------

    def eval_tensor(self, coeffs, axis_points, alpha=None) -> np.ndarray:
        """Evaluate on a tensor grid given per-axis point arrays.

        Result has shape (len(axis_points[0]), ..., len(axis_points[D-1])[, k]).
        """
        alpha = self._check_alpha(alpha)
        coeffs = np.asarray(coeffs, dtype=float)
        comp = coeffs.shape[1:] if coeffs.ndim > 1 else ()
        work = coeffs.reshape(self.dof_shape + comp)
        for k, ax in enumerate(self.axes):
            mat = ax.sample_matrix(np.asarray(axis_points[k], dtype=float), deriv=alpha[k])
            moved = np.moveaxis(work, k, 0)
            flat = moved.reshape(moved.shape[0], -1)
            res = mat @ flat
            work = np.moveaxis(res.reshape((mat.shape[0],) + moved.shape[1:]), 0, k)
        return work


@dataclass
class SplineFunction:
    """A spline space together with one (or several stacked) coefficient vectors."""

    space: SplineSpace
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        if self.coeffs.shape[0] != self.space.dof_count:
            raise ConfigurationError(
                f"coefficient length {self.coeffs.shape[0]} != dof count {self.space.dof_count}"
            )

    def __call__(self, points, alpha=None):
        return self.space.eval(self.coeffs, points, alpha=alpha)

    def gradient(self, points):
        """First derivatives, shape (M, D) for scalar / (M, D, k) for stacked coeffs."""
        alphas = [tuple(int(i == k) for i in range(self.space.dim)) for k in range(self.space.dim)]
        parts = self.space.eval_many(self.coeffs, points, alphas)
        return np.stack(parts, axis=1)

    def laplacian(self, points):
        alphas = [tuple(2 * (i == k) for i in range(self.space.dim)) for k in range(self.space.dim)]
        parts = self.space.eval_many(self.coeffs, points, alphas)
        return sum(parts)


# -- quadrature ---------------------------------------------------------------------


@lru_cache(maxsize=64)
def _axis_gauss(lo: float, hi: float, cells: int, q: int):
    """Composite Gauss-Legendre rule along one axis: (points, weights)."""
    ref_x, ref_w = np.polynomial.legendre.leggauss(q)
    nodes = np.linspace(lo, hi, cells + 1)
    half = 0.5 * (nodes[1] - nodes[0])
    mid = 0.5 * (nodes[:-1] + nodes[1:])
    pts = (mid[:, None] + half * ref_x[None, :]).ravel()
    wts = np.tile(half * ref_w, cells)
    return pts, wts


def tensor_quadrature(grid: CartesianGrid, q: int):
    """Per-axis composite Gauss points/weights with q points per cell per axis."""
    pts, wts = [], []
    for k in range(grid.dim):
        p, w = _axis_gauss(grid.lo[k], grid.hi[k], grid.cells_per_axis[k], q)
        pts.append(p)
        wts.append(w)
    return pts, wts


def _meshgrid_points(axis_points):
    mesh = np.meshgrid(*axis_points, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


def _outer_weights(axis_weights):
    w = axis_weights[0]
    for v in axis_weights[1:]:
        w = np.multiply.outer(w, v)
    return w.ravel()


# -- norms ---------------------------------------------------------------------------


def _check_norm_args(p, sobolev):
    if p not in (1, 2, np.inf, "inf"):
        raise UsageError(f"unsupported norm exponent p={p}")
    if sobolev not in (0, 1):
        raise UsageError(f"unsupported Sobolev index s={sobolev}")
    return (np.inf if p == "inf" else p), sobolev


def function_norm(grid: CartesianGrid, func, p=2, sobolev=0, grad=None, q=4):
    """W^{s,p} norm of a callable by composite Gauss quadrature.

    ``func(points)`` returns (M,) or (M, k); for sobolev=1, ``grad(points)``
    must return (M, D) or (M, D, k).  For p = inf the cell corners are
    sampled in addition to the quadrature nodes.
    """
    p, sobolev = _check_norm_args(p, sobolev)
    axis_pts, axis_wts = tensor_quadrature(grid, q)
    pts = _meshgrid_points(axis_pts)
    w = _outer_weights(axis_wts)

    def magnitude(values):
        v = np.asarray(values, dtype=float)
        if v.ndim == 1:
            return np.abs(v)
        return np.sqrt(np.sum(v.reshape(v.shape[0], -1) ** 2, axis=1))

    vals = magnitude(func(pts))
    if sobolev == 1:
        if grad is None:
            raise UsageError("sobolev=1 requires a gradient callable")
        gvals = magnitude(grad(pts))
    if np.isinf(p):
        best = vals.max()
        if sobolev == 1:
            best = max(best, gvals.max())
        corners = _meshgrid_points([grid.axis_nodes(k) for k in range(grid.dim)])
        best = max(best, magnitude(func(corners)).max())
        if sobolev == 1:
            best = max(best, magnitude(grad(corners)).max())
        return float(best)
    total = float(np.dot(w, vals**p))
    if sobolev == 1:
        total += float(np.dot(w, gvals**p))
    return total ** (1.0 / p)


def spline_norm(fn: SplineFunction, p=2, sobolev=0, q=None):
    """Norm of a spline function using the tensor-grid fast path."""
    return error_norm(fn, exact=None, p=p, sobolev=sobolev, q=q)


def error_norm(fn: SplineFunction, exact=None, p=2, sobolev=0, exact_grad=None, q=None):
    """W^{s,p} norm of (fn - exact) with exact sampled at the quadrature nodes.

    ``exact(points)`` must be vectorised; pass None to take the norm of fn
    itself.  Vector-valued functions use the pointwise Euclidean magnitude.
    """
    p, sobolev = _check_norm_args(p, sobolev)
    space = fn.space
    if q is None:
        q = space.order + 1
    grid = space.grid
    axis_pts, axis_wts = tensor_quadrature(grid, q)

    def diff_tensor(alpha):
        v = space.eval_tensor(fn.coeffs, axis_pts, alpha=alpha)
        return v

    def exact_at(points, alpha_index):
        if alpha_index is None:
            return exact(points)
        g = exact_grad(points)
        return np.take(np.asarray(g, dtype=float), alpha_index, axis=1)

    pts = _meshgrid_points(axis_pts) if exact is not None or (sobolev and exact_grad) else None

    def field(alpha, alpha_index):
        v = diff_tensor(alpha)
        flat = v.reshape((-1,) + v.shape[grid.dim:])
        if exact is not None:
            if alpha_index is None:
                flat = flat - np.asarray(exact(pts), dtype=float)
            else:
                flat = flat - exact_at(pts, alpha_index)
        return flat

    def magnitude(v):
        if v.ndim == 1:
            return np.abs(v)
        return np.sqrt(np.sum(v.reshape(v.shape[0], -1) ** 2, axis=1))

    zero = (0,) * grid.dim
    vals = magnitude(field(zero, None))
    gmags = []
    if sobolev == 1:
        if exact is not None and exact_grad is None:
            raise UsageError("sobolev=1 error norm requires exact_grad")
        for k in range(grid.dim):
            alpha = tuple(int(i == k) for i in range(grid.dim))
            gmags.append(magnitude(field(alpha, k if exact is not None else None)))
    if np.isinf(p):
        best = vals.max()
        for g in gmags:
            best = max(best, g.max())
        # corner samples guard against maxima on cell boundaries
        corner_axis = [grid.axis_nodes(k) for k in range(grid.dim)]
        v = space.eval_tensor(fn.coeffs, corner_axis)
        flat = v.reshape((-1,) + v.shape[grid.dim:])
        if exact is not None:
            flat = flat - np.asarray(exact(_meshgrid_points(corner_axis)), dtype=float)
        best = max(best, magnitude(flat).max())
        return float(best)
    w = _outer_weights(axis_wts)
    total = float(np.dot(w, vals**p))
    for g in gmags:
        total += float(np.dot(w, g**p))
    return total ** (1.0 / p)


def seminorm_w11(fn: SplineFunction, q=None):
    """W^{1,1} seminorm: sum over axes of the L1 norms of first derivatives."""
    space = fn.space
    if q is None:
        q = space.order + 1
    axis_pts, axis_wts = tensor_quadrature(space.grid, q)
    w = _outer_weights(axis_wts)
    total = 0.0
    for k in range(space.dim):
        alpha = tuple(int(i == k) for i in range(space.dim))
        v = space.eval_tensor(fn.coeffs, axis_pts, alpha=alpha)
        total += float(np.dot(w, np.abs(v.ravel())))
    return total


def inverse_estimate_probe(space: SplineSpace, trials: int, seed: int = 0) -> float:
    """Worst observed ratio |v|_{W^{1,1}} / (sigma^{-1} ||v||_{L^1}) over random coeffs."""
    if trials < 1:
        raise UsageError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    sigma = float(space.grid.widths.max())
    worst = 0.0
    for _ in range(trials):
        fn = SplineFunction(space, rng.standard_normal(space.dof_count))
        l1 = spline_norm(fn, p=1)
        if l1 == 0.0:
            continue
        worst = max(worst, seminorm_w11(fn) / (l1 / sigma))
    return worst


def probe_ratio(space: SplineSpace, coeffs) -> float:
    """Single-vector version of the inverse-estimate ratio (0 for constants)."""
    fn = SplineFunction(space, coeffs)
    l1 = spline_norm(fn, p=1)
    sigma = float(space.grid.widths.max())
    return seminorm_w11(fn) / (l1 / sigma) if l1 > 0 else 0.0


# -- quasi-interpolation ---------------------------------------------------------------


def _axis_quasi_matrix(ax: _AxisBasis) -> tuple[sp.csr_matrix, np.ndarray]:
    """1D quasi-interpolation operator.

    Returns (Q, sample_points) with Q of shape (ndof, n_samples).  Row j holds
    the minimum-norm point-evaluation weights recovering coefficient j of any
    spline sampled at the composite Gauss points, so splines (and in
    particular polynomials of degree < n) are reproduced exactly while the
    functional stays local: the weights live on the support of dof j enlarged
    by `order` cells per side.
    """
    n = ax.order
    m = ax.cells
    pts, _ = _axis_gauss(ax.lo, ax.hi, m, n)
    sample = ax.sample_matrix(pts)  # (m*n, ndof)
    rows, cols, data = [], [], []
    ext = n
    for j in range(ax.ndof):
        if ax.periodic:
            raw = j
            c0, c1 = raw - ax.degree - ext, raw + ext
            cells = np.mod(np.arange(c0, c1 + 1), m)
            cells = np.unique(cells)
        else:
            sup = ax.support_cells(j)
            c0 = max(0, sup.start - ext)
            c1 = min(m - 1, sup.stop - 1 + ext)
            cells = np.arange(c0, c1 + 1)
        pt_idx = (cells[:, None] * n + np.arange(n)[None, :]).ravel()
        local = sample[pt_idx]
        touched = np.unique(local.indices)
        g = local[:, touched].toarray()  # (n_pts, n_dofs)
        e = np.zeros(len(touched))
        e[np.searchsorted(touched, j)] = 1.0
        c, *_ = np.linalg.lstsq(g.T, e, rcond=None)
        keep = np.abs(c) > 1e-14
        rows.extend([j] * int(keep.sum()))
        cols.extend(pt_idx[keep].tolist())
        data.extend(c[keep].tolist())
    q_mat = sp.coo_matrix((data, (rows, cols)), shape=(ax.ndof, len(pts))).tocsr()
    return q_mat, pts


def quasi_interpolate(space: SplineSpace, f) -> SplineFunction:
    """Stable, locally supported approximation of f in the spline space.

    ``f(points)`` must accept an (M, D) array and return (M,) or (M, k).
    Reproduces every member of the space (hence all tensor polynomials of
    coordinate-wise degree < n) exactly up to roundoff.
    """
    mats, axis_pts = [], []
    for ax in space.axes:
        q_mat, pts = _axis_quasi_matrix(ax)
        mats.append(q_mat)
        axis_pts.append(pts)
    vals = np.asarray(f(_meshgrid_points(axis_pts)), dtype=float)
    comp = vals.shape[1:] if vals.ndim > 1 else ()
    work = vals.reshape(tuple(len(p) for p in axis_pts) + comp)
    for k, q_mat in enumerate(mats):
        moved = np.moveaxis(work, k, 0)
        res = q_mat @ moved.reshape(moved.shape[0], -1)
        work = np.moveaxis(res.reshape((q_mat.shape[0],) + moved.shape[1:]), 0, k)
    coeffs = work.reshape((space.dof_count,) + comp)
    return SplineFunction(space, coeffs)
