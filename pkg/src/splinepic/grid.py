"""Uniform axis-aligned Cartesian grids in 1, 2 or 3 dimensions."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, DomainError


@dataclass(frozen=True)
class CartesianGrid:
    """Uniform box grid with per-axis cell counts and periodicity flags.

    The same type is used for the spline mesh (spacing sigma) and for the
    particle seeding grid (spacing h).
    """

    lo: tuple[float, ...]
    hi: tuple[float, ...]
    cells_per_axis: tuple[int, ...]
    periodic: tuple[bool, ...] = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        cells = tuple(int(c) for c in self.cells_per_axis)
        per = self.periodic
        if per is None:
            per = (False,) * len(lo)
        per = tuple(bool(b) for b in per)
        if not (len(lo) == len(hi) == len(cells) == len(per)):
            raise ConfigurationError("lo/hi/cells_per_axis/periodic length mismatch")
        if len(lo) not in (1, 2, 3):
            raise ConfigurationError(f"dimension must be 1, 2 or 3, got {len(lo)}")
        for k, (a, b, c) in enumerate(zip(lo, hi, cells)):
            if not b > a:
                raise ConfigurationError(f"axis {k}: hi must exceed lo ({a} >= {b})")
            if c < 1:
                raise ConfigurationError(f"axis {k}: need at least one cell")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "cells_per_axis", cells)
        object.__setattr__(self, "periodic", per)

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def widths(self) -> np.ndarray:
        """Cell width per axis."""
        return (np.asarray(self.hi) - np.asarray(self.lo)) / np.asarray(self.cells_per_axis)

    @property
    def extents(self) -> np.ndarray:
        return np.asarray(self.hi) - np.asarray(self.lo)

    @property
    def cell_count(self) -> int:
        return int(np.prod(self.cells_per_axis))

    @property
    def volume(self) -> float:
        return float(np.prod(self.extents))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.widths))

    def axis_nodes(self, k: int) -> np.ndarray:
        """Cell boundary coordinates along axis k (length cells+1)."""
        return np.linspace(self.lo[k], self.hi[k], self.cells_per_axis[k] + 1)

    def cell_centers_axis(self, k: int) -> np.ndarray:
        nodes = self.axis_nodes(k)
        return 0.5 * (nodes[:-1] + nodes[1:])

    def cell_centers(self) -> np.ndarray:
        """All cell centers, shape (cell_count, dim), C-order over multi-indices."""
        axes = [self.cell_centers_axis(k) for k in range(self.dim)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def wrap(self, points: np.ndarray) -> np.ndarray:
        """Wrap coordinates on periodic axes into [lo, hi)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float)).copy()
        for k in range(self.dim):
            if self.periodic[k]:
                span = self.hi[k] - self.lo[k]
                pts[:, k] = self.lo[k] + np.mod(pts[:, k] - self.lo[k], span)
        return pts

    def contains(self, points: np.ndarray, atol: float = 0.0) -> np.ndarray:
        """Boolean mask of points inside the closed box (periodic axes always pass)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        ok = np.ones(pts.shape[0], dtype=bool)
        for k in range(self.dim):
            if not self.periodic[k]:
                ok &= (pts[:, k] >= self.lo[k] - atol) & (pts[:, k] <= self.hi[k] + atol)
        return ok

    def require_inside(self, points: np.ndarray):
        ok = self.contains(points)
        if not ok.all():
            bad = int(np.flatnonzero(~ok)[0])
            raise DomainError(f"point index {bad} outside the box on a non-periodic axis")

    def cell_multi_index(self, points: np.ndarray) -> np.ndarray:
        """Per-axis cell indices of each point, clipped to valid range."""
        pts = self.wrap(points)
        idx = np.empty((pts.shape[0], self.dim), dtype=np.int64)
        w = self.widths
        for k in range(self.dim):
            raw = np.floor((pts[:, k] - self.lo[k]) / w[k]).astype(np.int64)
            idx[:, k] = np.clip(raw, 0, self.cells_per_axis[k] - 1)
        return idx

    def flatten_cell_index(self, multi: np.ndarray) -> np.ndarray:
        flat = np.zeros(multi.shape[0], dtype=np.int64)
        for k in range(self.dim):
            flat = flat * self.cells_per_axis[k] + multi[:, k]
        return flat

    def with_cells(self, cells_per_axis) -> "CartesianGrid":
        return CartesianGrid(self.lo, self.hi, tuple(cells_per_axis), self.periodic)


def grid_from_spacing(lo, hi, spacing: float, periodic=None, rel_tol: float = 1e-9) -> CartesianGrid:
    """Build a grid whose cell width equals ``spacing`` on every axis.

    Raises ConfigurationError if the spacing does not evenly divide some axis.
    """
    lo = tuple(float(v) for v in np.atleast_1d(lo))
    hi = tuple(float(v) for v in np.atleast_1d(hi))
    cells = []
    for a, b in zip(lo, hi):
        ratio = (b - a) / spacing
        n = int(round(ratio))
        if n < 1 or abs(ratio - n) > rel_tol * max(1.0, ratio):
            raise ConfigurationError(
                f"spacing {spacing} does not divide the extent {b - a} into whole cells"
            )
        cells.append(n)
    return CartesianGrid(lo, hi, tuple(cells), periodic)
