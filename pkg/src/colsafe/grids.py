"""Finite discretized parameter domains with index <-> coordinate mapping."""

from __future__ import annotations

import itertools

import numpy as np

__all__ = ["ParameterGrid"]


class ParameterGrid:
    """An ordered, finite set of points in R^d.

    Regular grids are built with :meth:`regular` (the cartesian product of
    per-axis linspaces); arbitrary point sets are wrapped with
    :meth:`from_points`.  The row index of ``points`` is the grid index used
    everywhere else in the package.
    """

    def __init__(self, points: np.ndarray, bounds=None, resolution=None):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if points.ndim != 2:
            raise ValueError("points must be a (D, d) array")
        uniq = np.unique(points, axis=0)
        if uniq.shape[0] != points.shape[0]:
            raise ValueError("grid points must be unique")
        self.points = points
        self.bounds = bounds
        self.resolution = resolution
        self._dist: np.ndarray | None = None

    @staticmethod
    def regular(bounds, resolution) -> "ParameterGrid":
        """Cartesian product grid.

        Parameters
        ----------
        bounds : sequence of (lo, hi) pairs, one per axis.
        resolution : int or sequence of ints
            Number of points per axis.
        """
        bounds = [(float(lo), float(hi)) for lo, hi in bounds]
        d = len(bounds)
        if np.isscalar(resolution):
            resolution = [int(resolution)] * d
        resolution = [int(r) for r in resolution]
        if len(resolution) != d:
            raise ValueError("one resolution per axis required")
        if any(r < 2 for r in resolution):
            raise ValueError("resolution must be >= 2 per axis")
        axes = [np.linspace(lo, hi, r) for (lo, hi), r in zip(bounds, resolution)]
        pts = np.array(list(itertools.product(*axes)), dtype=float)
        return ParameterGrid(pts, bounds=bounds, resolution=resolution)

    @staticmethod
    def from_points(points) -> "ParameterGrid":
        return ParameterGrid(np.asarray(points, dtype=float))

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.points.shape[0]

    def coords(self, index: int) -> np.ndarray:
        return self.points[index]

    def nearest_index(self, coords) -> int:
        """Index of the grid point closest to ``coords`` (first on ties)."""
        coords = np.asarray(coords, dtype=float)
        d2 = np.sum((self.points - coords) ** 2, axis=1)
        return int(np.argmin(d2))

    def pairwise_distances(self) -> np.ndarray:
        """Cached (D, D) matrix of L2 distances between grid points."""
        if self._dist is None:
            diff = self.points[:, None, :] - self.points[None, :, :]
            self._dist = np.sqrt(np.sum(diff * diff, axis=-1))
        return self._dist

    def indices_within(self, center, radius: float) -> np.ndarray:
        """Grid indices within L2 distance ``radius`` of ``center`` (closed)."""
        center = np.asarray(center, dtype=float)
        d2 = np.sum((self.points - center) ** 2, axis=1)
        return np.flatnonzero(d2 <= radius * radius + 0.0)
