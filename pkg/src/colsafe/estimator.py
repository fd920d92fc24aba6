"""Nadaraya-Watson estimation over the experiment history.

The store keeps every experiment ``(a_t, measurement_t)`` and a spatial
bucket index with cell size equal to the kernel bandwidth.  Because the
scaled kernel vanishes beyond distance ``lam``, any query touches at most
the 3^d buckets adjacent to its own cell, so query cost scales with the
number of nearby samples rather than the full history.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .kernels import KernelSpec, scaled_weights

__all__ = ["Measurement", "SampleStore"]


@dataclass(frozen=True)
class Measurement:
    """One experiment's observations: a vector per output index.

    ``values[0]`` is the reward (dimension 1); ``values[i]`` for i >= 1 is
    the i-th constraint observation of dimension ``m_i``.  Every index is
    observed in every experiment.
    """

    values: tuple

    @staticmethod
    def of(*vectors) -> "Measurement":
        return Measurement(tuple(np.atleast_1d(np.asarray(v, dtype=float)) for v in vectors))

    @property
    def n_indices(self) -> int:
        return len(self.values)

    def vector(self, i: int) -> np.ndarray:
        return self.values[i]


class SampleStore:
    """Bucket-indexed history of samples.

    Parameters
    ----------
    dim : int
        Parameter-space dimension.
    output_dims : sequence of int
        ``m_i`` per output index; ``output_dims[0]`` must be 1.
    cell : float
        Bucket edge length; must equal the kernel support radius ``lam``
        for the 3^d-bucket query guarantee to hold.
    """

    def __init__(self, dim: int, output_dims, cell: float):
        if cell <= 0:
            raise ValueError("bucket cell size must be positive")
        output_dims = tuple(int(m) for m in output_dims)
        if not output_dims or output_dims[0] != 1:
            raise ValueError("output_dims[0] (reward) must be 1")
        self.dim = int(dim)
        self.output_dims = output_dims
        self.cell = float(cell)
        self.n = 0
        self._coords: list[np.ndarray] = []
        self._values: list[list[np.ndarray]] = [[] for _ in output_dims]
        self._buckets: dict[tuple, list[int]] = {}
        self._deltas = list(itertools.product((-1, 0, 1), repeat=self.dim))

    def _key(self, a: np.ndarray) -> tuple:
        return tuple(int(k) for k in np.floor(a / self.cell))

    def add_sample(self, a, measurement: Measurement) -> None:
        """Record one experiment; O(1) bucket insert."""
        a = np.asarray(a, dtype=float)
        if a.shape != (self.dim,):
            raise ValueError(f"sample point has shape {a.shape}, expected ({self.dim},)")
        if measurement.n_indices != len(self.output_dims):
            raise ValueError(
                f"measurement has {measurement.n_indices} indices, "
                f"expected {len(self.output_dims)}"
            )
        for i, m_i in enumerate(self.output_dims):
            v = measurement.vector(i)
            if v.shape != (m_i,):
                raise ValueError(f"index {i} measurement has shape {v.shape}, expected ({m_i},)")
            self._values[i].append(v)
        self._coords.append(a)
        self._buckets.setdefault(self._key(a), []).append(self.n)
        self.n += 1

    def _candidates(self, a: np.ndarray) -> list[int]:
        key = self._key(a)
        out: list[int] = []
        for delta in self._deltas:
            out.extend(self._buckets.get(tuple(k + d for k, d in zip(key, delta)), ()))
        return out

    def neighbors(self, a, radius: float) -> list[int]:
        """Sample indices with ||a - a_t|| <= radius (closed ball).

        Only the 3^d buckets around ``a``'s cell are visited, which is
        exhaustive whenever ``radius <= cell``.
        """
        a = np.asarray(a, dtype=float)
        if radius > self.cell * (1 + 1e-12):
            raise ValueError("query radius exceeds bucket cell size")
        cand = self._candidates(a)
        if not cand:
            return []
        pts = np.stack([self._coords[t] for t in cand])
        d2 = np.sum((pts - a) ** 2, axis=1)
        keep = d2 <= radius * radius
        return [cand[j] for j in np.flatnonzero(keep)]

    def _gather(self, kernel: KernelSpec, a: np.ndarray):
        """Candidate indices and their scaled kernel weights at ``a``."""
        cand = self._candidates(a)
        if not cand:
            return [], np.empty(0)
        pts = np.stack([self._coords[t] for t in cand])
        dists = np.sqrt(np.sum((pts - a) ** 2, axis=1))
        return cand, scaled_weights(kernel, dists)

    def kappa(self, kernel: KernelSpec, a) -> float:
        """Kernel mass: sum of scaled kernel weights over the history."""
        a = np.asarray(a, dtype=float)
        _, w = self._gather(kernel, a)
        return float(np.sum(w))

    def mu(self, kernel: KernelSpec, a, i: int) -> np.ndarray | None:
        """Kernel-weighted mean of the index-i measurements at ``a``.

        Returns None when the kernel mass vanishes (no sample carries
        information about ``a``); downstream bound code maps that to the
        +infinity branch.
        """
        if not 0 <= i < len(self.output_dims):
            raise IndexError(f"invalid output index {i}")
        a = np.asarray(a, dtype=float)
        cand, w = self._gather(kernel, a)
        total = float(np.sum(w))
        if total == 0.0:
            return None
        vals = np.stack([self._values[i][t] for t in cand])
        return (w / total) @ vals

    def local_estimate(self, kernel: KernelSpec, a):
        """(kappa, [mu_i or None per index]) computed with one weight pass."""
        a = np.asarray(a, dtype=float)
        cand, w = self._gather(kernel, a)
        total = float(np.sum(w))
        if total == 0.0:
            return 0.0, [None] * len(self.output_dims)
        wn = w / total
        mus = []
        for i in range(len(self.output_dims)):
            vals = np.stack([self._values[i][t] for t in cand])
            mus.append(wn @ vals)
        return total, mus

    def coords_array(self) -> np.ndarray:
        if not self._coords:
            return np.empty((0, self.dim))
        return np.stack(self._coords)
