"""Minimal exact Gaussian-process regressor and its optimizer adapter.

This exists to reproduce the computational-scaling comparison against the
kernel-regression path, not to re-derive GP-based safety theory.  The
"refit" mode deliberately rebuilds the Cholesky factor of (K + sigma^2 I)
from scratch whenever predictions are requested after new data, exhibiting
the cubic per-iteration cost of a naive implementation; the "append" mode
grows the factor with O(n^2) incremental updates for the efficient-
implementation comparison.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.linalg import cho_solve, solve_triangular
from scipy.spatial.distance import cdist

from .estimator import Measurement
from .grids import ParameterGrid
from .kernels import _matern_profile

__all__ = ["GPModel", "GPBeliefModel", "gp_update", "gp_bounds"]

_JITTERS = (0.0, 1e-10, 1e-8, 1e-6, 1e-4)


class GPModel:
    """Exact GP with a Matern kernel over multiple scalar output channels.

    All channels share the inputs and kernel, hence one factor serves every
    channel.  Vector-valued constraint observations are handled by giving
    each component its own channel.
    """

    def __init__(
        self,
        dim: int,
        n_channels: int = 1,
        lengthscale: float = 0.05,
        nu: float = 1.5,
        noise_std: float = 0.05,
        update_mode: str = "refit",
    ):
        if update_mode not in ("refit", "append"):
            raise ValueError("update_mode must be 'refit' or 'append'")
        if lengthscale <= 0 or nu <= 0:
            raise ValueError("lengthscale and nu must be positive")
        self.dim = int(dim)
        self.n_channels = int(n_channels)
        self.lengthscale = float(lengthscale)
        self.nu = float(nu)
        self.noise_var = float(noise_std) ** 2
        self.update_mode = update_mode
        self._X: list[np.ndarray] = []
        self._Y: list[np.ndarray] = []
        self._L: np.ndarray | None = None
        self._alpha: np.ndarray | None = None
        self._jitter = 0.0
        self._dirty = False

    @property
    def n(self) -> int:
        return len(self._X)

    def _kernel(self, A: np.ndarray, B: np.ndarray) -> np.ndarray:
        return _matern_profile(cdist(A, B), self.nu, self.lengthscale)

    def _factor_full(self) -> None:
        X = np.stack(self._X)
        K = self._kernel(X, X)
        for jitter in _JITTERS:
            try:
                self._L = np.linalg.cholesky(
                    K + (self.noise_var + jitter) * np.eye(self.n)
                )
                self._jitter = jitter
                return
            except np.linalg.LinAlgError:
                continue
        raise np.linalg.LinAlgError("kernel matrix not positive definite even with jitter")

    def _factor_append(self, x: np.ndarray) -> None:
        if self._L is None or self.n == 1:
            self._factor_full()
            return
        X_old = np.stack(self._X[:-1])
        k_vec = self._kernel(X_old, x[None, :])[:, 0]
        c = solve_triangular(self._L, k_vec, lower=True)
        d2 = 1.0 + self.noise_var + self._jitter - float(c @ c)
        if d2 <= 0.0:
            self._factor_full()
            return
        n = self.n
        L_new = np.zeros((n, n))
        L_new[: n - 1, : n - 1] = self._L
        L_new[n - 1, : n - 1] = c
        L_new[n - 1, n - 1] = math.sqrt(d2)
        self._L = L_new

    def _refresh_alpha(self) -> None:
        Y = np.stack(self._Y)
        self._alpha = cho_solve((self._L, True), Y)

    def add(self, x, y) -> None:
        """Condition on one observation; y holds one value per channel."""
        x = np.asarray(x, dtype=float).reshape(self.dim)
        y = np.atleast_1d(np.asarray(y, dtype=float))
        if y.shape != (self.n_channels,):
            raise ValueError(f"expected {self.n_channels} channel values, got {y.shape}")
        self._X.append(x)
        self._Y.append(y)
        if self.update_mode == "append":
            self._factor_append(x)
            self._refresh_alpha()
        else:
            self._dirty = True

    def _ensure_factor(self) -> None:
        if self.update_mode == "refit" and (self._dirty or self._L is None):
            self._factor_full()
            self._refresh_alpha()
            self._dirty = False

    def posterior(self, Xq) -> tuple[np.ndarray, np.ndarray]:
        """Posterior mean (k, channels) and variance (k,) at query points."""
        Xq = np.atleast_2d(np.asarray(Xq, dtype=float))
        if self.n == 0:
            return np.zeros((Xq.shape[0], self.n_channels)), np.ones(Xq.shape[0])
        self._ensure_factor()
        Ks = self._kernel(np.stack(self._X), Xq)
        mean = Ks.T @ self._alpha
        v = solve_triangular(self._L, Ks, lower=True)
        var = 1.0 - np.sum(v * v, axis=0)
        np.maximum(var, 0.0, out=var)
        return mean, var


def gp_update(model: GPModel, a, y) -> GPModel:
    """Add one observation and return the conditioned model."""
    model.add(a, y)
    return model


def gp_bounds(model: GPModel, a, beta_scale: float, channel: int = 0) -> tuple[float, float]:
    """Symmetric mean +/- beta_scale * std interval for one channel."""
    if beta_scale <= 0:
        raise ValueError("beta_scale must be positive")
    mean, var = model.posterior(np.asarray(a, dtype=float)[None, :])
    std = math.sqrt(float(var[0]))
    center = float(mean[0, channel])
    return center - beta_scale * std, center + beta_scale * std


class GPBeliefModel:
    """Adapter feeding GP intervals into the shared safe-exploration loop.

    Reward intervals are mean +/- beta_scale*std; constraint intervals wrap
    the norm of the per-component posterior means, widened by the combined
    component uncertainty and clipped at zero, mirroring the shape of the
    kernel-regression intervals.
    """

    def __init__(
        self,
        grid: ParameterGrid,
        output_dims,
        lengthscale: float = 0.05,
        nu: float = 1.5,
        beta_scale: float = 2.0,
        noise_std: float = 0.05,
        update_mode: str = "refit",
    ):
        self.grid = grid
        self.output_dims = tuple(int(m) for m in output_dims)
        self.beta_scale = float(beta_scale)
        self._slices = []
        start = 0
        for m in self.output_dims:
            self._slices.append(slice(start, start + m))
            start += m
        self.gp = GPModel(
            grid.dim,
            n_channels=start,
            lengthscale=lengthscale,
            nu=nu,
            noise_std=noise_std,
            update_mode=update_mode,
        )

    @property
    def half_width_floor(self) -> float:
        return 0.0

    def q_intervals(self, indices: np.ndarray):
        pts = self.grid.points[np.asarray(indices, dtype=int)]
        mean, var = self.gp.posterior(pts)
        std = np.sqrt(var)
        k = pts.shape[0]
        q1 = len(self.output_dims)
        lo = np.empty((k, q1))
        hi = np.empty((k, q1))
        center = mean[:, 0]
        lo[:, 0] = center - self.beta_scale * std
        hi[:, 0] = center + self.beta_scale * std
        for i in range(1, q1):
            sl = self._slices[i]
            norms = np.linalg.norm(mean[:, sl], axis=1)
            b = self.beta_scale * std * math.sqrt(self.output_dims[i])
            lo[:, i] = np.maximum(0.0, norms - b)
            hi[:, i] = norms + b
        return lo, hi

    def add(self, index: int, measurement: Measurement) -> None:
        y = np.concatenate([measurement.vector(i) for i in range(len(self.output_dims))])
        self.gp.add(self.grid.points[index], y)

    def changed_indices(self, index: int) -> np.ndarray:
        return np.arange(len(self.grid))

    def kappa_at(self, index: int) -> float:
        return float(self.gp.n)
