"""Synthetic ground-truth environments and the reachability oracle.

Each benchmark fixes a grid, a reward table, constraint tables with
thresholds, and a safe seed, all with known values, so runs can be judged
against the exact safely-reachable optimum.  Observation noise comes from
a counter-based generator keyed on (seed, run_id), which makes Monte-Carlo
replicas reproducible regardless of scheduling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .estimator import Measurement
from .grids import ParameterGrid

__all__ = [
    "NoiseSpec",
    "ReachabilityParams",
    "SyntheticEnv",
    "make_benchmark",
    "reachability_step",
    "reachability_closure",
    "true_safe_optimum",
    "BENCHMARK_NAMES",
]

NOISE_KINDS = ("none", "gaussian", "uniform")


@dataclass(frozen=True)
class NoiseSpec:
    """Observation-noise model; ``sigma`` is the per-component scale."""

    kind: str = "gaussian"
    sigma: float = 0.05

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if self.sigma < 0:
            raise ValueError("noise sigma must be nonnegative")


@dataclass(frozen=True)
class ReachabilityParams:
    """Accuracy and smoothness constants entering the reachability operator."""

    beta_bar: float
    L: float

    def __post_init__(self):
        if self.beta_bar <= 0:
            raise ValueError("beta_bar must be positive")
        if self.L < 0:
            raise ValueError("L must be nonnegative")


class SyntheticEnv:
    """Ground truth on a grid plus a seeded observation model."""

    def __init__(
        self,
        name: str,
        grid: ParameterGrid,
        f_values: np.ndarray,
        g_values: list[np.ndarray],
        thresholds,
        seed_indices,
        noise: NoiseSpec,
        seed: int,
    ):
        self.name = name
        self.grid = grid
        self.f_values = np.asarray(f_values, dtype=float)
        self.g_values = [np.atleast_2d(np.asarray(g, dtype=float)) for g in g_values]
        self.thresholds = tuple(float(c) for c in thresholds)
        self.seed_indices = tuple(int(s) for s in seed_indices)
        self.noise = noise
        self.seed = int(seed)
        self.run_id = 0

        if len(self.g_values) != len(self.thresholds):
            raise ValueError("need one threshold per constraint")
        if self.f_values.shape != (len(grid),):
            raise ValueError("reward table must cover the grid")
        for g in self.g_values:
            if g.shape[0] != len(grid):
                raise ValueError("constraint tables must cover the grid")
        self.g_norms = np.stack(
            [np.linalg.norm(g, axis=1) for g in self.g_values], axis=1
        )  # (D, q)
        if not self.seed_indices:
            raise ValueError("safe seed must be nonempty")
        margins = self.g_norms[list(self.seed_indices)] - np.asarray(self.thresholds)
        if np.any(margins <= 0):
            raise ValueError("safe seed must satisfy every constraint with positive margin")
        self.true_L = self._grid_lipschitz()
        self.reset_noise(0)

    # -- observation model -------------------------------------------------

    def reset_noise(self, run_id: int) -> None:
        """Re-key the noise stream for a Monte-Carlo replica."""
        self.run_id = int(run_id)
        ss = np.random.SeedSequence(entropy=(self.seed, self.run_id))
        self._rng = np.random.Generator(np.random.Philox(ss))

    def _draw_noise(self, size: int) -> np.ndarray:
        if self.noise.kind == "none" or self.noise.sigma == 0.0:
            return np.zeros(size)
        if self.noise.kind == "gaussian":
            return self._rng.normal(0.0, self.noise.sigma, size)
        half = self.noise.sigma * np.sqrt(3.0)
        return self._rng.uniform(-half, half, size)

    def observe(self, index: int) -> Measurement:
        """Noisy measurement of the reward and every constraint at a grid point."""
        index = int(index)
        if not 0 <= index < len(self.grid):
            raise IndexError(f"grid index {index} out of range")
        vals = [np.array([self.f_values[index]]) + self._draw_noise(1)]
        for g in self.g_values:
            vals.append(g[index] + self._draw_noise(g.shape[1]))
        return Measurement(tuple(vals))

    # -- exact truth --------------------------------------------------------

    @property
    def output_dims(self) -> tuple:
        return (1, *(g.shape[1] for g in self.g_values))

    @property
    def n_constraints(self) -> int:
        return len(self.g_values)

    def violates(self, index: int) -> bool:
        """True constraint violation at a grid point."""
        return bool(np.any(self.g_norms[index] < np.asarray(self.thresholds)))

    def _grid_lipschitz(self) -> float:
        """Largest |delta h| / ||delta a|| over grid pairs and all functions."""
        dist = self.grid.pairwise_distances()
        off = dist > 0
        best = 0.0
        tables = [self.f_values[:, None]] + self.g_values
        for tbl in tables:
            sq = np.sum(tbl * tbl, axis=1)
            d2 = sq[:, None] + sq[None, :] - 2.0 * (tbl @ tbl.T)
            np.maximum(d2, 0.0, out=d2)
            ratio = np.sqrt(d2[off]) / dist[off]
            best = max(best, float(ratio.max()))
        return best

    def to_json_dict(self) -> dict:
        return {
            "name": self.name,
            "dim": self.grid.dim,
            "n_points": len(self.grid),
            "resolution": self.grid.resolution,
            "bounds": self.grid.bounds,
            "n_constraints": self.n_constraints,
            "output_dims": list(self.output_dims),
            "thresholds": list(self.thresholds),
            "true_lipschitz": self.true_L,
            "seed_indices": list(self.seed_indices),
            "seed_coords": [list(map(float, self.grid.coords(s))) for s in self.seed_indices],
            "noise": {"kind": self.noise.kind, "sigma": self.noise.sigma},
            "seed": self.seed,
        }


# -- reachability oracle ----------------------------------------------------


def reachability_step(env: SyntheticEnv, params: ReachabilityParams, S: np.ndarray) -> np.ndarray:
    """One application of the reachability operator on a membership mask.

    A point is added when, for every constraint, some already-reachable
    witness has enough true margin to certify it at 2*beta_bar accuracy:
    ``||g_i(a')|| - 2*beta_bar - L*||a - a'|| >= c_i``.
    """
    S = np.asarray(S, dtype=bool)
    if not S.any():
        return S.copy()
    dist = env.grid.pairwise_distances()
    src = np.flatnonzero(S)
    added = np.ones(len(env.grid), dtype=bool)
    for i, c_i in enumerate(env.thresholds):
        margin = env.g_norms[src, i] - 2.0 * params.beta_bar
        added &= (margin[:, None] - params.L * dist[src, :] >= c_i).any(axis=0)
    return S | added


def reachability_closure(env: SyntheticEnv, params: ReachabilityParams, S0: np.ndarray) -> np.ndarray:
    """Fixed point of :func:`reachability_step`; at most |grid| iterations."""
    S = np.asarray(S0, dtype=bool).copy()
    if not S.any():
        raise ValueError("closure needs a nonempty starting set")
    for _ in range(len(env.grid)):
        nxt = reachability_step(env, params, S)
        if np.array_equal(nxt, S):
            return S
        S = nxt
    return S


def true_safe_optimum(
    env: SyntheticEnv, params: ReachabilityParams, S0: np.ndarray
) -> tuple[int, float]:
    """Best true reward over the reachability closure (smallest index on ties)."""
    closure = reachability_closure(env, params, S0)
    rewards = np.where(closure, env.f_values, -np.inf)
    best = int(np.argmax(rewards))
    return best, float(env.f_values[best])


# -- benchmark registry ------------------------------------------------------


def _build_1d_linear(resolution: int, seed: int, noise: NoiseSpec):
    grid = ParameterGrid.regular([(-1.0, 1.0)], resolution)
    a = grid.points[:, 0]
    env = SyntheticEnv(
        name="1d-linear",
        grid=grid,
        f_values=a,
        g_values=[(1.0 - np.abs(a))[:, None]],
        thresholds=[0.0],
        seed_indices=[grid.nearest_index([0.0])],
        noise=noise,
        seed=seed,
    )
    return env, grid, list(env.seed_indices)


def _build_2d_quadratic(resolution: int, seed: int, noise: NoiseSpec):
    grid = ParameterGrid.regular([(-1.0, 1.0), (-1.0, 1.0)], resolution)
    peak = np.array([-0.35, -0.35])
    r = np.linalg.norm(grid.points, axis=1)
    f = 1.0 - 0.25 * np.sum((grid.points - peak) ** 2, axis=1)
    # Annular safe region: margin peaks on the ring ||a|| = 0.5 and the
    # seed sits at the band's center ring, opposite the reward peak.
    g = 0.35 - np.abs(r - 0.5)
    env = SyntheticEnv(
        name="2d-quadratic",
        grid=grid,
        f_values=f,
        g_values=[g[:, None]],
        thresholds=[0.0],
        seed_indices=[grid.nearest_index([0.5, 0.0])],
        noise=noise,
        seed=seed,
    )
    return env, grid, list(env.seed_indices)


def _build_2d_vector_constraint(resolution: int, seed: int, noise: NoiseSpec):
    grid = ParameterGrid.regular([(-1.0, 1.0), (-1.0, 1.0)], resolution)
    z = np.array([0.6, 0.6])
    f = -np.linalg.norm(grid.points - z, axis=1)
    env = SyntheticEnv(
        name="2d-vector-constraint",
        grid=grid,
        f_values=f,
        g_values=[grid.points - z],  # keep-out: ||a - z|| >= 0.35
        thresholds=[0.35],
        seed_indices=[grid.nearest_index([-0.5, -0.5])],
        noise=noise,
        seed=seed,
    )
    return env, grid, list(env.seed_indices)


def _build_disjoint_region(resolution: int, seed: int, noise: NoiseSpec):
    grid = ParameterGrid.regular([(-1.0, 1.0)], resolution)
    a = grid.points[:, 0]
    g = np.maximum(0.3 - np.abs(a + 0.6), 0.3 - np.abs(a - 0.6))
    env = SyntheticEnv(
        name="disjoint-region",
        grid=grid,
        f_values=a,
        g_values=[g[:, None]],
        thresholds=[0.0],
        seed_indices=[grid.nearest_index([-0.6])],
        noise=noise,
        seed=seed,
    )
    return env, grid, list(env.seed_indices)


_REGISTRY = {
    "1d-linear": _build_1d_linear,
    "2d-quadratic": _build_2d_quadratic,
    "2d-vector-constraint": _build_2d_vector_constraint,
    "disjoint-region": _build_disjoint_region,
}

BENCHMARK_NAMES = tuple(sorted(_REGISTRY))


def make_benchmark(
    name: str, resolution: int, seed: int, noise: NoiseSpec | None = None
):
    """Build a registered benchmark: returns (env, grid, safe-seed indices)."""
    if name not in _REGISTRY:
        raise KeyError(f"unknown benchmark {name!r}; choose from {BENCHMARK_NAMES}")
    if noise is None:
        noise = NoiseSpec()
    return _REGISTRY[name](int(resolution), int(seed), noise)
