"""High-probability error bounds for the kernel-regression estimate.

The half-width ``beta`` combines the smoothing bias ``L * lam`` with a
sub-Gaussian concentration term driven by the kernel mass ``kappa``.  The
companion budget functions answer the planning question: how many
in-support samples guarantee a half-width of at most ``beta_bar``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = ["BoundConfig", "UncertaintyBudget", "beta", "beta_array", "beta_bar_bound", "n_beta_bar"]


@dataclass(frozen=True)
class BoundConfig:
    """Constants entering the confidence half-width.

    Parameters
    ----------
    L : float
        Common Lipschitz constant of the reward and constraints.
    lam : float
        Kernel bandwidth (support radius of the scaled kernel).
    sigma : float
        Sub-Gaussian proxy standard deviation of the observation noise.
    delta : float
        Total failure probability, in (0, 1).
    D : int
        Upper bound on the number of grid points.
    m : tuple of int
        Output dimension per index; ``m[0]`` must be 1.
    chi_K : float
        Kernel lower-bound constant; only the sample-count budget uses it.
    """

    L: float
    lam: float
    sigma: float
    delta: float
    D: int
    m: tuple = (1,)
    chi_K: float = field(default=1.0)

    def __post_init__(self):
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if self.L < 0:
            raise ValueError("L must be nonnegative")
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if self.lam <= 0:
            raise ValueError("lam must be positive")
        if self.D < 1:
            raise ValueError("D must be a positive integer")
        m = tuple(int(v) for v in self.m)
        if not m or m[0] != 1:
            raise ValueError("m[0] (reward dimension) must be 1")
        if any(v < 1 for v in m):
            raise ValueError("all output dimensions must be >= 1")
        object.__setattr__(self, "m", m)

    @property
    def bias(self) -> float:
        return self.L * self.lam

    def m_of(self, i: int) -> int:
        return self.m[i]


def beta(cfg: BoundConfig, kappa: float, i: int) -> float:
    """Confidence half-width at kernel mass ``kappa`` for output index ``i``.

    Three regimes: +inf with no local information (kappa = 0), a
    fixed-log term for 0 < kappa <= 1, and a kappa-discounted log term
    beyond.  The two finite branches agree at kappa = 1.
    """
    if kappa < 0:
        raise ValueError("kappa must be nonnegative")
    if kappa == 0.0:
        return math.inf
    m_i = cfg.m_of(i)
    if kappa <= 1.0:
        log_term = math.log(2.0 ** (m_i / 2.0) * cfg.D / cfg.delta)
        return cfg.bias + (2.0 * cfg.sigma / kappa) * math.sqrt(log_term)
    log_term = math.log(cfg.D * (1.0 + kappa) ** (m_i / 2.0) / cfg.delta)
    return cfg.bias + (2.0 * cfg.sigma / kappa) * math.sqrt(kappa * log_term)


def beta_array(cfg: BoundConfig, kappas: np.ndarray, i: int) -> np.ndarray:
    """Vectorized :func:`beta` over an array of kernel masses."""
    kappas = np.asarray(kappas, dtype=float)
    m_i = cfg.m_of(i)
    out = np.full(kappas.shape, np.inf)
    small = (kappas > 0) & (kappas <= 1.0)
    large = kappas > 1.0
    if np.any(small):
        log_term = math.log(2.0 ** (m_i / 2.0) * cfg.D / cfg.delta)
        out[small] = cfg.bias + (2.0 * cfg.sigma / kappas[small]) * math.sqrt(log_term)
    if np.any(large):
        k = kappas[large]
        log_term = np.log(cfg.D * (1.0 + k) ** (m_i / 2.0) / cfg.delta)
        out[large] = cfg.bias + (2.0 * cfg.sigma / k) * np.sqrt(k * log_term)
    return out


def beta_bar_bound(cfg: BoundConfig, N: int) -> float:
    """Guaranteed half-width after N in-support samples of one point.

    ``L*lam + 2*sigma*max(alpha_1, alpha_2(N)) / (N * chi_K)``; decreases
    to the bias floor ``L*lam`` as N grows.
    """
    if N < 1:
        raise ValueError("N must be a positive integer")
    if cfg.chi_K <= 0:
        raise ValueError("chi_K must be positive to budget samples")
    alpha1 = math.sqrt(math.log(math.sqrt(2.0) * cfg.D / cfg.delta))
    nchi = N * cfg.chi_K
    alpha2 = math.sqrt(nchi * math.log(cfg.D * math.sqrt(1.0 + nchi) / cfg.delta))
    return cfg.bias + 2.0 * cfg.sigma * max(alpha1, alpha2) / nchi


@dataclass(frozen=True)
class UncertaintyBudget:
    """A target half-width together with the sample count achieving it."""

    beta_bar: float
    n_beta_bar: int


def n_beta_bar(cfg: BoundConfig, beta_bar: float) -> UncertaintyBudget:
    """Smallest N with ``beta_bar_bound(N) <= beta_bar``.

    The bound is strictly decreasing in N (for D/delta > 1, which the
    config guarantees), so doubling followed by bisection finds the exact
    minimum.
    """
    if beta_bar <= cfg.bias:
        raise ValueError(
            f"unreachable accuracy: beta_bar = {beta_bar} must exceed L*lam = {cfg.bias}"
        )
    hi = 1
    while beta_bar_bound(cfg, hi) > beta_bar:
        hi *= 2
        if hi > 2**62:
            raise RuntimeError("sample budget search failed to terminate")
    if hi == 1:
        return UncertaintyBudget(beta_bar, 1)
    lo = hi // 2  # bound(lo) > beta_bar, bound(hi) <= beta_bar
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if beta_bar_bound(cfg, mid) <= beta_bar:
            hi = mid
        else:
            lo = mid
    return UncertaintyBudget(beta_bar, hi)
