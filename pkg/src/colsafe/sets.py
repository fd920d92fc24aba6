"""Interval bookkeeping and the safe / maximizer / expander set updates.

Per grid point and output index we track the running intersection of all
confidence intervals seen so far (the contained set), whose endpoints
``l <= u`` can only tighten over time.  The set updates are exact
comprehensions over the grid, vectorized with the cached pairwise-distance
matrix; they must match a naive triple-loop implementation bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grids import ParameterGrid

__all__ = [
    "IntervalTable",
    "SafeSetState",
    "confidence_interval",
    "intersect_contained",
    "update_safe_set",
    "update_maximizers",
    "update_expanders",
]


class IntervalTable:
    """Extended-real intervals [l, u] per (grid point, output index).

    Index 0 is the reward; indices 1..q are constraint-norm intervals.
    Intersection never widens an entry, and an empty intersection leaves
    the entry unchanged while counting a confidence-violation event (the
    bound failed, which happens with probability at most delta).
    """

    def __init__(self, n_points: int, n_indices: int):
        self.lower = np.full((n_points, n_indices), -np.inf)
        self.upper = np.full((n_points, n_indices), np.inf)
        self.violation_events = 0

    @staticmethod
    def initial(n_points: int, thresholds, safe_seed: np.ndarray) -> "IntervalTable":
        """Starting intervals: seeds are certified at their thresholds.

        Constraint entries start at [max(c_i, 0), inf) on the seed (norms
        are nonnegative, so the clip only tightens) and [0, inf) elsewhere;
        the reward entry starts unbounded everywhere.
        """
        thresholds = np.asarray(thresholds, dtype=float)
        table = IntervalTable(n_points, len(thresholds) + 1)
        table.lower[:, 1:] = 0.0
        table.lower[safe_seed, 1:] = np.maximum(thresholds, 0.0)
        return table

    @property
    def n_indices(self) -> int:
        return self.lower.shape[1]

    def l(self, a: int, i: int) -> float:
        return float(self.lower[a, i])

    def u(self, a: int, i: int) -> float:
        return float(self.upper[a, i])

    def w(self, a: int, i: int) -> float:
        return float(self.upper[a, i] - self.lower[a, i])

    def widths(self) -> np.ndarray:
        return self.upper - self.lower

    def copy_bounds(self):
        return self.lower.copy(), self.upper.copy()

    def intersect_many(self, idx: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> int:
        """Intersect entries at grid indices ``idx`` with intervals (lo, hi).

        ``lo``/``hi`` have shape (len(idx), n_indices).  Returns the number
        of empty intersections encountered (those entries are kept).
        """
        cur_lo = self.lower[idx]
        cur_hi = self.upper[idx]
        new_lo = np.maximum(cur_lo, lo)
        new_hi = np.minimum(cur_hi, hi)
        bad = new_lo > new_hi
        n_bad = int(np.count_nonzero(bad))
        if n_bad:
            new_lo[bad] = cur_lo[bad]
            new_hi[bad] = cur_hi[bad]
            self.violation_events += n_bad
        self.lower[idx] = new_lo
        self.upper[idx] = new_hi
        return n_bad


def confidence_interval(mu_val, beta_val: float, i: int) -> tuple[float, float]:
    """Interval induced by an estimate and half-width for output index i.

    Reward intervals are symmetric around the scalar estimate; constraint
    intervals are built around the norm of the vector estimate and clipped
    at 0.  With no information (``mu_val`` None / infinite half-width) the
    interval is the full admissible range.
    """
    if mu_val is None or math.isinf(beta_val):
        return (-math.inf, math.inf) if i == 0 else (0.0, math.inf)
    if i == 0:
        center = float(np.asarray(mu_val).reshape(()))
        return center - beta_val, center + beta_val
    center = float(np.linalg.norm(np.asarray(mu_val, dtype=float)))
    return max(0.0, center - beta_val), center + beta_val


def intersect_contained(table: IntervalTable, a: int, i: int, q: tuple[float, float]) -> bool:
    """Intersect one entry with interval ``q``; True if a violation occurred."""
    lo, hi = q
    new_lo = max(table.lower[a, i], lo)
    new_hi = min(table.upper[a, i], hi)
    if new_lo > new_hi:
        table.violation_events += 1
        return True
    table.lower[a, i] = new_lo
    table.upper[a, i] = new_hi
    return False


@dataclass
class SafeSetState:
    """Membership masks over the grid plus the iteration counter."""

    S: np.ndarray
    M: np.ndarray = field(default=None)
    G: np.ndarray = field(default=None)
    n: int = 0

    def __post_init__(self):
        self.S = np.asarray(self.S, dtype=bool)
        if self.M is None:
            self.M = np.zeros_like(self.S)
        if self.G is None:
            self.G = np.zeros_like(self.S)

    @staticmethod
    def from_seed(n_points: int, seed_indices) -> "SafeSetState":
        S = np.zeros(n_points, dtype=bool)
        S[np.asarray(seed_indices, dtype=int)] = True
        if not S.any():
            raise ValueError("safe seed must be nonempty")
        return SafeSetState(S=S)

    def candidates(self) -> np.ndarray:
        return self.M | self.G


def update_safe_set(
    state: SafeSetState,
    table: IntervalTable,
    grid: ParameterGrid,
    L: float,
    thresholds,
) -> SafeSetState:
    """Grow the safe set by Lipschitz propagation of pessimistic bounds.

    A point enters the new safe set iff, for every constraint, some
    previously safe point certifies it: ``l(a, i) - L*||a - a'|| >= c_i``.
    The previous safe set is always contained in the result (each safe
    point certifies itself since its lower bound never drops below its
    threshold); that containment is asserted, not patched up.
    """
    S_prev = state.S
    if not S_prev.any():
        raise ValueError("previous safe set must be nonempty")
    dist = grid.pairwise_distances()
    prev_idx = np.flatnonzero(S_prev)
    new_S = np.ones(len(grid), dtype=bool)
    for i, c_i in enumerate(thresholds, start=1):
        li = table.lower[prev_idx, i]
        certified = (li[:, None] - L * dist[prev_idx, :] >= c_i).any(axis=0)
        new_S &= certified
    assert bool(np.all(new_S[S_prev])), "safe set shrank; interval monotonicity broken"
    state.S = new_S
    return state


def update_maximizers(state: SafeSetState, table: IntervalTable) -> SafeSetState:
    """Safe points whose optimistic reward beats the best pessimistic one."""
    S = state.S
    if not S.any():
        raise ValueError("safe set must be nonempty")
    best_l = np.max(table.lower[S, 0])
    M = np.zeros_like(S)
    M[S] = table.upper[S, 0] >= best_l
    state.M = M
    return state


def update_expanders(
    state: SafeSetState,
    table: IntervalTable,
    grid: ParameterGrid,
    L: float,
    thresholds,
) -> SafeSetState:
    """Safe points whose optimistic constraint could certify an unsafe one."""
    S = state.S
    G = np.zeros_like(S)
    outside = np.flatnonzero(~S)
    if outside.size == 0:
        state.G = G
        return state
    dist = grid.pairwise_distances()
    safe_idx = np.flatnonzero(S)
    d_out = dist[np.ix_(safe_idx, outside)]
    expands = np.zeros(safe_idx.size, dtype=bool)
    for i, c_i in enumerate(thresholds, start=1):
        ui = table.upper[safe_idx, i]
        expands |= (ui[:, None] - L * d_out >= c_i).any(axis=1)
    G[safe_idx] = expands
    state.G = G
    return state
