"""The safe-exploration loop: acquisition, best guess, and stopping.

Each iteration refreshes the contained-set intervals from the current
estimator state, recomputes the safe / maximizer / expander sets, samples
the most uncertain candidate, and feeds the measurement back into the
estimator.  The loop stops once the safe set is stable and every candidate
is known to within twice the target accuracy.

The estimator is abstracted behind a small belief-model interface so the
same loop drives both the kernel-regression path and the GP baseline:

- ``q_intervals(indices) -> (lo, hi)`` confidence intervals per output,
- ``add(index, measurement)`` ingest an observation,
- ``changed_indices(index)`` grid points whose intervals the observation
  can move (compact kernels: a bandwidth ball; GPs: everything),
- ``kappa_at(index)`` local effective sample count (trace bookkeeping),
- ``half_width_floor`` smallest achievable half-width (0 if none).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .bounds import BoundConfig, beta
from .errors import ConfigError
from .estimator import Measurement, SampleStore
from .grids import ParameterGrid
from .kernels import KernelSpec
from .sets import (
    IntervalTable,
    SafeSetState,
    confidence_interval,
    update_expanders,
    update_maximizers,
    update_safe_set,
)

__all__ = [
    "NadarayaWatsonModel",
    "RunResult",
    "SafeOptimizer",
    "StoppingConfig",
    "TraceRecord",
    "best_guess",
    "select_next",
]


@dataclass(frozen=True)
class StoppingConfig:
    """Target accuracy for the stop rule plus a hard iteration cap."""

    beta_bar: float
    max_iterations: int

    def __post_init__(self):
        if self.beta_bar <= 0:
            raise ConfigError("beta_bar must be positive")
        if self.max_iterations < 1:
            raise ConfigError("max_iterations must be >= 1")


@dataclass
class TraceRecord:
    """Everything observable about one iteration."""

    n: int
    a_index: int
    a_coords: tuple
    measurements: Measurement
    kappa: float
    widths: tuple  # w(a_n, i) per output index, at selection time
    S_size: int
    M_size: int
    G_size: int
    best_index: int
    best_l: float
    update_seconds: float
    violation_events: int  # cumulative bound-failure count so far

    @property
    def max_width(self) -> float:
        return max(self.widths)


@dataclass
class RunResult:
    best_index: int
    best_coords: tuple
    best_l: float
    stop_reason: str  # "converged" | "max_iterations" | "forced"
    trace: list = field(default_factory=list)
    violation_events: int = 0
    invariant_failures: list = field(default_factory=list)

    @property
    def converged(self) -> bool:
        return self.stop_reason == "converged"

    @property
    def iterations(self) -> int:
        return len(self.trace)


def select_next(state: SafeSetState, table: IntervalTable) -> int:
    """Candidate with the largest worst-case width across all outputs.

    Infinite widths dominate; ties go to the smallest grid index.
    """
    cand = np.flatnonzero(state.candidates())
    if cand.size == 0:
        raise RuntimeError("stalled: no maximizer or expander candidates")
    per_cand = table.widths()[cand].max(axis=1)
    return int(cand[np.argmax(per_cand)])


def best_guess(state: SafeSetState, table: IntervalTable) -> tuple[int, float]:
    """Safe point with the greatest pessimistic reward (smallest index on ties)."""
    safe = np.flatnonzero(state.S)
    if safe.size == 0:
        raise RuntimeError("safe set is empty")
    j = int(np.argmax(table.lower[safe, 0]))
    idx = int(safe[j])
    return idx, float(table.lower[idx, 0])


class NadarayaWatsonModel:
    """Kernel-regression belief model: local estimates + concentration bound."""

    def __init__(self, grid: ParameterGrid, kernel: KernelSpec, cfg: BoundConfig):
        self.grid = grid
        self.kernel = kernel
        self.cfg = cfg
        self.store = SampleStore(grid.dim, cfg.m, cell=kernel.lam)

    @property
    def output_dims(self) -> tuple:
        return self.cfg.m

    @property
    def half_width_floor(self) -> float:
        return self.cfg.bias

    def q_intervals(self, indices: np.ndarray):
        k = len(indices)
        q1 = len(self.cfg.m)
        lo = np.empty((k, q1))
        hi = np.empty((k, q1))
        for row, idx in enumerate(indices):
            kappa, mus = self.store.local_estimate(self.kernel, self.grid.points[idx])
            for i in range(q1):
                b = beta(self.cfg, kappa, i)
                lo[row, i], hi[row, i] = confidence_interval(mus[i], b, i)
        return lo, hi

    def add(self, index: int, measurement: Measurement) -> None:
        self.store.add_sample(self.grid.points[index], measurement)

    def changed_indices(self, index: int) -> np.ndarray:
        return self.grid.indices_within(self.grid.points[index], self.kernel.lam)

    def kappa_at(self, index: int) -> float:
        return self.store.kappa(self.kernel, self.grid.points[index])


class _InvariantMonitor:
    """Per-iteration checks of the set/interval monotonicity laws."""

    def __init__(self, table: IntervalTable, state: SafeSetState):
        self.prev_lower, self.prev_upper = table.copy_bounds()
        self.prev_S = state.S.copy()
        self.prev_MG = None
        self.failures: list[str] = []

    def check(self, table, state, safe_set_changed: bool, a_index: int, n: int, tol=1e-9):
        if np.any(table.upper > self.prev_upper + tol):
            self.failures.append(f"n={n}: upper bound increased")
        if np.any(table.lower < self.prev_lower - tol):
            self.failures.append(f"n={n}: lower bound decreased")
        widths = table.upper - table.lower
        prev_widths = self.prev_upper - self.prev_lower
        shrank = widths > prev_widths + tol
        # inf - inf stays inf; only finite-width growth is a failure
        if np.any(shrank & np.isfinite(widths) & np.isfinite(prev_widths)):
            self.failures.append(f"n={n}: width increased")
        if np.any(self.prev_S & ~state.S):
            self.failures.append(f"n={n}: safe set shrank")
        if not (state.M[a_index] or state.G[a_index]):
            self.failures.append(f"n={n}: sampled point outside candidate set")
        mg = state.M | state.G
        if not safe_set_changed and self.prev_MG is not None:
            if np.any(mg & ~self.prev_MG):
                self.failures.append(f"n={n}: candidate set grew while safe set stalled")
        self.prev_lower, self.prev_upper = table.copy_bounds()
        self.prev_S = state.S.copy()
        self.prev_MG = mg


class SafeOptimizer:
    """Drives one exploration run over a grid with a belief model."""

    def __init__(
        self,
        grid: ParameterGrid,
        model,
        L: float,
        thresholds,
        seed_indices,
        check_invariants: bool = True,
    ):
        self.grid = grid
        self.model = model
        self.L = float(L)
        self.thresholds = tuple(float(c) for c in thresholds)
        self.state = SafeSetState.from_seed(len(grid), seed_indices)
        self.table = IntervalTable.initial(len(grid), self.thresholds, np.asarray(seed_indices))
        self._pending = np.empty(0, dtype=int)
        self.safe_set_changed = False
        self.monitor = _InvariantMonitor(self.table, self.state) if check_invariants else None

    def step(self, env) -> TraceRecord:
        """One full iteration: refresh intervals, update sets, sample, learn.

        The timed section covers exactly the decision-making work (interval
        refresh, the three set updates, and candidate selection); observing
        and ingesting the measurement are excluded.
        """
        t0 = time.perf_counter()
        if self._pending.size:
            lo, hi = self.model.q_intervals(self._pending)
            self.table.intersect_many(self._pending, lo, hi)
            self._pending = np.empty(0, dtype=int)
        S_prev = self.state.S
        update_safe_set(self.state, self.table, self.grid, self.L, self.thresholds)
        update_maximizers(self.state, self.table)
        update_expanders(self.state, self.table, self.grid, self.L, self.thresholds)
        a_index = select_next(self.state, self.table)
        update_seconds = time.perf_counter() - t0

        self.safe_set_changed = not np.array_equal(S_prev, self.state.S)
        widths = tuple(float(w) for w in self.table.widths()[a_index])
        kappa = float(self.model.kappa_at(a_index))
        best_index, best_l = best_guess(self.state, self.table)

        measurement = env.observe(a_index)
        self.model.add(a_index, measurement)
        self._pending = self.model.changed_indices(a_index)
        self.state.n += 1

        if self.monitor is not None:
            self.monitor.check(
                self.table, self.state, self.safe_set_changed, a_index, self.state.n
            )
        return TraceRecord(
            n=self.state.n,
            a_index=a_index,
            a_coords=tuple(float(c) for c in self.grid.coords(a_index)),
            measurements=measurement,
            kappa=kappa,
            widths=widths,
            S_size=int(np.count_nonzero(self.state.S)),
            M_size=int(np.count_nonzero(self.state.M)),
            G_size=int(np.count_nonzero(self.state.G)),
            best_index=best_index,
            best_l=best_l,
            update_seconds=update_seconds,
            violation_events=self.table.violation_events,
        )

    def _check_seed_safety(self, env) -> None:
        for s in np.flatnonzero(self.state.S):
            if env.violates(int(s)):
                raise ConfigError(
                    f"safe seed index {int(s)} violates the environment's constraints"
                )

    def run(self, env, stopping: StoppingConfig) -> RunResult:
        """Iterate until the stop rule fires or the iteration cap is hit."""
        if stopping.beta_bar <= self.model.half_width_floor:
            raise ConfigError(
                f"beta_bar = {stopping.beta_bar} not achievable: "
                f"half-width floor is {self.model.half_width_floor}"
            )
        self._check_seed_safety(env)
        trace: list[TraceRecord] = []
        stop_reason = "max_iterations"
        for _ in range(stopping.max_iterations):
            rec = self.step(env)
            trace.append(rec)
            if not self.safe_set_changed and rec.max_width <= 2.0 * stopping.beta_bar:
                stop_reason = "converged"
                break
        return self._result(stop_reason, trace)

    def run_forced(self, env, n_iterations: int) -> RunResult:
        """Run exactly n iterations with the stop rule disabled."""
        self._check_seed_safety(env)
        trace = [self.step(env) for _ in range(int(n_iterations))]
        return self._result("forced", trace)

    def _result(self, stop_reason: str, trace: list) -> RunResult:
        best_index, best_l = best_guess(self.state, self.table)
        return RunResult(
            best_index=best_index,
            best_coords=tuple(float(c) for c in self.grid.coords(best_index)),
            best_l=best_l,
            stop_reason=stop_reason,
            trace=trace,
            violation_events=self.table.violation_events,
            invariant_failures=list(self.monitor.failures) if self.monitor else [],
        )
