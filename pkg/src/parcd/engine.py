"""The outer solver loop: Select -> Propose -> Accept -> Update.

Concurrency contract
--------------------
The dataset and design matrix are shared read-only. Proposals for a
selection are computed against a frozen view of the fitted values z and
write nothing shared, so the proposal multiset is independent of the
physical thread count. Accepted coordinates are refined against a snapshot
of z taken at the start of the update phase and applied in parallel:
distinct coordinates own distinct w entries, while overlapping z entries
are combined with atomic adds, so only floating-point summation order can
differ between thread counts. Shotgun instead fuses propose and update per
coordinate: its proposals read the live z (and may observe updates from the
same pass), with z writes still atomic so no update is lost. Cyclic and
stochastic selections are singletons; the engine executes them in batched
sweeps inside one kernel call, which is exactly the sequential semantics at
lower interpreter overhead.

Stopping
--------
A run ends when (a) the relative objective decrease over the last
sweep-equivalent (k coordinate updates) drops below the convergence
tolerance, (b) a full sweep-equivalent of proposals yields no accepted
update (the solver is stationary, e.g. the L1 dead zone at w = 0), or
(c) the iteration or wall-time budget runs out. If the objective ever
exceeds 10x its initial value at a trace point the run aborts with
DivergenceError (oversized parallel widths can diverge).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence

import numpy as np
from numba import get_num_threads, set_num_threads

from . import _kernels
from .coloring import FeatureColoring, color_features
from .data import Dataset
from .losses import Objective, objective_value
from .spectral import power_iteration
from .strategies import (
    ProposalBatch,
    StrategyConfig,
    accept,
    block_bounds,
    select,
    select_batch,
)


class DivergenceError(RuntimeError):
    """Objective blew past the divergence guard; names strategy and width."""


@dataclass
class ModelState:
    """Mutable solver state: weights w and fitted values z = X w."""

    w: np.ndarray
    z: np.ndarray

    @classmethod
    def zeros(cls, n_samples: int, n_features: int) -> "ModelState":
        return cls(np.zeros(n_features), np.zeros(n_samples))


@dataclass(frozen=True)
class RunConfig:
    objective: Objective
    strategy: StrategyConfig
    max_iterations: Optional[int] = None
    time_limit: Optional[float] = None
    convergence_tol: Optional[float] = 1e-8
    refine_steps: int = 500
    refine_tol: float = 1e-12
    trace_every_s: float = 0.1
    trace_every_iters: Optional[int] = None

    def __post_init__(self):
        if (
            self.max_iterations is None
            and self.time_limit is None
            and self.convergence_tol is None
        ):
            raise ValueError("need at least one of max_iterations/time_limit/convergence_tol")
        if self.refine_steps < 0:
            raise ValueError("refine_steps must be >= 0")


@dataclass
class TraceRecord:
    wall_time: float
    iterations: int
    total_updates: int
    objective: float
    nnz: int


@dataclass
class RunResult:
    state: ModelState
    trace: List[TraceRecord]
    converged: bool
    reason: str
    iterations: int
    total_updates: int
    elapsed_s: float


def _curvatures(data: Dataset, objective: Objective) -> np.ndarray:
    """Per-column quadratic coefficients; 0 marks all-zero columns (skipped)."""
    colsq = data.x.column_sq_norms()
    if objective.loss.kind == "squared":
        return colsq / data.x.n_samples
    return np.where(colsq > 0.0, objective.loss.beta, 0.0)


def propose_phase(
    data: Dataset,
    state: ModelState,
    j_set: np.ndarray,
    objective: Objective,
    threads: int = 1,
    curv: Optional[np.ndarray] = None,
) -> ProposalBatch:
    """Proposals for all of j_set against a frozen view of z.

    j_set is partitioned into contiguous per-thread blocks; nothing shared is
    written, so the result is independent of the physical thread count.
    """
    x = data.x
    if curv is None:
        curv = _curvatures(data, objective)
    derivs = np.empty(x.n_samples)
    _kernels.loss_derivs(objective.loss.code, data.y, state.z, derivs)
    j_set = np.ascontiguousarray(j_set, dtype=np.int64)
    deltas = np.empty(j_set.shape[0])
    proxies = np.empty(j_set.shape[0])
    _kernels.propose_kernel(
        x.col_starts, x.row_indices, x.values, derivs, state.w, j_set, curv,
        objective.lam, x.n_samples, deltas, proxies,
    )
    return ProposalBatch(j_set, deltas, proxies, block_bounds(j_set.shape[0], threads))


def update_phase(
    data: Dataset,
    state: ModelState,
    accepted: np.ndarray,
    objective: Objective,
    refine_steps: int = 500,
    refine_tol: float = 1e-12,
    curv: Optional[np.ndarray] = None,
    assume_disjoint: bool = False,
) -> int:
    """Refine and apply the accepted coordinates in parallel; returns the
    number of nonzero updates.

    Refinement reads a snapshot of z taken before any write, so every
    accepted coordinate sees the same pre-update state regardless of thread
    interleaving. ``assume_disjoint`` skips the snapshot copy when the
    accepted supports cannot overlap (color classes).
    """
    accepted = np.ascontiguousarray(accepted, dtype=np.int64)
    if accepted.shape[0] == 0:
        return 0
    x = data.x
    if curv is None:
        curv = _curvatures(data, objective)
    if assume_disjoint or accepted.shape[0] == 1:
        z_ref = state.z
    else:
        z_ref = state.z.copy()
    out_delta = np.empty(accepted.shape[0])
    _kernels.update_kernel(
        x.col_starts, x.row_indices, x.values, objective.loss.code, data.y,
        state.z, z_ref, state.w, accepted, curv, objective.lam, x.n_samples,
        refine_steps, refine_tol, out_delta,
    )
    return int(np.count_nonzero(out_delta))


def check_convergence(window: Sequence[TraceRecord], tol: float) -> bool:
    """True when the window shows a relative decrease in [0, tol).

    The engine hands in a window spanning at least one sweep-equivalent of
    updates. An objective increase over the window is not convergence.
    """
    if len(window) < 2:
        raise ValueError("need at least two trace records")
    first, last = window[0], window[-1]
    denom = max(abs(first.objective), 1e-300)
    decrease = (first.objective - last.objective) / denom
    return 0.0 <= decrease < tol


def _parallel_width(cfg: StrategyConfig, coloring: Optional[FeatureColoring]) -> int:
    if cfg.kind == "shotgun":
        return cfg.shotgun_p or 1
    if cfg.kind == "thread_greedy":
        return cfg.threads
    if cfg.kind == "coloring" and coloring is not None and coloring.num_colors:
        return max(cls.shape[0] for cls in coloring.classes)
    return 1


def resolve_strategy(data: Dataset, cfg: StrategyConfig) -> StrategyConfig:
    """Fill in the shotgun subset size with the P* estimate when unset."""
    if cfg.kind == "shotgun" and cfg.shotgun_p is None:
        est = power_iteration(data.x, seed=cfg.rng_seed)
        return replace(cfg, shotgun_p=est.p_star)
    return cfg


def run(
    data: Dataset,
    cfg: RunConfig,
    coloring: Optional[FeatureColoring] = None,
) -> RunResult:
    """Solve; returns the final state plus the convergence/throughput trace.

    Expects the dataset to be column-normalized already (the default CLI
    path does this) so the curvature-bound steps are valid descent steps.
    """
    x = data.x
    n, k = x.n_samples, x.n_features
    objective = cfg.objective
    if objective.loss.kind == "logistic":
        data.require_binary_labels()
    strategy = resolve_strategy(data, cfg.strategy)
    if strategy.kind == "coloring" and coloring is None:
        coloring = color_features(x)
    curv = _curvatures(data, objective)
    state = ModelState.zeros(n, k)
    all_coords = np.arange(k, dtype=np.int64)

    def current_objective() -> float:
        return (
            _kernels.loss_sum(objective.loss.code, data.y, state.z) / n
            + objective.lam * float(np.sum(np.abs(state.w)))
        )

    start = time.perf_counter()
    f0 = current_objective()
    trace = [TraceRecord(0.0, 0, 0, f0, 0)]
    iterations = 0
    total_updates = 0
    # coordinates whose proposal was zero against the current (unchanged)
    # state; full coverage certifies coordinate-wise stationarity
    stale = np.zeros(k, dtype=bool)
    n_stale = 0
    last_record_time = start
    last_record_iter = 0
    last_record_updates = 0
    converged = False
    reason = "max_iterations"

    prev_threads = get_num_threads()
    set_num_threads(min(max(strategy.threads, 1), _kernels.MAX_THREADS))
    try:
        while True:
            if cfg.max_iterations is not None and iterations >= cfg.max_iterations:
                reason = "max_iterations"
                break
            if cfg.time_limit is not None and time.perf_counter() - start >= cfg.time_limit:
                reason = "time_limit"
                break

            if strategy.kind in ("cyclic", "stochastic"):
                batch_len = k
                if cfg.max_iterations is not None:
                    batch_len = min(batch_len, cfg.max_iterations - iterations)
                if cfg.trace_every_iters is not None:
                    due_in = cfg.trace_every_iters - (iterations - last_record_iter)
                    batch_len = min(batch_len, max(1, due_in))
                j_seq = select_batch(strategy, iterations, k, batch_len)
                n_upd = _kernels.sequential_kernel(
                    x.col_starts, x.row_indices, x.values, objective.loss.code,
                    data.y, state.z, state.w, j_seq, curv, objective.lam, n,
                    cfg.refine_steps, cfg.refine_tol,
                )
                iterations += batch_len
                proposed = j_seq
            elif strategy.kind == "shotgun":
                j_set = select(strategy, iterations, k)
                n_upd = _kernels.shotgun_kernel(
                    x.col_starts, x.row_indices, x.values, objective.loss.code,
                    data.y, state.z, state.w, j_set, curv, objective.lam, n,
                    cfg.refine_steps, cfg.refine_tol,
                )
                n_upd = int(n_upd)
                iterations += 1
                proposed = j_set
            else:
                if strategy.kind in ("greedy", "thread_greedy") and (
                    strategy.thread_greedy_subset is None
                ):
                    j_set = all_coords
                else:
                    j_set = select(strategy, iterations, k, coloring=coloring)
                batch = propose_phase(
                    data, state, j_set, objective, threads=strategy.threads, curv=curv
                )
                chosen = accept(strategy, batch)
                n_upd = update_phase(
                    data, state, chosen, objective,
                    refine_steps=cfg.refine_steps, refine_tol=cfg.refine_tol,
                    curv=curv, assume_disjoint=strategy.kind == "coloring",
                )
                iterations += 1
                proposed = j_set

            total_updates += n_upd
            if n_upd == 0:
                stale[proposed] = True
                n_stale = int(np.count_nonzero(stale))
                if n_stale >= k:
                    converged = True
                    reason = "stationary"
                    break
            elif n_stale:
                stale[:] = False
                n_stale = 0

            now = time.perf_counter()
            if cfg.trace_every_iters is not None:
                sample_due = iterations - last_record_iter >= cfg.trace_every_iters
            else:
                sample_due = now - last_record_time >= cfg.trace_every_s
            if total_updates - last_record_updates >= k:
                sample_due = True
            if sample_due:
                obj = current_objective()
                trace.append(
                    TraceRecord(now - start, iterations, total_updates, obj,
                                int(np.count_nonzero(state.w)))
                )
                last_record_time = now
                last_record_iter = iterations
                last_record_updates = total_updates
                if obj > 10.0 * f0:
                    raise DivergenceError(
                        f"objective {obj:.6g} exceeded 10x its initial value "
                        f"{f0:.6g} (strategy={strategy.kind}, parallel "
                        f"width={_parallel_width(strategy, coloring)})"
                    )
                if cfg.convergence_tol is not None:
                    base = None
                    for m in range(len(trace) - 2, -1, -1):
                        if total_updates - trace[m].total_updates >= k:
                            base = m
                            break
                    if base is not None and check_convergence(
                        trace[base:], cfg.convergence_tol
                    ):
                        converged = True
                        reason = "objective_tol"
                        break
    finally:
        set_num_threads(prev_threads)

    elapsed = time.perf_counter() - start
    last = trace[-1]
    if last.iterations != iterations or last.total_updates != total_updates:
        trace.append(
            TraceRecord(elapsed, iterations, total_updates, current_objective(),
                        int(np.count_nonzero(state.w)))
        )
    return RunResult(state, trace, converged, reason, iterations, total_updates, elapsed)
