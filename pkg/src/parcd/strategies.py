"""Coordinate selection and proposal acceptance policies.

The solver variants differ only in which coordinates they propose each
iteration and which proposals they keep:

    cyclic         one coordinate, round robin         accept all
    stochastic     one uniform coordinate              accept all
    shotgun        random subset (default size P*)     accept all
    greedy         all coordinates                     single best proxy
    thread_greedy  all coordinates, per-thread blocks  best proxy per block
    coloring       one color class                     accept all
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional

import numpy as np

KINDS = ("cyclic", "stochastic", "shotgun", "greedy", "thread_greedy", "coloring")


@dataclass(frozen=True)
class StrategyConfig:
    kind: str
    threads: int = 1
    shotgun_p: Optional[int] = None
    rng_seed: int = 0
    # thread_greedy normally scans all coordinates; a subset size switches it
    # to proposing a random subset instead.
    thread_greedy_subset: Optional[int] = None
    # coloring picks a color uniformly by default; weighted mode picks a
    # random feature and uses its color (classes weighted by size).
    coloring_weighted: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown strategy kind {self.kind!r}")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")
        if self.shotgun_p is not None and self.shotgun_p < 1:
            raise ValueError("shotgun_p must be >= 1")
        if self.rng_seed < 0:
            raise ValueError("rng_seed must be >= 0")


def selection_rng(seed: int, iteration: int) -> np.random.Generator:
    """Generator determined by (seed, iteration) so selection is replayable."""
    return np.random.default_rng((seed, iteration))


def block_bounds(count: int, threads: int) -> np.ndarray:
    """Boundaries of contiguous, statically balanced per-thread blocks."""
    base, rem = divmod(count, threads)
    sizes = np.full(threads, base, dtype=np.int64)
    sizes[:rem] += 1
    bounds = np.zeros(threads + 1, dtype=np.int64)
    np.cumsum(sizes, out=bounds[1:])
    return bounds


@dataclass
class ProposalBatch:
    """Proposals for one iteration, partitioned into per-thread blocks."""

    indices: np.ndarray
    deltas: np.ndarray
    proxies: np.ndarray
    bounds: np.ndarray

    def blocks(self) -> List[slice]:
        return [
            slice(int(self.bounds[t]), int(self.bounds[t + 1]))
            for t in range(self.bounds.shape[0] - 1)
        ]


def select(
    cfg: StrategyConfig,
    iteration: int,
    k: int,
    coloring=None,
    rng: Optional[np.random.Generator] = None,
) -> np.ndarray:
    """Coordinates to propose this iteration, as a distinct int64 index array."""
    if cfg.kind == "coloring" and coloring is None:
        raise ValueError("coloring strategy requires a FeatureColoring")
    if rng is None:
        rng = selection_rng(cfg.rng_seed, iteration)
    if cfg.kind == "cyclic":
        return np.array([iteration % k], dtype=np.int64)
    if cfg.kind == "stochastic":
        return rng.integers(0, k, size=1, dtype=np.int64)
    if cfg.kind == "shotgun":
        if cfg.shotgun_p is None:
            raise ValueError("shotgun requires shotgun_p (engine fills in the P* default)")
        p = min(cfg.shotgun_p, k)
        return np.sort(rng.choice(k, size=p, replace=False)).astype(np.int64)
    if cfg.kind == "thread_greedy" and cfg.thread_greedy_subset is not None:
        m = min(cfg.thread_greedy_subset, k)
        return np.sort(rng.choice(k, size=m, replace=False)).astype(np.int64)
    if cfg.kind in ("greedy", "thread_greedy"):
        return np.arange(k, dtype=np.int64)
    # coloring
    if cfg.coloring_weighted:
        c = int(coloring.color_of[rng.integers(0, k)])
    else:
        c = int(rng.integers(0, coloring.num_colors))
    return coloring.classes[c]


def select_batch(cfg: StrategyConfig, iteration: int, k: int, count: int) -> np.ndarray:
    """Selections for `count` consecutive singleton iterations (cyclic/stochastic)."""
    if cfg.kind == "cyclic":
        return (iteration + np.arange(count, dtype=np.int64)) % k
    if cfg.kind == "stochastic":
        return selection_rng(cfg.rng_seed, iteration).integers(0, k, size=count, dtype=np.int64)
    raise ValueError(f"{cfg.kind} is not a singleton-selection strategy")


def _best_in(batch: ProposalBatch, sl: slice) -> int:
    """Feature index of the best strict-descent proposal in a block, or -1.

    Best means most negative proxy; ties break toward the smallest feature
    index; zero increments and zero proxies are never accepted.
    """
    deltas = batch.deltas[sl]
    proxies = batch.proxies[sl]
    mask = (deltas != 0.0) & (proxies < 0.0)
    if not np.any(mask):
        return -1
    cand = np.nonzero(mask)[0]
    best = proxies[cand].min()
    winners = batch.indices[sl][cand[proxies[cand] == best]]
    return int(winners.min())


def accept(cfg: StrategyConfig, batch: ProposalBatch) -> np.ndarray:
    """Accepted feature indices for this iteration's proposals."""
    if cfg.kind in ("cyclic", "stochastic", "shotgun", "coloring"):
        return batch.indices[batch.deltas != 0.0]
    if cfg.kind == "greedy":
        full = slice(0, batch.indices.shape[0])
        j = _best_in(batch, full)
        return np.empty(0, dtype=np.int64) if j < 0 else np.array([j], dtype=np.int64)
    # thread_greedy: each block accepts its own best, no cross-block reduction
    out = [j for sl in batch.blocks() if (j := _best_in(batch, sl)) >= 0]
    return np.asarray(sorted(out), dtype=np.int64)
