"""Partial distance-2 coloring of the sample-feature bipartite graph.

Two features conflict when their columns share any row; features of one
color class therefore have pairwise disjoint supports and can be updated
concurrently without synchronization. Coloring is a single-threaded
preprocessing step; the result is immutable.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List

import numpy as np

from . import _kernels
from .data import DesignMatrix


@dataclass
class FeatureColoring:
    color_of: np.ndarray
    classes: List[np.ndarray]
    num_colors: int


def color_features(x: DesignMatrix, balanced: bool = False) -> FeatureColoring:
    """Greedy first-fit coloring over features in ascending index order.

    For each feature the forbidden set is the colors of already-colored
    features sharing any row, found by scanning per-row feature lists.
    ``balanced`` assigns the least loaded admissible color instead of the
    smallest, trading color count for evener class sizes.
    """
    k = x.n_features
    if k == 0:
        return FeatureColoring(np.empty(0, dtype=np.int64), [], 0)
    # per-row feature lists in ascending feature order (CSR of the pattern)
    counts = np.bincount(x.row_indices, minlength=x.n_samples)
    row_starts = np.zeros(x.n_samples + 1, dtype=np.int64)
    np.cumsum(counts, out=row_starts[1:])
    order = np.argsort(x.row_indices, kind="stable")
    row_features = np.repeat(np.arange(k, dtype=np.int64), np.diff(x.col_starts))[order]
    color_of, num_colors = _kernels.first_fit_coloring(
        x.col_starts, x.row_indices, row_starts, row_features, k, balanced
    )
    classes = [
        np.nonzero(color_of == c)[0].astype(np.int64) for c in range(num_colors)
    ]
    return FeatureColoring(color_of, classes, num_colors)


def coloring_stats(coloring: FeatureColoring) -> dict:
    sizes = np.array([cls.shape[0] for cls in coloring.classes], dtype=np.int64)
    if sizes.shape[0] == 0:
        return {"num_colors": 0, "mean_size": 0.0, "min_size": 0, "max_size": 0}
    return {
        "num_colors": coloring.num_colors,
        "mean_size": float(sizes.mean()),
        "min_size": int(sizes.min()),
        "max_size": int(sizes.max()),
    }
