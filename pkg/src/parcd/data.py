"""Sparse column-major design matrices and LibSVM-style dataset I/O.

Coordinate descent only ever walks columns, so the matrix is stored in
compressed sparse column form and is immutable once built.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import _kernels


class ParseError(ValueError):
    """Malformed input file; message carries the offending line number."""


@dataclass
class DesignMatrix:
    """Immutable CSC feature matrix (n_samples x n_features).

    col_starts has length n_features + 1; row_indices are strictly
    increasing within each column; stored values are nonzero.
    """

    n_samples: int
    n_features: int
    col_starts: np.ndarray
    row_indices: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.col_starts = np.ascontiguousarray(self.col_starts, dtype=np.int64)
        self.row_indices = np.ascontiguousarray(self.row_indices, dtype=np.int64)
        self.values = np.ascontiguousarray(self.values, dtype=np.float64)

    @property
    def nnz(self) -> int:
        return int(self.values.shape[0])

    def validate(self) -> None:
        k = self.n_features
        if self.col_starts.shape[0] != k + 1:
            raise ValueError("col_starts must have length n_features + 1")
        if self.col_starts[0] != 0 or self.col_starts[k] != self.nnz:
            raise ValueError("col_starts must start at 0 and end at nnz")
        if np.any(np.diff(self.col_starts) < 0):
            raise ValueError("col_starts must be non-decreasing")
        if self.row_indices.shape[0] != self.nnz:
            raise ValueError("row_indices length must equal nnz")
        if self.nnz:
            if self.row_indices.min() < 0 or self.row_indices.max() >= self.n_samples:
                raise ValueError("row index out of range")
            if np.any(self.values == 0.0):
                raise ValueError("stored values must be nonzero")
        for j in range(k):
            rows = self.row_indices[self.col_starts[j]:self.col_starts[j + 1]]
            if rows.shape[0] > 1 and np.any(np.diff(rows) <= 0):
                raise ValueError(f"row indices not strictly increasing in column {j}")

    @classmethod
    def from_dense(cls, dense) -> "DesignMatrix":
        dense = np.asarray(dense, dtype=np.float64)
        n, k = dense.shape
        cols = []
        rows = []
        vals = []
        starts = np.zeros(k + 1, dtype=np.int64)
        for j in range(k):
            nz = np.nonzero(dense[:, j])[0]
            rows.append(nz)
            vals.append(dense[nz, j])
            starts[j + 1] = starts[j] + nz.shape[0]
        row_indices = np.concatenate(rows) if rows else np.empty(0, dtype=np.int64)
        values = np.concatenate(vals) if vals else np.empty(0)
        return cls(n, k, starts, row_indices, values)

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.n_samples, self.n_features))
        for j in range(self.n_features):
            sl = slice(self.col_starts[j], self.col_starts[j + 1])
            out[self.row_indices[sl], j] = self.values[sl]
        return out

    def column(self, j: int):
        """(row indices, values) views of column j."""
        sl = slice(self.col_starts[j], self.col_starts[j + 1])
        return self.row_indices[sl], self.values[sl]

    def column_sq_norms(self) -> np.ndarray:
        return _kernels.column_sq_norms(self.col_starts, self.values, self.n_features)

    def matvec(self, v: np.ndarray) -> np.ndarray:
        out = np.empty(self.n_samples)
        _kernels.matvec(self.col_starts, self.row_indices, self.values, v, out)
        return out

    def rmatvec(self, u: np.ndarray) -> np.ndarray:
        out = np.empty(self.n_features)
        _kernels.rmatvec(self.col_starts, self.row_indices, self.values, u, out)
        return out


@dataclass
class Dataset:
    x: DesignMatrix
    y: np.ndarray

    def __post_init__(self):
        self.y = np.ascontiguousarray(self.y, dtype=np.float64)
        if self.y.shape[0] != self.x.n_samples:
            raise ValueError("y length must equal n_samples")

    def require_binary_labels(self) -> None:
        """Logistic loss needs y in {-1, +1}."""
        if not np.all(np.isin(self.y, (-1.0, 1.0))):
            raise ValueError(
                "logistic loss requires labels in {-1, +1}; "
                "remap raw labels (e.g. with a threshold rule) first"
            )


def load_libsvm(
    path,
    n_features: Optional[int] = None,
    label_map: Optional[Callable[[float], float]] = None,
) -> Dataset:
    """Read a LibSVM/SVMlight sparse text file into a column-major Dataset.

    Each non-blank line is ``label idx:val ...`` with 1-based indices that
    must be strictly increasing within the line. Explicit zero values are
    dropped. ``#`` starts a comment. ``n_features`` overrides the feature
    count when the file underpopulates the declared dimensionality;
    ``label_map`` remaps raw labels (for building +/-1 responses).
    """
    labels = []
    row_of = []
    col_of = []
    val_of = []
    row = 0
    with open(path, "r") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            try:
                label = float(parts[0])
            except ValueError:
                raise ParseError(f"{path}: line {lineno}: bad label {parts[0]!r}") from None
            prev_idx = 0
            for tok in parts[1:]:
                idx_s, _, val_s = tok.partition(":")
                try:
                    idx = int(idx_s)
                    val = float(val_s)
                except ValueError:
                    raise ParseError(
                        f"{path}: line {lineno}: bad feature pair {tok!r}"
                    ) from None
                if idx < 1:
                    raise ParseError(f"{path}: line {lineno}: index {idx} must be >= 1")
                if idx == prev_idx:
                    raise ParseError(
                        f"{path}: line {lineno}: duplicate entry for feature {idx}"
                    )
                if idx < prev_idx:
                    raise ParseError(
                        f"{path}: line {lineno}: feature indices not strictly increasing"
                    )
                prev_idx = idx
                if n_features is not None and idx > n_features:
                    raise ParseError(
                        f"{path}: line {lineno}: feature {idx} exceeds declared "
                        f"count {n_features}"
                    )
                if val != 0.0:
                    row_of.append(row)
                    col_of.append(idx - 1)
                    val_of.append(val)
            labels.append(label_map(label) if label_map else label)
            row += 1
    if row == 0:
        raise ParseError(f"{path}: no samples")
    k = n_features if n_features is not None else (max(col_of) + 1 if col_of else 0)
    cols = np.asarray(col_of, dtype=np.int64)
    rows = np.asarray(row_of, dtype=np.int64)
    vals = np.asarray(val_of, dtype=np.float64)
    order = np.argsort(cols, kind="stable")  # rows stay ascending within columns
    cols = cols[order]
    rows = rows[order]
    vals = vals[order]
    starts = np.zeros(k + 1, dtype=np.int64)
    np.cumsum(np.bincount(cols, minlength=k), out=starts[1:])
    x = DesignMatrix(row, k, starts, rows, vals)
    return Dataset(x, np.asarray(labels))


def save_libsvm(dataset: Dataset, path) -> None:
    """Write a Dataset back to LibSVM text with round-trippable precision."""
    x = dataset.x
    cols = np.repeat(np.arange(x.n_features, dtype=np.int64), np.diff(x.col_starts))
    order = np.lexsort((cols, x.row_indices))
    rows = x.row_indices[order]
    cols = cols[order]
    vals = x.values[order]
    bounds = np.searchsorted(rows, np.arange(x.n_samples + 1))
    with open(path, "w") as fh:
        for i in range(x.n_samples):
            pairs = [
                f"{cols[p] + 1}:{vals[p]:.17g}" for p in range(bounds[i], bounds[i + 1])
            ]
            fh.write(" ".join([f"{dataset.y[i]:.17g}"] + pairs) + "\n")


def normalize_columns(x: DesignMatrix):
    """Scale every nonempty column to unit Euclidean norm.

    Returns the rescaled matrix and the original column norms (1.0 for
    all-zero columns) so fitted weights can be mapped back to the original
    scale via w_original = w_normalized / scale.
    """
    scales = np.sqrt(x.column_sq_norms())
    scales[scales == 0.0] = 1.0
    per_entry = np.repeat(scales, np.diff(x.col_starts))
    scaled = DesignMatrix(
        x.n_samples, x.n_features, x.col_starts.copy(), x.row_indices.copy(),
        x.values / per_entry,
    )
    return scaled, scales


def column_dot_loss_grad(x: DesignMatrix, j: int, loss_derivs: np.ndarray) -> float:
    """(1/n) <loss_derivs, X_j> over column j's support."""
    if not 0 <= j < x.n_features:
        raise IndexError(f"feature index {j} out of range")
    d = np.ascontiguousarray(loss_derivs, dtype=np.float64)
    return _kernels.column_dot(x.col_starts, x.row_indices, x.values, j, d) / x.n_samples
