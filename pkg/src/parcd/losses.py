"""Loss functions (value, derivative, curvature bound) and the penalized objective.

Losses are convex and differentiable in the fitted value t:

    squared:   l(y, t) = (y - t)^2 / 2          (curvature bound beta = 1)
    logistic:  l(y, t) = log(1 + exp(-y t))     (curvature bound beta = 1/4)

The full objective is mean loss plus an L1 penalty:
F(w) + lam * ||w||_1 with F(w) = (1/n) sum_i l(y_i, (Xw)_i).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .data import Dataset

_BETA = {"squared": 1.0, "logistic": 0.25}
_CODE = {"squared": _kernels.SQUARED, "logistic": _kernels.LOGISTIC}


@dataclass(frozen=True)
class Loss:
    kind: str

    def __post_init__(self):
        if self.kind not in _BETA:
            raise ValueError(f"unknown loss kind {self.kind!r}")

    @property
    def beta(self) -> float:
        """Global upper bound on the second derivative in t."""
        return _BETA[self.kind]

    @property
    def code(self) -> int:
        return _CODE[self.kind]


SQUARED = Loss("squared")
LOGISTIC = Loss("logistic")


def loss_value(loss: Loss, y, t):
    """l(y, t); stable for large |y*t| in the logistic case."""
    if loss.kind == "squared":
        d = np.subtract(y, t)
        return 0.5 * d * d
    m = np.multiply(y, t)
    return np.log1p(np.exp(-np.abs(m))) + np.maximum(-m, 0.0)


def loss_deriv(loss: Loss, y, t):
    """dl/dt: (t - y) for squared, -y / (1 + exp(y*t)) for logistic."""
    if loss.kind == "squared":
        return np.subtract(t, y)
    m = np.multiply(y, t)
    e = np.exp(-np.abs(m))
    sig_neg_m = np.where(m >= 0.0, e / (1.0 + e), 1.0 / (1.0 + e))
    return -np.asarray(y) * sig_neg_m


@dataclass(frozen=True)
class Objective:
    """Mean loss plus lam * ||w||_1."""

    loss: Loss
    lam: float

    def __post_init__(self):
        if self.lam < 0.0:
            raise ValueError("lam must be >= 0")


def objective_value(obj: Objective, data: Dataset, w: np.ndarray, z=None) -> float:
    """F(w) + lam*||w||_1; z = X w may be supplied to skip the recomputation."""
    if z is None:
        z = data.x.matvec(np.ascontiguousarray(w, dtype=np.float64))
    total = _kernels.loss_sum(obj.loss.code, data.y, np.ascontiguousarray(z, dtype=np.float64))
    return total / data.x.n_samples + obj.lam * float(np.sum(np.abs(w)))
