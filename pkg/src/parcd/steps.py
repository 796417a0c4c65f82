"""Per-coordinate proposal math.

A proposal for coordinate j is the minimizer of a quadratic model of the
smooth loss along e_j plus the L1 term:

    min_d  (c/2) d^2 + g d + lam * |w_j + d|

where g is the coordinate gradient and c the quadratic coefficient: the
exact curvature H_jj = ||X_j||^2 / n for squared loss, or the global
curvature bound beta otherwise (a majorizer whenever ||X_j||^2 <= n, which
unit column normalization guarantees). The closed form is a clip of w_j,
equivalently a soft-threshold step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .data import Dataset, column_dot_loss_grad
from .losses import Objective


@dataclass(frozen=True)
class Proposal:
    """Candidate increment for one coordinate with its decrease proxy (<= 0)."""

    j: int
    delta: float
    proxy: float


def clip(x: float, a: float, b: float) -> float:
    """Project x onto [a, b]."""
    if a > b:
        raise ValueError(f"empty clip interval [{a}, {b}]")
    if x < a:
        return a
    if x > b:
        return b
    return x


def soft_threshold(x: float, tau: float) -> float:
    """sign(x) * max(|x| - tau, 0)."""
    if tau < 0.0:
        raise ValueError("tau must be >= 0")
    return math.copysign(max(abs(x) - tau, 0.0), x)


def exact_step_squared(w_j: float, grad_j: float, h_jj: float, lam: float) -> float:
    """Exact coordinate minimizer for squared loss (curvature H_jj)."""
    if h_jj <= 0.0:
        raise ValueError("h_jj must be > 0 (all-zero columns have no step)")
    return -clip(w_j, (grad_j - lam) / h_jj, (grad_j + lam) / h_jj)


def bounded_step(w_j: float, grad_j: float, beta: float, lam: float) -> float:
    """Minimizer of the curvature-bound quadratic model; never increases the objective."""
    if beta <= 0.0:
        raise ValueError("beta must be > 0")
    return -clip(w_j, (grad_j - lam) / beta, (grad_j + lam) / beta)


def proxy_value(w_j: float, grad_j: float, delta: float, beta: float, lam: float) -> float:
    """Modelled objective change for moving coordinate j by delta."""
    return 0.5 * beta * delta * delta + grad_j * delta + lam * (abs(w_j + delta) - abs(w_j))


def _curvature_at(data: Dataset, j: int, objective: Objective) -> float:
    """Quadratic coefficient for coordinate j; 0 flags an all-zero column."""
    rows, vals = data.x.column(j)
    if rows.shape[0] == 0:
        return 0.0
    if objective.loss.kind == "squared":
        return float(np.dot(vals, vals)) / data.x.n_samples
    return objective.loss.beta


def propose(
    data: Dataset,
    loss_derivs: np.ndarray,
    w_j: float,
    j: int,
    objective: Objective,
) -> Proposal:
    """Proposal for coordinate j given the current loss derivative vector.

    loss_derivs[i] must equal dl/dt(y_i, z_i) for the state being proposed
    against. All-zero columns are skipped (zero proposal). Pure with respect
    to shared state.
    """
    c = _curvature_at(data, j, objective)
    if c <= 0.0:
        return Proposal(j, 0.0, 0.0)
    g = column_dot_loss_grad(data.x, j, loss_derivs)
    if objective.loss.kind == "squared":
        d = exact_step_squared(w_j, g, c, objective.lam)
    else:
        d = bounded_step(w_j, g, c, objective.lam)
    if d == 0.0:
        return Proposal(j, 0.0, 0.0)
    # exact math gives proxy <= 0; clamp away fp cancellation residue
    phi = min(0.0, proxy_value(w_j, g, d, c, objective.lam))
    return Proposal(j, d, phi)


def refine(
    data: Dataset,
    state,
    j: int,
    objective: Objective,
    steps: int = 500,
    tol: float = 1e-12,
) -> float:
    """Total increment after iterating the quadratic step on coordinate j.

    Computes the initial step, then up to ``steps`` improvement steps,
    stopping early once a step falls below ``tol``. Only coordinate j moves,
    so the iteration runs against a local shadow of z restricted to the
    column support; shared state is not written.
    """
    c = _curvature_at(data, j, objective)
    return float(
        _kernels.refine_column(
            data.x.col_starts,
            data.x.row_indices,
            data.x.values,
            objective.loss.code,
            data.y,
            np.ascontiguousarray(state.z, dtype=np.float64),
            j,
            float(state.w[j]),
            c,
            objective.lam,
            data.x.n_samples,
            steps,
            tol,
        )
    )
