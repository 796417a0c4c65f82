"""Spectral radius of X^T X by power iteration, and the safe shotgun width.

Shotgun converges when at most P* = k / (2 rho) coordinates are updated at
once, where rho is the largest eigenvalue of the Gram matrix. Only the top
eigenvalue is needed, so matrix-free power iteration on the existing column
kernels is enough; successive Rayleigh quotients are non-decreasing and the
iteration stops once they agree to a relative tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .data import DesignMatrix


@dataclass
class SpectralEstimate:
    rho: float
    p_star: int
    iterations_used: int
    converged: bool
    history: np.ndarray = field(default_factory=lambda: np.empty(0))


def p_star_bound(k: int, rho: float) -> int:
    """max(1, floor(k / (2 rho))), capped at k for degenerate rho."""
    if rho <= 0.0:
        return k
    return max(1, min(k, math.floor(k / (2.0 * rho))))


def power_iteration(
    x: DesignMatrix,
    max_iters: int = 1000,
    tol: float = 1e-6,
    seed: int = 0,
    rng: Optional[np.random.Generator] = None,
) -> SpectralEstimate:
    """Largest eigenvalue of X^T X from a random unit start vector."""
    k = x.n_features
    if k < 1:
        raise ValueError("matrix must have at least one column")
    if x.nnz == 0:
        return SpectralEstimate(0.0, p_star_bound(k, 0.0), 0, True)
    if rng is None:
        rng = np.random.default_rng(seed)
    v = rng.standard_normal(k)
    v /= np.linalg.norm(v)
    rho_prev = -1.0
    rho = 0.0
    history = []
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        u = x.matvec(v)
        rho = float(u @ u)  # Rayleigh quotient of the Gram matrix at unit v
        history.append(rho)
        s = x.rmatvec(u)
        ns = float(np.linalg.norm(s))
        if ns == 0.0:
            # start vector fell in the null space; re-randomize
            v = rng.standard_normal(k)
            v /= np.linalg.norm(v)
            rho_prev = -1.0
            continue
        v = s / ns
        if rho_prev >= 0.0 and abs(rho - rho_prev) < tol * max(rho, 1e-300):
            converged = True
            break
        rho_prev = rho
    return SpectralEstimate(rho, p_star_bound(k, rho), it, converged, np.asarray(history))
