"""Reference implementations backing the test suite.

Everything here is dense, slow, deterministic, and deliberately independent
of the production kernels: losses are re-derived inline, the coordinate
minimizer comes from subgradient bisection, the global optimum from plain
proximal gradient, and the top Gram eigenvalue from cyclic Jacobi rotations.
Problems are capped at oracle scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass
class DenseProblem:
    x_dense: np.ndarray  # n x k
    y: np.ndarray
    lam: float
    loss_kind: str  # "squared" | "logistic"

    def __post_init__(self):
        self.x_dense = np.asarray(self.x_dense, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.float64)
        n, k = self.x_dense.shape
        if self.y.shape[0] != n:
            raise ValueError("y length mismatch")
        if n * k > 100_000:
            raise ValueError("problem too large for the dense oracle")

    @property
    def beta(self) -> float:
        return 1.0 if self.loss_kind == "squared" else 0.25


def _lv(kind: str, y: float, t: float) -> float:
    if kind == "squared":
        return 0.5 * (y - t) ** 2
    m = y * t
    if m >= 0.0:
        return math.log1p(math.exp(-m))
    return -m + math.log1p(math.exp(m))


def _ld(kind: str, y: float, t: float) -> float:
    if kind == "squared":
        return t - y
    m = y * t
    if m >= 0.0:
        e = math.exp(-m)
        return -y * e / (1.0 + e)
    return -y / (1.0 + math.exp(m))


def dense_smooth(problem: DenseProblem, w: np.ndarray) -> float:
    z = problem.x_dense @ w
    return sum(_lv(problem.loss_kind, yi, zi) for yi, zi in zip(problem.y, z)) / len(
        problem.y
    )


def dense_objective(problem: DenseProblem, w: np.ndarray) -> float:
    return dense_smooth(problem, w) + problem.lam * float(np.sum(np.abs(w)))


def dense_grad(problem: DenseProblem, w: np.ndarray) -> np.ndarray:
    z = problem.x_dense @ w
    d = np.array([_ld(problem.loss_kind, yi, zi) for yi, zi in zip(problem.y, z)])
    return problem.x_dense.T @ d / len(problem.y)


def exact_coordinate_min(problem: DenseProblem, w: np.ndarray, j: int) -> float:
    """argmin_d F(w + d e_j) + lam*|w_j + d| by bisection on the subgradient.

    The 1-D function is convex; g(d) = F'(d) + lam*sign(w_j + d) (0 at the
    kink) changes sign at the minimizer, including when the minimizer sits
    exactly on the kink.
    """
    n = len(problem.y)
    col = problem.x_dense[:, j]
    z0 = problem.x_dense @ w
    wj = w[j]
    lam = problem.lam

    def g(d: float) -> float:
        t = z0 + d * col
        f1 = sum(
            _ld(problem.loss_kind, yi, ti) * ci
            for yi, ti, ci in zip(problem.y, t, col)
        ) / n
        s = wj + d
        if s > 0.0:
            return f1 + lam
        if s < 0.0:
            return f1 - lam
        # at the kink the subdifferential is [f1 - lam, f1 + lam]
        if f1 - lam <= 0.0 <= f1 + lam:
            return 0.0
        return f1 - lam if f1 - lam > 0.0 else f1 + lam

    lo, hi = -1.0, 1.0
    for _ in range(200):
        if g(lo) <= 0.0:
            break
        lo *= 2.0
    for _ in range(200):
        if g(hi) >= 0.0:
            break
        hi *= 2.0
    if g(lo) > 0.0 or g(hi) < 0.0:
        raise RuntimeError("failed to bracket the coordinate minimizer")
    while hi - lo > 1e-10:
        mid = 0.5 * (lo + hi)
        gm = g(mid)
        if gm == 0.0:
            return mid
        if gm < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def prox_l1(v: np.ndarray, tau: float) -> np.ndarray:
    return np.sign(v) * np.maximum(np.abs(v) - tau, 0.0)


def ista_solve(problem: DenseProblem, tol: float = 1e-13, max_iters: int = 500_000):
    """Global optimum by monotone proximal-gradient iterations with step 1/L.

    L = beta * rho(X^T X) / n via the dense eigensolver. Stops when the
    relative objective change per iteration drops below tol.
    """
    n, k = problem.x_dense.shape
    # rho(X^T X) = rho(X X^T); eigensolve whichever Gram side is smaller
    if k <= n:
        gram = problem.x_dense.T @ problem.x_dense
    else:
        gram = problem.x_dense @ problem.x_dense.T
    rho = dense_eig_max(0.5 * (gram + gram.T))
    lip = problem.beta * rho / n
    if lip <= 0.0:
        return np.zeros(k), dense_objective(problem, np.zeros(k))
    step = 1.0 / lip
    w = np.zeros(k)
    f = dense_objective(problem, w)
    for _ in range(max_iters):
        w_new = prox_l1(w - step * dense_grad(problem, w), step * problem.lam)
        f_new = dense_objective(problem, w_new)
        if f_new > f + 1e-12:
            raise RuntimeError("proximal gradient increased the objective")
        w = w_new
        if abs(f - f_new) < tol * max(abs(f), 1e-300):
            return w, f_new
        f = f_new
    return w, f


def dense_eig_max(gram: np.ndarray) -> float:
    """Largest eigenvalue by cyclic Jacobi rotations (symmetric input only)."""
    a = np.asarray(gram, dtype=np.float64)
    k = a.shape[0]
    if a.shape != (k, k):
        raise ValueError("gram must be square")
    if k > 300:
        raise ValueError("oracle eigensolver is capped at k <= 300")
    scale = max(1.0, float(np.max(np.abs(a))))
    if np.max(np.abs(a - a.T)) > 1e-10 * scale:
        raise ValueError("gram must be symmetric")
    a = 0.5 * (a + a.T)
    if k == 1:
        return float(a[0, 0])
    for _ in range(100):
        off = math.sqrt(max(0.0, float(np.sum(a * a) - np.sum(np.diag(a) ** 2))))
        if off < 1e-12:
            break
        for p in range(k - 1):
            for q in range(p + 1, k):
                apq = a[p, q]
                if abs(apq) < 1e-18:
                    continue
                app = a[p, p]
                aqq = a[q, q]
                theta = (aqq - app) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.hypot(theta, 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                new_p = c * col_p - s * col_q
                new_q = s * col_p + c * col_q
                a[:, p] = new_p
                a[p, :] = new_p
                a[:, q] = new_q
                a[q, :] = new_q
                a[p, p] = c * c * app - 2.0 * s * c * apq + s * s * aqq
                a[q, q] = s * s * app + 2.0 * s * c * apq + c * c * aqq
                a[p, q] = 0.0
                a[q, p] = 0.0
    return float(np.max(np.diag(a)))
