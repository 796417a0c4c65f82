"""Compiled kernels for the solver hot paths.

Everything here operates on raw CSC arrays (column pointers, row indices,
values) so the kernels stay independent of the Python-level containers.
Loss functions are dispatched by integer code to keep each kernel
monomorphic, and shared fitted-value updates go through a real atomic
float add so concurrent column updates never lose increments.

``NUMBA_NUM_THREADS`` must be set before numba is first imported; we raise
it above the physical core count so configured thread counts (which define
block semantics, not just physical parallelism) can exceed it.
"""

import os

os.environ.setdefault("NUMBA_NUM_THREADS", str(max(os.cpu_count() or 1, 8)))

import math
import warnings

# numba probes TBB while picking a threading layer; the version-mismatch
# warning is cosmetic (it falls through to omp/workqueue)
warnings.filterwarnings("ignore", message=".*TBB.*", category=Warning)

import numpy as np
from numba import njit, prange, types
from numba.core import cgutils
from numba.extending import intrinsic

SQUARED = 0
LOGISTIC = 1

MAX_THREADS = int(os.environ["NUMBA_NUM_THREADS"])


@intrinsic
def _atomic_add(typingctx, arr, idx, val):
    """Atomic ``arr[idx] += val`` for float64 arrays (lock-free atomicrmw)."""
    if not isinstance(arr, types.Array) or arr.dtype != types.float64:
        return None
    sig = types.void(arr, types.intp, types.float64)

    def codegen(context, builder, signature, args):
        arr_v, idx_v, val_v = args
        aryty = signature.args[0]
        ary = context.make_array(aryty)(context, builder, arr_v)
        ptr = cgutils.get_item_pointer(
            context, builder, aryty, ary, [idx_v], wraparound=False
        )
        builder.atomic_rmw("fadd", ptr, val_v, "monotonic")
        return context.get_dummy_value()

    return sig, codegen


@njit(inline="always")
def _loss_value(kind, y, t):
    if kind == SQUARED:
        d = y - t
        return 0.5 * d * d
    # logistic, stable for large |y*t|
    m = y * t
    if m >= 0.0:
        return math.log1p(math.exp(-m))
    return -m + math.log1p(math.exp(m))


@njit(inline="always")
def _loss_deriv(kind, y, t):
    if kind == SQUARED:
        return t - y
    m = y * t
    if m >= 0.0:
        e = math.exp(-m)
        return -y * (e / (1.0 + e))
    return -y / (1.0 + math.exp(m))


@njit(inline="always")
def _psi(x, a, b):
    if x < a:
        return a
    if x > b:
        return b
    return x


@njit(inline="always")
def _step(wj, g, c, lam):
    # minimizer of (c/2) d^2 + g d + lam*|wj + d|, c > 0
    return -_psi(wj, (g - lam) / c, (g + lam) / c)


@njit(inline="always")
def _proxy(wj, g, d, c, lam):
    return 0.5 * c * d * d + g * d + lam * (abs(wj + d) - abs(wj))


@njit(cache=True)
def loss_sum(kind, y, z):
    s = 0.0
    for i in range(y.shape[0]):
        s += _loss_value(kind, y[i], z[i])
    return s


@njit(cache=True)
def loss_derivs(kind, y, z, out):
    for i in range(y.shape[0]):
        out[i] = _loss_deriv(kind, y[i], z[i])


@njit(cache=True)
def column_dot(col_starts, row_indices, values, j, d):
    s = 0.0
    for p in range(col_starts[j], col_starts[j + 1]):
        s += d[row_indices[p]] * values[p]
    return s


@njit(cache=True)
def column_sq_norms(col_starts, values, k):
    out = np.zeros(k)
    for j in range(k):
        s = 0.0
        for p in range(col_starts[j], col_starts[j + 1]):
            s += values[p] * values[p]
        out[j] = s
    return out


@njit(inline="always")
def _refine_column(
    col_starts, row_indices, values, kind, y, z_ref, j, wj0, c, lam, n, extra_steps, tol
):
    """Single-coordinate descent against a local shadow of z on column j's support.

    Performs one step plus up to ``extra_steps`` improvement steps; returns the
    accumulated increment. z_ref is read-only.
    """
    p0 = col_starts[j]
    p1 = col_starts[j + 1]
    m = p1 - p0
    if m == 0 or c <= 0.0:
        return 0.0
    z_loc = np.empty(m)
    for t in range(m):
        z_loc[t] = z_ref[row_indices[p0 + t]]
    g = 0.0
    for t in range(m):
        g += _loss_deriv(kind, y[row_indices[p0 + t]], z_loc[t]) * values[p0 + t]
    g /= n
    d = _step(wj0, g, c, lam)
    if d == 0.0:
        return 0.0
    total = d
    wj = wj0 + d
    for t in range(m):
        z_loc[t] += d * values[p0 + t]
    for _ in range(extra_steps):
        g = 0.0
        for t in range(m):
            g += _loss_deriv(kind, y[row_indices[p0 + t]], z_loc[t]) * values[p0 + t]
        g /= n
        d = _step(wj, g, c, lam)
        if abs(d) < tol:
            break
        total += d
        wj += d
        for t in range(m):
            z_loc[t] += d * values[p0 + t]
    return total


@njit(cache=True)
def refine_column(
    col_starts, row_indices, values, kind, y, z_ref, j, wj0, c, lam, n, extra_steps, tol
):
    return _refine_column(
        col_starts, row_indices, values, kind, y, z_ref, j, wj0, c, lam, n, extra_steps, tol
    )


@njit(parallel=True, cache=True)
def propose_kernel(
    col_starts, row_indices, values, derivs, w, j_set, curv, lam, n, out_delta, out_proxy
):
    """Increment and proxy for every coordinate in j_set against frozen derivs.

    Writes only out_delta[t]/out_proxy[t]; results are independent of the
    physical thread count.
    """
    for t in prange(j_set.shape[0]):
        j = j_set[t]
        c = curv[j]
        if c <= 0.0:
            out_delta[t] = 0.0
            out_proxy[t] = 0.0
            continue
        g = 0.0
        for p in range(col_starts[j], col_starts[j + 1]):
            g += derivs[row_indices[p]] * values[p]
        g /= n
        d = _step(w[j], g, c, lam)
        out_delta[t] = d
        if d == 0.0:
            out_proxy[t] = 0.0
        else:
            # exact math gives proxy <= 0; clamp away fp cancellation residue
            out_proxy[t] = min(0.0, _proxy(w[j], g, d, c, lam))


@njit(parallel=True, cache=True)
def update_kernel(
    col_starts,
    row_indices,
    values,
    kind,
    y,
    z,
    z_ref,
    w,
    accepted,
    curv,
    lam,
    n,
    extra_steps,
    tol,
    out_delta,
):
    """Refine and apply every accepted coordinate in parallel.

    Refinement reads z_ref (a frozen snapshot, or z itself when writes cannot
    alias the reads); z updates are atomic so overlapping supports lose nothing.
    Distinct coordinates own distinct w entries.
    """
    for t in prange(accepted.shape[0]):
        j = accepted[t]
        d = _refine_column(
            col_starts, row_indices, values, kind, y, z_ref, j, w[j], curv[j], lam, n,
            extra_steps, tol,
        )
        out_delta[t] = d
        if d != 0.0:
            w[j] = w[j] + d
            for p in range(col_starts[j], col_starts[j + 1]):
                _atomic_add(z, row_indices[p], d * values[p])


@njit(parallel=True, cache=True)
def shotgun_kernel(
    col_starts, row_indices, values, kind, y, z, w, j_set, curv, lam, n, extra_steps, tol
):
    """Fused propose+update over a random coordinate subset.

    Proposals read the live z, so coordinates may observe updates from the
    same pass; all z writes are atomic. Returns the number of nonzero updates.
    """
    count = 0
    for t in prange(j_set.shape[0]):
        j = j_set[t]
        d = _refine_column(
            col_starts, row_indices, values, kind, y, z, j, w[j], curv[j], lam, n,
            extra_steps, tol,
        )
        if d != 0.0:
            w[j] = w[j] + d
            for p in range(col_starts[j], col_starts[j + 1]):
                _atomic_add(z, row_indices[p], d * values[p])
            count += 1
    return count


@njit(cache=True)
def sequential_kernel(
    col_starts, row_indices, values, kind, y, z, w, j_seq, curv, lam, n, extra_steps, tol
):
    """One singleton propose/update iteration per entry of j_seq, in order."""
    count = 0
    for t in range(j_seq.shape[0]):
        j = j_seq[t]
        d = _refine_column(
            col_starts, row_indices, values, kind, y, z, j, w[j], curv[j], lam, n,
            extra_steps, tol,
        )
        if d != 0.0:
            w[j] = w[j] + d
            for p in range(col_starts[j], col_starts[j + 1]):
                z[row_indices[p]] += d * values[p]
            count += 1
    return count


@njit(cache=True)
def matvec(col_starts, row_indices, values, v, out):
    out[:] = 0.0
    for j in range(v.shape[0]):
        vj = v[j]
        if vj != 0.0:
            for p in range(col_starts[j], col_starts[j + 1]):
                out[row_indices[p]] += vj * values[p]


@njit(parallel=True, cache=True)
def rmatvec(col_starts, row_indices, values, u, out):
    for j in prange(out.shape[0]):
        s = 0.0
        for p in range(col_starts[j], col_starts[j + 1]):
            s += u[row_indices[p]] * values[p]
        out[j] = s


@njit(cache=True)
def first_fit_coloring(col_starts, row_indices, row_starts, row_features, k, balanced):
    """Greedy partial distance-2 coloring over features in ascending order.

    For feature j the forbidden set is the colors of every earlier feature
    sharing a row; row_features holds each row's features in ascending order
    so the scan stops at the first index >= j. ``balanced`` picks the least
    loaded admissible color instead of the smallest one.
    """
    color_of = np.full(k, -1, np.int64)
    mark = np.full(k + 1, -1, np.int64)
    loads = np.zeros(k + 1, np.int64)
    num_colors = 0
    for j in range(k):
        for p in range(col_starts[j], col_starts[j + 1]):
            i = row_indices[p]
            for q in range(row_starts[i], row_starts[i + 1]):
                f = row_features[q]
                if f >= j:
                    break
                mark[color_of[f]] = j
        chosen = -1
        if balanced:
            best_load = -1
            for c in range(num_colors):
                if mark[c] != j and (best_load < 0 or loads[c] < best_load):
                    chosen = c
                    best_load = loads[c]
        else:
            for c in range(num_colors):
                if mark[c] != j:
                    chosen = c
                    break
        if chosen < 0:
            chosen = num_colors
            num_colors += 1
        color_of[j] = chosen
        loads[chosen] += 1
    return color_of, num_colors
