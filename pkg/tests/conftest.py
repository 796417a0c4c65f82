import numpy as np
import pytest

from parcd import Dataset, DesignMatrix, normalize_columns


def random_sparse_dense(rng, n, k, density=0.2):
    """Dense array with a sparse support pattern and no all-zero rows."""
    mask = rng.random((n, k)) < density
    a = np.where(mask, rng.normal(size=(n, k)), 0.0)
    # keep at least one entry per column so instances stay non-degenerate
    for j in range(k):
        if not a[:, j].any():
            a[rng.integers(0, n), j] = rng.normal() or 1.0
    return a


def make_dataset(rng, n, k, loss_kind, density=0.2, normalize=True):
    """Random sparse dataset with labels drawn from a planted sparse model."""
    a = random_sparse_dense(rng, n, k, density)
    x = DesignMatrix.from_dense(a)
    if normalize:
        x, _ = normalize_columns(x)
        a = x.to_dense()
    w_true = np.zeros(k)
    support = rng.choice(k, size=max(1, k // 20), replace=False)
    w_true[support] = rng.normal(size=support.shape[0]) * 3.0
    signal = a @ w_true
    if loss_kind == "squared":
        y = signal + 0.1 * rng.normal(size=n)
    else:
        margin = signal + 0.5 * rng.normal(size=n)
        y = np.where(margin >= 0, 1.0, -1.0)
    return Dataset(x, y), a


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
