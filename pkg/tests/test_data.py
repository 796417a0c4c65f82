import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from parcd import (
    Dataset,
    DesignMatrix,
    ParseError,
    column_dot_loss_grad,
    load_libsvm,
    normalize_columns,
    save_libsvm,
)

from conftest import random_sparse_dense


def write(tmp_path, text, name="data.svm"):
    path = tmp_path / name
    path.write_text(text)
    return path


class TestLoadLibsvm:
    def test_basic_two_rows(self, tmp_path):
        ds = load_libsvm(write(tmp_path, "+1 1:1.0 3:2.0\n-1 2:0.5\n"))
        assert ds.x.n_samples == 2
        assert ds.x.n_features == 3
        assert ds.x.nnz == 3
        np.testing.assert_array_equal(ds.y, [1.0, -1.0])
        dense = ds.x.to_dense()
        np.testing.assert_array_equal(dense, [[1.0, 0.0, 2.0], [0.0, 0.5, 0.0]])

    def test_empty_file_is_an_error(self, tmp_path):
        with pytest.raises(ParseError, match="no samples"):
            load_libsvm(write(tmp_path, ""))

    def test_explicit_zero_dropped(self, tmp_path):
        ds = load_libsvm(write(tmp_path, "1 3:0.0\n"), n_features=3)
        assert ds.x.nnz == 0
        assert ds.x.n_features == 3
        ds.x.validate()

    def test_duplicate_entry_rejected(self, tmp_path):
        with pytest.raises(ParseError, match="line 1.*duplicate"):
            load_libsvm(write(tmp_path, "1 2:1.0 2:3.0\n"))

    def test_decreasing_index_rejected(self, tmp_path):
        with pytest.raises(ParseError, match="line 2.*increasing"):
            load_libsvm(write(tmp_path, "1 1:1\n1 3:1 2:1\n"))

    def test_bad_pair_reports_line(self, tmp_path):
        with pytest.raises(ParseError, match="line 3"):
            load_libsvm(write(tmp_path, "1 1:1\n1 2:1\n1 2:x\n"))

    def test_bad_label(self, tmp_path):
        with pytest.raises(ParseError, match="bad label"):
            load_libsvm(write(tmp_path, "spam 1:1\n"))

    def test_index_beyond_declared_count(self, tmp_path):
        with pytest.raises(ParseError, match="exceeds declared"):
            load_libsvm(write(tmp_path, "1 5:1.0\n"), n_features=3)

    def test_declared_count_extends_matrix(self, tmp_path):
        ds = load_libsvm(write(tmp_path, "1 1:1.0\n"), n_features=10)
        assert ds.x.n_features == 10

    def test_label_map(self, tmp_path):
        ds = load_libsvm(
            write(tmp_path, "0 1:1\n1 1:2\n"),
            label_map=lambda v: 1.0 if v >= 0.5 else -1.0,
        )
        np.testing.assert_array_equal(ds.y, [-1.0, 1.0])

    def test_comments_and_blank_lines(self, tmp_path):
        ds = load_libsvm(write(tmp_path, "# header\n\n1 1:2.5 # trailing\n"))
        assert ds.x.n_samples == 1
        assert ds.x.values[0] == 2.5

    def test_round_trip(self, tmp_path, rng):
        dense = random_sparse_dense(rng, 13, 7, density=0.3)
        ds = Dataset(DesignMatrix.from_dense(dense), rng.normal(size=13))
        out = tmp_path / "roundtrip.svm"
        save_libsvm(ds, out)
        back = load_libsvm(out, n_features=7)
        assert back.x.nnz == ds.x.nnz
        np.testing.assert_array_equal(back.x.col_starts, ds.x.col_starts)
        np.testing.assert_array_equal(back.x.row_indices, ds.x.row_indices)
        np.testing.assert_array_equal(back.x.values, ds.x.values)
        np.testing.assert_array_equal(back.y, ds.y)


class TestDesignMatrix:
    def test_validate_catches_unsorted_rows(self):
        x = DesignMatrix(3, 1, np.array([0, 2]), np.array([2, 0]), np.array([1.0, 2.0]))
        with pytest.raises(ValueError, match="strictly increasing"):
            x.validate()

    def test_validate_catches_stored_zero(self):
        x = DesignMatrix(3, 1, np.array([0, 1]), np.array([0]), np.array([0.0]))
        with pytest.raises(ValueError, match="nonzero"):
            x.validate()

    def test_dense_round_trip(self, rng):
        dense = random_sparse_dense(rng, 9, 5)
        x = DesignMatrix.from_dense(dense)
        x.validate()
        np.testing.assert_array_equal(x.to_dense(), dense)

    def test_matvec_matches_dense(self, rng):
        dense = random_sparse_dense(rng, 9, 5)
        x = DesignMatrix.from_dense(dense)
        v = rng.normal(size=5)
        u = rng.normal(size=9)
        np.testing.assert_allclose(x.matvec(v), dense @ v, atol=1e-14)
        np.testing.assert_allclose(x.rmatvec(u), dense.T @ u, atol=1e-14)


class TestNormalizeColumns:
    def test_three_four_five(self):
        x = DesignMatrix.from_dense(np.array([[3.0], [4.0]]))
        scaled, scales = normalize_columns(x)
        np.testing.assert_allclose(scaled.values, [0.6, 0.8])
        assert scales[0] == 5.0

    def test_unit_column_unchanged(self):
        x = DesignMatrix.from_dense(np.array([[1.0], [0.0]]))
        scaled, scales = normalize_columns(x)
        np.testing.assert_array_equal(scaled.values, [1.0])
        assert scales[0] == 1.0

    def test_zero_column_untouched(self):
        x = DesignMatrix(2, 2, np.array([0, 1, 1]), np.array([0]), np.array([2.0]))
        scaled, scales = normalize_columns(x)
        assert scales[1] == 1.0
        assert scaled.col_starts[2] == 1

    def test_all_columns_unit_norm(self, rng):
        x = DesignMatrix.from_dense(random_sparse_dense(rng, 20, 12))
        scaled, _ = normalize_columns(x)
        norms = np.sqrt(scaled.column_sq_norms())
        assert np.all(np.abs(norms - 1.0) < 1e-12)


class TestColumnDotLossGrad:
    def test_hand_example(self):
        x = DesignMatrix(3, 1, np.array([0, 2]), np.array([0, 2]), np.array([1.0, 2.0]))
        got = column_dot_loss_grad(x, 0, np.array([1.0, 9.0, 0.5]))
        assert got == pytest.approx(2.0 / 3.0, abs=1e-15)

    def test_empty_column(self):
        x = DesignMatrix(3, 1, np.array([0, 0]), np.empty(0), np.empty(0))
        assert column_dot_loss_grad(x, 0, np.ones(3)) == 0.0

    def test_zero_derivs(self, rng):
        x = DesignMatrix.from_dense(random_sparse_dense(rng, 6, 4))
        assert column_dot_loss_grad(x, 2, np.zeros(6)) == 0.0

    def test_out_of_range(self, rng):
        x = DesignMatrix.from_dense(random_sparse_dense(rng, 6, 4))
        with pytest.raises(IndexError):
            column_dot_loss_grad(x, 4, np.zeros(6))

    def test_matches_dense_oracle(self, rng):
        for _ in range(20):
            n = int(rng.integers(2, 15))
            k = int(rng.integers(1, 10))
            dense = random_sparse_dense(rng, n, k, density=0.4)
            x = DesignMatrix.from_dense(dense)
            d = rng.normal(size=n)
            j = int(rng.integers(0, k))
            expect = float(dense[:, j] @ d) / n
            assert column_dot_loss_grad(x, j, d) == pytest.approx(expect, abs=1e-13)


@settings(deadline=None, max_examples=30)
@given(
    st.lists(
        st.lists(
            st.tuples(
                st.integers(min_value=1, max_value=12),
                st.floats(min_value=-100, max_value=100).filter(lambda v: v != 0),
            ),
            max_size=6,
        ),
        min_size=1,
        max_size=8,
    )
)
def test_libsvm_round_trip_property(tmp_path_factory, row_entries):
    """Any dataset survives a save/load cycle bit-for-bit."""
    rows, cols, vals = [], [], []
    for i, entries in enumerate(row_entries):
        seen = {}
        for idx, val in entries:
            seen[idx] = val  # dedupe, keep last
        for idx in sorted(seen):
            rows.append(i)
            cols.append(idx - 1)
            vals.append(seen[idx])
    n = len(row_entries)
    k = 12
    dense = np.zeros((n, k))
    dense[rows, cols] = vals
    ds = Dataset(DesignMatrix.from_dense(dense), np.arange(n, dtype=float))
    path = tmp_path_factory.mktemp("rt") / "d.svm"
    save_libsvm(ds, path)
    back = load_libsvm(path, n_features=k)
    np.testing.assert_array_equal(back.x.values, ds.x.values)
    np.testing.assert_array_equal(back.x.row_indices, ds.x.row_indices)
    np.testing.assert_array_equal(back.x.col_starts, ds.x.col_starts)
