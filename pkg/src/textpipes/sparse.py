"""Compressed row-major sparse matrix used as the feature carrier.

The container owns the canonical CSR arrays and checks their structure;
arithmetic is delegated to :mod:`scipy.sparse`.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .errors import ShapeError


class SparseMatrix:
    """CSR matrix with sorted column indices and no stored zeros."""

    __slots__ = ("n_rows", "n_cols", "row_offsets", "col_indices", "values", "_csr", "_csc")

    def __init__(self, n_rows, n_cols, row_offsets, col_indices, values, validate=True):
        self.n_rows = int(n_rows)
        self.n_cols = int(n_cols)
        self.row_offsets = np.asarray(row_offsets, dtype=np.int64)
        self.col_indices = np.asarray(col_indices, dtype=np.int64)
        self.values = np.asarray(values, dtype=np.float64)
        self._csr = None
        self._csc = None
        if validate:
            self.validate()

    @classmethod
    def from_scipy(cls, m) -> "SparseMatrix":
        m = sp.csr_matrix(m, dtype=np.float64, copy=True)
        m.sum_duplicates()
        m.eliminate_zeros()
        m.sort_indices()
        out = cls(m.shape[0], m.shape[1], m.indptr, m.indices, m.data, validate=False)
        out._csr = m
        return out

    @classmethod
    def from_dense(cls, a) -> "SparseMatrix":
        a = np.atleast_2d(np.asarray(a, dtype=np.float64))
        return cls.from_scipy(sp.csr_matrix(a))

    @classmethod
    def empty(cls, n_rows, n_cols) -> "SparseMatrix":
        return cls(n_rows, n_cols, np.zeros(n_rows + 1), [], [])

    @property
    def shape(self):
        return (self.n_rows, self.n_cols)

    @property
    def nnz(self):
        return int(self.row_offsets[-1]) if len(self.row_offsets) else 0

    def validate(self):
        """Raise :class:`ShapeError` unless every CSR invariant holds."""
        ro, ci, v = self.row_offsets, self.col_indices, self.values
        if len(ro) != self.n_rows + 1 or ro[0] != 0:
            raise ShapeError("row_offsets must have n_rows+1 entries starting at 0")
        if np.any(np.diff(ro) < 0):
            raise ShapeError("row_offsets must be non-decreasing")
        if ro[-1] != len(ci) or len(ci) != len(v):
            raise ShapeError("row_offsets[-1], col_indices and values disagree on nnz")
        if len(ci) and (ci.min() < 0 or ci.max() >= self.n_cols):
            raise ShapeError("column index out of range")
        if not np.all(np.isfinite(v)):
            raise ShapeError("non-finite stored value")
        if np.any(v == 0):
            raise ShapeError("explicit zero stored")
        if len(ci) > 1:
            step = np.diff(ci)
            row_start = np.zeros(len(ci), dtype=bool)
            row_start[ro[:-1][ro[:-1] < len(ci)]] = True
            if np.any((step <= 0) & ~row_start[1:]):
                raise ShapeError("column indices must be strictly increasing within a row")
        return self

    def to_scipy(self) -> sp.csr_matrix:
        if self._csr is None:
            self._csr = sp.csr_matrix(
                (self.values, self.col_indices, self.row_offsets), shape=self.shape
            )
        return self._csr

    def to_csc(self) -> sp.csc_matrix:
        if self._csc is None:
            self._csc = self.to_scipy().tocsc()
            self._csc.sort_indices()
        return self._csc

    def toarray(self) -> np.ndarray:
        return self.to_scipy().toarray()

    def take_rows(self, rows) -> "SparseMatrix":
        return SparseMatrix.from_scipy(self.to_scipy()[np.asarray(rows, dtype=np.int64)])

    def take_columns(self, cols) -> "SparseMatrix":
        return SparseMatrix.from_scipy(self.to_scipy()[:, np.asarray(cols, dtype=np.int64)])

    def row_sums(self) -> np.ndarray:
        return np.asarray(self.to_scipy().sum(axis=1)).ravel()

    def __eq__(self, other):
        if not isinstance(other, SparseMatrix):
            return NotImplemented
        return (
            self.shape == other.shape
            and np.array_equal(self.row_offsets, other.row_offsets)
            and np.array_equal(self.col_indices, other.col_indices)
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None

    def __repr__(self):
        return f"SparseMatrix({self.n_rows}x{self.n_cols}, nnz={self.nnz})"


def as_sparse(X) -> SparseMatrix:
    if isinstance(X, SparseMatrix):
        return X
    if sp.issparse(X):
        return SparseMatrix.from_scipy(X)
    return SparseMatrix.from_dense(X)
