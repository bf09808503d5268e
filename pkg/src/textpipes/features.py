"""Tokenization, count vectorization and one-hot expansion."""

from __future__ import annotations

import re
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError, ShapeError
from .sparse import SparseMatrix

_TOKEN = re.compile(r"\w\w+")


def tokenize(text: str) -> list[str]:
    """Lowercased runs of two or more word characters, in order."""
    # greedy leftmost matching of \w\w+ only ever yields whole runs
    return _TOKEN.findall(text.lower())


@dataclass(frozen=True)
class Vocabulary:
    terms: tuple[str, ...]
    min_df: int = 1

    @property
    def index(self) -> dict[str, int]:
        return {t: i for i, t in enumerate(self.terms)}

    def __len__(self):
        return len(self.terms)


def fit_vectorizer(docs: Sequence[str], min_df: int = 1) -> Vocabulary:
    if min_df < 1:
        raise ConfigError(f"min_df must be >= 1, got {min_df}")
    df = Counter()
    for doc in docs:
        df.update(set(tokenize(doc)))
    return Vocabulary(tuple(sorted(t for t, c in df.items() if c >= min_df)), min_df)


def _count_rows(docs, index):
    rows = []
    for doc in docs:
        counts = Counter(index[t] for t in tokenize(doc) if t in index)
        cols = sorted(counts)
        rows.append((cols, [counts[c] for c in cols]))
    return rows


def transform_counts(docs: Sequence[str], vocab: Vocabulary, threads: int = 1) -> SparseMatrix:
    """Raw term-frequency matrix of shape ``(len(docs), len(vocab))``."""
    index = vocab.index
    docs = list(docs)
    if threads > 1 and len(docs) > 1:
        chunk = -(-len(docs) // threads)
        parts = [docs[i:i + chunk] for i in range(0, len(docs), chunk)]
        with ThreadPoolExecutor(threads) as pool:
            rows = [r for part in pool.map(lambda p: _count_rows(p, index), parts) for r in part]
    else:
        rows = _count_rows(docs, index)
    offsets = np.zeros(len(rows) + 1, dtype=np.int64)
    offsets[1:] = np.cumsum([len(c) for c, _ in rows])
    cols = np.fromiter((c for cs, _ in rows for c in cs), dtype=np.int64, count=offsets[-1])
    vals = np.fromiter((v for _, vs in rows for v in vs), dtype=np.float64, count=offsets[-1])
    return SparseMatrix(len(rows), len(vocab), offsets, cols, vals, validate=False)


@dataclass(frozen=True)
class OneHotMap:
    """Per input column: ``None`` (passthrough) or sorted category values."""

    columns: tuple[tuple[float, ...] | None, ...]
    max_categories: int = 10

    @property
    def n_in(self):
        return len(self.columns)

    @property
    def widths(self) -> np.ndarray:
        return np.array([1 if c is None else len(c) for c in self.columns], dtype=np.int64)

    @property
    def n_out(self) -> int:
        return int(self.widths.sum())

    @property
    def offsets(self) -> np.ndarray:
        w = self.widths
        out = np.zeros(len(w), dtype=np.int64)
        out[1:] = np.cumsum(w)[:-1]
        return out


def fit_one_hot(X: SparseMatrix, max_categories: int = 10) -> OneHotMap:
    """Mark columns with at most ``max_categories`` distinct values as categorical.

    The implicit zero counts as an observed value whenever some row leaves
    the column empty.
    """
    csc = X.to_csc()
    columns = []
    for j in range(X.n_cols):
        data = csc.data[csc.indptr[j]:csc.indptr[j + 1]]
        values = set(np.unique(data).tolist())
        if len(data) < X.n_rows:
            values.add(0.0)
        if len(values) <= max_categories:
            columns.append(tuple(sorted(float(v) for v in values)))
        else:
            columns.append(None)
    return OneHotMap(tuple(columns), max_categories)


def apply_one_hot(X: SparseMatrix, ohm: OneHotMap) -> SparseMatrix:
    if X.n_cols != ohm.n_in:
        raise ShapeError(f"one-hot map fitted on {ohm.n_in} columns, got {X.n_cols}")
    if all(c is None for c in ohm.columns):
        return X
    offsets = ohm.offsets
    width = max([1] + [len(c) for c in ohm.columns if c is not None])
    cats = np.full((ohm.n_in, width), np.nan)
    is_cat = np.zeros(ohm.n_in, dtype=bool)
    zero_slot = np.full(ohm.n_in, -1, dtype=np.int64)
    for j, c in enumerate(ohm.columns):
        if c is None:
            continue
        is_cat[j] = True
        cats[j, :len(c)] = c
        if 0.0 in c:
            zero_slot[j] = c.index(0.0)

    rows = np.repeat(np.arange(X.n_rows, dtype=np.int64), np.diff(X.row_offsets))
    cols, vals = X.col_indices, X.values

    # stored entries
    cat_entry = is_cat[cols]
    hit = cats[cols[cat_entry]] == vals[cat_entry, None]
    seen = hit.any(axis=1)
    slot = hit.argmax(axis=1)
    out_r = [rows[~cat_entry], rows[cat_entry][seen]]
    out_c = [offsets[cols[~cat_entry]], offsets[cols[cat_entry]][seen] + slot[seen]]
    out_v = [vals[~cat_entry], np.ones(int(seen.sum()))]

    # implicit zeros of categorical columns that have a zero category
    csc = X.to_csc()
    all_rows = np.ones(X.n_rows, dtype=bool)
    for j in np.flatnonzero(zero_slot >= 0):
        mask = all_rows.copy()
        mask[csc.indices[csc.indptr[j]:csc.indptr[j + 1]]] = False
        zr = np.flatnonzero(mask)
        out_r.append(zr)
        out_c.append(np.full(len(zr), offsets[j] + zero_slot[j]))
        out_v.append(np.ones(len(zr)))

    coo = sp.coo_matrix(
        (np.concatenate(out_v), (np.concatenate(out_r), np.concatenate(out_c))),
        shape=(X.n_rows, ohm.n_out),
    )
    return SparseMatrix.from_scipy(coo)
