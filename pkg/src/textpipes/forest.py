"""Extremely randomized trees with the Gini criterion.

Each node draws a random subset of candidate features and one uniform
threshold per candidate, then keeps the candidate with the largest Gini
decrease. No bootstrap: every tree sees all training rows. Absent sparse
entries are read as zeros.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .corpus import make_rng
from .deadline import as_deadline
from .errors import DataError, DomainError, ShapeError
from .sparse import SparseMatrix, as_sparse

LEAF = -1


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 100
    max_features: float | str = "sqrt"
    min_samples_split: int = 2
    max_depth: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.n_trees < 1:
            raise DomainError("n_trees must be >= 1")
        if isinstance(self.max_features, str):
            if self.max_features != "sqrt":
                raise DomainError(f"unknown max_features {self.max_features!r}")
        elif not 0 < self.max_features <= 1:
            raise DomainError("fractional max_features must lie in (0, 1]")
        if self.min_samples_split < 2:
            raise DomainError("min_samples_split must be >= 2")
        if self.max_depth is not None and self.max_depth < 0:
            raise DomainError("max_depth must be >= 0")

    def n_candidates(self, n_features: int) -> int:
        if self.max_features == "sqrt":
            m = int(math.sqrt(n_features))
        else:
            m = int(self.max_features * n_features)
        return max(1, min(m, n_features))


@dataclass(frozen=True)
class Tree:
    """Array-encoded binary tree; ``feature[i] == -1`` marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    counts: np.ndarray  # (n_nodes, n_classes) class counts of samples reaching each node

    @property
    def n_nodes(self):
        return len(self.feature)

    def apply(self, X: SparseMatrix) -> np.ndarray:
        """Leaf id reached by every row."""
        csr = X.to_scipy()
        node = np.zeros(X.n_rows, dtype=np.int64)
        active = np.arange(X.n_rows)
        while len(active):
            f = self.feature[node[active]]
            inner = f >= 0
            active = active[inner]
            if not len(active):
                break
            f = f[inner]
            vals = np.asarray(csr[active, f]).ravel()
            cur = node[active]
            node[active] = np.where(vals < self.threshold[cur], self.left[cur], self.right[cur])
        return node


@dataclass(frozen=True)
class ExtraTreesModel:
    trees: list[Tree]
    n_features: int
    n_classes: int
    params: ForestParams


def gini_impurity(class_counts) -> float:
    c = np.asarray(class_counts, dtype=np.float64)
    total = c.sum()
    if total <= 0:
        raise DomainError("gini impurity undefined for an empty node")
    p = c / total
    return float(1.0 - np.dot(p, p))


def _gini_rows(counts: np.ndarray) -> np.ndarray:
    """Row-wise Gini of a count matrix; empty rows score 0."""
    total = counts.sum(axis=1)
    safe = np.where(total > 0, total, 1.0)
    p = counts / safe[:, None]
    return np.where(total > 0, 1.0 - (p * p).sum(axis=1), 0.0)


# below this many cells the matrix is densified once per fit for faster gathers
DENSE_CELLS = 4_000_000


def _gather(csc, pos, idx, cand):
    """Dense ``X[idx][:, cand]`` read straight from CSC storage."""
    starts = csc.indptr[cand]
    lens = csc.indptr[cand + 1] - starts
    total = int(lens.sum())
    sub = np.zeros((len(idx), len(cand)))
    if total:
        seg = np.repeat(np.arange(len(cand)), lens)
        ptr = np.arange(total) - np.repeat(np.cumsum(lens) - lens, lens) + starts[seg]
        p = pos[csc.indices[ptr]]
        keep = p >= 0
        sub[p[keep], seg[keep]] = csc.data[ptr[keep]]
    return sub


def _fit_tree(csc, dense, y, n_classes, params: ForestParams, rng, deadline) -> Tree:
    n, n_features = csc.shape
    m = params.n_candidates(n_features)
    pos = np.full(n, -1, dtype=np.int64)
    onehot = np.eye(n_classes)[y]
    max_depth = np.inf if params.max_depth is None else params.max_depth
    feature, threshold, left, right, counts = [], [], [], [], []
    # (rows, depth, parent id, is_left)
    stack = [(np.arange(n), 0, -1, False)]
    while stack:
        idx, depth, parent, is_left = stack.pop()
        node = len(feature)
        if parent >= 0:
            (left if is_left else right)[parent] = node
        if node % 256 == 0:
            deadline.check()
        node_counts = np.bincount(y[idx], minlength=n_classes).astype(np.float64)
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        counts.append(node_counts)
        size = len(idx)
        if size < params.min_samples_split or depth >= max_depth or node_counts.max() == size:
            continue
        cand = rng.choice(n_features, size=m, replace=False)
        u = rng.random(m)
        if dense is not None:
            sub = dense[np.ix_(idx, cand)]
        else:
            pos[idx] = np.arange(size)
            sub = _gather(csc, pos, idx, cand)
            pos[idx] = -1
        lo, hi = sub.min(axis=0), sub.max(axis=0)
        usable = hi > lo
        if not usable.any():
            continue
        thr = hi - u * (hi - lo)
        thr = np.where(thr > lo, thr, hi)
        goes_left = sub < thr
        lc = goes_left.T.astype(np.float64) @ onehot[idx]
        rc = node_counts - lc
        nl, nr = lc.sum(axis=1), rc.sum(axis=1)
        # size * weighted child Gini = nl - sum(lc^2)/nl + nr - sum(rc^2)/nr
        nl[nl == 0] = 1.0
        nr[nr == 0] = 1.0
        child = size - (lc * lc).sum(axis=1) / nl - (rc * rc).sum(axis=1) / nr
        child = np.where(usable, child, np.inf)
        best = int(np.argmin(child))
        feature[node] = int(cand[best])
        threshold[node] = float(thr[best])
        mask = goes_left[:, best]
        # push right first so the left subtree is numbered next
        stack.append((idx[~mask], depth + 1, node, False))
        stack.append((idx[mask], depth + 1, node, True))
    return Tree(
        np.asarray(feature, dtype=np.int64),
        np.asarray(threshold, dtype=np.float64),
        np.asarray(left, dtype=np.int64),
        np.asarray(right, dtype=np.int64),
        np.asarray(counts, dtype=np.float64).reshape(-1, n_classes),
    )


def fit_extra_trees(X, y, params: ForestParams = ForestParams(), n_classes=None,
                    threads: int = 1, deadline=None) -> ExtraTreesModel:
    X = as_sparse(X)
    y = np.asarray(y, dtype=np.int64)
    if X.n_rows == 0 or X.n_rows != len(y):
        raise DataError(f"need a non-empty X matching y, got {X.shape} and {len(y)} labels")
    if n_classes is None:
        n_classes = int(y.max()) + 1
    deadline = as_deadline(deadline)
    csc = X.to_csc()
    dense = X.toarray() if X.n_rows * X.n_cols <= DENSE_CELLS else None

    def one(i):
        return _fit_tree(csc, dense, y, n_classes, params, make_rng(params.seed ^ i), deadline)

    if threads > 1 and params.n_trees > 1:
        with ThreadPoolExecutor(threads) as pool:
            trees = list(pool.map(one, range(params.n_trees)))
    else:
        trees = [one(i) for i in range(params.n_trees)]
    return ExtraTreesModel(trees, X.n_cols, n_classes, params)


def predict_proba_forest(model: ExtraTreesModel, X) -> np.ndarray:
    X = as_sparse(X)
    if X.n_cols != model.n_features:
        raise ShapeError(f"model expects {model.n_features} features, got {X.n_cols}")
    proba = np.zeros((X.n_rows, model.n_classes))
    for tree in model.trees:
        leaf_counts = tree.counts[tree.apply(X)]
        proba += leaf_counts / leaf_counts.sum(axis=1, keepdims=True)
    return proba / len(model.trees)


def predict_forest(model: ExtraTreesModel, X) -> np.ndarray:
    # np.argmax returns the first maximum, i.e. the lowest class id on ties
    return np.argmax(predict_proba_forest(model, X), axis=1)


def tree_importances(tree: Tree, n_features: int) -> np.ndarray:
    imp = np.zeros(n_features)
    inner = np.flatnonzero(tree.feature >= 0)
    if len(inner):
        n_node = tree.counts.sum(axis=1)
        gini = _gini_rows(tree.counts)
        l, r = tree.left[inner], tree.right[inner]
        decrease = (
            n_node[inner] * gini[inner] - n_node[l] * gini[l] - n_node[r] * gini[r]
        ) / n_node[0]
        np.add.at(imp, tree.feature[inner], decrease)
    total = imp.sum()
    return imp / total if total > 0 else imp


def feature_importances(model: ExtraTreesModel) -> np.ndarray:
    """Mean over trees of per-tree normalized Gini importance."""
    imp = np.mean([tree_importances(t, model.n_features) for t in model.trees], axis=0)
    total = imp.sum()
    return imp / total if total > 0 else imp
