"""Univariate ANOVA-F percentile selection and forest-guided RFE."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp

from .deadline import as_deadline
from .errors import ConfigError, DomainError, ShapeError
from .forest import ForestParams, feature_importances, fit_extra_trees
from .sparse import SparseMatrix, as_sparse

MAX_SCORE = np.finfo(np.float64).max


@dataclass(frozen=True)
class FeatureMask:
    selected: np.ndarray
    n_in: int

    def __post_init__(self):
        sel = np.asarray(self.selected, dtype=np.int64)
        object.__setattr__(self, "selected", sel)
        if len(sel) and (sel[0] < 0 or sel[-1] >= self.n_in or np.any(np.diff(sel) <= 0)):
            raise ShapeError("mask must be strictly increasing within [0, n_in)")

    def __len__(self):
        return len(self.selected)

    def apply(self, X: SparseMatrix) -> SparseMatrix:
        if X.n_cols != self.n_in:
            raise ShapeError(f"mask fitted on {self.n_in} columns, got {X.n_cols}")
        if len(self.selected) == self.n_in:
            return X
        return X.take_columns(self.selected)

    def complement(self) -> "FeatureMask":
        keep = np.ones(self.n_in, dtype=bool)
        keep[self.selected] = False
        return FeatureMask(np.flatnonzero(keep), self.n_in)


def anova_f_scores(X, y) -> np.ndarray:
    """One-way ANOVA F statistic of every column against the class labels.

    Implicit zeros take part in the class means and variances; computed
    from per-class sums and sums of squares without densifying.
    """
    X = as_sparse(X)
    y = np.asarray(y, dtype=np.int64)
    classes, y_idx = np.unique(y, return_inverse=True)
    k, n = len(classes), len(y)
    if k < 2:
        raise DomainError("ANOVA F needs at least two classes")
    csr = X.to_scipy()
    member = sp.csr_matrix((np.ones(n), (y_idx, np.arange(n))), shape=(k, n))
    n_c = np.bincount(y_idx, minlength=k).astype(np.float64)
    sums = np.asarray((member @ csr).todense())
    sumsq = np.asarray((member @ csr.multiply(csr)).todense())
    grand = sums.sum(axis=0)
    within_parts = sumsq - sums**2 / n_c[:, None]
    ss_within = within_parts.sum(axis=0)
    ss_between = (sums**2 / n_c[:, None]).sum(axis=0) - grand**2 / n
    # cancellation residue of exact zeros
    scale = np.maximum(sumsq.sum(axis=0), 1.0) * 1e-12
    ss_within = np.where(ss_within <= scale, 0.0, ss_within)
    ss_between = np.where(ss_between <= scale, 0.0, ss_between)

    scores = np.zeros(X.n_cols)
    ok = ss_within > 0
    scores[ok] = (ss_between[ok] / (k - 1)) / (ss_within[ok] / (n - k))
    scores[~ok & (ss_between > 0)] = MAX_SCORE
    return scores


def n_to_keep(n: int, percentile: float) -> int:
    # round away float noise such as 3 * 34 / 100 = 1.0200000000000002
    return max(1, math.ceil(round(n * percentile / 100.0, 9)))


def select_percentile(scores, percentile: float) -> FeatureMask:
    """Keep the top ``ceil(n * percentile / 100)`` scores, ties to lower ids."""
    scores = np.asarray(scores, dtype=np.float64)
    if not 0 < percentile <= 100:
        raise ConfigError(f"percentile must lie in (0, 100], got {percentile}")
    if len(scores) == 0:
        raise ConfigError("cannot select from an empty score vector")
    order = np.lexsort((np.arange(len(scores)), -scores))
    keep = order[: n_to_keep(len(scores), percentile)]
    return FeatureMask(np.sort(keep), len(scores))


def rfe(X, y, target_n: int, step_fraction: float = 0.1,
        fp: ForestParams = ForestParams(), threads: int = 1, deadline=None) -> FeatureMask:
    """Recursive feature elimination driven by extra-trees importances.

    Each round drops ``max(1, floor(step_fraction * surviving))`` of the
    least important columns (ties drop the higher column id), never going
    below ``target_n``.
    """
    X = as_sparse(X)
    if not 1 <= target_n <= X.n_cols:
        raise ConfigError(f"target_n={target_n} outside [1, {X.n_cols}]")
    if not 0 < step_fraction < 1:
        raise ConfigError(f"step_fraction must lie in (0, 1), got {step_fraction}")
    y = np.asarray(y, dtype=np.int64)
    deadline = as_deadline(deadline)
    n_classes = int(y.max()) + 1 if len(y) else 1
    surviving = np.arange(X.n_cols)
    rnd = 0
    while len(surviving) > target_n:
        deadline.check()
        sub = X if len(surviving) == X.n_cols else X.take_columns(surviving)
        model = fit_extra_trees(sub, y, replace(fp, seed=fp.seed + rnd), n_classes,
                                threads=threads, deadline=deadline)
        imp = feature_importances(model)
        n_drop = min(max(1, int(step_fraction * len(surviving))), len(surviving) - target_n)
        order = np.lexsort((-surviving, imp))
        surviving = np.sort(np.delete(surviving, order[:n_drop]))
        rnd += 1
    return FeatureMask(surviving, X.n_cols)
