"""Competition-format corpora and stratified cross-validation folds.

A corpus is two paired UTF-8 files: one document per line and one tag per
line. Folds are drawn with numpy's PCG64 generator so a given seed yields
the same split everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigError, FormatError, LabelError


@dataclass(frozen=True)
class Dataset:
    documents: list[str]
    labels: list[int]
    label_names: list[str] = field(default_factory=list)

    def __post_init__(self):
        if len(self.documents) != len(self.labels):
            raise FormatError(
                f"{len(self.documents)} documents but {len(self.labels)} labels"
            )
        if len(set(self.label_names)) != len(self.label_names):
            raise LabelError(f"duplicate label names in {self.label_names!r}")
        k = len(self.label_names)
        for lab in self.labels:
            if not 0 <= lab < k:
                raise LabelError(f"label {lab} outside [0, {k})")

    def __len__(self):
        return len(self.documents)

    @property
    def y(self) -> np.ndarray:
        return np.asarray(self.labels, dtype=np.int64)

    def subset(self, indices) -> "Dataset":
        return Dataset(
            [self.documents[i] for i in indices],
            [self.labels[i] for i in indices],
            list(self.label_names),
        )

    def with_labels(self, labels, label_names) -> "Dataset":
        return Dataset(list(self.documents), list(labels), list(label_names))


@dataclass(frozen=True)
class FoldPlan:
    folds: list[tuple[np.ndarray, np.ndarray]]
    k: int
    seed: int


def _read_lines(path) -> list[str]:
    text = Path(path).read_text(encoding="utf-8")
    lines = text.splitlines()
    # splitlines already drops one trailing newline; drop a trailing blank line too
    if lines and lines[-1].strip() == "":
        lines.pop()
    return lines


def read_documents(path) -> list[str]:
    return _read_lines(path)


def parse_labels(raw: Sequence[str], label_names: Sequence[str]) -> list[int]:
    index = {name: i for i, name in enumerate(label_names)}
    labels = []
    for lineno, tag in enumerate(raw, 1):
        tag = tag.strip()
        if tag in index:
            labels.append(index[tag])
            continue
        try:
            value = int(tag)
        except ValueError:
            raise LabelError(f"line {lineno}: unknown tag {tag!r}") from None
        if not 0 <= value < len(label_names):
            raise LabelError(f"line {lineno}: label {value} outside [0, {len(label_names)})")
        labels.append(value)
    return labels


def load_corpus(text_path, label_path, label_names: Sequence[str]) -> Dataset:
    """Read paired document/tag files into a :class:`Dataset`."""
    docs = _read_lines(text_path)
    raw = _read_lines(label_path)
    if len(docs) != len(raw):
        raise FormatError(
            f"{text_path} has {len(docs)} lines but {label_path} has {len(raw)}"
        )
    return Dataset(docs, parse_labels(raw, label_names), list(label_names))


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def stratified_kfold(ds: Dataset, k: int, seed: int) -> FoldPlan:
    """Split rows into ``k`` folds with per-class counts balanced to within one.

    Each class is shuffled independently, then dealt round-robin; the dealing
    offset continues across classes so fold sizes stay balanced too.
    """
    y = ds.y
    present, counts = np.unique(y, return_counts=True)
    if k < 2:
        raise ConfigError(f"k must be >= 2, got {k}")
    if len(present) and k > counts.min():
        raise ConfigError(f"k={k} exceeds smallest class count {counts.min()}")
    rng = make_rng(seed)
    assignment = np.empty(len(y), dtype=np.int64)
    offset = 0
    for cls in present:
        rows = np.flatnonzero(y == cls)
        rows = rows[rng.permutation(len(rows))]
        assignment[rows] = (np.arange(len(rows)) + offset) % k
        offset = (offset + len(rows)) % k
    everything = np.arange(len(y))
    folds = []
    for f in range(k):
        valid = everything[assignment == f]
        train = everything[assignment != f]
        folds.append((train, valid))
    return FoldPlan(folds, k, seed)
