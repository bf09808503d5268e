"""Confusion matrices and the precision/recall/F1 family."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import ConfigError, FormatError, ShapeError


@dataclass(frozen=True)
class ConfusionMatrix:
    counts: np.ndarray  # counts[i, j]: true class i predicted as j

    @property
    def k(self):
        return self.counts.shape[0]

    @property
    def n(self):
        return int(self.counts.sum())


@dataclass(frozen=True)
class BinaryReport:
    precision: float
    recall: float
    f1: float
    accuracy: float


@dataclass(frozen=True)
class MulticlassReport:
    micro_f1: float
    macro_f1: float
    accuracy: float
    per_class_f1: tuple[float, ...]


def confusion_matrix(y_true, y_pred, k: int) -> ConfusionMatrix:
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    if y_true.shape != y_pred.shape:
        raise ShapeError(f"{len(y_true)} true labels vs {len(y_pred)} predictions")
    if len(y_true) and (min(y_true.min(), y_pred.min()) < 0 or max(y_true.max(), y_pred.max()) >= k):
        raise ShapeError(f"labels must lie in [0, {k})")
    counts = np.bincount(y_true * k + y_pred, minlength=k * k).reshape(k, k)
    return ConfusionMatrix(counts)


def _ratio(num, den):
    return num / den if den > 0 else 0.0


def f_score(precision: float, recall: float) -> float:
    return _ratio(2 * precision * recall, precision + recall)


def binary_report(cm: ConfusionMatrix, positive_class: int = 1) -> BinaryReport:
    if cm.k != 2:
        raise ConfigError(f"binary report needs a 2x2 matrix, got k={cm.k}")
    c = cm.counts
    neg = 1 - positive_class
    tp, fp = c[positive_class, positive_class], c[neg, positive_class]
    fn, tn = c[positive_class, neg], c[neg, neg]
    p = _ratio(tp, tp + fp)
    r = _ratio(tp, tp + fn)
    return BinaryReport(float(p), float(r), float(f_score(p, r)), float(_ratio(tp + tn, cm.n)))


def per_class_f1(cm: ConfusionMatrix) -> np.ndarray:
    c = cm.counts
    tp = np.diag(c).astype(np.float64)
    fp = c.sum(axis=0) - tp
    fn = c.sum(axis=1) - tp
    den = 2 * tp + fp + fn
    return np.divide(2 * tp, den, out=np.zeros_like(tp), where=den > 0)


def multiclass_report(cm: ConfusionMatrix) -> MulticlassReport:
    """Micro, macro (over every class in the label space) and accuracy."""
    c = cm.counts
    f1 = per_class_f1(cm)
    tp = np.trace(c)
    fp = c.sum() - tp  # pooled: every off-diagonal cell is one FP and one FN
    fn = fp
    micro = _ratio(2 * tp, 2 * tp + fp + fn)
    return MulticlassReport(float(micro), float(f1.mean()), float(_ratio(tp, cm.n)),
                            tuple(float(v) for v in f1))


# display ------------------------------------------------------------------

def report_items(report) -> list[tuple[str, object]]:
    items = []
    for key, value in asdict(report).items():
        if isinstance(value, (tuple, list)):
            items.extend((f"{key}.{i}", v) for i, v in enumerate(value))
        else:
            items.append((key, value))
    return items


def format_report(report, fmt: str = "text", extra: dict | None = None) -> str:
    """Aligned percentage table (``text``) or ``key=value`` lines (``kv``)."""
    items = list((extra or {}).items()) + report_items(report)
    if fmt == "kv":
        return "\n".join(f"{k}={_kv_value(v)}" for k, v in items) + "\n"
    if fmt != "text":
        raise ConfigError(f"unknown report format {fmt!r}")
    width = max(len(k) for k, _ in items)
    lines = []
    for k, v in items:
        shown = f"{100 * v:6.2f}%" if isinstance(v, float) else str(v)
        lines.append(f"{k:<{width}}  {shown}")
    return "\n".join(lines) + "\n"


def _kv_value(v):
    return f"{v:.4f}" if isinstance(v, float) else str(v)


def parse_kv(text: str) -> dict[str, str]:
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        if "=" not in line:
            raise FormatError(f"line {lineno}: expected key=value, got {line!r}")
        k, v = line.split("=", 1)
        out[k.strip()] = v.strip()
    return out
