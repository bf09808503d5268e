"""Exact rational one-way ANOVA, the independent oracle for ANOVA-F tests."""

from fractions import Fraction

MAX_SCORE = 1.7976931348623157e308


def anova_exact(column, labels):
    groups = {}
    for v, lab in zip(column, labels):
        groups.setdefault(lab, []).append(Fraction(v))
    n, k = len(column), len(groups)
    grand = sum(Fraction(v) for v in column) / n
    between = sum(len(g) * (sum(g) / len(g) - grand) ** 2 for g in groups.values())
    within = sum(sum((v - sum(g) / len(g)) ** 2 for v in g) for g in groups.values())
    if within == 0:
        return MAX_SCORE if between > 0 else 0.0
    return float((between / (k - 1)) / (within / (n - k)))
