"""Operator registry: roles, hyperparameter grids and defaults.

Grids are discrete so the search space is finite and pipeline specs can be
hashed for fitness caching.
"""

from __future__ import annotations

from dataclasses import dataclass

TRANSFORM = "transform"
CLASSIFIER = "classifier"

C_GRID = (1e-4, 1e-3, 1e-2, 0.05, 0.1, 0.5, 1.0, 5.0, 10.0, 15.0, 20.0, 25.0)


@dataclass(frozen=True)
class OperatorInfo:
    role: str
    grid: dict
    defaults: dict


REGISTRY: dict[str, OperatorInfo] = {
    "CountVectorize": OperatorInfo(TRANSFORM, {"min_df": (1, 2, 3, 5)}, {"min_df": 1}),
    "OneHot": OperatorInfo(TRANSFORM, {"max_categories": (2, 3, 5, 10)}, {"max_categories": 10}),
    "SelectPercentile": OperatorInfo(
        TRANSFORM, {"percentile": tuple(range(1, 101))}, {"percentile": 10}
    ),
    "RFE": OperatorInfo(
        TRANSFORM,
        {
            "target_percent": (5, 10, 25, 50, 75),
            "step_fraction": (0.1, 0.2, 0.5),
            "n_trees": (10, 50, 100),
            "max_features": ("sqrt", 0.1, 0.25, 0.5),
        },
        {"target_percent": 25, "step_fraction": 0.1, "n_trees": 100, "max_features": "sqrt"},
    ),
    "ExtraTreesClassifier": OperatorInfo(
        CLASSIFIER,
        {
            "n_trees": (10, 50, 100),
            "max_features": ("sqrt", 0.05, 0.1, 0.25, 0.5, 1.0),
            "min_samples_split": tuple(range(2, 21)),
        },
        {"n_trees": 100, "max_features": "sqrt", "min_samples_split": 2},
    ),
    "LogisticRegression": OperatorInfo(CLASSIFIER, {"C": C_GRID}, {"C": 1.0}),
}

# transforms the search may insert after the leading CountVectorize
INNER_TRANSFORMS = ("OneHot", "SelectPercentile", "RFE")
CLASSIFIERS = tuple(k for k, v in REGISTRY.items() if v.role == CLASSIFIER)


def role(kind: str) -> str:
    return REGISTRY[kind].role


def check_params(kind: str, params: dict) -> list[str]:
    """Problems with ``params`` for operator ``kind``; empty when valid."""
    if kind not in REGISTRY:
        return [f"unknown operator {kind!r}"]
    grid = REGISTRY[kind].grid
    problems = []
    if set(params) != set(grid):
        problems.append(f"{kind} expects params {sorted(grid)}, got {sorted(params)}")
    for name, value in params.items():
        if name in grid and value not in grid[name]:
            problems.append(f"{kind}.{name}={value!r} outside its grid")
    return problems
