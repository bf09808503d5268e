"""Pipeline specs (operator chains under a classifier root), fitting,
prediction, presets and the versioned JSON model document."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import registry
from .corpus import Dataset
from .deadline import as_deadline
from .errors import (ConfigError, DomainError, FormatError, ShapeError, TextPipesError,
                     VersionError)
from .features import (OneHotMap, Vocabulary, apply_one_hot, fit_one_hot, fit_vectorizer,
                       transform_counts)
from .forest import ExtraTreesModel, ForestParams, Tree, fit_extra_trees, predict_proba_forest
from .linear import (LogisticModel, LogisticParams, apply_threshold, fit_logistic,
                     predict_proba)
from .select import FeatureMask, anova_f_scores, rfe, select_percentile

FORMAT_NAME = "textpipes-pipeline"
FORMAT_VERSION = "1"


@dataclass(frozen=True)
class OperatorNode:
    kind: str
    params: dict = field(default_factory=dict)
    children: tuple["OperatorNode", ...] = ()

    def to_dict(self):
        return {
            "kind": self.kind,
            "params": dict(sorted(self.params.items())),
            "children": [c.to_dict() for c in self.children],
        }

    @classmethod
    def from_dict(cls, d):
        return cls(d["kind"], dict(d["params"]), tuple(cls.from_dict(c) for c in d["children"]))


@dataclass(frozen=True)
class PipelineSpec:
    root: OperatorNode
    name: str | None = None

    def stages(self) -> list[OperatorNode]:
        """Nodes in execution order: leaf transform first, classifier last."""
        out, node = [], self.root
        while True:
            out.append(node)
            if not node.children:
                break
            node = node.children[0]
        return out[::-1]

    @property
    def kinds(self) -> list[str]:
        return [s.kind for s in self.stages()]

    @property
    def complexity(self) -> int:
        return len(self.stages())

    def key(self) -> str:
        """Canonical text form; equal specs share a key."""
        return json.dumps(self.root.to_dict(), sort_keys=True, separators=(",", ":"))

    def summary(self) -> str:
        def fmt(n):
            args = ",".join(f"{k}={v}" for k, v in sorted(n.params.items()))
            return f"{n.kind}({args})"
        return " -> ".join(fmt(n) for n in self.stages())


def chain(stages: Sequence[tuple[str, dict]], name=None) -> PipelineSpec:
    """Build a spec from ``[(kind, params), ...]`` in execution order."""
    node = None
    for kind, params in stages:
        node = OperatorNode(kind, dict(params), () if node is None else (node,))
    return PipelineSpec(node, name)


def with_defaults(kind, **params):
    merged = dict(registry.REGISTRY[kind].defaults)
    merged.update(params)
    return kind, merged


def spec_problems(spec: PipelineSpec) -> list[str]:
    problems = []
    node, depth = spec.root, 0
    while node is not None:
        if node.kind not in registry.REGISTRY:
            return [f"unknown operator {node.kind!r}"]
        want = registry.CLASSIFIER if depth == 0 else registry.TRANSFORM
        if registry.role(node.kind) != want:
            problems.append(f"{node.kind} cannot appear at depth {depth}")
        if len(node.children) > 1:
            problems.append(f"{node.kind} has {len(node.children)} children; chains only")
        problems.extend(registry.check_params(node.kind, node.params))
        node = node.children[0] if node.children else None
        depth += 1
    kinds = spec.kinds
    if len(kinds) < 2 or kinds[0] != "CountVectorize":
        problems.append("first stage must be CountVectorize")
    if kinds.count("CountVectorize") > 1:
        problems.append("CountVectorize may only appear once")
    return problems


def validate_spec(spec: PipelineSpec) -> PipelineSpec:
    problems = spec_problems(spec)
    if problems:
        raise ConfigError("; ".join(problems))
    return spec


def preset(name: str, **overrides) -> PipelineSpec:
    """The two chains the search discovered for the shared task.

    ``overrides`` maps ``"Kind.param"`` to a grid value, e.g.
    ``{"RFE.target_percent": 10}``.
    """
    if name == "subtask1":
        stages = [
            with_defaults("CountVectorize"),
            with_defaults("RFE"),
            with_defaults("LogisticRegression"),
        ]
    elif name == "subtask2":
        stages = [
            with_defaults("CountVectorize"),
            with_defaults("SelectPercentile", percentile=6),
            with_defaults("OneHot"),
            with_defaults("LogisticRegression", C=0.05),
        ]
    else:
        raise ConfigError(f"unknown preset {name!r}; choose subtask1 or subtask2")
    for dotted, value in overrides.items():
        kind, _, param = dotted.partition(".")
        hits = [p for k, p in stages if k == kind]
        if not hits or param not in hits[0]:
            raise ConfigError(f"preset {name} has no hyperparameter {dotted}")
        hits[0][param] = value
    return validate_spec(chain(stages, name))


# fitting ------------------------------------------------------------------

@dataclass(frozen=True)
class FittedPipeline:
    spec: PipelineSpec
    states: tuple
    label_names: tuple[str, ...]
    widths: tuple[int, ...] = ()  # output column count of every transform stage

    @property
    def n_classes(self):
        return len(self.label_names)

    @property
    def is_binary(self):
        return self.n_classes == 2


def _annotate(exc: TextPipesError, index: int, kind: str) -> TextPipesError:
    if getattr(exc, "stage", None) is not None:
        return exc
    new = type(exc)(f"stage {index} ({kind}): {exc}")
    new.stage = index
    return new


def _forest_params(params, seed):
    return ForestParams(
        n_trees=params["n_trees"],
        max_features=params["max_features"],
        min_samples_split=params.get("min_samples_split", 2),
        seed=seed,
    )


def _fit_stage(node, docs, X, y, n_classes, seed, threads, deadline):
    p = node.params
    if node.kind == "CountVectorize":
        vocab = fit_vectorizer(docs, p["min_df"])
        return vocab, transform_counts(docs, vocab, threads)
    if node.kind == "SelectPercentile":
        mask = select_percentile(anova_f_scores(X, y), p["percentile"])
        return mask, mask.apply(X)
    if node.kind == "RFE":
        if X.n_cols == 0:
            raise ConfigError("RFE on an empty feature matrix")
        target = max(1, math.ceil(round(X.n_cols * p["target_percent"] / 100.0, 9)))
        mask = rfe(X, y, target, p["step_fraction"], _forest_params(p, seed), threads, deadline)
        return mask, mask.apply(X)
    if node.kind == "OneHot":
        ohm = fit_one_hot(X, p["max_categories"])
        return ohm, apply_one_hot(X, ohm)
    if node.kind == "ExtraTreesClassifier":
        return fit_extra_trees(X, y, _forest_params(p, seed), n_classes, threads, deadline), None
    if node.kind == "LogisticRegression":
        return fit_logistic(X, y, LogisticParams(C=p["C"]), deadline), None
    raise ConfigError(f"unknown operator {node.kind!r}")


def _transform_stage(state, docs, X, threads):
    if isinstance(state, Vocabulary):
        return transform_counts(docs, state, threads)
    if isinstance(state, FeatureMask):
        return state.apply(X)
    if isinstance(state, OneHotMap):
        return apply_one_hot(X, state)
    raise TypeError(f"not a transform state: {type(state).__name__}")


def fit_pipeline(spec: PipelineSpec, ds: Dataset, seed: int = 0, threads: int = 1,
                 deadline=None) -> FittedPipeline:
    """Fit every stage in order on the output of the previous one."""
    validate_spec(spec)
    deadline = as_deadline(deadline)
    stages = spec.stages()
    y = ds.y
    if len(np.unique(y)) < 2:
        # the classifier is the stage that cannot run; report it there
        raise _annotate(DomainError(f"need at least two classes, got {len(np.unique(y))}"),
                        len(stages) - 1, stages[-1].kind)
    states, widths, X = [], [], None
    for i, node in enumerate(stages):
        deadline.check()
        try:
            state, X_next = _fit_stage(node, ds.documents, X, y, len(ds.label_names),
                                       seed, threads, deadline)
        except TextPipesError as exc:
            raise _annotate(exc, i, node.kind) from exc
        states.append(state)
        if X_next is not None:
            widths.append(X_next.n_cols)
            X = X_next
    return FittedPipeline(spec, tuple(states), tuple(ds.label_names), tuple(widths))


def transform_docs(fp: FittedPipeline, docs, threads: int = 1):
    X = None
    for i, state in enumerate(fp.states[:-1]):
        X = _transform_stage(state, docs, X, threads)
        if fp.widths and X.n_cols != fp.widths[i]:
            raise ShapeError(f"stage {i} produced {X.n_cols} columns, expected {fp.widths[i]}")
    return X


def predict_proba_pipeline(fp: FittedPipeline, docs, threads: int = 1) -> np.ndarray:
    """``(n_docs, n_label_names)`` class probabilities."""
    X = transform_docs(fp, list(docs), threads)
    clf = fp.states[-1]
    out = np.zeros((X.n_rows, fp.n_classes))
    if isinstance(clf, LogisticModel):
        out[:, clf.classes] = predict_proba(clf, X)
    else:
        out[:, : clf.n_classes] = predict_proba_forest(clf, X)
    return out


def predict_pipeline(fp: FittedPipeline, docs, threshold: float | None = None,
                     threads: int = 1):
    """Predicted label ids and class probabilities.

    ``threshold`` replaces the argmax for binary pipelines: class 1 iff its
    probability reaches the threshold.
    """
    if threshold is not None and not fp.is_binary:
        raise ConfigError("a decision threshold only applies to binary pipelines")
    proba = predict_proba_pipeline(fp, docs, threads)
    if threshold is None:
        labels = np.argmax(proba, axis=1)
    else:
        labels = apply_threshold(proba[:, 1], threshold)
    return labels.astype(np.int64), proba


# serialization -----------------------------------------------------------

def _hex(a) -> list:
    return [float(v).hex() for v in np.asarray(a, dtype=np.float64).ravel()]


def _unhex(items, shape=None) -> np.ndarray:
    a = np.array([float.fromhex(s) for s in items], dtype=np.float64)
    return a.reshape(shape) if shape is not None else a


def _encode_state(state) -> dict:
    if isinstance(state, Vocabulary):
        return {"type": "Vocabulary", "terms": list(state.terms), "min_df": state.min_df}
    if isinstance(state, FeatureMask):
        return {"type": "FeatureMask", "selected": state.selected.tolist(), "n_in": state.n_in}
    if isinstance(state, OneHotMap):
        return {
            "type": "OneHotMap",
            "columns": [None if c is None else _hex(c) for c in state.columns],
            "max_categories": state.max_categories,
        }
    if isinstance(state, LogisticModel):
        p = state.params
        return {
            "type": "LogisticModel",
            "shape": list(state.weights.shape),
            "weights": _hex(state.weights),
            "intercepts": _hex(state.intercepts),
            "classes": state.classes.tolist(),
            "mode": state.mode,
            "params": {"C": float(p.C).hex(), "tol": float(p.tol).hex(),
                       "max_iter": p.max_iter, "fit_intercept": p.fit_intercept,
                       "mode": p.mode},
            "converged": state.converged,
            "n_iter": list(state.n_iter),
        }
    if isinstance(state, ExtraTreesModel):
        p = state.params
        return {
            "type": "ExtraTreesModel",
            "n_features": state.n_features,
            "n_classes": state.n_classes,
            "params": {"n_trees": p.n_trees, "max_features": p.max_features,
                       "min_samples_split": p.min_samples_split, "max_depth": p.max_depth,
                       "seed": p.seed},
            "trees": [
                {"feature": t.feature.tolist(), "threshold": _hex(t.threshold),
                 "left": t.left.tolist(), "right": t.right.tolist(), "counts": _hex(t.counts)}
                for t in state.trees
            ],
        }
    raise TypeError(f"cannot serialize {type(state).__name__}")


def _decode_state(d):
    kind = d["type"]
    if kind == "Vocabulary":
        return Vocabulary(tuple(d["terms"]), d["min_df"])
    if kind == "FeatureMask":
        return FeatureMask(np.asarray(d["selected"], dtype=np.int64), d["n_in"])
    if kind == "OneHotMap":
        cols = tuple(None if c is None else tuple(_unhex(c).tolist()) for c in d["columns"])
        return OneHotMap(cols, d["max_categories"])
    if kind == "LogisticModel":
        p = d["params"]
        params = LogisticParams(float.fromhex(p["C"]), float.fromhex(p["tol"]), p["max_iter"],
                                p["fit_intercept"], p["mode"])
        return LogisticModel(_unhex(d["weights"], tuple(d["shape"])), _unhex(d["intercepts"]),
                             np.asarray(d["classes"], dtype=np.int64), d["mode"], params,
                             d["converged"], tuple(d["n_iter"]))
    if kind == "ExtraTreesModel":
        k = d["n_classes"]
        trees = [
            Tree(np.asarray(t["feature"], dtype=np.int64), _unhex(t["threshold"]),
                 np.asarray(t["left"], dtype=np.int64), np.asarray(t["right"], dtype=np.int64),
                 _unhex(t["counts"], (-1, k)))
            for t in d["trees"]
        ]
        return ExtraTreesModel(trees, d["n_features"], k, ForestParams(**d["params"]))
    raise FormatError(f"unknown state type {kind!r}")


def serialize_pipeline(fp: FittedPipeline) -> str:
    doc = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "name": fp.spec.name,
        "label_names": list(fp.label_names),
        "spec": fp.spec.root.to_dict(),
        "widths": list(fp.widths),
        "states": [_encode_state(s) for s in fp.states],
    }
    return json.dumps(doc, indent=1, ensure_ascii=False) + "\n"


def deserialize_pipeline(text: str) -> FittedPipeline:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"malformed pipeline document: {exc}") from None
    if not isinstance(doc, dict) or doc.get("format") != FORMAT_NAME:
        raise FormatError("not a pipeline document")
    if str(doc.get("version")) != FORMAT_VERSION:
        raise VersionError(f"unsupported document version {doc.get('version')!r}")
    try:
        spec = PipelineSpec(OperatorNode.from_dict(doc["spec"]), doc.get("name"))
        states = tuple(_decode_state(s) for s in doc["states"])
        fp = FittedPipeline(spec, states, tuple(doc["label_names"]), tuple(doc["widths"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed pipeline document: {exc!r}") from None
    validate_spec(spec)
    if len(states) != len(spec.stages()):
        raise FormatError("state count does not match the spec")
    return fp


def save_pipeline(fp: FittedPipeline, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_pipeline(fp))


def load_pipeline(path) -> FittedPipeline:
    with open(path, encoding="utf-8") as fh:
        return deserialize_pipeline(fh.read())
