"""L2-regularized logistic regression.

Minimizes ``0.5 * ||w||^2 + C * sum_i log(1 + exp(-y_i (x_i.w + b)))`` with a
truncated Newton method: conjugate gradient on Hessian-vector products for
the direction, Armijo backtracking for the step. The intercept is not
penalized. Multiclass problems are split one-vs-rest.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .deadline import as_deadline
from .errors import ConfigError, ConvergenceWarning, DomainError, NumericError, ShapeError
from .sparse import as_sparse


@dataclass(frozen=True)
class LogisticParams:
    C: float = 1.0
    tol: float = 1e-6
    max_iter: int = 1000
    fit_intercept: bool = True
    mode: str = "auto"  # auto | binary | ovr

    def __post_init__(self):
        if not self.C > 0:
            raise ConfigError(f"C must be positive, got {self.C}")
        if not self.tol > 0:
            raise ConfigError(f"tol must be positive, got {self.tol}")
        if self.max_iter < 1:
            raise ConfigError("max_iter must be >= 1")
        if self.mode not in ("auto", "binary", "ovr"):
            raise ConfigError(f"unknown mode {self.mode!r}")


@dataclass(frozen=True)
class LogisticModel:
    weights: np.ndarray      # (n_problems, n_features)
    intercepts: np.ndarray   # (n_problems,)
    classes: np.ndarray
    mode: str                # binary | ovr
    params: LogisticParams
    converged: bool = True
    n_iter: tuple[int, ...] = ()
    objective_history: tuple[tuple[float, ...], ...] = field(default=(), repr=False)

    @property
    def n_features(self):
        return self.weights.shape[1]

    def decision_function(self, X) -> np.ndarray:
        X = as_sparse(X)
        if X.n_cols != self.n_features:
            raise ShapeError(f"model expects {self.n_features} features, got {X.n_cols}")
        scores = np.asarray(X.to_scipy() @ self.weights.T).reshape(X.n_rows, len(self.intercepts))
        return scores + self.intercepts


def nll_loss_grad(w, b, X, y, C):
    """Objective value and gradient ``(grad_w, grad_b)`` for labels in {-1, +1}."""
    w = np.asarray(w, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    X = as_sparse(X)
    if not (np.all(np.isfinite(w)) and np.isfinite(b) and np.isfinite(C)):
        raise NumericError("non-finite parameters")
    if X.n_cols != len(w) or X.n_rows != len(y):
        raise ShapeError("inconsistent shapes")
    csr = X.to_scipy()
    margin = y * (csr @ w + b)
    loss = 0.5 * np.dot(w, w) + C * np.logaddexp(0.0, -margin).sum()
    coef = -C * y * expit(-margin)
    return float(loss), (w + csr.T @ coef, float(coef.sum()))


class _Problem:
    """One binary subproblem; parameters packed as ``[w, b]``."""

    def __init__(self, csr, y, C, fit_intercept):
        self.csr, self.csr_t = csr, csr.T.tocsr()
        self.y, self.C, self.fit_intercept = y, C, fit_intercept
        self.d = csr.shape[1]

    def scores(self, theta):
        return self.csr @ theta[: self.d] + theta[self.d]

    def value(self, theta):
        w = theta[: self.d]
        return 0.5 * np.dot(w, w) + self.C * np.logaddexp(0.0, -self.y * self.scores(theta)).sum()

    def grad(self, theta):
        margin = self.y * self.scores(theta)
        coef = -self.C * self.y * expit(-margin)
        g = np.empty_like(theta)
        g[: self.d] = theta[: self.d] + self.csr_t @ coef
        g[self.d] = coef.sum() if self.fit_intercept else 0.0
        # curvature weights for Hessian-vector products at this point
        s = expit(margin)
        self._curv = self.C * s * (1.0 - s)
        return g

    def hessp(self, v):
        u = self.csr @ v[: self.d] + v[self.d]
        du = self._curv * u
        out = np.empty_like(v)
        out[: self.d] = v[: self.d] + self.csr_t @ du
        out[self.d] = du.sum() if self.fit_intercept else 0.0
        return out


def _conjugate_gradient(hessp, g, tol, max_iter):
    x = np.zeros_like(g)
    r = -g
    p = r.copy()
    rr = np.dot(r, r)
    for _ in range(max_iter):
        if np.sqrt(rr) <= tol:
            break
        hp = hessp(p)
        curv = np.dot(p, hp)
        if curv <= 0:
            break
        alpha = rr / curv
        x += alpha * p
        r -= alpha * hp
        rr_new = np.dot(r, r)
        p = r + (rr_new / rr) * p
        rr = rr_new
    return x if np.any(x) else -g


def _newton_cg(prob: _Problem, params: LogisticParams, deadline):
    theta = np.zeros(prob.d + 1)
    f = prob.value(theta)
    g = prob.grad(theta)
    history = [f]
    cg_cap = min(max(50, prob.d + 1), 500)
    for _ in range(params.max_iter):
        gnorm = np.linalg.norm(g)
        if gnorm <= params.tol:
            break
        deadline.check()
        direction = _conjugate_gradient(prob.hessp, g, min(0.5, np.sqrt(gnorm)) * gnorm, cg_cap)
        slope = np.dot(g, direction)
        if slope >= 0:
            direction, slope = -g, -gnorm**2
        step = 1.0
        cand = theta + direction
        f_new = prob.value(cand)
        while f_new > f + 1e-4 * step * slope and step > 1e-16:
            step *= 0.5
            cand = theta + step * direction
            f_new = prob.value(cand)
        if f_new < f:
            theta, f = cand, f_new
            g = prob.grad(theta)
        else:
            # objective is flat to machine precision: take the full Newton step
            # only if it still shrinks the gradient
            cand = theta + direction
            f_new = prob.value(cand)
            g_new = prob.grad(cand)
            if not (f_new <= f and np.linalg.norm(g_new) < gnorm):
                prob.grad(theta)
                break
            theta, f, g = cand, f_new, g_new
        history.append(f)
    if not np.all(np.isfinite(theta)):
        raise NumericError("optimizer produced non-finite parameters")
    converged = bool(np.linalg.norm(g) <= params.tol)
    return theta, converged, len(history) - 1, tuple(history)


def fit_logistic(X, y, params: LogisticParams = LogisticParams(), deadline=None) -> LogisticModel:
    X = as_sparse(X)
    y = np.asarray(y, dtype=np.int64)
    if X.n_rows != len(y):
        raise ShapeError(f"{X.n_rows} rows but {len(y)} labels")
    classes = np.unique(y)
    if len(classes) < 2:
        raise DomainError("logistic regression needs at least two classes")
    if not np.all(np.isfinite(X.values)):
        raise NumericError("non-finite feature values")
    mode = params.mode
    if mode == "auto":
        mode = "binary" if len(classes) == 2 else "ovr"
    if mode == "binary" and len(classes) != 2:
        raise ConfigError(f"binary mode needs exactly 2 classes, got {len(classes)}")
    deadline = as_deadline(deadline)
    csr = X.to_scipy()
    targets = [classes[1]] if mode == "binary" else list(classes)
    weights, intercepts, iters, hists, ok = [], [], [], [], True
    for cls in targets:
        signs = np.where(y == cls, 1.0, -1.0)
        theta, conv, it, hist = _newton_cg(_Problem(csr, signs, params.C, params.fit_intercept),
                                           params, deadline)
        weights.append(theta[:-1])
        intercepts.append(theta[-1])
        iters.append(it)
        hists.append(hist)
        ok = ok and conv
    if not ok:
        warnings.warn(f"logistic fit stopped above gradient tol={params.tol} "
                      f"(max_iter={params.max_iter})", ConvergenceWarning, stacklevel=2)
    return LogisticModel(
        np.vstack(weights).reshape(len(targets), X.n_cols),
        np.asarray(intercepts, dtype=np.float64),
        classes,
        mode,
        params,
        ok,
        tuple(iters),
        tuple(hists),
    )


def predict_proba(model: LogisticModel, X) -> np.ndarray:
    """Class probabilities, columns ordered as ``model.classes``."""
    scores = model.decision_function(X)
    if model.mode == "binary":
        p = expit(scores[:, 0])
        return np.column_stack([1.0 - p, p])
    p = expit(scores)
    total = p.sum(axis=1, keepdims=True)
    k = p.shape[1]
    # every sigmoid underflowed: fall back to uniform
    return np.where(total > 0, p / np.where(total > 0, total, 1.0), 1.0 / k)


def predict_logistic(model: LogisticModel, X) -> np.ndarray:
    return model.classes[np.argmax(predict_proba(model, X), axis=1)]


def apply_threshold(positive_probs, t: float) -> np.ndarray:
    """1 where the positive-class probability reaches ``t``."""
    if not 0 < t < 1:
        raise ConfigError(f"threshold must lie in (0, 1), got {t}")
    p = np.asarray(positive_probs, dtype=np.float64)
    return (p >= t).astype(np.int64)
