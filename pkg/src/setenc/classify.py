"""Deterministic linear evaluation harness.

One-vs-rest ridge regression with +-1 targets, solved exactly from the
normal equations. The bias enters through an augmented constant column and
is not regularized. The objective is mean squared error plus lam * ||w||^2,
so duplicating every training row leaves the model unchanged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NumericError


@dataclass(frozen=True, eq=False)
class LinearModel:
    """Per-class weight rows and biases; classes are sorted ascending."""

    weights: np.ndarray
    biases: np.ndarray
    classes: tuple[int, ...]
    lam: float

    @property
    def d(self) -> int:
        return self.weights.shape[1]


def _as_design(encodings) -> np.ndarray:
    X = np.ascontiguousarray(encodings, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
        raise ValueError("encodings must be a non-empty 2-D matrix")
    if not np.isfinite(X).all():
        raise ValueError("encodings must contain only finite values")
    return X


def _as_labels(labels, n: int) -> np.ndarray:
    ys = np.ascontiguousarray(labels, dtype=np.int64)
    if ys.ndim != 1 or ys.shape[0] != n:
        raise ValueError("labels must be 1-D with one entry per row")
    return ys


def fit_linear_ovr(encodings, labels, lam: float = 1e-4) -> LinearModel:
    """Fit one ridge regressor per class against +-1 targets.

    Solves (Z'Z / N + lam * I~) beta = Z' t / N per class, where Z is the
    design matrix with an appended constant column and I~ is the identity
    with a zero in the bias position. The system is shared across classes,
    so a single factorization serves all of them. Raises NumericError if
    the solve fails despite lam > 0.
    """
    X = _as_design(encodings)
    n, d = X.shape
    ys = _as_labels(labels, n)
    if not (math.isfinite(lam) and lam > 0.0):
        raise ValueError("lam must be finite and > 0")
    classes = np.unique(ys)
    if classes.shape[0] < 2:
        raise ValueError("need at least two distinct classes")
    Z = np.hstack([X, np.ones((n, 1))])
    A = Z.T @ Z / n
    A[np.arange(d), np.arange(d)] += lam
    targets = np.where(ys[:, None] == classes[None, :], 1.0, -1.0)
    B = Z.T @ targets / n
    try:
        beta = np.linalg.solve(A, B)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"normal equations are singular: {exc}") from exc
    if not np.isfinite(beta).all():
        raise NumericError("normal-equation solve produced non-finite values")
    return LinearModel(weights=np.ascontiguousarray(beta[:d].T),
                       biases=beta[d].copy(),
                       classes=tuple(int(c) for c in classes),
                       lam=float(lam))


def _scores(model: LinearModel, X: np.ndarray) -> np.ndarray:
    return X @ model.weights.T + model.biases[None, :]


def predict(model: LinearModel, x) -> int:
    """Class with the highest score; ties go to the smallest class id."""
    vec = np.ascontiguousarray(x, dtype=np.float64)
    if vec.ndim != 1 or vec.shape[0] != model.d:
        raise ValueError(f"vector must be 1-D of length {model.d}")
    scores = _scores(model, vec.reshape(1, -1))[0]
    return model.classes[int(np.argmax(scores))]


def accuracy(model: LinearModel, encodings, labels) -> float:
    """Fraction of rows whose argmax score matches the label."""
    X = _as_design(encodings)
    if X.shape[1] != model.d:
        raise ValueError(f"encodings must have {model.d} columns")
    ys = _as_labels(labels, X.shape[0])
    picks = np.argmax(_scores(model, X), axis=1)
    predicted = np.asarray(model.classes, dtype=np.int64)[picks]
    return float((predicted == ys).mean())
