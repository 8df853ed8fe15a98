"""One-vs-rest linear SVM trained by a deterministic SMO solver.

Each class is trained against the rest on the hinge-loss objective

    (1/2) ||w||^2 + c * sum_i max(0, 1 - y_i (w . x_i + b)),    y_i in {+1, -1}

solved in the dual by sequential minimal optimization with second-order
working-set selection and an unpenalized bias recovered from the KKT
conditions. The solver draws no random numbers, so identical data always
yields bit-identical models; the ``seed`` parameter exists for interface
stability only. The Gram matrix is held in memory (O(N^2)), which is the
right trade at the few-thousand-image scale this pipeline targets.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

DEFAULT_C = 1.0
DEFAULT_TOL = 1e-4
DEFAULT_MAX_ITER = 200_000
_TAU = 1e-12


@dataclass(frozen=True)
class LinearSvmModel:
    """Per-class weight rows and biases; class order is fixed at training."""

    classes: tuple[str, ...]
    weights: np.ndarray
    biases: np.ndarray
    regularization_c: float

    def __post_init__(self):
        w = np.ascontiguousarray(self.weights, dtype=np.float32)
        b = np.ascontiguousarray(self.biases, dtype=np.float32)
        classes = tuple(self.classes)
        if len(classes) < 2:
            raise ValueError("model needs at least 2 classes")
        if w.ndim != 2 or w.shape[0] != len(classes):
            raise ValueError(f"weights must be (n_classes, dim), got shape {w.shape}")
        if b.shape != (len(classes),):
            raise ValueError(f"biases must have one entry per class, got shape {b.shape}")
        if not (np.isfinite(w).all() and np.isfinite(b).all()):
            raise ValueError("non-finite model values")
        if self.regularization_c <= 0:
            raise ValueError("regularization_c must be positive")
        object.__setattr__(self, "classes", classes)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "biases", b)

    @property
    def feature_dim(self) -> int:
        return self.weights.shape[1]


def svm_train(
    features: np.ndarray,
    labels: list[str],
    c: float = DEFAULT_C,
    seed: int = 0,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> LinearSvmModel:
    """Train one-vs-rest classifiers; classes are ordered lexicographically."""
    del seed  # solver is deterministic without randomness
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] == 0:
        raise ValueError(f"features must be a non-empty matrix, got shape {x.shape}")
    if not np.isfinite(x).all():
        raise ValueError("non-finite feature values")
    if len(labels) != x.shape[0]:
        raise ValueError(f"{len(labels)} labels for {x.shape[0]} feature rows")
    if c <= 0:
        raise ValueError("c must be positive")
    classes = tuple(sorted(set(labels)))
    if len(classes) < 2:
        raise ValueError("single-class input: need at least 2 distinct labels")
    if x.shape[0] < 2:
        raise ValueError("need at least 2 training points")

    label_arr = np.asarray(labels)
    gram = x @ x.T
    diag = np.einsum("ii->i", gram).copy()
    weights = np.empty((len(classes), x.shape[1]), dtype=np.float64)
    biases = np.empty(len(classes), dtype=np.float64)
    for ci, cls in enumerate(classes):
        y = np.where(label_arr == cls, 1.0, -1.0)
        alpha, bias = _smo_binary(gram, diag, y, c, tol, max_iter)
        weights[ci] = x.T @ (alpha * y)
        biases[ci] = bias
    return LinearSvmModel(
        classes=classes, weights=weights, biases=biases, regularization_c=float(c)
    )


def _smo_binary(
    gram: np.ndarray,
    diag: np.ndarray,
    y: np.ndarray,
    c: float,
    tol: float,
    max_iter: int,
) -> tuple[np.ndarray, float]:
    """Solve the dual of the binary hinge SVM; returns (alpha, bias).

    Working-set selection is the standard maximal-violating-pair rule with a
    second-order pick for the partner index; all ties resolve to the lowest
    index, keeping the run deterministic.
    """
    n = y.shape[0]
    alpha = np.zeros(n)
    grad = np.full(n, -1.0)
    m_val = M_val = 0.0
    converged = False
    for _ in range(max_iter):
        yg = -y * grad
        up = ((y > 0) & (alpha < c)) | ((y < 0) & (alpha > 0))
        low = ((y < 0) & (alpha < c)) | ((y > 0) & (alpha > 0))
        if not up.any() or not low.any():
            converged = True
            break
        up_idx = np.flatnonzero(up)
        i = int(up_idx[np.argmax(yg[up_idx])])
        m_val = yg[i]
        M_val = yg[low].min()
        if m_val - M_val <= tol:
            converged = True
            break

        ki = gram[i]
        cand = low & (yg < m_val)
        cand_idx = np.flatnonzero(cand)
        gain_num = m_val - yg[cand_idx]
        quad = diag[i] + diag[cand_idx] - 2.0 * ki[cand_idx]
        quad = np.where(quad > _TAU, quad, _TAU)
        j = int(cand_idx[np.argmin(-(gain_num * gain_num) / quad)])
        kj = gram[j]

        old_ai, old_aj = alpha[i], alpha[j]
        a = diag[i] + diag[j] - 2.0 * ki[j]
        if a <= _TAU:
            a = _TAU
        if y[i] != y[j]:
            delta = (-grad[i] - grad[j]) / a
            diff = alpha[i] - alpha[j]
            alpha[i] += delta
            alpha[j] += delta
            if diff > 0:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = diff
            else:
                if alpha[i] < 0:
                    alpha[i] = 0.0
                    alpha[j] = -diff
            if diff > 0:
                if alpha[i] > c:
                    alpha[i] = c
                    alpha[j] = c - diff
            else:
                if alpha[j] > c:
                    alpha[j] = c
                    alpha[i] = c + diff
        else:
            delta = (grad[i] - grad[j]) / a
            total = alpha[i] + alpha[j]
            alpha[i] -= delta
            alpha[j] += delta
            if total > c:
                if alpha[i] > c:
                    alpha[i] = c
                    alpha[j] = total - c
            else:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = total
            if total > c:
                if alpha[j] > c:
                    alpha[j] = c
                    alpha[i] = total - c
            else:
                if alpha[i] < 0:
                    alpha[i] = 0.0
                    alpha[j] = total

        d_ai = alpha[i] - old_ai
        d_aj = alpha[j] - old_aj
        grad += y * (y[i] * d_ai * ki + y[j] * d_aj * kj)
    if not converged:
        warnings.warn(
            f"SMO hit the {max_iter}-iteration cap before reaching tol={tol}",
            RuntimeWarning,
            stacklevel=3,
        )

    free = (alpha > 0) & (alpha < c)
    if free.any():
        yg = -y * grad
        bias = float(yg[free].mean())
    else:
        bias = float((m_val + M_val) / 2.0)
    return alpha, bias


def svm_scores(model: LinearSvmModel, x: np.ndarray) -> np.ndarray:
    """Per-class decision values w_c . x + b_c, in model class order."""
    v = np.asarray(x, dtype=np.float64)
    if v.shape != (model.feature_dim,):
        raise ValueError(
            f"dimension mismatch: vector has shape {v.shape}, "
            f"model expects ({model.feature_dim},)"
        )
    return model.weights.astype(np.float64) @ v + model.biases.astype(np.float64)


def svm_predict(model: LinearSvmModel, x: np.ndarray) -> str:
    """Highest-scoring class; exact ties go to the earliest class in model order."""
    return model.classes[int(np.argmax(svm_scores(model, x)))]


def hinge_objective(
    w: np.ndarray, b: float, features: np.ndarray, y: np.ndarray, c: float
) -> float:
    """Primal objective value; the quantity svm_train minimizes per class."""
    margins = 1.0 - y * (features @ w + b)
    return 0.5 * float(w @ w) + c * float(np.maximum(margins, 0.0).sum())
