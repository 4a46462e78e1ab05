"""Soft-margin kernel SVM trained on a precomputed Gram matrix.

Dual problem (C-SVM):

    max  sum(alpha) - 0.5 * alpha^T Q alpha,   Q_ij = y_i y_j K_ij
    s.t. 0 <= alpha_i <= C,   sum_i alpha_i y_i = 0

solved by sequential minimal optimization with the working pair chosen by
maximal KKT violation. Pair selection is deterministic, so identical inputs
give identical models. The decision sign at exactly 0 maps to +1.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_SV_TOL = 1e-8
_BOUND_SNAP = 1e-12


@dataclass
class SVMModel:
    alpha: np.ndarray
    bias: float
    support_indices: np.ndarray
    labels: np.ndarray
    C: float
    converged: bool = True

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha.tolist(),
            "bias": self.bias,
            "support_indices": self.support_indices.tolist(),
            "C": self.C,
        }


def _entries(K) -> np.ndarray:
    return np.asarray(getattr(K, "entries", K), dtype=float)


def train_svm(K_train, labels, C: float = 1.0, tol: float = 1e-3, max_passes: int = 10_000) -> SVMModel:
    """Fit the dual by SMO; returns the best iterate with converged=False on
    hitting max_passes."""
    K = _entries(K_train)
    y = np.asarray(labels, dtype=float)
    m = len(y)
    if K.shape != (m, m):
        raise ValueError(f"Gram shape {K.shape} does not match {m} labels")
    if not (np.any(y > 0) and np.any(y < 0)):
        raise ValueError("both classes must be present")
    if C <= 0:
        raise ValueError("C must be positive")

    Q = np.outer(y, y) * K
    alpha = np.zeros(m)
    grad = -np.ones(m)  # gradient of 0.5 a^T Q a - sum(a)
    converged = False

    for _ in range(max_passes):
        neg_ygrad = -y * grad
        up = ((y > 0) & (alpha < C - _BOUND_SNAP)) | ((y < 0) & (alpha > _BOUND_SNAP))
        low = ((y < 0) & (alpha < C - _BOUND_SNAP)) | ((y > 0) & (alpha > _BOUND_SNAP))
        if not up.any() or not low.any():
            converged = True
            break
        i = np.flatnonzero(up)[np.argmax(neg_ygrad[up])]
        j = np.flatnonzero(low)[np.argmin(neg_ygrad[low])]
        violation = neg_ygrad[i] - neg_ygrad[j]
        if violation <= tol:
            converged = True
            break
        # Exact minimizer along alpha_i += y_i t, alpha_j -= y_j t (keeps the
        # equality constraint), clipped to the box.
        quad = max(K[i, i] + K[j, j] - 2.0 * K[i, j], 1e-12)
        t = violation / quad
        t = min(t, C - alpha[i] if y[i] > 0 else alpha[i])
        t = min(t, alpha[j] if y[j] > 0 else C - alpha[j])
        alpha[i] += y[i] * t
        alpha[j] -= y[j] * t
        for k in (i, j):
            if alpha[k] < _BOUND_SNAP:
                alpha[k] = 0.0
            elif alpha[k] > C - _BOUND_SNAP:
                alpha[k] = C
        grad += t * (y[i] * Q[:, i] - y[j] * Q[:, j])

    neg_ygrad = -y * grad
    unbounded = (alpha > _SV_TOL) & (alpha < C - _SV_TOL)
    if unbounded.any():
        bias = float(np.mean(neg_ygrad[unbounded]))
    else:
        up = ((y > 0) & (alpha < C - _BOUND_SNAP)) | ((y < 0) & (alpha > _BOUND_SNAP))
        low = ((y < 0) & (alpha < C - _BOUND_SNAP)) | ((y > 0) & (alpha > _BOUND_SNAP))
        hi = neg_ygrad[up].max() if up.any() else neg_ygrad.min()
        lo = neg_ygrad[low].min() if low.any() else neg_ygrad.max()
        bias = float(0.5 * (hi + lo))

    return SVMModel(
        alpha=alpha,
        bias=bias,
        support_indices=np.flatnonzero(alpha > _SV_TOL),
        labels=y,
        C=C,
        converged=converged,
    )


def dual_objective(K_train, labels, alpha) -> float:
    """Value of sum(alpha) - 0.5 alpha^T Q alpha (the maximized dual)."""
    K = _entries(K_train)
    y = np.asarray(labels, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    ya = y * alpha
    return float(alpha.sum() - 0.5 * ya @ K @ ya)


def decision_values(model: SVMModel, K_cross) -> np.ndarray:
    """Pre-sign scores sum_m alpha_m y_m K(x, x_m) + bias for each row of K_cross."""
    K = np.atleast_2d(np.asarray(K_cross, dtype=float))
    if K.shape[1] != len(model.alpha):
        raise ValueError(
            f"cross matrix has {K.shape[1]} columns, model was trained on {len(model.alpha)} points"
        )
    return K @ (model.alpha * model.labels) + model.bias


def predict(model: SVMModel, K_cross) -> np.ndarray:
    """Sign of the decision values; an exact 0 maps to +1."""
    values = decision_values(model, K_cross)
    return np.where(values >= 0.0, 1, -1)
