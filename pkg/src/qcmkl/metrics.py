"""Classification and kernel metrics.

accuracy and aucroc are computed from testing outcomes; margin and the
spectral ratios from the training Gram matrix. Margin here is the geometric
quantity (minimum feature-space distance between cross-class points), not
the SVM's functional margin.

Two spectral-ratio variants are reported. The raw ratio trace(K)/||K||_F
equals sqrt(M) on the identity (delta) kernel; the normalized variant
raw^2 / M attains exactly 1 on the delta kernel and exactly 1/M on the
all-ones (constant) kernel, matching the documented limiting cases, and is
the one used for reporting.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernels import GramMatrix


@dataclass
class MetricsRecord:
    accuracy: float
    aucroc: float
    margin: float
    spectral_ratio: float
    spectral_ratio_raw: float

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "aucroc": self.aucroc,
            "margin": self.margin,
            "spectral_ratio": self.spectral_ratio,
            "spectral_ratio_raw": self.spectral_ratio_raw,
        }


def accuracy(predicted, actual) -> float:
    predicted = np.asarray(predicted)
    actual = np.asarray(actual)
    if predicted.shape != actual.shape:
        raise ValueError(f"shape mismatch: {predicted.shape} vs {actual.shape}")
    if predicted.size == 0:
        raise ValueError("cannot score an empty prediction set")
    return float(np.mean(predicted == actual))


def _average_ranks(values: np.ndarray) -> np.ndarray:
    """Ranks 1..n with ties sharing their average rank."""
    order = np.argsort(values, kind="mergesort")
    ranks = np.empty(len(values))
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def aucroc(scores, actual) -> float:
    """Area under the ROC curve via the rank (Mann-Whitney) statistic.

    Equivalent to integrating true/false positive rates over decreasing
    thresholds; tied scores count half.
    """
    scores = np.asarray(scores, dtype=float)
    actual = np.asarray(actual)
    pos = actual == 1
    neg = actual == -1
    n_pos, n_neg = int(pos.sum()), int(neg.sum())
    if n_pos == 0 or n_neg == 0:
        raise ValueError("aucroc needs both classes present")
    ranks = _average_ranks(scores)
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def margin(K_train: GramMatrix, labels) -> float:
    """Minimum feature-space distance between points of opposite classes."""
    K = np.asarray(getattr(K_train, "entries", K_train), dtype=float)
    labels = np.asarray(labels)
    pos = np.flatnonzero(labels == 1)
    neg = np.flatnonzero(labels == -1)
    if len(pos) == 0 or len(neg) == 0:
        raise ValueError("margin needs both classes present")
    diag = np.diag(K)
    sq = diag[pos][:, None] + diag[neg][None, :] - 2.0 * K[np.ix_(pos, neg)]
    return float(np.sqrt(max(sq.min(), 0.0)))


def spectral_ratio(K_train: GramMatrix) -> tuple[float, float]:
    """(normalized, raw) spectral ratios of the training Gram.

    raw = trace / Frobenius norm; normalized = raw^2 / M, computed as
    trace^2 / (sum of squares * M) so the delta and constant kernels hit
    their 1 and 1/M limits exactly.
    """
    K = np.asarray(getattr(K_train, "entries", K_train), dtype=float)
    m = K.shape[0]
    trace = float(np.trace(K))
    frob_sq = float(np.sum(K * K))
    if frob_sq == 0.0:
        raise ValueError("spectral ratio of the zero matrix is undefined")
    raw = trace / np.sqrt(frob_sq)
    normalized = trace * trace / (frob_sq * m)
    return normalized, raw
