"""Convex kernel-weight optimization.

Given R Gram matrices over labelled training data, the combination weights
that maximize the feature-space distance between the two classes solve

    min_phi  (1 - lam) * ||d(phi)||_2 + lam * ||phi||_2^2
    d_r(phi) = phi^T Y K_r Y phi,   Y = diag(labels),   0 <= lam < 1

where phi >= 0 and the positive-label and negative-label entries of phi each
sum to 1 (each class slice is a probability distribution over its class; the
cited EasyMKL formulation uses the same feasible set). The optimal weights
are gamma = d(phi_min) / ||d(phi_min)||_2; the L1-rescaled version reads as
fractions summing to 1.

Solved with projected gradient descent plus a backtracking (Armijo) line
search. The feasible set has a cheap exact Euclidean projection (per-class
sort-and-threshold), so no external QP machinery is needed. The norm term is
kept exact (not squared); its subgradient at d = 0 is taken as 0.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .kernels import GramMatrix

_DEGENERATE_NORM = 1e-15


@dataclass
class MKLProblem:
    """R processed Gram matrices over the training set, labels, regularizer."""

    grams: list[GramMatrix]
    labels: np.ndarray
    lam: float = 0.2

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=float)
        if not self.grams:
            raise ValueError("need at least one Gram matrix")
        if not set(np.unique(self.labels)) <= {-1.0, 1.0}:
            raise ValueError("labels must be -1 or +1")
        if not (np.any(self.labels > 0) and np.any(self.labels < 0)):
            raise ValueError("both classes must be present")
        if not 0.0 <= self.lam < 1.0:
            raise ValueError(f"lambda must be in [0, 1), got {self.lam}")
        m = len(self.labels)
        for g in self.grams:
            if g.size != m:
                raise ValueError(f"Gram size {g.size} does not match {m} labels")
            if not g.unit_diagonal:
                raise ValueError(
                    "kernel weighting expects bounded or normalized Gram matrices"
                )


@dataclass
class MKLSolution:
    phi_min: np.ndarray
    gamma_star: np.ndarray  # unit L2 norm
    gamma_l1: np.ndarray  # rescaled to sum to 1
    loss: float
    iterations: int
    converged: bool
    degenerate: bool = False
    objective_history: list[float] = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {
            "phi": self.phi_min.tolist(),
            "gamma_l2": self.gamma_star.tolist(),
            "gamma_l1": self.gamma_l1.tolist(),
            "loss": self.loss,
            "iterations": self.iterations,
            "converged": self.converged,
        }


def distance_vector(grams, labels, phi) -> np.ndarray:
    """Per-kernel class-separation components phi^T Y K_r Y phi."""
    labels = np.asarray(labels, dtype=float)
    phi = np.asarray(phi, dtype=float)
    if phi.shape != labels.shape:
        raise ValueError(f"phi shape {phi.shape} does not match labels {labels.shape}")
    yphi = labels * phi
    return np.array([float(yphi @ g.entries @ yphi) for g in grams])


def _project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto {x >= 0, sum(x) = 1} by sort-and-threshold."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    k = np.arange(1, len(v) + 1)
    valid = u - (css - 1.0) / k > 0
    rho = np.nonzero(valid)[0][-1]
    tau = (css[rho] - 1.0) / (rho + 1.0)
    return np.maximum(v - tau, 0.0)


def project_bisimplex(v, labels) -> np.ndarray:
    """Project onto the feasible set: per class, a probability distribution."""
    v = np.asarray(v, dtype=float)
    labels = np.asarray(labels, dtype=float)
    out = np.empty_like(v)
    for sign in (1.0, -1.0):
        mask = labels == sign
        if not np.any(mask):
            raise ValueError(f"no samples with label {int(sign)}")
        out[mask] = _project_simplex(v[mask])
    return out


def optimal_weights(d) -> np.ndarray:
    """Weights parallel to the distance vector, unit L2 norm."""
    d = np.asarray(d, dtype=float)
    norm = np.linalg.norm(d)
    if norm <= _DEGENERATE_NORM:
        raise ValueError("distance vector is zero; weights are undefined")
    return d / norm


def fractional_weights(gamma) -> np.ndarray:
    """L1 rescaling of non-negative weights so they read as fractions."""
    gamma = np.asarray(gamma, dtype=float)
    return gamma / np.abs(gamma).sum()


def _uniform_start(labels: np.ndarray) -> np.ndarray:
    phi = np.empty_like(labels)
    for sign in (1.0, -1.0):
        mask = labels == sign
        phi[mask] = 1.0 / np.count_nonzero(mask)
    return phi


def solve_easymkl(
    problem: MKLProblem,
    grad_tol: float = 1e-6,
    obj_tol: float = 1e-10,
    max_iters: int = 10_000,
) -> MKLSolution:
    """Minimize the class-separation objective over the per-class simplices.

    Non-convergence after max_iters returns the best iterate with
    converged=False. A zero distance vector at the solution (kernels that
    cannot separate the classes at all) yields uniform weights with the
    degenerate flag set.
    """
    labels = problem.labels
    lam = problem.lam
    B = [g.entries * np.outer(labels, labels) for g in problem.grams]

    def dist(phi):
        return np.array([float(phi @ b @ phi) for b in B])

    def objective(phi, d):
        return (1.0 - lam) * np.linalg.norm(d) + lam * float(phi @ phi)

    def gradient(phi, d):
        g = 2.0 * lam * phi
        norm = np.linalg.norm(d)
        if norm > _DEGENERATE_NORM:
            g = g + (1.0 - lam) / norm * sum(dr * 2.0 * (b @ phi) for dr, b in zip(d, B))
        return g

    phi = _uniform_start(labels)
    d = dist(phi)
    obj = objective(phi, d)
    history = [obj]
    step = 1.0
    converged = False
    iterations = 0

    for iterations in range(1, max_iters + 1):
        g = gradient(phi, d)
        if np.linalg.norm(phi - project_bisimplex(phi - g, labels)) < grad_tol:
            converged = True
            iterations -= 1
            break
        # Armijo backtracking along the projection arc.
        accepted = False
        t = step
        while t > 1e-20:
            cand = project_bisimplex(phi - t * g, labels)
            d_cand = dist(cand)
            obj_cand = objective(cand, d_cand)
            if obj_cand <= obj + 1e-4 * float(g @ (cand - phi)):
                accepted = True
                break
            t *= 0.5
        if not accepted:
            converged = True
            break
        step = min(t * 2.0, 1.0)
        rel_change = abs(obj - obj_cand) / (abs(obj) + 1e-15)
        phi, d, obj = cand, d_cand, obj_cand
        history.append(obj)
        if rel_change < obj_tol:
            converged = True
            break

    d = dist(phi)
    norm_d = np.linalg.norm(d)
    R = len(B)
    if norm_d <= _DEGENERATE_NORM:
        gamma = np.full(R, 1.0 / np.sqrt(R))
        gamma_l1 = np.full(R, 1.0 / R)
        degenerate = True
    else:
        gamma = d / norm_d
        gamma_l1 = fractional_weights(gamma)
        degenerate = False
    return MKLSolution(
        phi_min=phi,
        gamma_star=gamma,
        gamma_l1=gamma_l1,
        loss=objective(phi, d),
        iterations=iterations,
        converged=converged,
        degenerate=degenerate,
        objective_history=history,
    )
