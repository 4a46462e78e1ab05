"""Alternating optimization of kernel parameters and combination weights.

Outer loop, one iteration per parameter update:

  (i)   build the processed Gram matrices at the current kernel parameters,
  (ii)  solve the convex weighting problem for phi_min and the weights,
  (iii) take one Adam ascent step on the kernel parameters against the
        optimal-value loss,
  (iv)  after the final iteration keep the best-loss snapshot and recompute
        its weights and combined Gram.

The parameter gradient of the optimal value follows Danskin's theorem: the
feasible set of the inner minimization is parameter-independent, so at the
inner minimizer phi_min

    dL/dtheta_j = (1 - lam) * d_r * (phi^T Y dK_r/dtheta_j Y phi) / ||d||_2

where r is the kernel owning theta_j. No differentiation through solver
iterations is needed. The rbf scale is optimized in log space to preserve
positivity; recorded snapshots always hold the raw parameter.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .kernels import GramMatrix, KernelSpec, gram_gradient, prepare_gram, combine_grams
from .mkl import MKLProblem, MKLSolution, distance_vector, solve_easymkl

_DEGENERATE_NORM = 1e-15


@dataclass
class TrainingConfig:
    learning_rate: float = 0.05
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8
    max_outer_iters: int = 100
    loss_tolerance: float = 1e-6  # relative, over 5 consecutive iterations
    lam: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if not 0.0 <= self.lam < 1.0:
            raise ValueError(f"lambda must be in [0, 1), got {self.lam}")
        if self.max_outer_iters < 0:
            raise ValueError("max_outer_iters must be >= 0")


@dataclass
class AdamState:
    """First/second moment estimates plus step count and hyperparameters."""

    m: np.ndarray
    v: np.ndarray
    t: int = 0
    learning_rate: float = 0.05
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    @classmethod
    def initial(cls, n: int, config: TrainingConfig) -> "AdamState":
        return cls(
            m=np.zeros(n),
            v=np.zeros(n),
            t=0,
            learning_rate=config.learning_rate,
            beta1=config.adam_beta1,
            beta2=config.adam_beta2,
            epsilon=config.adam_epsilon,
        )


def adam_step(theta, gradient, state: AdamState) -> tuple[np.ndarray, AdamState]:
    """One bias-corrected Adam update in the ascent direction."""
    theta = np.asarray(theta, dtype=float)
    gradient = np.asarray(gradient, dtype=float)
    t = state.t + 1
    m = state.beta1 * state.m + (1.0 - state.beta1) * gradient
    v = state.beta2 * state.v + (1.0 - state.beta2) * gradient**2
    m_hat = m / (1.0 - state.beta1**t)
    v_hat = v / (1.0 - state.beta2**t)
    theta_new = theta + state.learning_rate * m_hat / (np.sqrt(v_hat) + state.epsilon)
    new_state = AdamState(
        m=m,
        v=v,
        t=t,
        learning_rate=state.learning_rate,
        beta1=state.beta1,
        beta2=state.beta2,
        epsilon=state.epsilon,
    )
    return theta_new, new_state


def loss_gradient_theta(grams, gram_grads, labels, phi_min, lam) -> np.ndarray:
    """Gradient of the optimal-value loss with respect to all kernel parameters.

    gram_grads holds, per kernel, the list of Gram derivatives (empty for
    non-parametric kernels); the result concatenates the per-kernel entries
    in order. A zero distance vector (degenerate weighting) yields the zero
    gradient.
    """
    labels = np.asarray(labels, dtype=float)
    phi_min = np.asarray(phi_min, dtype=float)
    d = distance_vector(grams, labels, phi_min)
    norm = np.linalg.norm(d)
    total = sum(len(g) for g in gram_grads)
    if norm <= _DEGENERATE_NORM:
        return np.zeros(total)
    yphi = labels * phi_min
    out = np.empty(total)
    pos = 0
    for d_r, grads_r in zip(d, gram_grads):
        for dK in grads_r:
            out[pos] = (1.0 - lam) * d_r * float(yphi @ dK @ yphi) / norm
            pos += 1
    return out


@dataclass
class TraceRecord:
    iteration: int
    loss: float
    gamma_l2: list[float]
    gamma_l1: list[float]
    theta: list[list[float]]
    degenerate: bool

    def to_dict(self) -> dict:
        return {
            "iteration": self.iteration,
            "loss": self.loss,
            "gamma_l2": self.gamma_l2,
            "gamma_l1": self.gamma_l1,
            "theta": self.theta,
            "degenerate": self.degenerate,
        }


@dataclass
class TrainingTrace:
    records: list[TraceRecord] = field(default_factory=list)

    @property
    def best_iteration(self) -> int:
        losses = [r.loss for r in self.records]
        return int(np.argmax(losses))

    @property
    def best_record(self) -> TraceRecord:
        return self.records[self.best_iteration]

    def to_json_lines(self) -> str:
        return "".join(json.dumps(r.to_dict()) + "\n" for r in self.records)


@dataclass
class TrainResult:
    specs: list[KernelSpec]  # with the best-iterate parameters
    gamma_star: np.ndarray  # unit L2 norm
    gamma_l1: np.ndarray
    final_gram: GramMatrix
    trace: TrainingTrace
    solution: MKLSolution  # solve at the best iterate


def _pack(specs, parametric_idx) -> np.ndarray:
    """Concatenate trainable parameters, log-transforming the rbf scale."""
    parts = []
    for i in parametric_idx:
        theta = np.asarray(specs[i].theta)
        parts.append(np.log(theta) if specs[i].kind == "rbf" else theta)
    return np.concatenate(parts) if parts else np.empty(0)


def _unpack(z, specs, parametric_idx) -> list[KernelSpec]:
    out = list(specs)
    pos = 0
    for i in parametric_idx:
        n = len(specs[i].theta)
        chunk = z[pos : pos + n]
        pos += n
        theta = np.exp(chunk) if specs[i].kind == "rbf" else chunk
        out[i] = specs[i].with_theta(theta)
    return out


def _chain_to_packed(grad_theta, specs, parametric_idx) -> np.ndarray:
    """Map d/dtheta to d/dz where z = log(theta) for rbf components."""
    out = np.array(grad_theta, dtype=float)
    pos = 0
    for i in parametric_idx:
        n = len(specs[i].theta)
        if specs[i].kind == "rbf":
            out[pos : pos + n] *= np.asarray(specs[i].theta)
        pos += n
    return out


def train(kernel_specs, train_X, train_labels, config: TrainingConfig) -> TrainResult:
    """Run the full alternating loop and return the best-iterate outcome.

    With no parametric kernel (or max_outer_iters = 0) this reduces to a
    single weighting solve. A degenerate solve at any iterate is recorded
    with uniform weights and training continues. Deterministic for identical
    inputs: the loop itself draws no randomness.
    """
    specs = list(kernel_specs)
    X = np.asarray(train_X, dtype=float)
    labels = np.asarray(train_labels, dtype=float)
    parametric_idx = [i for i, s in enumerate(specs) if s.parametric]

    grams = [prepare_gram(s, X) for s in specs]

    def solve(cur_grams) -> MKLSolution:
        return solve_easymkl(MKLProblem(cur_grams, labels, config.lam))

    def record(t, sol, cur_specs) -> TraceRecord:
        return TraceRecord(
            iteration=t,
            loss=sol.loss,
            gamma_l2=sol.gamma_star.tolist(),
            gamma_l1=sol.gamma_l1.tolist(),
            theta=[list(s.theta) for s in cur_specs],
            degenerate=sol.degenerate,
        )

    trace = TrainingTrace()
    solutions = []

    sol = solve(grams)
    trace.records.append(record(0, sol, specs))
    solutions.append(sol)

    if parametric_idx and config.max_outer_iters > 0:
        z = _pack(specs, parametric_idx)
        adam = AdamState.initial(len(z), config)
        flat_since_improvement = 0
        for t in range(1, config.max_outer_iters + 1):
            gram_grads = [
                gram_gradient(s, X, normalized=not s.bounded) if s.parametric else []
                for s in specs
            ]
            grad_theta = loss_gradient_theta(grams, gram_grads, labels, sol.phi_min, config.lam)
            z, adam = adam_step(z, _chain_to_packed(grad_theta, specs, parametric_idx), adam)
            specs = _unpack(z, specs, parametric_idx)
            for i in parametric_idx:
                grams[i] = prepare_gram(specs[i], X)
            prev_loss = sol.loss
            sol = solve(grams)
            trace.records.append(record(t, sol, specs))
            solutions.append(sol)
            rel = abs(sol.loss - prev_loss) / (abs(prev_loss) + 1e-15)
            flat_since_improvement = flat_since_improvement + 1 if rel < config.loss_tolerance else 0
            if flat_since_improvement >= 5:
                break

    best = trace.best_iteration
    best_record = trace.records[best]
    best_sol = solutions[best]
    best_specs = [s.with_theta(theta) for s, theta in zip(kernel_specs, best_record.theta)]
    best_grams = [prepare_gram(s, X) for s in best_specs]
    final_gram = combine_grams(best_grams, best_sol.gamma_l1)
    return TrainResult(
        specs=best_specs,
        gamma_star=best_sol.gamma_star,
        gamma_l1=best_sol.gamma_l1,
        final_gram=final_gram,
        trace=trace,
        solution=best_sol,
    )
