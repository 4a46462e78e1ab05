"""Quantum-classical multiple kernel learning.

Simulated quantum embedding kernels and classical kernels, convex
kernel-weight optimization, alternating kernel-parameter training, SVM
classification, and an experiment harness with metric reports.
"""

from .data import Dataset, generate_dataset, load_csv, make_instance, minmax_scale, save_csv, split
from .kernels import (
    GramMatrix,
    KernelSpec,
    combine_grams,
    cross_matrix,
    embed_state,
    gram_gradient,
    gram_matrix,
    kernel_eval,
    make_spec,
    normalize_gram,
    prepare_gram,
)
from .metrics import MetricsRecord, accuracy, aucroc, margin, spectral_ratio
from .mkl import (
    MKLProblem,
    MKLSolution,
    distance_vector,
    fractional_weights,
    optimal_weights,
    project_bisimplex,
    solve_easymkl,
)
from .statevector import (
    Statevector,
    apply_hadamard,
    apply_rotation,
    apply_zz,
    fidelity,
    overlap,
    zero_state,
)
from .svm import SVMModel, decision_values, dual_objective, predict, train_svm
from .training import AdamState, TrainingConfig, TrainResult, adam_step, loss_gradient_theta, train

__all__ = [
    "AdamState",
    "Dataset",
    "GramMatrix",
    "KernelSpec",
    "MKLProblem",
    "MKLSolution",
    "MetricsRecord",
    "SVMModel",
    "Statevector",
    "TrainResult",
    "TrainingConfig",
    "accuracy",
    "adam_step",
    "apply_hadamard",
    "apply_rotation",
    "apply_zz",
    "aucroc",
    "combine_grams",
    "cross_matrix",
    "decision_values",
    "distance_vector",
    "dual_objective",
    "embed_state",
    "fidelity",
    "fractional_weights",
    "generate_dataset",
    "gram_gradient",
    "gram_matrix",
    "kernel_eval",
    "load_csv",
    "loss_gradient_theta",
    "make_instance",
    "make_spec",
    "margin",
    "minmax_scale",
    "normalize_gram",
    "optimal_weights",
    "overlap",
    "predict",
    "prepare_gram",
    "project_bisimplex",
    "save_csv",
    "solve_easymkl",
    "spectral_ratio",
    "split",
    "train",
    "train_svm",
    "zero_state",
]

__version__ = "0.1.0"
