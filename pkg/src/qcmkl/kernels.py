"""Base kernels and Gram-matrix machinery.

Six base kernels: three classical (linear, polynomial, rbf) and three
simulated quantum embedding kernels (rx, iqp, qaoa). A quantum kernel value
is the squared overlap of the two data-embedding statevectors, computed
exactly (no shot sampling).

Classical kernels:

    linear        <x, x'>
    polynomial    (theta0 * <x, x'> + theta1)^3
    rbf           exp(-theta2 * ||x - x'||^2)

Quantum embeddings (one qubit per feature, single layer):

    rx     RX(x_p) on each qubit p
    iqp    H on all qubits, RZ(x_p), then ZZ(x_p * x_q) on all pairs p < q
    qaoa   RX(x_p), trainable ZZ(theta_pq) per topology, RY(theta) per qubit
           using the trailing d entries of theta, then a final repeat of the
           RX(x_p) data rotations

The qaoa entangler topology is "all_pairs" (d*(d-1)/2 ZZ angles) by default,
with "ring" (d ZZ angles on neighbouring pairs, 2d parameters total)
available. linear and polynomial are unbounded (diagonal != 1); the pipeline
normalizes their Gram matrices before kernel weighting, which also keeps the
weighting numerically stable.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, replace

import numpy as np

from .statevector import (
    Statevector,
    apply_hadamard,
    apply_rotation,
    apply_zz,
    zero_state,
)

CLASSICAL_KINDS = ("linear", "polynomial", "rbf")
QUANTUM_KINDS = ("rx", "iqp", "qaoa")
KINDS = CLASSICAL_KINDS + QUANTUM_KINDS

BOUNDED_KINDS = ("rbf", "rx", "iqp", "qaoa")
PARAMETRIC_KINDS = ("polynomial", "rbf", "qaoa")

QAOA_TOPOLOGIES = ("all_pairs", "ring")

_QGRM_MAGIC = b"QGRM"


def qaoa_pairs(d: int, topology: str) -> list[tuple[int, int]]:
    """Qubit pairs receiving one trainable ZZ angle each."""
    if topology == "all_pairs":
        return [(p, q) for p in range(d) for q in range(p + 1, d)]
    if topology == "ring":
        if d < 2:
            raise ValueError("ring topology needs at least 2 features")
        return [(p, (p + 1) % d) for p in range(d)]
    raise ValueError(f"unknown qaoa topology {topology!r}")


def theta_length(kind: str, d: int, qaoa_topology: str = "all_pairs") -> int:
    """Number of kernel parameters for a kind at feature count d."""
    if kind == "polynomial":
        return 2
    if kind == "rbf":
        return 1
    if kind == "qaoa":
        return len(qaoa_pairs(d, qaoa_topology)) + d
    if kind in KINDS:
        return 0
    raise ValueError(f"unknown kernel kind {kind!r}")


@dataclass(frozen=True)
class KernelSpec:
    """One base kernel: kind, parameter vector, and feature count.

    Immutable after construction, so specs can be shared across workers.
    """

    kind: str
    n_features: int
    theta: tuple[float, ...] = ()
    qaoa_topology: str = "all_pairs"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.n_features < 1:
            raise ValueError("n_features must be >= 1")
        object.__setattr__(self, "theta", tuple(float(t) for t in self.theta))
        expected = theta_length(self.kind, self.n_features, self.qaoa_topology)
        if len(self.theta) != expected:
            raise ValueError(
                f"{self.kind} kernel over {self.n_features} features takes "
                f"{expected} parameters, got {len(self.theta)}"
            )
        if self.kind == "rbf" and self.theta[0] <= 0:
            raise ValueError("rbf scale parameter must be positive")

    @property
    def quantum(self) -> bool:
        return self.kind in QUANTUM_KINDS

    @property
    def bounded(self) -> bool:
        return self.kind in BOUNDED_KINDS

    @property
    def parametric(self) -> bool:
        return len(self.theta) > 0

    def with_theta(self, theta) -> "KernelSpec":
        return replace(self, theta=tuple(float(t) for t in theta))


def default_theta(
    kind: str,
    d: int,
    rng: np.random.Generator | None = None,
    qaoa_topology: str = "all_pairs",
) -> tuple[float, ...]:
    """Default parameters: (1/d, 1) for polynomial, 1 for rbf, and uniform
    random angles in [0, 2*pi] for qaoa (which has no natural default)."""
    if kind == "polynomial":
        return (1.0 / d, 1.0)
    if kind == "rbf":
        return (1.0,)
    if kind == "qaoa":
        if rng is None:
            raise ValueError("qaoa initialization needs an rng")
        n = theta_length("qaoa", d, qaoa_topology)
        return tuple(rng.uniform(0.0, 2.0 * np.pi, size=n))
    return ()


def make_spec(
    kind: str,
    d: int,
    theta=None,
    rng: np.random.Generator | None = None,
    qaoa_topology: str = "all_pairs",
) -> KernelSpec:
    """Spec with explicit theta, or defaults (random for qaoa) when omitted."""
    if theta is None:
        theta = default_theta(kind, d, rng=rng, qaoa_topology=qaoa_topology)
    return KernelSpec(kind=kind, n_features=d, theta=tuple(theta), qaoa_topology=qaoa_topology)


@dataclass
class GramMatrix:
    """Symmetric matrix of pairwise kernel values over one sample set.

    bounded: the generating kernel evaluates to 1 on identical inputs, so the
    diagonal is 1 and entries lie in [0, 1]. normalized: entries were rescaled
    by normalize_gram, which also forces a unit diagonal.
    """

    entries: np.ndarray
    bounded: bool = False
    normalized: bool = False

    def __post_init__(self):
        self.entries = np.asarray(self.entries, dtype=float)
        if self.entries.ndim != 2 or self.entries.shape[0] != self.entries.shape[1]:
            raise ValueError(f"Gram matrix must be square, got shape {self.entries.shape}")

    @property
    def size(self) -> int:
        return self.entries.shape[0]

    @property
    def unit_diagonal(self) -> bool:
        return self.bounded or self.normalized


def _check_vector(spec: KernelSpec, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (spec.n_features,):
        raise ValueError(
            f"expected a length-{spec.n_features} vector, got shape {x.shape}"
        )
    return x


def embed_state(spec: KernelSpec, x) -> Statevector:
    """Statevector produced by the embedding circuit of a quantum kernel."""
    if not spec.quantum:
        raise ValueError(f"{spec.kind} kernel has no embedding circuit")
    x = _check_vector(spec, x)
    d = spec.n_features
    state = zero_state(d)
    if spec.kind == "rx":
        for p in range(d):
            state = apply_rotation(state, "X", p, x[p])
        return state
    if spec.kind == "iqp":
        for p in range(d):
            state = apply_hadamard(state, p)
        for p in range(d):
            state = apply_rotation(state, "Z", p, x[p])
        for p in range(d):
            for q in range(p + 1, d):
                state = apply_zz(state, p, q, x[p] * x[q])
        return state
    # qaoa; the closing data rotations matter: a purely trailing trainable
    # block would cancel against its adjoint in the fidelity, leaving the
    # kernel independent of theta.
    for p in range(d):
        state = apply_rotation(state, "X", p, x[p])
    pairs = qaoa_pairs(d, spec.qaoa_topology)
    for (p, q), angle in zip(pairs, spec.theta):
        state = apply_zz(state, p, q, angle)
    ry_angles = spec.theta[len(pairs):]
    for p in range(d):
        state = apply_rotation(state, "Y", p, ry_angles[p])
    for p in range(d):
        state = apply_rotation(state, "X", p, x[p])
    return state


def _embed_rows(spec: KernelSpec, X: np.ndarray) -> np.ndarray:
    """Stack the embedded statevectors of all rows of X as a complex matrix."""
    return np.stack([embed_state(spec, x).amplitudes for x in X])


def kernel_eval(spec: KernelSpec, x, x2) -> float:
    """Kernel value k(x, x2) for one pair of feature vectors."""
    x = _check_vector(spec, x)
    x2 = _check_vector(spec, x2)
    if spec.kind == "linear":
        return float(x @ x2)
    if spec.kind == "polynomial":
        t0, t1 = spec.theta
        return float((t0 * (x @ x2) + t1) ** 3)
    if spec.kind == "rbf":
        diff = x - x2
        return float(np.exp(-spec.theta[0] * (diff @ diff)))
    a = embed_state(spec, x)
    b = embed_state(spec, x2)
    return min(max(abs(np.vdot(b.amplitudes, a.amplitudes)) ** 2, 0.0), 1.0)


def _pairwise(spec: KernelSpec, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Raw kernel values for all (row of A, row of B) pairs."""
    if spec.kind == "linear":
        return A @ B.T
    if spec.kind == "polynomial":
        t0, t1 = spec.theta
        return (t0 * (A @ B.T) + t1) ** 3
    if spec.kind == "rbf":
        sq = (
            np.sum(A**2, axis=1)[:, None]
            + np.sum(B**2, axis=1)[None, :]
            - 2.0 * (A @ B.T)
        )
        return np.exp(-spec.theta[0] * np.maximum(sq, 0.0))
    SA = _embed_rows(spec, A)
    SB = SA if B is A else _embed_rows(spec, B)
    return np.clip(np.abs(SA @ SB.conj().T) ** 2, 0.0, 1.0)


def gram_matrix(spec: KernelSpec, X) -> GramMatrix:
    """Gram matrix of all pairwise kernel values over the rows of X.

    Each unordered pair is evaluated once; the lower triangle mirrors the
    upper one, so the result is symmetric by construction.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != spec.n_features:
        raise ValueError(f"expected an (M, {spec.n_features}) matrix, got shape {X.shape}")
    K = _pairwise(spec, X, X)
    K = np.triu(K) + np.triu(K, 1).T
    return GramMatrix(K, bounded=spec.bounded, normalized=False)


def cross_matrix(spec: KernelSpec, A, B, normalize: bool = False) -> np.ndarray:
    """Rectangular kernel matrix k(a_i, b_j) between two sample sets.

    With normalize=True, entries are divided by sqrt(k(a,a) * k(b,b)) so they
    match a Gram matrix processed by normalize_gram. A point with zero
    self-similarity (a zero feature vector under the linear kernel) has no
    direction to compare; its normalized similarities are 0 by convention.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    K = _pairwise(spec, A, B)
    if normalize:
        da = np.array([kernel_eval(spec, a, a) for a in A])
        db = np.array([kernel_eval(spec, b, b) for b in B])
        if np.any(da < 0) or np.any(db < 0):
            raise ValueError("cannot normalize a kernel with negative self-similarity")
        scale = np.sqrt(np.outer(da, db))
        zero = scale == 0.0
        scale[zero] = 1.0
        K = np.where(zero, 0.0, K / scale)
    return K


def normalize_gram(K: GramMatrix) -> GramMatrix:
    """Rescale entries to K_ij / sqrt(K_ii * K_jj), forcing a unit diagonal."""
    diag = np.diag(K.entries)
    if np.any(diag <= 0):
        raise ValueError(
            "degenerate kernel: Gram diagonal has non-positive entries, cannot normalize"
        )
    scale = 1.0 / np.sqrt(diag)
    entries = K.entries * np.outer(scale, scale)
    return GramMatrix(entries, bounded=K.bounded, normalized=True)


def prepare_gram(spec: KernelSpec, X) -> GramMatrix:
    """Gram matrix ready for kernel weighting: raw if bounded, else normalized."""
    K = gram_matrix(spec, X)
    return K if spec.bounded else normalize_gram(K)


def combine_grams(grams, gamma) -> GramMatrix:
    """Convex combination sum_r gamma_r * K_r of equally-sized Gram matrices."""
    gamma = np.asarray(gamma, dtype=float)
    if len(grams) != len(gamma):
        raise ValueError(f"{len(grams)} matrices but {len(gamma)} weights")
    if np.any(gamma < 0):
        raise ValueError("combination weights must be non-negative")
    if abs(gamma.sum() - 1.0) > 1e-8:
        raise ValueError(f"combination weights must sum to 1, got {gamma.sum()!r}")
    sizes = {g.size for g in grams}
    if len(sizes) != 1:
        raise ValueError(f"Gram matrices differ in size: {sorted(sizes)}")
    entries = np.zeros_like(grams[0].entries)
    for g, w in zip(grams, gamma):
        entries += w * g.entries
    return GramMatrix(
        entries,
        bounded=all(g.bounded for g in grams),
        normalized=all(g.unit_diagonal for g in grams),
    )


def _classical_entry_gradients(spec: KernelSpec, X: np.ndarray) -> list[np.ndarray]:
    """Entrywise analytic derivatives of the raw polynomial / rbf Gram."""
    if spec.kind == "polynomial":
        t0, t1 = spec.theta
        inner = X @ X.T
        base = 3.0 * (t0 * inner + t1) ** 2
        return [base * inner, base]
    # rbf
    sq = (
        np.sum(X**2, axis=1)[:, None]
        + np.sum(X**2, axis=1)[None, :]
        - 2.0 * (X @ X.T)
    )
    sq = np.maximum(sq, 0.0)
    return [-sq * np.exp(-spec.theta[0] * sq)]


def _qaoa_shift_gradients(spec: KernelSpec, X: np.ndarray) -> list[np.ndarray]:
    """Exact qaoa Gram gradients via the parameter-shift rule.

    Each parameter appears once in the ket circuit and once in the bra
    circuit; the rule is applied to both occurrences independently and the
    two partials are summed.
    """
    S0 = _embed_rows(spec, X)
    grads = []
    for j in range(len(spec.theta)):
        shifted = []
        for sign in (+1.0, -1.0):
            theta = list(spec.theta)
            theta[j] += sign * np.pi / 2.0
            shifted.append(_embed_rows(spec.with_theta(theta), X))
        plus = np.abs(shifted[0] @ S0.conj().T) ** 2
        minus = np.abs(shifted[1] @ S0.conj().T) ** 2
        ket_partial = 0.5 * (plus - minus)
        grads.append(ket_partial + ket_partial.T)
    return grads


def gram_gradient(spec: KernelSpec, X, normalized: bool = False) -> list[np.ndarray]:
    """Derivative of the Gram matrix with respect to each kernel parameter.

    polynomial / rbf use the analytic entrywise formulas; qaoa uses the
    parameter-shift rule. With normalized=True, the quotient rule through
    normalize_gram is applied exactly (the trained parameter moves the
    diagonal too, so treating normalization as constant would be wrong).
    Bounded kernels keep a unit diagonal for every theta, so normalization
    does not change their gradients.
    """
    if not spec.parametric:
        raise ValueError(f"{spec.kind} kernel has no parameters to differentiate")
    X = np.asarray(X, dtype=float)
    if spec.kind == "qaoa":
        return _qaoa_shift_gradients(spec, X)
    grads = _classical_entry_gradients(spec, X)
    if not normalized:
        return grads

    K = gram_matrix(spec, X).entries
    diag = np.diag(K)
    if np.any(diag <= 0):
        raise ValueError(
            "degenerate kernel: Gram diagonal has non-positive entries, cannot normalize"
        )
    scale = np.outer(np.sqrt(diag), np.sqrt(diag))
    K_norm = K / scale
    out = []
    for dK in grads:
        ddiag = np.diag(dK)
        rel = ddiag / diag
        out.append(dK / scale - 0.5 * K_norm * (rel[:, None] + rel[None, :]))
    return out


def save_gram_csv(gram: GramMatrix, path) -> None:
    """Row-major CSV, no header, 17-significant-digit floats."""
    np.savetxt(path, gram.entries, delimiter=",", fmt="%.17g")


def save_gram_binary(gram: GramMatrix, path) -> None:
    """Binary container: magic "QGRM", little-endian u32 size, f64 entries row-major."""
    entries = np.ascontiguousarray(gram.entries, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(_QGRM_MAGIC)
        fh.write(struct.pack("<I", gram.size))
        fh.write(entries.tobytes())


def _flag_loaded(entries: np.ndarray) -> GramMatrix:
    # The containers carry entries only; a unit diagonal is the one pipeline
    # fact recoverable from the data.
    unit_diag = bool(np.all(np.abs(np.diag(entries) - 1.0) <= 1e-10))
    return GramMatrix(entries, bounded=False, normalized=unit_diag)


def load_gram_csv(path) -> GramMatrix:
    entries = np.loadtxt(path, delimiter=",", ndmin=2)
    return _flag_loaded(entries)


def load_gram_binary(path) -> GramMatrix:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _QGRM_MAGIC:
            raise ValueError(f"bad magic {magic!r}, expected {_QGRM_MAGIC!r}")
        (size,) = struct.unpack("<I", fh.read(4))
        data = fh.read(8 * size * size)
        if len(data) != 8 * size * size:
            raise ValueError(f"truncated Gram container: expected {size}x{size} entries")
    entries = np.frombuffer(data, dtype="<f8").reshape(size, size).copy()
    return _flag_loaded(entries)
