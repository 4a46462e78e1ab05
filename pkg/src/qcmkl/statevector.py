"""Dense statevector simulation for data-embedding circuits.

Conventions (fixed; sign conventions vary between tools, so they are spelled
out here):

- Rotations follow exp(-i * angle * G / 2) with generator G in {X, Y, Z, Z@Z}.
- Qubit 0 is the least-significant bit of the basis index, so for 2 qubits the
  amplitude order is |00>, |01>, |10>, |11> with the left bit = qubit 1.
- Gates are unitary; the norm is re-checked after every application (drift
  beyond 1e-10 is an internal error) but never silently re-normalized.

States are immutable from the caller's perspective: every operation returns a
new Statevector and never mutates its input, so values can be shared freely
across threads.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import cos, sin

import numpy as np

MAX_QUBITS = 24

_NORM_TOL = 1e-10
_SQRT2_INV = 1.0 / np.sqrt(2.0)
_HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) * _SQRT2_INV


@dataclass(frozen=True)
class Statevector:
    """Pure state of ``n_qubits`` qubits as 2**n_qubits complex amplitudes."""

    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if len(self.amplitudes) != 1 << self.n_qubits:
            raise ValueError(
                f"amplitude vector of length {len(self.amplitudes)} does not "
                f"match {self.n_qubits} qubits"
            )


def zero_state(n_qubits: int) -> Statevector:
    """All-qubits-|0> reference state."""
    if not 1 <= n_qubits <= MAX_QUBITS:
        raise ValueError(f"n_qubits must be in [1, {MAX_QUBITS}], got {n_qubits}")
    amps = np.zeros(1 << n_qubits, dtype=complex)
    amps[0] = 1.0
    return Statevector(n_qubits, amps)


def _checked(n_qubits: int, amps: np.ndarray) -> Statevector:
    norm = np.linalg.norm(amps)
    if abs(norm - 1.0) > _NORM_TOL:
        raise RuntimeError(f"statevector norm drifted to {norm!r}")
    return Statevector(n_qubits, amps)


def _apply_1q(state: Statevector, matrix: np.ndarray, qubit: int) -> Statevector:
    # Reshaped as (upper bits, target bit, lower bits); axis 1 is the qubit.
    if not 0 <= qubit < state.n_qubits:
        raise IndexError(f"qubit {qubit} out of range for {state.n_qubits} qubits")
    block = state.amplitudes.reshape(-1, 2, 1 << qubit)
    out = np.einsum("ab,xbs->xas", matrix, block).reshape(-1)
    return _checked(state.n_qubits, out)


def rotation_matrix(axis: str, angle: float) -> np.ndarray:
    """2x2 matrix of exp(-i * angle * A / 2) for A in {X, Y, Z}."""
    c, s = cos(angle / 2.0), sin(angle / 2.0)
    if axis == "X":
        return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)
    if axis == "Y":
        return np.array([[c, -s], [s, c]], dtype=complex)
    if axis == "Z":
        return np.array([[c - 1j * s, 0], [0, c + 1j * s]], dtype=complex)
    raise ValueError(f"unknown rotation axis {axis!r}")


def apply_rotation(state: Statevector, axis: str, qubit: int, angle: float) -> Statevector:
    """Rotate one qubit by exp(-i * angle * A / 2), A in {X, Y, Z}."""
    return _apply_1q(state, rotation_matrix(axis, angle), qubit)


def apply_hadamard(state: Statevector, qubit: int) -> Statevector:
    return _apply_1q(state, _HADAMARD, qubit)


def apply_zz(state: Statevector, p: int, q: int, angle: float) -> Statevector:
    """Apply the diagonal two-qubit phase exp(-i * angle * Z_p Z_q / 2).

    Basis states where bits p and q agree pick up e^{-i*angle/2}; states where
    they differ pick up e^{+i*angle/2}.
    """
    if p == q:
        raise ValueError(f"apply_zz needs two distinct qubits, got p = q = {p}")
    n = state.n_qubits
    if not (0 <= p < n and 0 <= q < n):
        raise IndexError(f"qubit pair ({p}, {q}) out of range for {n} qubits")
    idx = np.arange(1 << n)
    agree = ((idx >> p) & 1) == ((idx >> q) & 1)
    sign = np.where(agree, 1.0, -1.0)
    out = state.amplitudes * np.exp(-0.5j * angle * sign)
    return _checked(n, out)


def overlap(a: Statevector, b: Statevector) -> complex:
    """Inner product <b|a>."""
    if a.n_qubits != b.n_qubits:
        raise ValueError(f"qubit counts differ: {a.n_qubits} vs {b.n_qubits}")
    return complex(np.vdot(b.amplitudes, a.amplitudes))


def fidelity(a: Statevector, b: Statevector) -> float:
    """|<b|a>|^2, clamped to [0, 1] against 1e-12-scale rounding."""
    value = abs(overlap(a, b)) ** 2
    return min(max(value, 0.0), 1.0)
