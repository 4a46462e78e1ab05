"""Shared dense-matrix oracles for the simulator and kernel tests.

These build full 2^n x 2^n operators with Kronecker products and matrix
exponentials (scipy), independently of the package's bit-indexed gate
application path.
"""
import numpy as np
from scipy.linalg import expm

I2 = np.eye(2, dtype=complex)
PAULI = {
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}
H2 = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


def dense_1q(matrix: np.ndarray, qubit: int, n: int) -> np.ndarray:
    """Embed a 2x2 operator on the given qubit (qubit 0 = least significant bit)."""
    op = np.eye(1, dtype=complex)
    for k in reversed(range(n)):
        op = np.kron(op, matrix if k == qubit else I2)
    return op


def dense_rotation(axis: str, qubit: int, angle: float, n: int) -> np.ndarray:
    return dense_1q(expm(-0.5j * angle * PAULI[axis]), qubit, n)


def dense_zz(p: int, q: int, angle: float, n: int) -> np.ndarray:
    zz = dense_1q(PAULI["Z"], p, n) @ dense_1q(PAULI["Z"], q, n)
    return expm(-0.5j * angle * zz)


def random_state(n: int, rng: np.random.Generator) -> np.ndarray:
    amps = rng.standard_normal(2**n) + 1j * rng.standard_normal(2**n)
    return amps / np.linalg.norm(amps)


def random_gates(n: int, count: int, rng: np.random.Generator) -> list[tuple]:
    """Gate list as ("rot", axis, qubit, angle) / ("h", qubit) / ("zz", p, q, angle)."""
    gates = []
    for _ in range(count):
        kind = rng.choice(["rot", "h", "zz"] if n > 1 else ["rot", "h"])
        if kind == "rot":
            gates.append(("rot", rng.choice(["X", "Y", "Z"]), int(rng.integers(n)),
                          float(rng.uniform(-2 * np.pi, 2 * np.pi))))
        elif kind == "h":
            gates.append(("h", int(rng.integers(n))))
        else:
            p, q = rng.choice(n, size=2, replace=False)
            gates.append(("zz", int(p), int(q), float(rng.uniform(-2 * np.pi, 2 * np.pi))))
    return gates


def dense_circuit_unitary(gates: list[tuple], n: int) -> np.ndarray:
    U = np.eye(2**n, dtype=complex)
    for gate in gates:
        if gate[0] == "rot":
            _, axis, qubit, angle = gate
            U = dense_rotation(axis, qubit, angle, n) @ U
        elif gate[0] == "h":
            U = dense_1q(H2, gate[1], n) @ U
        else:
            _, p, q, angle = gate
            U = dense_zz(p, q, angle, n) @ U
    return U


def apply_gates(state, gates):
    """Run a conftest gate list through the package's simulator."""
    from qcmkl import apply_hadamard, apply_rotation, apply_zz

    for gate in gates:
        if gate[0] == "rot":
            _, axis, qubit, angle = gate
            state = apply_rotation(state, axis, qubit, angle)
        elif gate[0] == "h":
            state = apply_hadamard(state, gate[1])
        else:
            _, p, q, angle = gate
            state = apply_zz(state, p, q, angle)
    return state
