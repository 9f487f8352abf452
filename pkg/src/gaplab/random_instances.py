"""Seeded generators for circuits, gapped Hamiltonians, and promise instances.

Everything takes an explicit numpy Generator so experiment runs are
reproducible bit for bit.
"""

from __future__ import annotations

import numpy as np

from .circuits import GateOp, VerifierCircuit, gate
from .linalg import SparseHermitian


def haar_unitary(rng: np.random.Generator, dim: int) -> np.ndarray:
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_circuit(
    rng: np.random.Generator,
    m: int,
    w: int,
    n_gates: int,
    decision_qubit: int = 0,
    two_qubit_prob: float = 0.5,
    qubit_cap: int = 14,
) -> VerifierCircuit:
    """Random circuit mixing Haar 1- and 2-qubit gates."""
    n = m + w
    gates: list[GateOp] = []
    for k in range(n_gates):
        if n >= 2 and rng.random() < two_qubit_prob:
            a, b = rng.choice(n, size=2, replace=False)
            gates.append(GateOp(f"U2_{k}", haar_unitary(rng, 4), (int(a), int(b))))
        else:
            a = int(rng.integers(n))
            gates.append(GateOp(f"U1_{k}", haar_unitary(rng, 2), (a,)))
    return VerifierCircuit(
        m=m, w=w, gates=tuple(gates), decision_qubit=decision_qubit, qubit_cap=qubit_cap
    )


def random_clifford_t_circuit(
    rng: np.random.Generator,
    m: int,
    w: int,
    n_gates: int,
    decision_qubit: int = 0,
    qubit_cap: int = 14,
) -> VerifierCircuit:
    """Random circuit over {H, X, Z, T, CNOT}: accept probabilities of basis
    witnesses are dyadic once the gate count fixes the denominator."""
    n = m + w
    gates: list[GateOp] = []
    labels = ["H", "X", "Z", "T"]
    for _ in range(n_gates):
        if n >= 2 and rng.random() < 0.4:
            a, b = rng.choice(n, size=2, replace=False)
            gates.append(gate("CNOT", int(a), int(b)))
        else:
            gates.append(gate(str(rng.choice(labels)), int(rng.integers(n))))
    return VerifierCircuit(
        m=m, w=w, gates=tuple(gates), decision_qubit=decision_qubit, qubit_cap=qubit_cap
    )


def random_state(rng: np.random.Generator, dim: int) -> np.ndarray:
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def random_gapped_hamiltonian(
    rng: np.random.Generator,
    n_qubits: int,
    gap: float,
    ground_energy: float = 0.0,
    spread: float = 2.0,
) -> SparseHermitian:
    """Dense Hermitian with a prescribed spectral gap above a unique ground state."""
    dim = 2**n_qubits
    rest = ground_energy + gap + spread * rng.random(dim - 1)
    vals = np.concatenate([[ground_energy], np.sort(rest)])
    basis = haar_unitary(rng, dim)
    h = (basis * vals) @ basis.conj().T
    return SparseHermitian((h + h.conj().T) / 2)


def random_local_observable(rng: np.random.Generator, n_qubits: int) -> SparseHermitian:
    """Single-qubit observable (Haar-rotated Z on a random site) embedded in
    the full register."""
    z = np.diag([1.0 + 0j, -1.0])
    u = haar_unitary(rng, 2)
    local = u @ z @ u.conj().T
    site = int(rng.integers(n_qubits))
    op = np.array([[1.0 + 0j]])
    for q in range(n_qubits):
        op = np.kron(op, local if q == site else np.eye(2, dtype=complex))
    return SparseHermitian((op + op.conj().T) / 2)


def random_promise_diagonal(
    rng: np.random.Generator, w: int, c: float, s: float, delta: float
) -> tuple[np.ndarray, bool]:
    """Diagonal accept-operator spectrum satisfying the gapped promise; returns
    (eigenvalues sorted nonincreasing, is_yes)."""
    dim = 2**w
    is_yes = bool(rng.random() < 0.5)
    if is_yes:
        lam1 = float(rng.uniform(c, 1.0))
    else:
        lam1 = float(rng.uniform(delta, s))
    lam2_hi = lam1 - delta
    rest = rng.uniform(0.0, max(lam2_hi, 0.0), size=dim - 1) if dim > 1 else np.array([])
    vals = np.concatenate([[lam1], np.sort(rest)[::-1]])
    return vals, is_yes
