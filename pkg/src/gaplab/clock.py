"""Small-penalty clock Hamiltonians built from verifier circuits.

The Hamiltonian lives on (system) (x) (clock) with the system register first.
The default clock is an ideal (T+1)-level register; a unary domain-wall qubit
encoding (T qubits, time t encoded as 1^t 0^(T-t)) is available behind the
``encoding`` flag, with explicit penalties on illegal clock patterns.

With zero output penalty the kernel is spanned by history states of valid
inputs; the output penalty eps |0><0|_decision (x) |T><T|_clock then splits the
kernel by accept probability, at first order by eps (1 - lambda_i) / (T + 1).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuits import (
    AcceptOperator,
    PromiseParams,
    VerifierCircuit,
    _apply_gate,
    gate_embedding,
)
from .linalg import check_state, hermitian_norm, is_hermitian, max_abs

IDEAL = "ideal-qudit"
UNARY = "unary-domain-wall"
WITH_WITNESS = "with-witness"
NO_WITNESS = "no-witness"

SW_WINDOW_FACTOR = 16  # output penalty must stay below gap/16


def _clock_dim(T: int, encoding: str) -> int:
    return T + 1 if encoding == IDEAL else 2**T


def _clock_index(t: int, T: int, encoding: str) -> int:
    if encoding == IDEAL:
        return t
    idx = 0
    for j in range(t):
        idx |= 1 << (T - 1 - j)
    return idx


def _clock_ketbra(t: int, u: int, T: int, encoding: str) -> np.ndarray:
    dim = _clock_dim(T, encoding)
    out = np.zeros((dim, dim), dtype=complex)
    out[_clock_index(t, T, encoding), _clock_index(u, T, encoding)] = 1.0
    return out


def _domain_wall_penalty(T: int) -> np.ndarray:
    """Penalize every 01 pattern on adjacent clock qubits (illegal times)."""
    dim = 2**T
    diag = np.zeros(dim)
    for idx in range(dim):
        bits = [(idx >> (T - 1 - j)) & 1 for j in range(T)]
        diag[idx] = sum(1 for j in range(T - 1) if bits[j] == 0 and bits[j + 1] == 1)
    return np.diag(diag).astype(complex)


@dataclass(frozen=True)
class ClockHamiltonian:
    h_input: np.ndarray
    h_prop: np.ndarray
    h_output: np.ndarray
    h_clock: np.ndarray
    epsilon: float
    T: int
    encoding: str
    witness_mode: str
    m: int
    w: int

    def __post_init__(self):
        if abs(hermitian_norm(self.h_output) - self.epsilon) > 1e-12:
            raise ValueError("output penalty norm does not equal epsilon")
        total = self.total()
        if not is_hermitian(total, 1e-12):
            raise ValueError("clock Hamiltonian is not Hermitian")
        for name, part in (
            ("h_input", self.h_input),
            ("h_prop", self.h_prop),
            ("h_clock", self.h_clock),
        ):
            low = float(np.min(np.linalg.eigvalsh(part)))
            if low < -1e-10:
                raise ValueError(f"{name} has eigenvalue {low} below -1e-10")

    def total(self) -> np.ndarray:
        return self.h_input + self.h_prop + self.h_output + self.h_clock

    def unperturbed(self) -> np.ndarray:
        """The eps = 0 part: input + propagation + clock penalties."""
        return self.h_input + self.h_prop + self.h_clock

    @property
    def dim(self) -> int:
        return self.h_prop.shape[0]

    @property
    def kernel_dim(self) -> int:
        return 2**self.w

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.total())


def build_clock(
    circuit: VerifierCircuit,
    epsilon: float,
    encoding: str = IDEAL,
    witness_mode: str = WITH_WITNESS,
    dim_cap: int = 2**18,
) -> ClockHamiltonian:
    """Compile a verifier circuit into a clock Hamiltonian with output penalty
    of strength epsilon."""
    if epsilon < 0:
        raise ValueError(f"epsilon must be nonnegative, got {epsilon}")
    if encoding not in (IDEAL, UNARY):
        raise ValueError(f"unknown clock encoding {encoding!r}")
    if witness_mode not in (WITH_WITNESS, NO_WITNESS):
        raise ValueError(f"unknown witness mode {witness_mode!r}")
    if witness_mode == NO_WITNESS and circuit.w != 0:
        raise ValueError(
            "the no-witness construction penalizes every qubit; "
            f"pass a circuit with w=0 (got w={circuit.w})"
        )
    T = circuit.T
    if encoding == UNARY and T == 0:
        raise ValueError("unary domain-wall clock needs at least one gate (T >= 1)")
    n = circuit.n_qubits
    sys_dim = circuit.dim
    clk_dim = _clock_dim(T, encoding)
    if sys_dim * clk_dim > dim_cap:
        raise ValueError(
            f"clock Hamiltonian dimension {sys_dim * clk_dim} exceeds cap {dim_cap}"
        )

    proj1 = np.array([[0, 0], [0, 1]], dtype=complex)
    penalized = np.zeros((sys_dim, sys_dim), dtype=complex)
    for i in range(circuit.m):
        penalized += _embed_single(proj1, i, n)
    h_input = np.kron(penalized, _clock_ketbra(0, 0, T, encoding))

    h_prop = np.zeros((sys_dim * clk_dim, sys_dim * clk_dim), dtype=complex)
    eye = np.eye(sys_dim, dtype=complex)
    for t in range(T):
        u = gate_embedding(circuit.gates[t], n)
        h_prop += (
            -np.kron(u, _clock_ketbra(t + 1, t, T, encoding))
            - np.kron(u.conj().T, _clock_ketbra(t, t + 1, T, encoding))
            + np.kron(eye, _clock_ketbra(t, t, T, encoding))
            + np.kron(eye, _clock_ketbra(t + 1, t + 1, T, encoding))
        )

    proj0 = np.array([[1, 0], [0, 0]], dtype=complex)
    out_sys = _embed_single(proj0, circuit.decision_qubit, n)
    h_output = epsilon * np.kron(out_sys, _clock_ketbra(T, T, T, encoding))

    if encoding == IDEAL:
        h_clock = np.zeros_like(h_prop)
    else:
        h_clock = np.kron(eye, _domain_wall_penalty(T))

    return ClockHamiltonian(
        h_input=h_input,
        h_prop=h_prop,
        h_output=h_output,
        h_clock=h_clock,
        epsilon=float(epsilon),
        T=T,
        encoding=encoding,
        witness_mode=witness_mode,
        m=circuit.m,
        w=circuit.w,
    )


def _embed_single(op2: np.ndarray, qubit: int, n: int) -> np.ndarray:
    out = np.array([[1.0 + 0j]])
    for q in range(n):
        out = np.kron(out, op2 if q == qubit else np.eye(2, dtype=complex))
    return out


@dataclass(frozen=True)
class HistoryState:
    vector: np.ndarray
    witness_label: str


def history_state(
    circuit: VerifierCircuit,
    witness: np.ndarray,
    encoding: str = IDEAL,
    label: str = "witness",
) -> HistoryState:
    """Uniform superposition over partial computations, entangled with the clock."""
    witness = check_state(witness, 2**circuit.w)
    T = circuit.T
    anc = np.zeros(2**circuit.m, dtype=complex)
    anc[0] = 1.0
    psi = np.kron(anc, witness)
    n = circuit.n_qubits
    clk_dim = _clock_dim(T, encoding)
    out = np.zeros(circuit.dim * clk_dim, dtype=complex)
    tensor = psi.reshape((2,) * n)
    for t in range(T + 1):
        if t > 0:
            tensor = _apply_gate(tensor, circuit.gates[t - 1], n)
        clk = np.zeros(clk_dim, dtype=complex)
        clk[_clock_index(t, T, encoding)] = 1.0
        out += np.kron(tensor.reshape(-1), clk)
    out /= np.sqrt(T + 1)
    return HistoryState(vector=out, witness_label=label)


def unperturbed_gap(clock: ClockHamiltonian, kernel_tol: float = 1e-8) -> float:
    """Measured gap of the eps = 0 Hamiltonian above its history-state kernel."""
    vals = np.linalg.eigvalsh(clock.unperturbed())
    k = clock.kernel_dim
    if max_abs(vals[:k]) > kernel_tol:
        raise ValueError(
            f"expected a {k}-dimensional kernel; lowest eigenvalues {vals[:k]}"
        )
    gap = float(vals[k])
    if gap <= kernel_tol:
        raise ValueError(f"degenerate unperturbed gap {gap}")
    return gap


def predicted_spectrum(clock: ClockHamiltonian, q: AcceptOperator) -> np.ndarray:
    """First-order low-energy predictions eps (1 - lambda_i)/(T+1), ascending."""
    if clock.epsilon > 0:
        delta0 = unperturbed_gap(clock)
        if clock.epsilon >= delta0 / SW_WINDOW_FACTOR:
            raise ValueError(
                f"epsilon {clock.epsilon!r} is not below the perturbative window "
                f"delta0/{SW_WINDOW_FACTOR} = {delta0 / SW_WINDOW_FACTOR!r} "
                f"(measured delta0 {delta0!r})"
            )
    preds = clock.epsilon * (1.0 - q.eigenvalues) / (clock.T + 1)
    return np.sort(preds)


def epsilon_schedule(
    params: PromiseParams, T: int, n: int, regime: str
) -> float:
    """Output-penalty strengths for the three reduction regimes."""
    if T < 1 or n < 1:
        raise ValueError("T and n must be positive")
    gap = params.c - params.s
    if regime == "egqma":
        return min(params.g1, params.g2, gap) / (n * T**4)
    if regime == "gs-description":
        return gap / T**4
    if regime == "bqp-hard":
        return gap / (n * T**4)
    raise ValueError(f"unknown epsilon-schedule regime {regime!r}")
