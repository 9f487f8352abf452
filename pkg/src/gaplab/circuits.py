"""Verifier circuits, accept operators, and witness-register transformations.

Register convention: qubits are numbered 0..m+w-1 with the m ancilla qubits
first and the w witness qubits last; qubit 0 is the most significant bit of a
computational-basis index.  A verifier runs on |0^m> (x) |witness> and the
accept probability is the chance of measuring |1> on the decision qubit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .linalg import UNITARITY_TOL, check_state, is_hermitian, max_abs

DEFAULT_QUBIT_CAP = 14

_SQ2 = 1.0 / math.sqrt(2.0)
_T_PHASE = np.exp(1j * np.pi / 4)

BUILTIN_GATES: dict[str, np.ndarray] = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
    "H": np.array([[1, 1], [1, -1]], dtype=complex) * _SQ2,
    "S": np.array([[1, 0], [0, 1j]], dtype=complex),
    "SDG": np.array([[1, 0], [0, -1j]], dtype=complex),
    "T": np.array([[1, 0], [0, _T_PHASE]], dtype=complex),
    "TDG": np.array([[1, 0], [0, np.conj(_T_PHASE)]], dtype=complex),
    # Two-qubit gates act on (first target, second target) with the first
    # target as the more significant bit; CNOT controls on the first target.
    "CNOT": np.array(
        [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
    ),
    "CZ": np.diag([1, 1, 1, -1]).astype(complex),
    "SWAP": np.array(
        [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex
    ),
}


@dataclass(frozen=True)
class GateOp:
    """A 1- or 2-qubit unitary applied to an ordered tuple of target qubits."""

    label: str
    matrix: np.ndarray
    targets: tuple[int, ...]

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=complex)
        object.__setattr__(self, "matrix", mat)
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        k = len(self.targets)
        if k not in (1, 2):
            raise ValueError(f"gate {self.label!r}: {k} targets, only 1 or 2 supported")
        if mat.shape != (2**k, 2**k):
            raise ValueError(
                f"gate {self.label!r}: matrix shape {mat.shape} does not match "
                f"{k} target(s)"
            )
        if len(set(self.targets)) != k:
            raise ValueError(f"gate {self.label!r}: repeated targets {self.targets}")
        if any(t < 0 for t in self.targets):
            raise ValueError(f"gate {self.label!r}: negative target index")
        dev = max_abs(mat.conj().T @ mat - np.eye(2**k))
        if dev > UNITARITY_TOL:
            raise ValueError(
                f"gate {self.label!r}: not unitary, max |G^dag G - I| = {dev:.3e}"
            )

    @property
    def arity(self) -> int:
        return len(self.targets)


def gate(label: str, *targets: int, matrix: np.ndarray | None = None) -> GateOp:
    """Build a GateOp from a builtin label or a user-supplied unitary."""
    if matrix is None:
        try:
            matrix = BUILTIN_GATES[label.upper()]
        except KeyError:
            raise ValueError(f"unknown builtin gate {label!r} and no matrix given")
        label = label.upper()
    return GateOp(label, np.asarray(matrix, dtype=complex), tuple(targets))


def rotation_gate(prob_one: float, target: int, label: str = "COIN") -> GateOp:
    """Real rotation sending |0> to sqrt(1-p)|0> + sqrt(p)|1>: a biased coin."""
    if not 0.0 <= prob_one <= 1.0:
        raise ValueError(f"coin probability {prob_one} outside [0, 1]")
    a = math.sqrt(prob_one)
    b = math.sqrt(1.0 - prob_one)
    return GateOp(label, np.array([[b, -a], [a, b]], dtype=complex), (target,))


@dataclass(frozen=True)
class VerifierCircuit:
    """Gate list acting on m ancilla + w witness qubits with a decision qubit."""

    m: int
    w: int
    gates: tuple[GateOp, ...]
    decision_qubit: int
    qubit_cap: int = DEFAULT_QUBIT_CAP

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        if self.m < 0 or self.w < 0:
            raise ValueError("register sizes must be nonnegative")
        n = self.m + self.w
        if n > self.qubit_cap:
            raise ValueError(
                f"circuit uses {n} qubits, above the configured cap of "
                f"{self.qubit_cap} (dimension 2**{n})"
            )
        if not 0 <= self.decision_qubit < n:
            raise ValueError(
                f"decision qubit {self.decision_qubit} outside register of size {n}"
            )
        for g in self.gates:
            if any(t >= n for t in g.targets):
                raise ValueError(
                    f"gate {g.label!r} targets {g.targets} outside register of size {n}"
                )

    @property
    def n_qubits(self) -> int:
        return self.m + self.w

    @property
    def T(self) -> int:
        """Gate count."""
        return len(self.gates)

    @property
    def dim(self) -> int:
        return 2**self.n_qubits


def _apply_gate(tensor: np.ndarray, g: GateOp, n: int) -> np.ndarray:
    k = g.arity
    mat = g.matrix.reshape((2,) * (2 * k))
    moved = np.tensordot(mat, tensor, axes=(tuple(range(k, 2 * k)), g.targets))
    return np.moveaxis(moved, tuple(range(k)), g.targets)


def apply_circuit(circuit: VerifierCircuit, state: np.ndarray) -> np.ndarray:
    """Apply the circuit's gates in order to a unit-norm state vector."""
    state = check_state(state, circuit.dim)
    tensor = state.reshape((2,) * circuit.n_qubits)
    for g in circuit.gates:
        tensor = _apply_gate(tensor, g, circuit.n_qubits)
    return tensor.reshape(-1)


def gate_embedding(g: GateOp, n: int) -> np.ndarray:
    """Full 2^n x 2^n matrix of the gate on an n-qubit register.

    Built by conjugating a kron product with index bookkeeping; mainly used to
    assemble propagation Hamiltonians and as a brute-force oracle in tests.
    """
    dim = 2**n
    full = np.zeros((dim, dim), dtype=complex)
    k = g.arity
    for col in range(dim):
        bits = [(col >> (n - 1 - q)) & 1 for q in range(n)]
        gcol = 0
        for t in g.targets:
            gcol = (gcol << 1) | bits[t]
        for grow in range(2**k):
            amp = g.matrix[grow, gcol]
            if amp == 0:
                continue
            new_bits = list(bits)
            for pos, t in enumerate(g.targets):
                new_bits[t] = (grow >> (k - 1 - pos)) & 1
            row = 0
            for q in range(n):
                row = (row << 1) | new_bits[q]
            full[row, col] += amp
    return full


def circuit_unitary(circuit: VerifierCircuit) -> np.ndarray:
    """Product U_T ... U_1 of the embedded gate matrices."""
    u = np.eye(circuit.dim, dtype=complex)
    for g in circuit.gates:
        u = gate_embedding(g, circuit.n_qubits) @ u
    return u


def basis_input(circuit: VerifierCircuit, witness_index: int) -> np.ndarray:
    """The state |0^m> (x) |e_j> as a vector."""
    if not 0 <= witness_index < 2**circuit.w:
        raise ValueError(f"witness index {witness_index} outside 2**{circuit.w}")
    vec = np.zeros(circuit.dim, dtype=complex)
    vec[witness_index] = 1.0
    return vec


@dataclass(frozen=True)
class AcceptOperator:
    """Hermitian operator on the witness space whose eigenvalues are the
    extremal accept probabilities; eigenvalues sorted nonincreasing."""

    q_matrix: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @classmethod
    def from_matrix(cls, q: np.ndarray) -> "AcceptOperator":
        q = np.asarray(q, dtype=complex)
        if not is_hermitian(q, 1e-12):
            raise ValueError("accept operator must be Hermitian within 1e-12")
        vals, vecs = np.linalg.eigh(q)
        vals = vals[::-1].copy()
        vecs = vecs[:, ::-1].copy()
        if vals.size and (vals[-1] < -1e-10 or vals[0] > 1 + 1e-10):
            raise ValueError(
                f"accept spectrum outside [0, 1]: min {vals[-1]!r}, max {vals[0]!r}"
            )
        return cls(q, vals, vecs)

    @property
    def dim(self) -> int:
        return self.q_matrix.shape[0]

    @property
    def lambda1(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def spectral_gap(self) -> float:
        """Difference of the two largest eigenvalues (0 for a 1-dim witness space)."""
        if self.dim < 2:
            return 0.0
        return float(self.eigenvalues[0] - self.eigenvalues[1])

    def expectation(self, witness: np.ndarray) -> float:
        witness = check_state(witness, self.dim)
        return float(np.real(witness.conj() @ self.q_matrix @ witness))


@dataclass(frozen=True)
class PromiseParams:
    """Completeness/soundness plus spectral-gap promises for an accept operator."""

    c: float
    s: float
    g1: float = 0.0
    g2: float = 0.0
    w: int = 0

    def __post_init__(self):
        if not 0.0 < self.c <= 1.0:
            raise ValueError(f"completeness {self.c} outside (0, 1]")
        if not 0.0 <= self.s < 1.0:
            raise ValueError(f"soundness {self.s} outside [0, 1)")
        if self.c <= self.s:
            raise ValueError(f"need c > s, got c={self.c}, s={self.s}")
        for name, g in (("g1", self.g1), ("g2", self.g2)):
            if not 0.0 <= g <= 1.0:
                raise ValueError(f"{name}={g} outside [0, 1]")
        if self.w < 0:
            raise ValueError("witness size must be nonnegative")

    @property
    def promise_gap(self) -> float:
        return self.c - self.s


def accept_operator(circuit: VerifierCircuit) -> AcceptOperator:
    """Q[i, j] = <0^m, e_i| U^dag Pi_out U |0^m, e_j> over witness basis states."""
    n = circuit.n_qubits
    dw = 2**circuit.w
    accepted = np.zeros((circuit.dim, dw), dtype=complex)
    for j in range(dw):
        out = apply_circuit(circuit, basis_input(circuit, j))
        tensor = out.reshape((2,) * n)
        # keep only the decision-qubit |1> branch
        mask = np.zeros((2,) * n, dtype=complex)
        idx = [slice(None)] * n
        idx[circuit.decision_qubit] = 1
        mask[tuple(idx)] = tensor[tuple(idx)]
        accepted[:, j] = mask.reshape(-1)
    q = accepted.conj().T @ accepted
    q = (q + q.conj().T) / 2.0
    return AcceptOperator.from_matrix(q)


def accept_probability(circuit: VerifierCircuit, witness: np.ndarray) -> float:
    """Simulated Pr(decision qubit = 1) for one witness state."""
    witness = check_state(witness, 2**circuit.w)
    anc = np.zeros(2**circuit.m, dtype=complex)
    anc[0] = 1.0
    state = np.kron(anc, witness)
    out = apply_circuit(circuit, state)
    tensor = out.reshape((2,) * circuit.n_qubits)
    idx = [slice(None)] * circuit.n_qubits
    idx[circuit.decision_qubit] = 1
    return float(np.sum(np.abs(tensor[tuple(idx)]) ** 2))


def classical_witness_extend(circuit: VerifierCircuit) -> VerifierCircuit:
    """Prefix CNOT copies of every witness qubit into fresh ancillas.

    The resulting accept operator is diagonal in the computational witness
    basis, with diagonal equal to the original basis-witness accept
    probabilities.
    """
    m, w = circuit.m, circuit.w
    new_m = m + w

    def remap(q: int) -> int:
        return q if q < m else q + w

    gates = [gate("CNOT", new_m + j, m + j) for j in range(w)]
    for g in circuit.gates:
        gates.append(GateOp(g.label, g.matrix, tuple(remap(t) for t in g.targets)))
    return VerifierCircuit(
        m=new_m,
        w=w,
        gates=tuple(gates),
        decision_qubit=remap(circuit.decision_qubit),
        qubit_cap=max(circuit.qubit_cap, new_m + w),
    )


def toffoli(a: int, b: int, t: int) -> list[GateOp]:
    """Doubly controlled X compiled to the standard {H, T, TDG, CNOT} sequence."""
    return [
        gate("H", t),
        gate("CNOT", b, t),
        gate("TDG", t),
        gate("CNOT", a, t),
        gate("T", t),
        gate("CNOT", b, t),
        gate("TDG", t),
        gate("CNOT", a, t),
        gate("T", b),
        gate("T", t),
        gate("H", t),
        gate("CNOT", a, b),
        gate("T", a),
        gate("TDG", b),
        gate("CNOT", a, b),
    ]


def _require_classical(circuit: VerifierCircuit, tol: float = 1e-10) -> np.ndarray:
    """Check the accept operator is diagonal; returns the diagonal probabilities."""
    q = accept_operator(circuit)
    off = q.q_matrix - np.diag(np.diag(q.q_matrix))
    dev = max_abs(off)
    if dev > tol:
        raise ValueError(
            "expected a classical-witness circuit (diagonal accept operator); "
            f"max off-diagonal magnitude {dev:.3e}"
        )
    return np.real(np.diag(q.q_matrix)).copy()


def flag_qubit_transform(
    circuit: VerifierCircuit, params: PromiseParams, poly_factor: int
) -> VerifierCircuit:
    """Add a flag witness qubit that creates a spectral gap in the NO case.

    Flag 0 runs the original verifier; flag 1 accepts with probability
    s + (c-s)/poly_factor iff the remaining witness is all ones, else rejects.
    The new accept spectrum is the original spectrum, one eigenvalue at
    s + (c-s)/poly_factor, and 2^w - 1 zeros.
    """
    if poly_factor < 2:
        raise ValueError(f"poly_factor must be >= 2, got {poly_factor}")
    _require_classical(circuit)
    m, w = circuit.m, circuit.w
    p_star = params.s + (params.c - params.s) / poly_factor

    # new ancillas: flag copy, coin, AND-ladder slots, one scratch, new decision
    n_ladder = max(w - 1, 1)  # w == 0 stores the empty-AND constant
    extra = 2 + n_ladder + 2
    new_m = m + extra
    f_copy = m
    coin = m + 1
    ladder0 = m + 2
    t3 = m + 2 + n_ladder
    d_new = t3 + 1
    wit0 = new_m  # original witness block start
    flag = new_m + w  # flag is the last witness qubit

    def remap(q: int) -> int:
        return q if q < m else q + extra

    gates: list[GateOp] = [gate("CNOT", flag, f_copy)]

    # all-ones test on the pristine witness register, result in a_and
    if w == 0:
        a_and = ladder0
        gates.append(gate("X", a_and))
    elif w == 1:
        a_and = ladder0
        gates.append(gate("CNOT", wit0, a_and))
    else:
        gates.extend(toffoli(wit0, wit0 + 1, ladder0))
        for j in range(2, w):
            gates.extend(toffoli(ladder0 + j - 2, wit0 + j, ladder0 + j - 1))
        a_and = ladder0 + w - 2

    for g in circuit.gates:
        gates.append(GateOp(g.label, g.matrix, tuple(remap(t) for t in g.targets)))

    gates.append(rotation_gate(p_star, coin))

    o_orig = remap(circuit.decision_qubit)
    # d ^= (not flag) and original decision
    gates.append(gate("X", f_copy))
    gates.extend(toffoli(f_copy, o_orig, d_new))
    gates.append(gate("X", f_copy))
    # d ^= flag and all-ones and coin
    gates.extend(toffoli(f_copy, a_and, t3))
    gates.extend(toffoli(t3, coin, d_new))

    return VerifierCircuit(
        m=new_m,
        w=w + 1,
        gates=tuple(gates),
        decision_qubit=d_new,
        qubit_cap=max(circuit.qubit_cap, new_m + w + 1),
    )


def flag_transform_value(params: PromiseParams, poly_factor: int) -> float:
    """The single new accept-probability eigenvalue the flag branch introduces."""
    if poly_factor < 2:
        raise ValueError(f"poly_factor must be >= 2, got {poly_factor}")
    return params.s + (params.c - params.s) / poly_factor


def min_reject_exponent(circuit: VerifierCircuit, params: PromiseParams) -> int:
    gap = params.c - params.s
    return circuit.T + circuit.w + math.ceil(math.log2(1.0 / gap))


def distinct_prob_transform(
    circuit: VerifierCircuit, reject_exponent: int, params: PromiseParams
) -> VerifierCircuit:
    """Damp the accept probability of basis witness y by the factor
    (1 - y_b / 2^reject_exponent), where y_b is the witness read in binary.

    Realized exactly: one biased coin fires with probability 2^(w-R), w
    uniform coins form a w-bit string r, and a comparator computes r < y_b;
    the verifier rejects outright when both hold, so Pr(reject | y) =
    2^(w-R) * y_b/2^w = y_b/2^R.
    """
    required = min_reject_exponent(circuit, params)
    if reject_exponent < required:
        raise ValueError(
            f"reject_exponent {reject_exponent} below required minimum {required} "
            f"(= T + w + ceil(log2(1/(c-s))))"
        )
    _require_classical(circuit)
    m, w = circuit.m, circuit.w
    R = reject_exponent

    # ancilla layout after the original m:
    #   scale coin | r_1..r_w | eq_1..eq_w | prefix_2..prefix_{w-1} | scratch |
    #   less | g | new decision
    n_prefix = max(w - 2, 0)
    extra = 1 + w + w + n_prefix + 1 + 1 + 1 + 1
    new_m = m + extra
    scale = m
    r0 = m + 1
    eq0 = r0 + w
    pre0 = eq0 + w
    scratch = pre0 + n_prefix
    less = scratch + 1
    g_flag = less + 1
    d_new = g_flag + 1
    wit0 = new_m

    def remap(q: int) -> int:
        return q if q < m else q + extra

    gates: list[GateOp] = [rotation_gate(2.0 ** (w - R), scale, label="SCALE")]
    for k in range(w):
        gates.append(gate("H", r0 + k))

    # eq_k = not (y_k xor r_k), prefix_k = eq_1 and ... and eq_k
    for k in range(w):
        gates.append(gate("CNOT", wit0 + k, eq0 + k))
        gates.append(gate("CNOT", r0 + k, eq0 + k))
        gates.append(gate("X", eq0 + k))
    prefix_bits = [None, eq0] + [pre0 + j for j in range(n_prefix)]
    for k in range(2, w):
        gates.extend(toffoli(prefix_bits[k - 1], eq0 + k - 1, prefix_bits[k]))

    # less ^= T_k with T_k = prefix_{k-1} and y_k and not r_k (mutually exclusive)
    for k in range(w):
        if k == 0:
            gates.append(gate("X", r0))
            gates.extend(toffoli(wit0, r0, less))
            gates.append(gate("X", r0))
        else:
            e_reg = eq0 if k == 1 else prefix_bits[k]
            gates.extend(toffoli(e_reg, wit0 + k, scratch))
            gates.append(gate("X", r0 + k))
            gates.extend(toffoli(scratch, r0 + k, less))
            gates.append(gate("X", r0 + k))
            gates.extend(toffoli(e_reg, wit0 + k, scratch))

    for g in circuit.gates:
        gates.append(GateOp(g.label, g.matrix, tuple(remap(t) for t in g.targets)))

    gates.extend(toffoli(scale, less, g_flag))
    o_orig = remap(circuit.decision_qubit)
    gates.append(gate("X", g_flag))
    gates.extend(toffoli(g_flag, o_orig, d_new))
    gates.append(gate("X", g_flag))

    return VerifierCircuit(
        m=new_m,
        w=w,
        gates=tuple(gates),
        decision_qubit=d_new,
        qubit_cap=max(circuit.qubit_cap, new_m + w),
    )


def damped_accept_probabilities(
    circuit: VerifierCircuit, reject_exponent: int
) -> np.ndarray:
    """Predicted basis-witness accept probabilities p_y * (1 - y/2^R)."""
    diag = _require_classical(circuit)
    y = np.arange(diag.shape[0], dtype=float)
    return diag * (1.0 - y / 2.0**reject_exponent)


def uqcma_query_schedule(c: float, g1: float) -> list[tuple[float, float]]:
    """Completeness/soundness ladder (c_j, s_j) = (c + (j+1) g1/2, c + j g1/2).

    Returned for j = -1, 0, ..., floor(2/((1-c) g1)); the leading j = -1 pair
    (c, c - g1/2) covers top eigenvalues in [c, c + g1/2) that the j >= 0
    rungs miss.  For any lam1 >= c with lam2 <= lam1 - g1 some rung satisfies
    lam1 >= c_j and lam2 <= s_j.
    """
    if not 0.0 < c < 1.0:
        raise ValueError(f"completeness {c} outside (0, 1)")
    if not 0.0 < g1 <= 1.0:
        raise ValueError(
            f"g1={g1} outside (0, 1]; a zero gap makes the schedule unbounded"
        )
    j_max = math.floor(2.0 / ((1.0 - c) * g1))
    return [(c + (j + 1) * g1 / 2.0, c + j * g1 / 2.0) for j in range(-1, j_max + 1)]


def schedule_covers(
    schedule: list[tuple[float, float]], lam1: float, lam2: float
) -> bool:
    return any(lam1 >= cj and lam2 <= sj for cj, sj in schedule)


# --- circuit text format ---------------------------------------------------


def write_circuit(path, circuit: VerifierCircuit) -> None:
    with open(path, "w", encoding="ascii") as f:
        f.write(f"m={circuit.m} w={circuit.w} decision={circuit.decision_qubit}\n")
        for g in circuit.gates:
            targets = ",".join(str(t) for t in g.targets)
            builtin = BUILTIN_GATES.get(g.label)
            if builtin is not None and builtin.shape == g.matrix.shape and max_abs(
                builtin - g.matrix
            ) == 0.0:
                f.write(f"GATE {g.label} targets={targets}\n")
            else:
                flat = []
                for v in g.matrix.reshape(-1):
                    flat.append(repr(float(v.real)))
                    flat.append(repr(float(v.imag)))
                f.write(f"GATE {g.label} targets={targets} matrix={','.join(flat)}\n")


def read_circuit(path, qubit_cap: int = DEFAULT_QUBIT_CAP) -> VerifierCircuit:
    """Parse the line-oriented circuit format; malformed lines report numbers."""
    header: dict[str, int] = {}
    gates: list[GateOp] = []
    with open(path, "r", encoding="ascii") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("GATE "):
                gates.append(_parse_gate_line(line, lineno))
                continue
            for part in line.split():
                if "=" not in part:
                    raise ValueError(f"line {lineno}: expected key=value, got {part!r}")
                key, val = part.split("=", 1)
                if key not in ("m", "w", "decision"):
                    raise ValueError(f"line {lineno}: unknown header key {key!r}")
                try:
                    header[key] = int(val)
                except ValueError:
                    raise ValueError(f"line {lineno}: bad integer {val!r} for {key}")
    missing = {"m", "w", "decision"} - set(header)
    if missing:
        raise ValueError(f"missing header keys: {sorted(missing)}")
    return VerifierCircuit(
        m=header["m"],
        w=header["w"],
        gates=tuple(gates),
        decision_qubit=header["decision"],
        qubit_cap=qubit_cap,
    )


def _parse_gate_line(line: str, lineno: int) -> GateOp:
    parts = line.split()
    if len(parts) < 3:
        raise ValueError(f"line {lineno}: gate line needs label and targets")
    label = parts[1]
    targets: tuple[int, ...] | None = None
    matrix = None
    for part in parts[2:]:
        if "=" not in part:
            raise ValueError(f"line {lineno}: expected key=value, got {part!r}")
        key, val = part.split("=", 1)
        if key == "targets":
            try:
                targets = tuple(int(t) for t in val.split(","))
            except ValueError:
                raise ValueError(f"line {lineno}: bad targets {val!r}")
        elif key == "matrix":
            try:
                nums = [float(x) for x in val.split(",")]
            except ValueError:
                raise ValueError(f"line {lineno}: bad matrix numbers")
            if len(nums) % 2 != 0:
                raise ValueError(f"line {lineno}: matrix needs re,im pairs")
            vals = np.array(nums[0::2]) + 1j * np.array(nums[1::2])
            side = math.isqrt(vals.size)
            if side * side != vals.size:
                raise ValueError(f"line {lineno}: matrix is not square")
            matrix = vals.reshape(side, side)
        else:
            raise ValueError(f"line {lineno}: unknown gate key {key!r}")
    if targets is None:
        raise ValueError(f"line {lineno}: gate line missing targets")
    try:
        return gate(label, *targets, matrix=matrix)
    except ValueError as exc:
        raise ValueError(f"line {lineno}: {exc}")
