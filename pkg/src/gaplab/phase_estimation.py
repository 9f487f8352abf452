"""One-ancilla phase estimation: accept probabilities, gap bounds, and the
classical-witness ground-state-description verification protocol.

The accept branch is the ancilla |0> outcome, so an eigenstate with energy E
is accepted with probability (1 + cos(E t))/2; low energy means high accept
probability for E t in [0, pi/2].
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .circuits import VerifierCircuit, apply_circuit
from .estimators import DecisionOutcome, _decide
from .linalg import SparseHermitian, check_state


@dataclass(frozen=True)
class PhaseEstPlan:
    """Evolution time chosen against the sparsity norm bound d*k."""

    t: float
    norm_bound: float
    sim_error: float = 0.0

    def __post_init__(self):
        if self.sim_error < 0:
            raise ValueError("sim_error must be nonnegative")
        if self.norm_bound <= 0:
            raise ValueError("norm bound must be positive")
        if self.t > math.pi / (2.0 * self.norm_bound) + 1e-15:
            raise ValueError(
                f"t = {self.t!r} exceeds pi/(2 * norm bound) = "
                f"{math.pi / (2.0 * self.norm_bound)!r}"
            )


def choose_time(h: SparseHermitian) -> PhaseEstPlan:
    """t = pi/(2 d k) from row sparsity d and max entry k (a Gershgorin-style
    norm bound, so every eigenphase E t stays within (-pi/2, pi/2])."""
    bound = h.gershgorin_bound()
    if bound == 0.0:
        raise ValueError("zero matrix: the norm bound d*k vanishes, no usable time")
    return PhaseEstPlan(t=math.pi / (2.0 * bound), norm_bound=bound)


def evolution_unitary(h: SparseHermitian, t: float) -> np.ndarray:
    """exp(-i H t) by exact eigendecomposition."""
    vals, vecs = h.eigensystem()
    return (vecs * np.exp(-1j * vals * t)) @ vecs.conj().T


def one_bit_pe_accept(
    h: SparseHermitian,
    t: float,
    state: np.ndarray,
    mode: str = "closed-form",
    unitary: np.ndarray | None = None,
) -> float:
    """Accept probability of the one-ancilla circuit H . ctrl-exp(-iHt) . H.

    ``circuit`` mode simulates the interferometer explicitly (optionally with
    a caller-supplied controlled unitary standing in for an approximate
    evolution); ``closed-form`` evaluates sum_i |<E_i|state>|^2 (1+cos(E_i t))/2.
    """
    state = check_state(state, h.dim)
    if mode == "closed-form":
        vals, vecs = h.eigensystem()
        weights = np.abs(vecs.conj().T @ state) ** 2
        return float(np.sum(weights * (1.0 + np.cos(vals * t)) / 2.0))
    if mode != "circuit":
        raise ValueError(f"unknown phase-estimation mode {mode!r}")
    u = evolution_unitary(h, t) if unitary is None else np.asarray(unitary, dtype=complex)
    if u.shape != (h.dim, h.dim):
        raise ValueError(f"evolution unitary has shape {u.shape}, expected {(h.dim,) * 2}")
    # ancilla (x) system register; accept on the ancilla |0> outcome
    sq2 = math.sqrt(2.0)
    full = np.zeros(2 * h.dim, dtype=complex)
    full[: h.dim] = state
    top, bot = full[: h.dim].copy(), full[h.dim :].copy()
    full[: h.dim], full[h.dim :] = (top + bot) / sq2, (top - bot) / sq2
    full[h.dim :] = u @ full[h.dim :]
    top, bot = full[: h.dim].copy(), full[h.dim :].copy()
    full[: h.dim], full[h.dim :] = (top + bot) / sq2, (top - bot) / sq2
    return float(np.sum(np.abs(full[: h.dim]) ** 2))


def pe_gap_bound(e0: float, e1: float, t: float) -> float:
    """Quadratic lower bound t^2 (e1-e0)^2 / 2 - t^3 (e1-e0)^3 / 6 on the
    accept-probability difference cos(e0 t) - cos(e1 t)."""
    if not (0.0 <= e0 <= e1):
        raise ValueError(f"need 0 <= e0 <= e1, got e0={e0}, e1={e1}")
    if e1 * t >= math.pi / 2.0:
        raise ValueError(f"need e1 * t < pi/2, got {e1 * t!r}")
    d = e1 - e0
    return t**2 * d**2 / 2.0 - t**3 * d**3 / 6.0


def convex_energy_bound(
    probs: np.ndarray, energies: np.ndarray, mean_energy: float, t: float
) -> float:
    """Lower bound on sum_j p_j cos^2(E_j t / 2) from convexity: a two-point
    mixture at E_1 and E_max with mean pinned at mean_energy."""
    probs = np.asarray(probs, dtype=float)
    energies = np.asarray(energies, dtype=float)
    if probs.shape != energies.shape:
        raise ValueError("probs and energies must have matching shapes")
    if abs(float(np.sum(probs)) - 1.0) > 1e-12:
        raise ValueError("probabilities must sum to 1 within 1e-12")
    if np.any(np.diff(energies) < 0):
        raise ValueError("energies must be nondecreasing")
    if np.any(energies * t < -1e-15) or np.any(energies * t > math.pi / 2 + 1e-15):
        raise ValueError("need E_j t in [0, pi/2]")
    e_lo = float(energies[0])
    e_hi = float(energies[-1])
    if e_hi - e_lo <= 1e-15:
        return math.cos(e_lo * t / 2.0) ** 2
    x = (mean_energy - e_lo) / (e_hi - e_lo)
    return (
        math.cos(e_lo * t / 2.0) ** 2 * (1.0 - x)
        + math.cos(e_hi * t / 2.0) ** 2 * x
    )


def min_accept_gap(delta: float, f_n: float) -> float:
    """5 delta^2 / (36 f_n): the guaranteed accept-probability gap the
    verifier inherits from a Hamiltonian spectral gap delta."""
    if not 0.0 < delta <= f_n:
        raise ValueError(f"need 0 < delta <= f_n, got delta={delta}, f_n={f_n}")
    return 5.0 * delta**2 / (36.0 * f_n)


def yes_case_accept_floor(a_val: float, b_val: float, f_n: float, t: float) -> float:
    """cos^2(b t / 2) + 5 (b-a)^2 / (24 f_n^2): the promised YES-side accept
    probability for a witness within the energy slack of the ground state."""
    return math.cos(b_val * t / 2.0) ** 2 + 5.0 * (b_val - a_val) ** 2 / (
        24.0 * f_n**2
    )


def gs_energy_slack(a_val: float, b_val: float, f_n: float) -> float:
    """5 (b-a)^3 / (24 f_n^2): how far above the ground energy a described
    state may sit while still clearing the YES accept floor."""
    return 5.0 * (b_val - a_val) ** 3 / (24.0 * f_n**2)


def gs_description_verify(
    h: SparseHermitian,
    witness_circuit: VerifierCircuit | None,
    a_val: float,
    b_val: float,
    f_n: float,
    gapped: bool = False,
) -> DecisionOutcome:
    """Verify a claimed low-energy-state preparation circuit by one-bit phase
    estimation at time t = 1/f_n.

    Accepts outright when Tr(H)/2^n <= b or f_n <= b (in ``gapped`` mode only
    for the empty, all-zeros witness); otherwise prepares the described state
    and accepts iff its accept probability clears the midpoint between the
    NO-side ceiling cos^2(b t / 2) and the YES-side floor.
    """
    if b_val <= a_val:
        raise ValueError(f"need b > a, got a={a_val}, b={b_val}")
    norm = h.norm()
    if f_n < norm - 1e-9:
        raise ValueError(f"f_n = {f_n!r} below measured ||H|| = {norm!r}")
    trace_mean = float(np.real(np.trace(h.matrix))) / h.dim
    trivial = trace_mean <= b_val or f_n <= b_val
    if trivial and (not gapped or witness_circuit is None or witness_circuit.T == 0):
        return DecisionOutcome(
            verdict="YES", statistic=trace_mean, thresholds=(float(a_val), float(b_val))
        )
    if witness_circuit is None:
        raise ValueError("no preparation circuit supplied and no trivial accept")
    if witness_circuit.w != 0:
        raise ValueError("the preparation circuit must act on ancillas only (w = 0)")
    if witness_circuit.dim != h.dim:
        raise ValueError(
            f"preparation circuit dimension {witness_circuit.dim} does not match "
            f"Hamiltonian dimension {h.dim}"
        )
    t = 1.0 / f_n
    zeros = np.zeros(witness_circuit.dim, dtype=complex)
    zeros[0] = 1.0
    psi = apply_circuit(witness_circuit, zeros)
    prob = one_bit_pe_accept(h, t, psi, mode="closed-form")
    no_ceiling = math.cos(b_val * t / 2.0) ** 2
    yes_floor = yes_case_accept_floor(a_val, b_val, f_n, t)
    return _decide(prob, (no_ceiling, yes_floor), high_is_yes=True)


def write_accept_table(path, h: SparseHermitian, t: float, witnesses: int | None = None) -> None:
    """CSV table witness_index,accept_prob over computational-basis inputs."""
    count = h.dim if witnesses is None else witnesses
    with open(path, "w", newline="", encoding="ascii") as f:
        writer = csv.writer(f)
        writer.writerow(["witness_index", "accept_prob"])
        for j in range(count):
            state = np.zeros(h.dim, dtype=complex)
            state[j] = 1.0
            writer.writerow([j, repr(one_bit_pe_accept(h, t, state))])
