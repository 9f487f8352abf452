"""Direct-rotation perturbation theory: low-energy projectors, the rotation
unitary U = sqrt((2 P0 - 1)(2 P - 1)), and truncated effective Hamiltonians
with explicit error bounds."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import eigh_sorted, hermitian_norm, is_hermitian, max_abs

CONVERGENCE_FACTOR = 16  # series is trusted only for ||H1|| <= delta/16
DEFAULT_TRUNCATION_CONSTANT = 10.0  # calibrated prefactor for the eps^2/delta bound
EDGE_TOL = 1e-9


@dataclass(frozen=True)
class PerturbationSplit:
    """Unperturbed Hamiltonian h0 with ground energy lambda0, gap delta, and
    ground projector p0, plus a perturbation h1 with ||h1|| < delta/2."""

    h0: np.ndarray
    h1: np.ndarray
    lambda0: float
    delta: float
    p0: np.ndarray

    def __post_init__(self):
        for name, mat in (("h0", self.h0), ("h1", self.h1), ("p0", self.p0)):
            if not is_hermitian(mat, 1e-12):
                raise ValueError(f"{name} must be Hermitian within 1e-12")
        if max_abs(self.p0 @ self.p0 - self.p0) > 1e-12:
            raise ValueError("p0 is not idempotent within 1e-12")
        if max_abs(self.h0 @ self.p0 - self.lambda0 * self.p0) > 1e-10:
            raise ValueError("h0 p0 != lambda0 p0 within 1e-10")
        if self.delta <= 0:
            raise ValueError(f"gap delta must be positive, got {self.delta}")
        strength = hermitian_norm(self.h1)
        if strength >= self.delta / 2:
            raise ValueError(
                f"||h1|| = {strength!r} is not below delta/2 = {self.delta / 2!r}; "
                "the low-energy subspace is not well defined"
            )

    @property
    def dim(self) -> int:
        return self.h0.shape[0]

    @property
    def perturbation_norm(self) -> float:
        return hermitian_norm(self.h1)

    @property
    def rank(self) -> int:
        return int(round(np.real(np.trace(self.p0))))


def split_from_parts(
    h0: np.ndarray, h1: np.ndarray, degeneracy_tol: float = 1e-8
) -> PerturbationSplit:
    """Diagonalize h0 to extract lambda0, the gap, and the ground projector."""
    vals, vecs = eigh_sorted(np.asarray(h0, dtype=complex))
    lambda0 = float(vals[0])
    ground = vals <= lambda0 + degeneracy_tol
    k = int(np.sum(ground))
    if k == len(vals):
        raise ValueError("h0 has no spectral gap above its ground space")
    delta = float(vals[k] - lambda0)
    p0 = vecs[:, :k] @ vecs[:, :k].conj().T
    p0 = (p0 + p0.conj().T) / 2
    return PerturbationSplit(
        h0=np.asarray(h0, dtype=complex),
        h1=np.asarray(h1, dtype=complex),
        lambda0=lambda0,
        delta=delta,
        p0=p0,
    )


def low_energy_projector(split: PerturbationSplit) -> np.ndarray:
    """Spectral projector of h0 + h1 onto [lambda0 - delta/2, lambda0 + delta/2]."""
    vals, vecs = eigh_sorted(split.h0 + split.h1)
    lo = split.lambda0 - split.delta / 2
    hi = split.lambda0 + split.delta / 2
    for edge in (lo, hi):
        near = np.abs(vals - edge) < EDGE_TOL
        if np.any(near):
            raise ValueError(
                f"eigenvalue {vals[near][0]!r} within {EDGE_TOL} of the window edge "
                f"{edge!r}; the split is ill conditioned"
            )
    inside = (vals > lo) & (vals < hi)
    p = vecs[:, inside] @ vecs[:, inside].conj().T
    p = (p + p.conj().T) / 2
    rank = int(np.sum(inside))
    if rank != split.rank:
        raise ValueError(
            f"low-energy window holds {rank} states, expected rank(p0) = {split.rank}"
        )
    return p


def sw_unitary(p0: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Principal square root of (2 p0 - 1)(2 p - 1): the direct rotation
    taking range(p) onto range(p0).

    Computed from the Hermitian positive form: U = (p0 p + q0 q) D^{-1/2}
    with D = 1 - (p - p0)^2, which equals the principal root whenever
    ||p - p0|| < 1.
    """
    p0 = np.asarray(p0, dtype=complex)
    p = np.asarray(p, dtype=complex)
    eye = np.eye(p0.shape[0], dtype=complex)
    diff = p - p0
    d = eye - diff @ diff
    d = (d + d.conj().T) / 2
    vals, vecs = eigh_sorted(d)
    if vals[0] <= 1e-14:
        raise ValueError(
            f"||p - p0|| >= 1 (min eigenvalue of 1-(p-p0)^2 is {vals[0]!r}); "
            "the square-root branch is undefined"
        )
    d_inv_sqrt = vecs @ np.diag(1.0 / np.sqrt(vals)) @ vecs.conj().T
    u = (p0 @ p + (eye - p0) @ (eye - p)) @ d_inv_sqrt
    return u


def effective_hamiltonian(split: PerturbationSplit, order: int) -> np.ndarray:
    """Truncated effective Hamiltonian on range(p0), embedded in the full space.

    Order 0 gives h0 p0, order 1 adds p0 h1 p0, order 2 adds the explicit
    second-order double sum over ground and excited states of h0.
    """
    if order not in (0, 1, 2):
        raise ValueError(f"order must be 0, 1, or 2, got {order}")
    strength = split.perturbation_norm
    bound = split.delta / CONVERGENCE_FACTOR
    if strength > bound:
        raise ValueError(
            f"||h1||/delta = {strength / split.delta!r} exceeds "
            f"1/{CONVERGENCE_FACTOR}; series not trusted"
        )
    h_eff = split.h0 @ split.p0
    if order >= 1:
        h_eff = h_eff + split.p0 @ split.h1 @ split.p0
    if order == 2:
        vals, vecs = eigh_sorted(split.h0)
        ground = vals <= split.lambda0 + split.delta / 2
        w = vecs.conj().T @ split.h1 @ vecs
        gi = np.where(ground)[0]
        xi = np.where(~ground)[0]
        block = np.zeros((len(gi), len(gi)), dtype=complex)
        for a, i in enumerate(gi):
            for b, k in enumerate(gi):
                acc = 0.0 + 0.0j
                for j in xi:
                    acc += w[i, j] * w[j, k] / (vals[i] - vals[j])
                block[a, b] = acc
        block = (block + block.conj().T) / 2
        h_eff = h_eff + vecs[:, gi] @ block @ vecs[:, gi].conj().T
    return h_eff


def effective_spectrum(split: PerturbationSplit, order: int) -> np.ndarray:
    """Eigenvalues of the truncated effective Hamiltonian within range(p0)."""
    h_eff = effective_hamiltonian(split, order)
    vals, vecs = eigh_sorted(split.p0)
    basis = vecs[:, vals > 0.5]
    block = basis.conj().T @ h_eff @ basis
    block = (block + block.conj().T) / 2
    return np.linalg.eigvalsh(block)


def truncation_error_bound(
    epsilon: float, delta: float, constant: float = DEFAULT_TRUNCATION_CONSTANT
) -> float:
    """Calibrated bound constant * epsilon^2 / delta on the first-order error."""
    if delta <= 0:
        raise ValueError(f"delta must be positive, got {delta}")
    return constant * epsilon**2 / delta
