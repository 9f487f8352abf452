"""Shared dense/sparse linear-algebra helpers and the coordinate-list text format.

All heavy numerics at desk scale go through dense Hermitian eigensolvers;
matrices are small enough (dimension <= 2**14) that exact diagonalization is
the oracle of choice.
"""

from __future__ import annotations

import numpy as np

HERMITICITY_TOL = 1e-12
UNITARITY_TOL = 1e-12


def max_abs(a: np.ndarray) -> float:
    a = np.asarray(a)
    return float(np.max(np.abs(a))) if a.size else 0.0


def is_hermitian(a: np.ndarray, tol: float = HERMITICITY_TOL) -> bool:
    a = np.asarray(a)
    return a.ndim == 2 and a.shape[0] == a.shape[1] and max_abs(a - a.conj().T) <= tol


def is_unitary(a: np.ndarray, tol: float = UNITARITY_TOL) -> bool:
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        return False
    return max_abs(a.conj().T @ a - np.eye(a.shape[0])) <= tol


def hermitian_norm(a: np.ndarray) -> float:
    """Operator norm of a Hermitian matrix via its spectrum."""
    vals = np.linalg.eigvalsh(a)
    return float(np.max(np.abs(vals))) if vals.size else 0.0


def eigh_sorted(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues ascending plus matching orthonormal eigenvector columns."""
    vals, vecs = np.linalg.eigh(a)
    return vals, vecs


def check_state(state: np.ndarray, dim: int, tol: float = 1e-10) -> np.ndarray:
    state = np.asarray(state, dtype=complex).reshape(-1)
    if state.shape[0] != dim:
        raise ValueError(f"state has dimension {state.shape[0]}, expected {dim}")
    norm = np.linalg.norm(state)
    if abs(norm - 1.0) > tol:
        raise ValueError(f"state norm {norm!r} deviates from 1 by more than {tol}")
    return state


def write_coo(path, matrix: np.ndarray) -> None:
    """Write a matrix in the shared sparse text format.

    Header line ``dim=<int> fields=coo``, then one ``row col re im`` line per
    structurally nonzero entry in row-major order.
    """
    matrix = np.asarray(matrix, dtype=complex)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValueError("only square matrices are exported")
    dim = matrix.shape[0]
    with open(path, "w", encoding="ascii") as f:
        f.write(f"dim={dim} fields=coo\n")
        rows, cols = np.nonzero(matrix)
        for r, c in zip(rows.tolist(), cols.tolist()):
            v = matrix[r, c]
            f.write(f"{r} {c} {float(v.real)!r} {float(v.imag)!r}\n")


def read_coo(path) -> np.ndarray:
    with open(path, "r", encoding="ascii") as f:
        header = f.readline().strip()
        parts = dict(p.split("=", 1) for p in header.split())
        if parts.get("fields") != "coo" or "dim" not in parts:
            raise ValueError(f"bad sparse header: {header!r}")
        dim = int(parts["dim"])
        out = np.zeros((dim, dim), dtype=complex)
        for lineno, line in enumerate(f, start=2):
            line = line.strip()
            if not line:
                continue
            toks = line.split()
            if len(toks) != 4:
                raise ValueError(f"line {lineno}: expected 'row col re im', got {line!r}")
            r, c = int(toks[0]), int(toks[1])
            out[r, c] = complex(float(toks[2]), float(toks[3]))
    return out


class SparseHermitian:
    """Hermitian matrix with entry-oracle style metadata (row sparsity, max entry).

    Desk-scale: the matrix is held densely, but sparsity metadata mirrors the
    succinct-description accounting used for norm bounds.
    """

    def __init__(self, matrix: np.ndarray, tol: float = HERMITICITY_TOL):
        matrix = np.asarray(matrix, dtype=complex)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ValueError("SparseHermitian requires a square matrix")
        if matrix.shape[0] == 0:
            raise ValueError("SparseHermitian requires a nonempty matrix")
        if not is_hermitian(matrix, tol):
            raise ValueError("matrix is not Hermitian within tolerance")
        self.matrix = matrix
        self._eig: tuple[np.ndarray, np.ndarray] | None = None

    @classmethod
    def from_coo_file(cls, path) -> "SparseHermitian":
        return cls(read_coo(path))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def row_sparsity(self) -> int:
        """Maximum number of structurally nonzero entries in any row."""
        return int(np.max(np.count_nonzero(self.matrix, axis=1)))

    @property
    def max_entry(self) -> float:
        return max_abs(self.matrix)

    def gershgorin_bound(self) -> float:
        """Norm bound d*k from row sparsity d and max entry magnitude k."""
        return self.row_sparsity * self.max_entry

    def eigensystem(self) -> tuple[np.ndarray, np.ndarray]:
        if self._eig is None:
            self._eig = eigh_sorted(self.matrix)
        return self._eig

    def eigenvalues(self) -> np.ndarray:
        return self.eigensystem()[0]

    def norm(self) -> float:
        vals = self.eigenvalues()
        return float(max(abs(vals[0]), abs(vals[-1])))

    def spectral_gap(self) -> float:
        vals = self.eigenvalues()
        if len(vals) < 2:
            raise ValueError("spectral gap undefined for a 1x1 matrix")
        return float(vals[1] - vals[0])

    def write(self, path) -> None:
        write_coo(path, self.matrix)
