"""Dense complex matrix kernel for small operators.

Everything here works on ``numpy.ndarray`` of dtype ``complex128``. The
Hermitian eigendecomposition is the single primitive behind both the
PSD square root and the Hamiltonian exponential.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from qtotal.errors import (
    DimensionMismatchError,
    DimensionOverflowError,
    NonFiniteError,
    NonHermitianError,
    NotPSDError,
)

HERMITIAN_TOL = 1e-10
CLAMP_TOL = 1e-10
# eigenvalues this small (relative to the spectral radius) are round-off
ROUNDOFF_FLOOR = 1e-13
MAX_DIM = 64


def as_matrix(m, name: str = "matrix") -> np.ndarray:
    """Return ``m`` as a finite 2-D complex array."""
    arr = np.asarray(m, dtype=np.complex128)
    if arr.ndim != 2:
        raise DimensionMismatchError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"{name} has non-finite entries")
    return arr


def as_square(m, name: str = "matrix") -> np.ndarray:
    arr = as_matrix(m, name)
    if arr.shape[0] != arr.shape[1]:
        raise DimensionMismatchError(f"{name} must be square, got shape {arr.shape}")
    return arr


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(m).T


def frobenius(m: np.ndarray) -> float:
    return float(np.linalg.norm(m))


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # plain einsum loops instead of BLAS: FMA in gemm rounds AB and BA
    # differently, so operators on disjoint factors would not commute exactly
    return np.einsum("ij,jk->ik", a, b, optimize=False) - np.einsum("ij,jk->ik", b, a, optimize=False)


def hermiticity_residual(m: np.ndarray) -> float:
    return frobenius(m - dagger(m))


def check_same_shape(*mats: np.ndarray) -> None:
    shapes = {m.shape for m in mats}
    if len(shapes) != 1:
        raise DimensionMismatchError(f"incompatible shapes {sorted(shapes)}")


class EigenDecomposition(NamedTuple):
    """Eigenvalues in descending order and the matching unitary of eigenvectors."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self, values: np.ndarray | None = None) -> np.ndarray:
        """Return ``V diag(values) V^dagger`` (default: the stored eigenvalues)."""
        w = self.eigenvalues if values is None else values
        v = self.eigenvectors
        return (v * w) @ dagger(v)


def hermitian_eig(m, tol: float = HERMITIAN_TOL) -> EigenDecomposition:
    """Diagonalise a Hermitian matrix.

    Raises
    ------
    NonHermitianError
        If ``||M - M^dagger||_F`` exceeds ``tol``.
    """
    arr = as_square(m)
    res = hermiticity_residual(arr)
    if res > tol:
        raise NonHermitianError(res)
    # eigh only reads one triangle; symmetrise so both halves count
    w, v = np.linalg.eigh(0.5 * (arr + dagger(arr)))
    order = np.argsort(w)[::-1]
    return EigenDecomposition(w[order], v[:, order])


def psd_sqrt(m, clamp_tol: float = CLAMP_TOL) -> np.ndarray:
    """Principal square root of a positive semidefinite matrix.

    Eigenvalues in ``[-clamp_tol, 0)`` are treated as zero; anything more
    negative raises :class:`NotPSDError`. Positive eigenvalues at round-off
    level are zeroed as well, otherwise the root of a projector picks up
    spurious ``sqrt(eps)`` components.
    """
    eig = hermitian_eig(m)
    w = eig.eigenvalues
    lowest = float(w[-1]) if w.size else 0.0
    if lowest < -clamp_tol:
        raise NotPSDError(-lowest, f"eigenvalue {lowest:.3g} below -{clamp_tol:g}")
    floor = ROUNDOFF_FLOOR * max(1.0, float(np.max(np.abs(w), initial=0.0)))
    root = eig.reconstruct(np.sqrt(np.where(w > floor, w, 0.0)))
    return 0.5 * (root + dagger(root))


def tensor(*ops, max_dim: int = MAX_DIM) -> np.ndarray:
    """Kronecker product; the first operand indexes the row blocks."""
    if not ops:
        raise ValueError("tensor needs at least one operand")
    mats = [as_matrix(op) for op in ops]
    rows = int(np.prod([m.shape[0] for m in mats]))
    cols = int(np.prod([m.shape[1] for m in mats]))
    if max(rows, cols) > max_dim:
        raise DimensionOverflowError(f"tensor dimension {max(rows, cols)} exceeds {max_dim}")
    out = mats[0]
    for m in mats[1:]:
        out = np.kron(out, m)
    return out


def unitary_from_hamiltonian(h, dt: float) -> np.ndarray:
    """``exp(-i H dt)`` with hbar = 1."""
    eig = hermitian_eig(h)
    return eig.reconstruct(np.exp(-1j * eig.eigenvalues * dt))


def unitarity_residual(u: np.ndarray) -> float:
    return frobenius(dagger(u) @ u - np.eye(u.shape[0]))


def is_unitary(u: np.ndarray, tol: float = 1e-9) -> bool:
    return u.shape[0] == u.shape[1] and unitarity_residual(u) <= tol


def projector(vec) -> np.ndarray:
    """Rank-one projector onto the normalised vector."""
    v = np.asarray(vec, dtype=np.complex128).ravel()
    n = np.linalg.norm(v)
    if n == 0:
        raise ValueError("cannot project onto the zero vector")
    v = v / n
    return np.outer(v, np.conj(v))


def basis_vector(index: int, dim: int) -> np.ndarray:
    v = np.zeros(dim, dtype=np.complex128)
    v[index] = 1.0
    return v


PAULI_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
