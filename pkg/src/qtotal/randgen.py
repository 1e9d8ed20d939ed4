"""Seeded random states, unitaries and POVMs for harnesses and tests."""

from __future__ import annotations

import numpy as np

from qtotal import linalg
from qtotal.measurement import DensityOperator, PovmSet, PureState


def rng_from(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def ginibre(dim: int, rng: np.random.Generator, cols: int | None = None) -> np.ndarray:
    cols = dim if cols is None else cols
    return (rng.standard_normal((dim, cols)) + 1j * rng.standard_normal((dim, cols))) / np.sqrt(2)


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary (QR with the phase correction)."""
    q, r = np.linalg.qr(ginibre(dim, rng))
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def random_hermitian(dim: int, rng: np.random.Generator) -> np.ndarray:
    g = ginibre(dim, rng)
    return 0.5 * (g + linalg.dagger(g))


def random_pure(dim: int, rng: np.random.Generator, dims=None) -> PureState:
    v = ginibre(dim, rng, 1).ravel()
    return PureState(v / np.linalg.norm(v), dims)


def random_density(dim: int, rng: np.random.Generator, rank: int | None = None, dims=None) -> DensityOperator:
    g = ginibre(dim, rng, rank or dim)
    m = g @ linalg.dagger(g)
    return DensityOperator(m / np.trace(m).real, dims=dims)


def random_povm(dim: int, outcomes: int, rng: np.random.Generator, setting_label=None) -> PovmSet:
    """Generic (non-projective) POVM: ``S^{-1/2} G_k S^{-1/2}`` with ``S = sum G_k``."""
    grams = []
    for _ in range(outcomes):
        g = ginibre(dim, rng)
        grams.append(g @ linalg.dagger(g))
    eig = linalg.hermitian_eig(sum(grams))
    inv_root = eig.reconstruct(1.0 / np.sqrt(eig.eigenvalues))
    return PovmSet.from_matrices([inv_root @ g @ inv_root for g in grams], setting_label=setting_label)


def random_projective(dim: int, rng: np.random.Generator, basis: np.ndarray | None = None) -> PovmSet:
    basis = random_unitary(dim, rng) if basis is None else basis
    return PovmSet.from_basis(basis)


def random_diagonal_povm(basis: np.ndarray, outcomes: int, rng: np.random.Generator) -> PovmSet:
    """Commuting POVM: every element is diagonal in ``basis``."""
    dim = basis.shape[0]
    weights = rng.dirichlet(np.ones(outcomes), size=dim)
    mats = [(basis * weights[:, k]) @ linalg.dagger(basis) for k in range(outcomes)]
    return PovmSet.from_matrices(mats)


def binary_set(element: np.ndarray) -> PovmSet:
    """``{E, I - E}``."""
    return PovmSet.from_matrices([element, np.eye(element.shape[0]) - element])


def offdiagonal_annihilator(x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Random Hermitian matrix with zero diagonal whose action kills ``x``.

    Solves the linear system ``O x = 0`` over zero-diagonal Hermitian ``O``
    and draws a random point of its null space. Returns the zero matrix
    when only the trivial solution exists (dimension 2).
    """
    n = x.size
    pairs = [(r, c) for r in range(n) for c in range(r + 1, n)]
    columns = []
    for r, c in pairs:
        for unit in (1.0, 1j):
            o = np.zeros((n, n), dtype=np.complex128)
            o[r, c] = unit
            o[c, r] = np.conj(unit)
            y = o @ x
            columns.append(np.concatenate([y.real, y.imag]))
    if not columns:
        return np.zeros((n, n), dtype=np.complex128)
    system = np.array(columns).T
    _, s, vh = np.linalg.svd(system)
    rank = int(np.sum(s > 1e-12 * max(1.0, s[0])))
    null = vh[rank:]
    if null.shape[0] == 0:
        return np.zeros((n, n), dtype=np.complex128)
    coeffs = rng.standard_normal(null.shape[0]) @ null
    o = np.zeros((n, n), dtype=np.complex128)
    for k, (r, c) in enumerate(pairs):
        val = coeffs[2 * k] + 1j * coeffs[2 * k + 1]
        o[r, c] = val
        o[c, r] = np.conj(val)
    return o


def conditioned_effect(basis: np.ndarray, state: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Effect ``0 <= W <= I`` with ``<psi|[P_k, W] P_k|psi> = 0`` for every basis projector.

    In the coordinates of ``basis`` the off-diagonal part of ``W`` annihilates
    the state, which makes every per-outcome term vanish while ``W`` still
    fails to commute with the projectors (for dimension >= 3).
    """
    x = linalg.dagger(basis) @ state
    off = offdiagonal_annihilator(x, rng)
    scale = np.linalg.norm(off)
    if scale > 0:
        off = off / scale
    m = np.diag(rng.uniform(0.0, 1.0, x.size)).astype(np.complex128) + off
    w = np.linalg.eigvalsh(m)
    span = w[-1] - w[0]
    m = (m - w[0] * np.eye(x.size)) / span if span > 1e-12 else np.eye(x.size) * 0.5
    return basis @ m @ linalg.dagger(basis)
