import numpy as np
import pytest
from hypothesis import given, strategies as st

from qtotal import linalg, randgen
from qtotal.errors import DimensionMismatchError, DimensionOverflowError, NonFiniteError, NonHermitianError, NotPSDError
from qtotal.linalg import PAULI_X, PAULI_Y, PAULI_Z

from conftest import seeds


def test_eig_identity():
    eig = linalg.hermitian_eig(np.eye(2))
    assert np.allclose(eig.eigenvalues, [1, 1])
    assert linalg.unitarity_residual(eig.eigenvectors) < 1e-12


def test_eig_pauli_z_sorted_descending():
    eig = linalg.hermitian_eig(PAULI_Z)
    assert np.allclose(eig.eigenvalues, [1, -1])
    assert np.allclose(np.abs(eig.eigenvectors), np.eye(2))


def test_eig_pauli_x_eigenvectors():
    eig = linalg.hermitian_eig(PAULI_X)
    assert np.allclose(eig.eigenvalues, [1, -1])
    plus, minus = eig.eigenvectors[:, 0], eig.eigenvectors[:, 1]
    assert abs(abs(np.vdot(plus, [1, 1])) / np.sqrt(2) - 1) < 1e-12
    assert abs(abs(np.vdot(minus, [1, -1])) / np.sqrt(2) - 1) < 1e-12


def test_eig_rejects_non_hermitian():
    with pytest.raises(NonHermitianError) as info:
        linalg.hermitian_eig(np.array([[0, 1], [0, 0]]))
    assert info.value.invariant == "hermitian"
    assert info.value.magnitude == pytest.approx(np.sqrt(2))


def test_rejects_non_finite():
    with pytest.raises(NonFiniteError):
        linalg.hermitian_eig(np.array([[np.nan, 0], [0, 1]]))


def test_rejects_non_square():
    with pytest.raises(DimensionMismatchError):
        linalg.as_square(np.ones((2, 3)))


def test_sqrt_of_projector_is_itself():
    p = linalg.projector([1, 1j, 0])
    assert np.allclose(linalg.psd_sqrt(p), p, atol=1e-14)


def test_sqrt_diagonal():
    assert np.allclose(linalg.psd_sqrt(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]))


def test_sqrt_weighted_pauli_x():
    m = 0.5 * (np.eye(2) + 0.6 * PAULI_X)
    r = linalg.psd_sqrt(m)
    assert np.allclose(np.sort(np.linalg.eigvalsh(r)), [np.sqrt(0.2), np.sqrt(0.8)])
    assert linalg.frobenius(r @ r - m) < 1e-12


def test_sqrt_clamps_small_negative():
    r = linalg.psd_sqrt(np.diag([1.0, -5e-11]))
    assert np.allclose(r, np.diag([1.0, 0.0]))


def test_sqrt_rejects_negative():
    with pytest.raises(NotPSDError):
        linalg.psd_sqrt(np.diag([1.5, -0.5]))


def test_tensor_examples():
    assert np.array_equal(linalg.tensor(np.eye(2), np.eye(2)), np.eye(4))
    assert np.array_equal(linalg.tensor(np.diag([1, 0]), np.diag([0, 1])), np.diag([0, 1, 0, 0]))
    zz = linalg.tensor(PAULI_Z, PAULI_Z)
    ket01 = linalg.basis_vector(1, 4)
    assert np.allclose(zz @ ket01, -ket01)


def test_tensor_overflow():
    with pytest.raises(DimensionOverflowError):
        linalg.tensor(np.eye(8), np.eye(9))
    assert linalg.tensor(np.eye(8), np.eye(8)).shape == (64, 64)


def test_unitary_examples():
    assert np.allclose(linalg.unitary_from_hamiltonian(np.zeros((3, 3)), 2.7), np.eye(3))
    assert np.allclose(linalg.unitary_from_hamiltonian(PAULI_Z, np.pi), -np.eye(2), atol=1e-12)
    assert np.allclose(linalg.unitary_from_hamiltonian(PAULI_X, np.pi / 2), -1j * PAULI_X, atol=1e-9)


@given(seeds, st.integers(2, 8))
def test_eig_reconstruction(seed, n):
    rng = np.random.default_rng(seed)
    m = randgen.random_hermitian(n, rng)
    eig = linalg.hermitian_eig(m)
    assert linalg.frobenius(eig.reconstruct() - m) <= 1e-10 * max(1, linalg.frobenius(m))
    assert linalg.unitarity_residual(eig.eigenvectors) <= 1e-10
    assert np.all(np.diff(eig.eigenvalues) <= 0)


@given(seeds, st.integers(2, 8))
def test_sqrt_squares_back(seed, n):
    rng = np.random.default_rng(seed)
    g = randgen.ginibre(n, rng)
    m = g @ linalg.dagger(g)
    r = linalg.psd_sqrt(m)
    assert linalg.frobenius(r @ r - m) <= 1e-9 * max(1, linalg.frobenius(m))
    assert linalg.hermiticity_residual(r) < 1e-12
    assert np.linalg.eigvalsh(r).min() > -1e-12


@given(seeds, st.integers(2, 8))
def test_sqrt_of_shifted_hermitian(seed, n):
    rng = np.random.default_rng(seed)
    h = randgen.random_hermitian(n, rng)
    m = h - np.linalg.eigvalsh(h).min() * np.eye(n)
    r = linalg.psd_sqrt(m)
    assert linalg.frobenius(r @ r - m) <= 1e-9 * max(1, linalg.frobenius(m))


@given(seeds)
def test_tensor_associative_on_integers(seed):
    rng = np.random.default_rng(seed)
    a, b, c = (rng.integers(-3, 4, (2, 2)) for _ in range(3))
    assert np.array_equal(linalg.tensor(linalg.tensor(a, b), c), linalg.tensor(a, linalg.tensor(b, c)))


@given(seeds, st.integers(2, 6), st.floats(-3, 3), st.floats(-3, 3))
def test_unitary_semigroup(seed, n, s, t):
    h = randgen.random_hermitian(n, np.random.default_rng(seed))
    u = linalg.unitary_from_hamiltonian
    assert linalg.frobenius(u(h, s + t) - u(h, s) @ u(h, t)) <= 1e-9
    assert linalg.unitarity_residual(u(h, s)) <= 1e-9


@given(seeds, st.integers(2, 6))
def test_trace_cyclic(seed, n):
    rng = np.random.default_rng(seed)
    a, b, c = (randgen.ginibre(n, rng) for _ in range(3))
    assert abs(np.trace(a @ b @ c) - np.trace(b @ c @ a)) <= 1e-10 * max(1.0, abs(np.trace(a @ b @ c)))
