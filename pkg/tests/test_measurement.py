import numpy as np
import pytest
from hypothesis import given

from qtotal import linalg, randgen
from qtotal.composite import CompositeSpace, lift
from qtotal.errors import (
    DimensionMismatchError,
    IncompletePovmError,
    InvalidPovmError,
    NonHermitianError,
    NonRealProbabilityError,
    NotPSDError,
    OutcomeProbabilityZeroError,
    TraceNotOneError,
)
from qtotal.measurement import (
    DensityOperator,
    PovmElement,
    PovmSet,
    PureState,
    bayes_gap,
    born_probability,
    conditional_probability,
    post_measurement_state,
    sequential_weight,
    trace_to_probability,
    validate_density,
)
from qtotal.scenarios import LAB_00, brukner_state

from conftest import KET0, KET1, MINUS, PLUS, dims, seeds

P0, P1, PP = (linalg.projector(v) for v in (KET0, KET1, PLUS))


def el(m):
    return PovmElement(m)


def test_validate_maximally_mixed():
    rho = validate_density(np.eye(2) / 2)
    assert rho.purity == pytest.approx(0.5)


def test_validate_rejects_negative():
    with pytest.raises(NotPSDError) as info:
        validate_density(np.diag([1.5, -0.5]))
    assert info.value.invariant == "psd"
    assert info.value.magnitude == pytest.approx(0.5)


def test_validate_rejects_trace_and_hermiticity():
    with pytest.raises(TraceNotOneError):
        validate_density(np.eye(2))
    with pytest.raises(NonHermitianError):
        validate_density(np.array([[0.5, 0.3], [0.0, 0.5]]))


def test_brukner_state_is_pure():
    rho = brukner_state(np.pi / 2).density()
    assert rho.purity == pytest.approx(1.0, abs=1e-12)
    assert rho.dims == (4, 4)


def test_pure_state_norm_checked():
    from qtotal.errors import InvariantViolation

    with pytest.raises(InvariantViolation):
        PureState([1.0, 1.0])


def test_dims_must_multiply():
    with pytest.raises(DimensionMismatchError):
        DensityOperator(np.eye(4) / 4, dims=(2, 3))


def test_born_identity_and_projector():
    rho = randgen.random_density(3, np.random.default_rng(0))
    assert born_probability(rho, el(np.eye(3))) == pytest.approx(1.0)
    assert born_probability(DensityOperator(P0), el(P0)) == 1.0


@pytest.mark.parametrize("theta", [0.0, 0.4, np.pi / 3, np.pi / 2, 2.0, np.pi])
def test_born_brukner_lab_projector(theta):
    rho = brukner_state(theta).density()
    space = CompositeSpace((("L1", 4), ("L2", 4)))
    a = el(lift(linalg.projector(LAB_00), 0, space))
    assert born_probability(rho, a) == pytest.approx(0.5, abs=1e-12)


def test_born_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        born_probability(DensityOperator(P0), el(np.eye(3)))


def test_trace_to_probability_rules():
    assert trace_to_probability(1 + 5e-11) == 1.0
    assert trace_to_probability(-5e-11) == 0.0
    with pytest.raises(NonRealProbabilityError):
        trace_to_probability(0.5 + 1e-6j)
    with pytest.raises(ValueError):
        trace_to_probability(1.1)


def test_post_measurement_examples():
    mixed = DensityOperator(np.eye(2) / 2)
    assert np.allclose(post_measurement_state(mixed, el(P0)).matrix, P0)
    assert np.allclose(post_measurement_state(DensityOperator(PP), el(P0)).matrix, P0)
    assert np.allclose(post_measurement_state(mixed, el(0.5 * P0)).matrix, P0)


def test_post_measurement_zero_probability():
    with pytest.raises(OutcomeProbabilityZeroError):
        post_measurement_state(DensityOperator(P0), el(P1))


def test_conditional_examples():
    rho0 = DensityOperator(P0)
    assert conditional_probability(rho0, el(P0), el(P0)) == pytest.approx(1.0)
    assert conditional_probability(rho0, el(P0), el(PP)) == pytest.approx(0.5)
    assert conditional_probability(rho0, el(PP), el(P0)) == pytest.approx(0.5)
    with pytest.raises(OutcomeProbabilityZeroError):
        conditional_probability(rho0, el(P1), el(P0))


def test_bayes_examples():
    assert bayes_gap(DensityOperator(P0), el(PP), el(P0)) == pytest.approx(0.25, abs=1e-12)
    assert bayes_gap(DensityOperator(PP), el(P0), el(np.diag([0.3, 0.9]))) <= 1e-12


def test_povm_set_validation():
    with pytest.raises(IncompletePovmError):
        PovmSet.from_matrices([P0, 0.5 * P1])
    with pytest.raises(InvalidPovmError):
        PovmElement(np.diag([1.2, 0.0]))
    with pytest.raises(ValueError):
        PovmSet.from_matrices([P0, P1], names=["a"])
    s = PovmSet.projective([PLUS, MINUS], ["+", "-"], "X")
    assert s.names == ["+", "-"] and s.is_projective() and s.setting_label == "X"
    assert [e.label.index for e in s] == [0, 1]


def test_povm_arrays_are_read_only():
    s = PovmSet.from_matrices([P0, P1])
    with pytest.raises(ValueError):
        s[0].matrix[0, 0] = 2


@given(seeds, dims)
def test_born_sums_to_one(seed, n):
    rng = np.random.default_rng(seed)
    rho = randgen.random_density(n, rng)
    povm = randgen.random_povm(n, int(rng.integers(2, 5)), rng)
    assert abs(sum(born_probability(rho, a) for a in povm) - 1) <= 1e-9


@given(seeds, dims)
def test_conditional_matches_composed_definition(seed, n):
    rng = np.random.default_rng(seed)
    rho = randgen.random_density(n, rng)
    a, b = randgen.random_povm(n, 2, rng)[0], randgen.random_povm(n, 2, rng)[0]
    composed = born_probability(post_measurement_state(rho, a), b)
    assert abs(conditional_probability(rho, a, b) - composed) <= 1e-12


@given(seeds, dims)
def test_footnote_identity(seed, n):
    rng = np.random.default_rng(seed)
    rho = randgen.random_density(n, rng)
    first, second = randgen.random_povm(n, 3, rng), randgen.random_povm(n, 2, rng)
    for a in first:
        pa = born_probability(rho, a)
        total = sum(sequential_weight(rho, a, b) for b in second)
        assert abs(total - pa) <= 1e-9


@given(seeds, dims)
def test_bayes_gap_vanishes_for_commuting(seed, n):
    rng = np.random.default_rng(seed)
    basis = randgen.random_unitary(n, rng)
    rho = randgen.random_density(n, rng)
    a, b = (randgen.random_diagonal_povm(basis, 2, rng)[0] for _ in range(2))
    assert linalg.frobenius(linalg.commutator(a.matrix, b.matrix)) <= 1e-12
    assert bayes_gap(rho, a, b) <= 1e-12


@given(seeds, dims)
def test_bayes_gap_vanishes_for_maximally_mixed(seed, n):
    rng = np.random.default_rng(seed)
    a, b = randgen.random_povm(n, 2, rng)[0], randgen.random_povm(n, 2, rng)[0]
    assert bayes_gap(DensityOperator.maximally_mixed(n), a, b) <= 1e-12
