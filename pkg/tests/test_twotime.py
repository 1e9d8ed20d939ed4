import numpy as np
import pytest
from hypothesis import given

from qtotal import linalg, randgen
from qtotal.composite import lift_set
from qtotal.errors import NotUnitaryError, OutcomeProbabilityZeroError
from qtotal.linalg import PAULI_X, PAULI_Y
from qtotal.measurement import DensityOperator, PovmSet, PureState, conditional_probability, post_measurement_state, born_probability
from qtotal.scenarios import build_brukner, double_slit, x_set, z_set
from qtotal.twotime import (
    Evolution,
    TwoTimeExperiment,
    check_theorem1,
    total_law_residual,
    transition_probability,
    two_time_conditional,
    verify_theorem1_implication,
)

from conftest import KET0, KET1, PLUS, dims, seeds


def qubit(vec):
    return DensityOperator.from_vector(vec)


def test_evolution_validation():
    with pytest.raises(NotUnitaryError):
        Evolution(np.diag([1.0, 2.0]))
    with pytest.raises(NotUnitaryError):
        Evolution(np.eye(2), 0.0, 1.0, hamiltonian=PAULI_X)
    ev = Evolution.from_hamiltonian(PAULI_X, 0.3, t_start=1.0)
    assert ev.dt == pytest.approx(0.3) and ev.hamiltonian is not None


def test_experiment_time_ordering():
    ev = Evolution.identity(2, 0.0, 1.0)
    exp = TwoTimeExperiment(qubit(KET0), z_set(), ev, x_set())
    assert exp.t1 == 0.5 and exp.t2 == 2.0
    with pytest.raises(ValueError):
        TwoTimeExperiment(qubit(KET0), z_set(), ev, x_set(), t1=1.5, t2=2.0)


def test_repeatability():
    exp = TwoTimeExperiment(qubit(PLUS), z_set(), Evolution.identity(2), z_set())
    assert two_time_conditional(exp, 0, 0) == pytest.approx(1.0)


def test_rabi_rotation():
    u = Evolution.from_hamiltonian(PAULI_X, np.pi / 4)
    exp = TwoTimeExperiment(qubit(KET0), z_set(), u, z_set())
    assert two_time_conditional(exp, 0, 1) == pytest.approx(0.5, abs=1e-12)


def test_stationary_reduces_to_conditional():
    rng = np.random.default_rng(3)
    rho = randgen.random_density(3, rng)
    a, b = randgen.random_povm(3, 2, rng), randgen.random_povm(3, 2, rng)
    exp = TwoTimeExperiment(rho, a, Evolution.identity(3), b)
    assert abs(two_time_conditional(exp, 0, 1) - conditional_probability(rho, a[0], b[1])) <= 1e-14


def test_zero_probability_outcome():
    exp = TwoTimeExperiment(qubit(KET0), z_set(), Evolution.identity(2), x_set())
    with pytest.raises(OutcomeProbabilityZeroError):
        two_time_conditional(exp, 1, 0)
    # zero-probability branches still enter the trace sum
    assert total_law_residual(exp, 0).residual <= 1e-12


def test_transition_probability_examples():
    ident = Evolution.identity(2)
    assert transition_probability(PureState(KET0), ident, PureState(KET0)) == pytest.approx(1.0)
    assert transition_probability(PureState(KET0), ident, PureState(KET1)) == pytest.approx(0.0)
    rot = Evolution.from_hamiltonian(PAULI_Y, np.pi / 6)  # exp(-i Y theta/2) at theta = pi/3
    assert transition_probability(PureState(KET0), rot, PureState(KET1)) == pytest.approx(0.25, abs=1e-12)


@given(seeds, dims)
def test_transition_probability_matches_overlap(seed, n):
    rng = np.random.default_rng(seed)
    phi, psi = randgen.random_pure(n, rng), randgen.random_pure(n, rng)
    u = Evolution(randgen.random_unitary(n, rng))
    expected = abs(np.vdot(psi.vector, u.unitary @ phi.vector)) ** 2
    assert transition_probability(phi, u, psi) == pytest.approx(expected, abs=1e-12)


def test_total_law_examples():
    diag = PovmSet.from_matrices([np.diag([1, 0, 0]), np.diag([0, 1, 1])])
    rho = randgen.random_density(3, np.random.default_rng(0))
    exp = TwoTimeExperiment(rho, diag, Evolution.identity(3), PovmSet.from_matrices([np.diag([0.2, 0.5, 1]), np.diag([0.8, 0.5, 0])]))
    assert total_law_residual(exp, 0).residual <= 1e-12
    law = total_law_residual(double_slit(), 0)
    assert (law.lhs, law.rhs, law.residual) == pytest.approx((1.0, 0.5, 0.5), abs=1e-12)


def test_c2_example_total_law_holds():
    rng = np.random.default_rng(11)
    basis = randgen.random_unitary(3, rng)
    lam = np.array([0.5, 0.3, 0.2])
    rho = DensityOperator((basis * lam) @ basis.conj().T)
    exp = TwoTimeExperiment(rho, PovmSet.from_basis(basis), Evolution(randgen.random_unitary(3, rng)),
                            randgen.random_povm(3, 3, rng))
    assert check_theorem1(exp, 0)["C2"].satisfied
    assert all(total_law_residual(exp, j).residual <= 1e-9 for j in range(3))


def test_conditions_commuting_setup():
    first = PovmSet.from_matrices([np.diag([1, 0]), np.diag([0, 1])])
    exp = TwoTimeExperiment(qubit(PLUS), first, Evolution.identity(2), PovmSet.from_matrices([np.diag([0.3, 0.6]), np.diag([0.7, 0.4])]))
    rep = check_theorem1(exp, 0)
    assert rep["C1"].satisfied and rep["C1"].residual == 0.0


def test_conditions_brukner_single_observer():
    exp = build_brukner(np.pi / 3).single_observer(0)
    for j in range(2):
        rep = check_theorem1(exp, j)
        assert rep["C3'"].applicable and rep["C3'"].satisfied
        assert max(rep["C3'"].terms) <= 1e-12
        assert not rep["C1'"].satisfied


def test_conditions_double_slit_all_fail():
    rep = check_theorem1(double_slit(), 0)
    assert set(rep.entries) == {"C1", "C2", "C3", "C1'", "C2'", "C3'"}
    for e in rep:
        assert e.applicable and not e.satisfied and e.residual > 0
    assert rep["C1"].witness is not None
    assert rep["C1"].residual == pytest.approx(np.sqrt(0.5))
    assert rep["C3"].residual == pytest.approx(0.5)


def test_conditions_inapplicable_are_reported():
    rng = np.random.default_rng(5)
    exp = TwoTimeExperiment(randgen.random_density(3, rng), randgen.random_povm(3, 2, rng),
                            Evolution(randgen.random_unitary(3, rng)), randgen.random_povm(3, 2, rng))
    rep = check_theorem1(exp, 0)
    assert not rep["C2"].applicable and not rep["C2"].satisfied
    assert not rep["C3"].applicable
    assert not rep["C1'"].applicable  # evolution is not stationary


def test_implication_batches_per_spec_examples():
    c2 = verify_theorem1_implication(50, dims=3, seed=7)
    assert c2.passed("C2") and c2.batches["C2"].max_residual <= 1e-9
    c1 = verify_theorem1_implication(50, dims=4, seed=8)
    assert c1.passed("C1")


def test_implication_full_harness():
    rep = verify_theorem1_implication(50, seed=0)
    assert rep.all_passed
    assert all(len(b.residuals) == 50 for b in rep.batches.values())
    assert rep.max_unconditioned > 0.01


@given(seeds, dims)
def test_global_phase_invariance(seed, n):
    rng = np.random.default_rng(seed)
    rho = randgen.random_density(n, rng)
    a, b = randgen.random_povm(n, 2, rng), randgen.random_povm(n, 2, rng)
    u = randgen.random_unitary(n, rng)
    e1 = TwoTimeExperiment(rho, a, Evolution(u), b)
    e2 = TwoTimeExperiment(rho, a, Evolution(np.exp(1j * 0.7) * u), b)
    assert abs(two_time_conditional(e1, 0, 0) - two_time_conditional(e2, 0, 0)) <= 1e-10


@given(seeds, dims)
def test_basis_covariance(seed, n):
    rng = np.random.default_rng(seed)
    rho = randgen.random_density(n, rng)
    a, b = randgen.random_povm(n, 2, rng), randgen.random_povm(n, 2, rng)
    u, v = randgen.random_unitary(n, rng), randgen.random_unitary(n, rng)
    vd = v.conj().T
    e1 = TwoTimeExperiment(rho, a, Evolution(u), b)
    e2 = TwoTimeExperiment(DensityOperator(v @ rho.matrix @ vd), a.map(lambda m: v @ m @ vd), Evolution(u @ vd), b)
    for i in range(2):
        for j in range(2):
            assert abs(two_time_conditional(e1, i, j) - two_time_conditional(e2, i, j)) <= 1e-10


@given(seeds, dims)
def test_conditionals_normalised(seed, n):
    rng = np.random.default_rng(seed)
    exp = TwoTimeExperiment(randgen.random_density(n, rng), randgen.random_povm(n, 3, rng),
                            Evolution(randgen.random_unitary(n, rng)), randgen.random_povm(n, 3, rng))
    for i in range(3):
        assert abs(sum(two_time_conditional(exp, i, j) for j in range(3)) - 1) <= 1e-9


@given(seeds, dims)
def test_conditional_matches_evolved_collapse(seed, n):
    rng = np.random.default_rng(seed)
    rho = randgen.random_density(n, rng)
    a, b = randgen.random_povm(n, 2, rng), randgen.random_povm(n, 2, rng)
    u = Evolution(randgen.random_unitary(n, rng))
    exp = TwoTimeExperiment(rho, a, u, b)
    post = post_measurement_state(rho, a[0])
    evolved = DensityOperator(u.apply(post.matrix), tol=1e-9)
    assert abs(two_time_conditional(exp, 0, 1) - born_probability(evolved, b[1])) <= 1e-12


@given(seeds, dims)
def test_any_satisfied_condition_implies_law(seed, n):
    rng = np.random.default_rng(seed)
    basis = randgen.random_unitary(n, rng)
    lam = rng.dirichlet(np.ones(n))
    rho = DensityOperator((basis * lam) @ basis.conj().T)
    exp = TwoTimeExperiment(rho, PovmSet.from_basis(basis), Evolution(randgen.random_unitary(n, rng)),
                            randgen.random_povm(n, 2, rng))
    for j in range(2):
        if check_theorem1(exp, j).any_satisfied():
            assert total_law_residual(exp, j).residual <= 1e-9
