import numpy as np
import pytest
from hypothesis import given, strategies as st

from qtotal import linalg
from qtotal.errors import InvalidEntanglerError
from qtotal.measurement import DensityOperator, PovmSet
from qtotal.scenarios import (
    E_CHOICES,
    KET_MINUS,
    KET_PLUS,
    LAB_00,
    LAB_11,
    StableFactsScenario,
    appendix_d_report,
    bong_commutator_report,
    brukner_appendix_d,
    brukner_commutator,
    brukner_product_state,
    build_bong,
    build_brukner,
    c3prime_lab_states,
    double_slit,
    guerin_marginal_check,
    stable_facts_residual,
    undecohered_control,
    x_set,
    z_set,
)
from qtotal.composite import ewf_total_law_residual
from qtotal.twotime import Evolution, check_theorem1, total_law_residual

THETAS = [0.0, np.pi / 6, np.pi / 4, np.pi / 3, np.pi / 2, 2.0, np.pi]
ANTI = np.outer(LAB_00, LAB_11) - np.outer(LAB_11, LAB_00)


def test_brukner_state_amplitudes():
    psi0 = build_brukner(0.0).state.vector
    expected = (np.kron(LAB_00, LAB_11) - np.kron(LAB_11, LAB_00)) / np.sqrt(2)
    assert np.allclose(psi0, expected)
    psi_pi = build_brukner(np.pi).state.vector
    assert np.allclose(psi_pi, -(np.kron(LAB_00, LAB_00) + np.kron(LAB_11, LAB_11)) / np.sqrt(2))


@given(st.floats(-10, 10))
def test_brukner_state_norm(theta):
    assert abs(np.linalg.norm(build_brukner(theta).state.vector) - 1) <= 1e-12


def test_brukner_sets_complete_with_discard():
    b = build_brukner(1.0)
    for s in (b.a1, b.a2, b.b1, b.b2):
        assert s.names == ["0", "1", "discard"]
        assert s.is_projective()


def test_brukner_commutator_constant():
    b = build_brukner(1.0)
    for a1 in range(2):
        for a2 in range(2):
            expected = (-1) ** (a1 + a2) * 0.5 * ANTI
            assert np.allclose(brukner_commutator(b, a1, a2), expected, atol=1e-15)
    norms = {round(linalg.frobenius(brukner_commutator(b, i, j)), 14) for i in range(2) for j in range(2)}
    assert norms == {round(np.sqrt(0.5), 14)}


@pytest.mark.parametrize("theta", THETAS)
def test_appendix_d_rhs_is_quarter(theta):
    r = brukner_appendix_d(theta)
    assert abs(r.rhs_sum - 0.25) <= 1e-10
    assert r.lhs == pytest.approx(0.5 * np.sin(theta / 2) ** 2, abs=1e-12)
    assert r.c3prime_single_observer == (pytest.approx(0, abs=1e-12), pytest.approx(0, abs=1e-12))
    assert max(r.single_observer_residuals) <= 1e-9


def test_appendix_d_examples():
    assert brukner_appendix_d(0.0).lhs == pytest.approx(0.0, abs=1e-15)
    assert brukner_appendix_d(0.0).residual == pytest.approx(0.25, abs=1e-12)
    r = brukner_appendix_d(np.pi / 3)
    assert r.lhs == pytest.approx(0.125, abs=1e-12)
    assert r.residual > 0.01 and r.c5_residual > 0


def test_single_observer_law_all_outcomes():
    for theta in THETAS:
        for lab in (0, 1):
            exp = build_brukner(theta).single_observer(lab)
            for j in range(3):
                assert total_law_residual(exp, j).residual <= 1e-9
                assert check_theorem1(exp, j)["C3'"].residual <= 1e-10


def test_product_state_restoration_filtered():
    b = build_brukner(np.pi / 3)
    states = c3prime_lab_states(b, 6, seed=3)
    for xi in states:
        for zeta in states:
            exp = brukner_product_state(b, xi, zeta)
            assert all(ewf_total_law_residual(exp, a, bb).residual <= 1e-9 for a in range(3) for bb in range(3))
            assert appendix_d_report(exp).c3prime_single_observer[0] <= 1e-10


def test_bong_default_construction():
    s = build_bong()
    assert np.allclose(s.ready, KET_PLUS)
    assert linalg.unitarity_residual(s.entangler) < 1e-12
    # |r>|s> -> |s>|s>
    for spin in range(2):
        ks = np.eye(2)[spin]
        assert np.allclose(s.entangler @ np.kron(KET_PLUS, ks), np.kron(ks, ks))
    assert np.allclose(s.alice[1][0].matrix, np.diag([1, 1, 0, 0]))
    for c in s.c_refined:
        assert c.projector_residual() <= 1e-12
    assert abs(np.linalg.norm(s.state.vector) - 1) < 1e-12


def test_bong_spec_e_choice_is_valid():
    minus_plus = [linalg.projector(KET_PLUS), linalg.projector(KET_MINUS)]
    s = build_bong(e_choices={2: "x", 3: [minus_plus[1], minus_plus[0]]})
    assert np.allclose(s.e_sets[3][0].matrix, linalg.projector(KET_MINUS))


def test_bong_rejects_non_unitary():
    with pytest.raises(InvalidEntanglerError):
        build_bong((np.diag([1, 1, 1, 2]), KET_PLUS))
    with pytest.raises(KeyError):
        build_bong("swap")


def test_bong_report_default():
    rep = bong_commutator_report(build_bong())
    for lab in ("L1", "L2"):
        for x in (1, 2, 3):
            for variant in ("unitary", "refined"):
                assert rep.min_norm(lab, x, variant) > 0.1
    assert all(v == 0.0 for v in rep.cross_lab.values())
    assert rep.degenerate == []


def test_bong_report_flags_identity_setting():
    rep = bong_commutator_report(build_bong(e_choices={2: "identity"}))
    assert ("L1", 2, "refined") in rep.degenerate and ("L2", 2, "unitary") in rep.degenerate
    assert ("L1", 3, "refined") not in rep.degenerate


def test_bong_cnot_variant_is_degenerate_for_pointer_setting():
    rep = bong_commutator_report(build_bong("cnot"))
    assert rep.min_norm("L1", 1, "refined") == 0.0
    assert ("L1", 1, "refined") in rep.degenerate


def test_bong_to_ewf_roles():
    exp = build_bong().to_ewf(2, 3)
    assert exp.settings == (2, 3)
    assert exp.super_sets[1].setting_label == "3"


@pytest.mark.parametrize("lam", np.linspace(0, 1, 10))
def test_stable_facts_sweep(lam):
    assert stable_facts_residual(StableFactsScenario((lam, 1 - lam))) <= 1e-10


def test_stable_facts_examples():
    assert stable_facts_residual(StableFactsScenario((1.0, 0.0))) == 0.0
    assert stable_facts_residual(undecohered_control()) == pytest.approx(0.5, abs=1e-12)
    rng = np.random.default_rng(0)
    basis = np.linalg.qr(rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3)))[0]
    probe = linalg.projector(rng.standard_normal(3))
    assert stable_facts_residual(StableFactsScenario((0.2, 0.5, 0.3), basis, probe)) <= 1e-10
    with pytest.raises(ValueError):
        StableFactsScenario((0.5, 0.6))


def test_guerin_examples():
    ds = double_slit()
    g = guerin_marginal_check(ds.initial, ds.first, ds.second)
    assert g.first_residuals.max() <= 1e-9
    assert g.second_residuals[0] == pytest.approx(0.5, abs=1e-12)
    diag = PovmSet.from_matrices([np.diag([0.3, 0.8]), np.diag([0.7, 0.2])])
    g2 = guerin_marginal_check(ds.initial, z_set(), diag)
    assert g2.first_residuals.max() <= 1e-9 and g2.second_residuals.max() <= 1e-9


@given(st.integers(0, 10_000))
def test_guerin_first_family_always_consistent(seed):
    from qtotal import randgen

    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 5))
    g = guerin_marginal_check(randgen.random_density(n, rng), randgen.random_povm(n, 3, rng),
                              randgen.random_povm(n, 2, rng), Evolution(randgen.random_unitary(n, rng)))
    assert g.first_residuals.max() <= 1e-9
