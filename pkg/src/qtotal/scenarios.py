"""Named scenarios from the extended Wigner's friend literature.

Brukner
    Each lab is spin (x) pointer, a 4-dim factor with basis index
    ``2*spin + pointer``. The state only populates the correlated vectors
    ``|00>`` and ``|11>``; every lab measurement gets an extra ``discard``
    projector onto ``span{|01>, |10>}`` so that the sets are complete.
Bong
    Each lab is friend (x) spin (``F`` first). The friend starts in a ready
    state and an entangler copies the spin value into the friend.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from qtotal import linalg, randgen
from qtotal.composite import (
    CompositeSpace,
    EwfExperiment,
    check_corollary2,
    ewf_total_law_residual,
    lift_set,
)
from qtotal.errors import InvalidEntanglerError
from qtotal.measurement import DensityOperator, OutcomeLabel, PovmElement, PovmSet, PureState
from qtotal.twotime import (
    Evolution,
    TwoTimeExperiment,
    check_theorem1,
    total_law_residual,
    two_time_weight,
)

SQRT2 = np.sqrt(2.0)
KET0 = np.array([1, 0], dtype=np.complex128)
KET1 = np.array([0, 1], dtype=np.complex128)
KET_PLUS = (KET0 + KET1) / SQRT2
KET_MINUS = (KET0 - KET1) / SQRT2


def _lab_ket(spin: int, pointer: int) -> np.ndarray:
    return linalg.basis_vector(2 * spin + pointer, 4)


LAB_00 = _lab_ket(0, 0)
LAB_11 = _lab_ket(1, 1)
LAB_DISCARD = np.diag([0, 1, 1, 0]).astype(np.complex128)


def chi(i: int) -> np.ndarray:
    """``((-1)^i |00> + |11>) / sqrt(2)``."""
    return ((-1) ** i * LAB_00 + LAB_11) / SQRT2


def _guarded_set(vectors, setting_label: str) -> PovmSet:
    mats = [linalg.projector(v) for v in vectors] + [LAB_DISCARD]
    names = [str(i) for i in range(len(vectors))] + ["discard"]
    return PovmSet.from_matrices(mats, names, setting_label)


def brukner_state(theta: float) -> PureState:
    s = np.sin(theta / 2) / SQRT2
    c = np.cos(theta / 2) / SQRT2
    v = (
        -s * (np.kron(LAB_00, LAB_00) + np.kron(LAB_11, LAB_11))
        + c * (np.kron(LAB_00, LAB_11) - np.kron(LAB_11, LAB_00))
    )
    return PureState(v, (4, 4))


@dataclass(frozen=True, eq=False)
class BruknerScenario:
    theta: float
    state: PureState
    a1: PovmSet
    a2: PovmSet
    b1: PovmSet
    b2: PovmSet
    space: CompositeSpace = field(default_factory=lambda: CompositeSpace((("L1", 4), ("L2", 4))))

    @property
    def density(self) -> DensityOperator:
        return self.state.density()

    def to_ewf(self) -> EwfExperiment:
        """First measurements ``A1, B1``; later measurements ``A2, B2``; no evolution."""
        return EwfExperiment(
            self.density, self.space, (self.a1, self.b1), (self.a2, self.b2), Evolution.identity(16), ("A", "B")
        )

    def single_observer(self, lab: int = 0) -> TwoTimeExperiment:
        """Only one super-observer measures, first setting 1 then setting 2."""
        first, second = (self.a1, self.a2) if lab == 0 else (self.b1, self.b2)
        return TwoTimeExperiment(
            self.density, lift_set(first, lab, self.space), Evolution.identity(16), lift_set(second, lab, self.space)
        )


def build_brukner(theta: float = np.pi / 2) -> BruknerScenario:
    a1 = _guarded_set([LAB_00, LAB_11], "A1")
    a2 = _guarded_set([chi(0), chi(1)], "A2")
    b1 = _guarded_set([LAB_00, LAB_11], "B1")
    b2 = _guarded_set([chi(0), chi(1)], "B2")
    return BruknerScenario(float(theta), brukner_state(theta), a1, a2, b1, b2)


def brukner_commutator(scenario: BruknerScenario, a1: int, a2: int) -> np.ndarray:
    """``[A1_{a1}, A2_{a2}]`` on lab L1."""
    return linalg.commutator(scenario.a1[a1].matrix, scenario.a2[a2].matrix)


@dataclass(frozen=True)
class AppendixDResult:
    rhs_sum: float
    lhs: float
    residual: float
    c3prime_single_observer: tuple[float, float]
    single_observer_residuals: tuple[float, float]
    c5_residual: float


def appendix_d_report(exp: EwfExperiment, a: int = 0, b: int = 0) -> AppendixDResult:
    """Composite total law versus the one-sided laws for an EWF experiment.

    The single-observer experiments measure the friend set and then the
    super set on one lab only, with no evolution.
    """
    law = ewf_total_law_residual(exp, a, b)
    c3, single = [], []
    for lab, idx in ((0, a), (1, b)):
        one = TwoTimeExperiment(
            exp.initial,
            lift_set(exp.friend_sets[lab], lab, exp.space),
            Evolution.identity(exp.space.total_dim),
            lift_set(exp.super_sets[lab], lab, exp.space),
        )
        c3.append(check_theorem1(one, idx)["C3'"].residual)
        single.append(total_law_residual(one, idx).residual)
    c5 = check_corollary2(exp, a, b)["C5"].residual
    return AppendixDResult(law.rhs, law.lhs, law.residual, tuple(c3), tuple(single), c5)


def brukner_appendix_d(theta: float, a2: int = 0, b2: int = 0) -> AppendixDResult:
    return appendix_d_report(build_brukner(theta).to_ewf(), a2, b2)


def single_side_c3prime(state: np.ndarray, first: PovmSet, second: PovmElement) -> float:
    """``sum_i |<xi|[P_i, E] P_i|xi>|`` for a local pure state."""
    total = 0.0
    for p in first:
        total += abs(np.vdot(state, linalg.commutator(p.matrix, second.matrix) @ p.matrix @ state))
    return float(total)


def c3prime_lab_states(scenario: BruknerScenario, count: int, seed=0, tol: float = 1e-10) -> list[np.ndarray]:
    """Random lab-L1 states that satisfy the one-sided C3' identity for every ``A2`` element.

    Candidates are random superpositions over random subsets of the lab
    basis; those failing the identity are discarded.
    """
    rng = randgen.rng_from(seed)
    kept = []
    while len(kept) < count:
        support = rng.choice(4, size=int(rng.integers(1, 3)), replace=False)
        v = np.zeros(4, dtype=np.complex128)
        v[support] = randgen.ginibre(len(support), rng, 1).ravel()
        v /= np.linalg.norm(v)
        if all(single_side_c3prime(v, scenario.a1, e) <= tol for e in scenario.a2):
            kept.append(v)
    return kept


def brukner_product_state(scenario: BruknerScenario, xi: np.ndarray, zeta: np.ndarray) -> EwfExperiment:
    """The Brukner operators applied to the product state ``xi (x) zeta``."""
    rho = DensityOperator.from_vector(np.kron(xi, zeta), dims=(4, 4))
    exp = scenario.to_ewf()
    return EwfExperiment(rho, exp.space, exp.friend_sets, exp.super_sets, exp.evolution, exp.settings)


# --- Bong et al. operator algebra -------------------------------------------

def _cnot(control: int, target: int) -> np.ndarray:
    """CNOT on two qubits in ``F (x) s`` order (slot 0 is F)."""
    u = np.zeros((4, 4), dtype=np.complex128)
    for f in range(2):
        for s in range(2):
            bits = [f, s]
            bits[target] ^= bits[control]
            u[2 * bits[0] + bits[1], 2 * f + s] = 1.0
    return u


HADAMARD = np.array([[1, 1], [1, -1]], dtype=np.complex128) / SQRT2

ENTANGLERS = {
    # ready |+>:  |+>|s> -> |s>|s>,  |->|s> -> |s>|1-s>
    "twisted-copy": (_cnot(1, 0) @ _cnot(0, 1) @ np.kron(HADAMARD, np.eye(2)), KET_PLUS),
    # ready |0>:  self-inverse |f>|s> -> |f xor s>|s>
    "cnot": (_cnot(1, 0), KET0),
}


def _eigenbasis_set(op: np.ndarray, label: str) -> PovmSet:
    eig = linalg.hermitian_eig(op)
    return PovmSet.from_basis(eig.eigenvectors, ["0", "1"], label)


E_CHOICES = {
    "z": lambda: _eigenbasis_set(linalg.PAULI_Z, "z"),
    "x": lambda: _eigenbasis_set(linalg.PAULI_X, "x"),
    "y": lambda: _eigenbasis_set(linalg.PAULI_Y, "y"),
    "xz": lambda: _eigenbasis_set((linalg.PAULI_X + linalg.PAULI_Z) / SQRT2, "xz"),
    "identity": lambda: PovmSet.from_matrices([np.eye(2), np.zeros((2, 2))], ["0", "1"], "identity"),
}
DEFAULT_E = {2: "x", 3: "xz"}


def spin_state(theta: float) -> np.ndarray:
    """Brukner's state restricted to the two spins, ``s1 (x) s2``."""
    s = np.sin(theta / 2) / SQRT2
    c = np.cos(theta / 2) / SQRT2
    return -s * (np.kron(KET0, KET0) + np.kron(KET1, KET1)) + c * (np.kron(KET0, KET1) - np.kron(KET1, KET0))


@dataclass(frozen=True, eq=False)
class BongScenario:
    entangler: np.ndarray
    ready: np.ndarray
    e_sets: dict[int, PovmSet]
    theta: float
    state: PureState
    alice: dict[int, PovmSet]
    bob: dict[int, PovmSet]
    c_refined: PovmSet
    d_refined: PovmSet
    space: CompositeSpace = field(default_factory=lambda: CompositeSpace((("L1", 4), ("L2", 4))))

    @property
    def c_unitary(self) -> np.ndarray:
        return self.entangler

    @property
    def d_unitary(self) -> np.ndarray:
        return self.entangler

    def to_ewf(self, x: int = 2, y: int = 2) -> EwfExperiment:
        """Friends measure the refined ``C``, ``D``; super-observers use settings ``x``, ``y``."""
        return EwfExperiment(
            self.state.density(), self.space, (self.c_refined, self.d_refined),
            (self.alice[x], self.bob[y]), Evolution.identity(16), (x, y),
        )


def _resolve_entangler(choice):
    if isinstance(choice, str):
        if choice not in ENTANGLERS:
            raise KeyError(f"unknown entangler {choice!r}; choose from {sorted(ENTANGLERS)}")
        return ENTANGLERS[choice]
    u, ready = choice
    return np.asarray(u, dtype=np.complex128), np.asarray(ready, dtype=np.complex128)


def _resolve_e(choice, x: int) -> PovmSet:
    if isinstance(choice, PovmSet):
        return choice
    if isinstance(choice, str):
        return E_CHOICES[choice]()
    return PovmSet.from_matrices(list(choice), setting_label=f"E{x}")


def build_bong(entangler="twisted-copy", e_choices=None, theta: float = np.pi / 2) -> BongScenario:
    """Operators ``A(x)``, ``C(x)`` of both labs.

    ``entangler`` is a name from :data:`ENTANGLERS` or a ``(unitary,
    ready_state)`` pair. ``e_choices`` maps settings 2 and 3 to a name from
    :data:`E_CHOICES`, a :class:`PovmSet` or a list of qubit effects.
    """
    u, ready = _resolve_entangler(entangler)
    u = linalg.as_square(u, "entangler")
    if u.shape != (4, 4):
        raise InvalidEntanglerError(float("inf"), "entangler must act on the 4-dim lab")
    res = linalg.unitarity_residual(u)
    if res > 1e-9:
        raise InvalidEntanglerError(res)
    ready = ready / np.linalg.norm(ready)
    choices = dict(DEFAULT_E)
    choices.update(e_choices or {})
    e_sets = {x: _resolve_e(choices[x], x) for x in (2, 3)}
    ud = linalg.dagger(u)
    i2 = np.eye(2)

    lab = {1: PovmSet.from_matrices([np.kron(linalg.projector(k), i2) for k in (KET0, KET1)], ["0", "1"], "1")}
    for x, es in e_sets.items():
        lab[x] = es.map(lambda e: u @ np.kron(i2, e) @ ud, setting_label=str(x))
    refined = PovmSet.from_matrices(
        [ud @ np.kron(i2, linalg.projector(k)) @ u for k in (KET0, KET1)], ["0", "1"], "refined"
    )
    spins = spin_state(theta).reshape(2, 2)
    psi = np.zeros((2, 2, 2, 2), dtype=np.complex128)
    for s1 in range(2):
        for s2 in range(2):
            psi += spins[s1, s2] * np.einsum("f,s,g,t->fsgt", ready, linalg.basis_vector(s1, 2), ready, linalg.basis_vector(s2, 2))
    state = PureState(psi.ravel(), (4, 4))
    return BongScenario(u, ready, e_sets, float(theta), state, lab, dict(lab), refined, refined)


@dataclass(frozen=True)
class CommutatorRow:
    lab: str
    setting: int
    variant: str
    a: int
    c: int | None
    norm: float


@dataclass(frozen=True)
class BongCommutatorReport:
    rows: tuple[CommutatorRow, ...]
    cross_lab: dict[str, float]
    tol: float

    def min_norm(self, lab: str, setting: int, variant: str) -> float:
        return min(r.norm for r in self.rows if (r.lab, r.setting, r.variant) == (lab, setting, variant))

    @property
    def degenerate(self) -> list[tuple[str, int, str]]:
        keys = sorted({(r.lab, r.setting, r.variant) for r in self.rows})
        return [k for k in keys if self.min_norm(*k) <= self.tol]


def bong_commutator_report(scenario: BongScenario, tol: float = 1e-9) -> BongCommutatorReport:
    """Within-lab ``||[A(x), C(x)]||_F`` for both ``C`` variants, plus cross-lab checks."""
    rows = []
    for lab, supers, refined, unitary in (
        ("L1", scenario.alice, scenario.c_refined, scenario.c_unitary),
        ("L2", scenario.bob, scenario.d_refined, scenario.d_unitary),
    ):
        for x in sorted(supers):
            for a_el in supers[x]:
                am = a_el.matrix
                rows.append(CommutatorRow(lab, x, "unitary", a_el.label.index, None,
                                          linalg.frobenius(linalg.commutator(am, unitary))))
                for c_el in refined:
                    rows.append(CommutatorRow(lab, x, "refined", a_el.label.index, c_el.label.index,
                                              linalg.frobenius(linalg.commutator(am, c_el.matrix))))
    eye = np.eye(4)
    cross = {
        "friends-refined": max(
            linalg.frobenius(linalg.commutator(np.kron(c.matrix, eye), np.kron(eye, d.matrix)))
            for c in scenario.c_refined for d in scenario.d_refined
        ),
        "friends-unitary": linalg.frobenius(
            linalg.commutator(np.kron(scenario.c_unitary, eye), np.kron(eye, scenario.d_unitary))
        ),
        "supers": max(
            linalg.frobenius(linalg.commutator(np.kron(a.matrix, eye), np.kron(eye, b.matrix)))
            for x in scenario.alice for y in scenario.bob
            for a in scenario.alice[x] for b in scenario.bob[y]
        ),
    }
    return BongCommutatorReport(tuple(rows), cross, tol)


# --- stable facts, Guerin, double slit ---------------------------------------

@dataclass(frozen=True, eq=False)
class StableFactsScenario:
    """Decohered friend: ``rho = sum_i lambda_i |Fa_i><Fa_i|`` probed by ``B``.

    ``state`` overrides the decohered mixture (used for the undecohered
    control); ``pointer_basis`` columns are the ``|Fa_i>``.
    """

    weights: tuple[float, ...]
    pointer_basis: np.ndarray | None = None
    probe: np.ndarray | None = None
    state: DensityOperator | None = None

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if np.any(w < -1e-12) or abs(w.sum() - 1.0) > 1e-9:
            raise ValueError(f"weights must be a probability vector, got {self.weights}")
        n = w.size
        basis = np.eye(n, dtype=np.complex128) if self.pointer_basis is None else np.asarray(self.pointer_basis, dtype=np.complex128)
        if basis.shape != (n, n) or linalg.unitarity_residual(basis) > 1e-9:
            raise ValueError("pointer basis must be an orthonormal basis matching the weights")
        probe = linalg.projector(np.ones(n)) if self.probe is None else np.asarray(self.probe, dtype=np.complex128)
        object.__setattr__(self, "weights", tuple(float(x) for x in np.clip(w, 0.0, None)))
        object.__setattr__(self, "pointer_basis", basis)
        object.__setattr__(self, "probe", probe)

    @property
    def dim(self) -> int:
        return len(self.weights)

    def density(self) -> DensityOperator:
        if self.state is not None:
            return self.state
        b = self.pointer_basis
        return DensityOperator((b * np.asarray(self.weights)) @ linalg.dagger(b))

    def to_experiment(self) -> TwoTimeExperiment:
        first = PovmSet.from_basis(self.pointer_basis, [f"Fa{i}" for i in range(self.dim)], "pointer")
        second = PovmSet.from_matrices([self.probe, np.eye(self.dim) - self.probe], ["b", "not-b"], "probe")
        return TwoTimeExperiment(self.density(), first, Evolution.identity(self.dim), second)


def stable_facts_residual(scenario: StableFactsScenario) -> float:
    return total_law_residual(scenario.to_experiment(), 0).residual


def undecohered_control() -> StableFactsScenario:
    """Pure ``|+><+|`` friend state: the fact is not stable."""
    return StableFactsScenario((0.5, 0.5), state=DensityOperator.from_vector(KET_PLUS))


@dataclass(frozen=True)
class GuerinResult:
    joint: np.ndarray
    first_marginals: np.ndarray
    second_marginals: np.ndarray
    first_residuals: np.ndarray
    second_residuals: np.ndarray


def guerin_marginal_check(
    rho: DensityOperator, first: PovmSet, second: PovmSet, evolution: Evolution | None = None
) -> GuerinResult:
    """Marginals of the joint ``q(f1, f2) = p(f2|f1) p(f1)`` against the one-time rule."""
    evolution = evolution or Evolution.identity(rho.dim)
    joint = np.array([[two_time_weight(rho, a, evolution, b) for b in second] for a in first])
    p1 = np.array([np.trace(rho.matrix @ a.matrix).real for a in first])
    evolved = evolution.apply(rho.matrix)
    p2 = np.array([np.trace(evolved @ b.matrix).real for b in second])
    return GuerinResult(joint, p1, p2, np.abs(joint.sum(axis=1) - p1), np.abs(joint.sum(axis=0) - p2))


def z_set() -> PovmSet:
    return PovmSet.projective([KET0, KET1], ["0", "1"], "Z")


def x_set() -> PovmSet:
    return PovmSet.projective([KET_PLUS, KET_MINUS], ["+", "-"], "X")


def double_slit() -> TwoTimeExperiment:
    """``|+>`` measured in Z, then in X, with no evolution."""
    return TwoTimeExperiment(DensityOperator.from_vector(KET_PLUS), z_set(), Evolution.identity(2), x_set())
