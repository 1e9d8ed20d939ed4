"""Two-time conditional probabilities and the sufficient conditions for the total law.

A two-time experiment measures ``{A_i}`` at ``t_a``, evolves with ``U`` and
measures ``{B_j}`` at ``t_b``. The quantity of interest is

    p(b_j at t2 | a_i at t1) = Tr(B_j U sqrt(A_i) rho0 sqrt(A_i) U^dagger) / Tr(rho0 A_i)

and the law of total probability compares ``Tr(B_j U rho0 U^dagger)`` with the
sum of the numerators over ``i``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from qtotal import linalg, randgen
from qtotal.errors import DimensionMismatchError, NotUnitaryError, OutcomeProbabilityZeroError
from qtotal.measurement import (
    P_MIN,
    DensityOperator,
    PovmElement,
    PovmSet,
    PureState,
    born_probability,
    branch_operator,
    trace_to_probability,
)

CONDITION_TOL = 1e-9
UNITARY_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class Evolution:
    """Unitary ``U`` acting between ``t_start`` and ``t_end``."""

    unitary: np.ndarray
    t_start: float = 0.0
    t_end: float = 1.0
    hamiltonian: np.ndarray | None = None

    def __post_init__(self):
        u = linalg.as_square(self.unitary, "unitary")
        res = linalg.unitarity_residual(u)
        if res > UNITARY_TOL:
            raise NotUnitaryError(res)
        if not self.t_end >= self.t_start:
            raise ValueError(f"evolution ends ({self.t_end}) before it starts ({self.t_start})")
        if self.hamiltonian is not None:
            h = linalg.as_square(self.hamiltonian, "hamiltonian")
            expected = linalg.unitary_from_hamiltonian(h, self.dt)
            gap = linalg.frobenius(expected - u)
            if gap > UNITARY_TOL:
                raise NotUnitaryError(gap, f"unitary differs from exp(-iH dt) by {gap:.3g}")
            h = h.copy()
            h.setflags(write=False)
            object.__setattr__(self, "hamiltonian", h)
        u = u.copy()
        u.setflags(write=False)
        object.__setattr__(self, "unitary", u)

    @classmethod
    def identity(cls, dim: int, t_start: float = 0.0, t_end: float = 1.0) -> "Evolution":
        return cls(np.eye(dim, dtype=np.complex128), t_start, t_end)

    @classmethod
    def from_hamiltonian(cls, h, dt: float, t_start: float = 0.0) -> "Evolution":
        u = linalg.unitary_from_hamiltonian(h, dt)
        return cls(u, t_start, t_start + dt, np.asarray(h, dtype=np.complex128))

    @classmethod
    def product(cls, *parts: "Evolution") -> "Evolution":
        """Independent evolution of each subsystem, ``U_1 (x) U_2 (x) ...``."""
        u = linalg.tensor(*(p.unitary for p in parts))
        return cls(u, parts[0].t_start, parts[0].t_end)

    @property
    def dim(self) -> int:
        return self.unitary.shape[0]

    @property
    def dt(self) -> float:
        return self.t_end - self.t_start

    def is_identity(self, tol: float = 1e-12) -> bool:
        return linalg.frobenius(self.unitary - np.eye(self.dim)) <= tol

    def apply(self, rho: np.ndarray) -> np.ndarray:
        u = self.unitary
        return u @ rho @ linalg.dagger(u)

    def heisenberg(self, op: np.ndarray) -> np.ndarray:
        """``U^dagger op U``."""
        u = self.unitary
        return linalg.dagger(u) @ op @ u


@dataclass(frozen=True, eq=False)
class TwoTimeExperiment:
    initial: DensityOperator
    first: PovmSet
    evolution: Evolution
    second: PovmSet
    t1: float | None = None
    t2: float | None = None

    def __post_init__(self):
        dims = {self.initial.dim, self.first.dim, self.evolution.dim, self.second.dim}
        if len(dims) != 1:
            raise DimensionMismatchError(f"experiment components have dims {sorted(dims)}")
        ev = self.evolution
        t1 = self.t1 if self.t1 is not None else 0.5 * (ev.t_start + ev.t_end)
        t2 = self.t2 if self.t2 is not None else ev.t_end + max(ev.dt, 1.0)
        object.__setattr__(self, "t1", t1)
        object.__setattr__(self, "t2", t2)
        # a zero-length evolution still needs t_a < t1 < t_b
        if ev.dt > 0 and not (ev.t_start < t1 < ev.t_end < t2):
            raise ValueError(f"need t_a < t1 < t_b < t2, got {ev.t_start}, {t1}, {ev.t_end}, {t2}")

    @property
    def dim(self) -> int:
        return self.initial.dim

    def with_evolution(self, evolution: Evolution) -> "TwoTimeExperiment":
        return TwoTimeExperiment(self.initial, self.first, evolution, self.second)


def two_time_weight(rho: DensityOperator, first: PovmElement, evolution: Evolution, then: PovmElement) -> float:
    """``Tr(B U sqrt(A) rho sqrt(A) U^dagger)``: conditional times marginal."""
    evolved = evolution.apply(branch_operator(rho, first))
    return trace_to_probability(np.trace(then.matrix @ evolved))


def element_conditional(
    rho: DensityOperator, first: PovmElement, evolution: Evolution, then: PovmElement, p_min: float = P_MIN
) -> float:
    p = born_probability(rho, first)
    if p < p_min:
        raise OutcomeProbabilityZeroError(f"outcome {first.name} has probability {p:.3g} < {p_min:g}")
    return min(two_time_weight(rho, first, evolution, then) / p, 1.0)


def two_time_conditional(exp: TwoTimeExperiment, i: int, j: int, p_min: float = P_MIN) -> float:
    """Probability of ``b_j`` at ``t2`` given ``a_i`` was completed at ``t1``."""
    return element_conditional(exp.initial, exp.first[i], exp.evolution, exp.second[j], p_min)


def transition_probability(phi: PureState, evolution: Evolution, psi: PureState) -> float:
    """``|<psi|U|phi>|^2``, evaluated through the two-time formula with rank-one projectors."""
    a = PovmElement(phi.projector())
    b = PovmElement(psi.projector())
    return element_conditional(phi.density(), a, evolution, b)


@dataclass(frozen=True)
class TotalLawResult:
    lhs: float
    rhs: float
    residual: float


def total_law_residual(exp: TwoTimeExperiment, j: int) -> TotalLawResult:
    """Compare ``p(b_j)`` with ``sum_i p(b_j|a_i) p(a_i)``.

    The sum is taken over the trace terms, so outcomes with zero probability
    enter without any division.
    """
    b = exp.second[j]
    lhs = trace_to_probability(np.trace(b.matrix @ exp.evolution.apply(exp.initial.matrix)))
    rhs = sum(two_time_weight(exp.initial, a, exp.evolution, b) for a in exp.first)
    return TotalLawResult(lhs, rhs, abs(lhs - rhs))


@dataclass(frozen=True)
class ConditionEntry:
    condition: str
    applicable: bool
    satisfied: bool
    residual: float
    witness: str | None = None
    terms: tuple[float, ...] = ()


@dataclass(frozen=True)
class ConditionReport:
    entries: dict[str, ConditionEntry]
    tol: float = CONDITION_TOL

    def __getitem__(self, key: str) -> ConditionEntry:
        return self.entries[key]

    def __iter__(self):
        return iter(self.entries.values())

    def satisfied(self) -> list[str]:
        return [k for k, e in self.entries.items() if e.satisfied]

    def any_satisfied(self) -> bool:
        return bool(self.satisfied())


def _entry(cid: str, applicable: bool, residual: float, tol: float, witness=None, terms=()) -> ConditionEntry:
    residual = float(residual)
    return ConditionEntry(cid, applicable, applicable and residual <= tol, residual, witness, tuple(terms))


def _commutation(first: PovmSet, target: np.ndarray) -> tuple[float, str | None]:
    norms = [linalg.frobenius(linalg.commutator(a.matrix, target)) for a in first]
    k = int(np.argmax(norms))
    return norms[k], f"[A_{first[k].name}, B] has norm {norms[k]:.3g}"


def _rank_one_projective(povm: PovmSet, tol: float) -> bool:
    return all(e.is_projector(tol) and abs(np.trace(e.matrix).real - 1.0) <= tol for e in povm)


def _diagonality(rho: DensityOperator, first: PovmSet) -> float:
    dephased = sum(a.matrix @ rho.matrix @ a.matrix for a in first)
    return linalg.frobenius(rho.matrix - dephased)


def _pure_projective_terms(rho: DensityOperator, first: PovmSet, target: np.ndarray) -> list[float]:
    # <Psi|X|Psi> = Tr(rho X) for a pure rho
    return [
        abs(complex(np.trace(rho.matrix @ linalg.commutator(a.matrix, target) @ a.matrix)))
        for a in first
    ]


def stationarity_residual(rho: DensityOperator, first: PovmSet, evolution: Evolution) -> float:
    """Largest change ``||U rho_i U^dagger - rho_i||_F`` over realisable post-measurement states."""
    worst = 0.0
    for a in first:
        num = branch_operator(rho, a)
        p = np.trace(num).real
        if p < P_MIN:
            continue
        post = num / p
        worst = max(worst, linalg.frobenius(evolution.apply(post) - post))
    return worst


def check_theorem1(exp: TwoTimeExperiment, j: int, tol: float = CONDITION_TOL) -> ConditionReport:
    """Evaluate conditions C1-C3 and their stationary variants for outcome ``j``.

    Residuals are always computed; ``applicable`` records whether the
    structural premises (projective elements, purity, stationarity) hold.
    """
    rho, first = exp.initial, exp.first
    b = exp.second[j].matrix
    heis = exp.evolution.heisenberg(b)
    projective = first.is_projective(tol)
    rank_one = _rank_one_projective(first, tol)
    pure = rho.is_pure(tol)
    stationary = stationarity_residual(rho, first, exp.evolution) <= tol
    diag = _diagonality(rho, first)

    entries = {}
    for suffix, target, premise in (("", heis, True), ("'", b, stationary)):
        c1, wit = _commutation(first, target)
        entries["C1" + suffix] = _entry("C1" + suffix, premise, c1, tol, wit if c1 > tol else None)
        entries["C2" + suffix] = _entry(
            "C2" + suffix, premise and rank_one, diag, tol,
            None if rank_one else "first set is not rank-one projective",
        )
        terms = _pure_projective_terms(rho, first, target)
        missing = [] if pure else ["state is mixed"]
        if not projective:
            missing.append("first set is not projective")
        entries["C3" + suffix] = _entry(
            "C3" + suffix, premise and pure and projective, sum(terms), tol,
            "; ".join(missing) or None, terms,
        )
    return ConditionReport(entries, tol)


@dataclass
class ImplicationBatch:
    condition: str
    residuals: list[float] = field(default_factory=list)
    flagged: list[bool] = field(default_factory=list)
    rejected: int = 0

    @property
    def max_residual(self) -> float:
        return max(self.residuals, default=0.0)


@dataclass
class ImplicationReport:
    batches: dict[str, ImplicationBatch]
    unconditioned: list[float]
    tol: float

    def passed(self, condition: str) -> bool:
        b = self.batches[condition]
        return bool(b.residuals) and all(b.flagged) and b.max_residual <= self.tol

    @property
    def all_passed(self) -> bool:
        return all(self.passed(c) for c in self.batches)

    @property
    def max_unconditioned(self) -> float:
        return max(self.unconditioned, default=0.0)


def _c1_case(dim, rng):
    basis = randgen.random_unitary(dim, rng)
    first = randgen.random_diagonal_povm(basis, int(rng.integers(2, 4)), rng)
    u = randgen.random_unitary(dim, rng)
    # B = U W U^dagger with W in the commutant of the first set
    inner = randgen.random_diagonal_povm(basis, int(rng.integers(2, 4)), rng)
    second = inner.map(lambda w: u @ w @ linalg.dagger(u))
    rho = randgen.random_density(dim, rng)
    return TwoTimeExperiment(rho, first, Evolution(u), second)


def _c2_case(dim, rng):
    basis = randgen.random_unitary(dim, rng)
    lam = rng.dirichlet(np.ones(dim))
    rho = DensityOperator((basis * lam) @ linalg.dagger(basis))
    first = randgen.random_projective(dim, rng, basis)
    second = randgen.random_povm(dim, int(rng.integers(2, 4)), rng)
    return TwoTimeExperiment(rho, first, Evolution(randgen.random_unitary(dim, rng)), second)


def _c3_case(dim, rng):
    basis = randgen.random_unitary(dim, rng)
    psi = randgen.random_pure(dim, rng)
    u = randgen.random_unitary(dim, rng)
    w = randgen.conditioned_effect(basis, psi.vector, rng)
    b = u @ w @ linalg.dagger(u)
    first = randgen.random_projective(dim, rng, basis)
    return TwoTimeExperiment(psi.density(), first, Evolution(u), randgen.binary_set(b))


def _unconditioned_case(dim, rng):
    return TwoTimeExperiment(
        randgen.random_density(dim, rng),
        randgen.random_povm(dim, int(rng.integers(2, 4)), rng),
        Evolution(randgen.random_unitary(dim, rng)),
        randgen.random_povm(dim, int(rng.integers(2, 4)), rng),
    )


_BUILDERS = {"C1": _c1_case, "C2": _c2_case, "C3": _c3_case}
_MIN_DIM = {"C1": 2, "C2": 2, "C3": 3}


def verify_theorem1_implication(
    sample_count: int = 50, dims=(2, 3, 4), seed=0, tol: float = CONDITION_TOL, filter_tol: float = 1e-10
) -> ImplicationReport:
    """Randomised check that each sufficient condition forces the total law.

    For every condition, ``sample_count`` experiments satisfying it by
    construction are generated and the total-law residual of every second
    outcome is recorded. C3 cases are additionally filtered: a case is kept
    only when its C3 residual is at most ``filter_tol``. Unconditioned random
    experiments are recorded alongside for contrast.
    """
    rng = randgen.rng_from(seed)
    dims = [dims] if isinstance(dims, int) else list(dims)
    batches = {}
    for cid, build in _BUILDERS.items():
        batch = ImplicationBatch(cid)
        usable = [d for d in dims if d >= _MIN_DIM[cid]] or [max(_MIN_DIM[cid], max(dims))]
        attempts = 0
        while len(batch.residuals) < sample_count:
            attempts += 1
            if attempts > 20 * sample_count:
                break
            dim = usable[len(batch.residuals) % len(usable)]
            exp = build(dim, rng)
            reports = [check_theorem1(exp, j, tol) for j in range(len(exp.second))]
            if cid == "C3" and max(r["C3"].residual for r in reports) > filter_tol:
                batch.rejected += 1
                continue
            batch.flagged.append(all(r[cid].satisfied for r in reports))
            batch.residuals.append(max(total_law_residual(exp, j).residual for j in range(len(exp.second))))
        batches[cid] = batch
    uncond = []
    for k in range(sample_count):
        exp = _unconditioned_case(dims[k % len(dims)], rng)
        uncond.append(max(total_law_residual(exp, j).residual for j in range(len(exp.second))))
    return ImplicationReport(batches, uncond, tol)
