"""Tensor-structured systems and the extended Wigner's friend calculus.

Slot 0 is the leftmost tensor factor. In an EWF experiment slot 0 is lab
``L1`` and slot 1 is lab ``L2``; the friends measure ``C`` (on L1) and ``D``
(on L2) jointly at ``t_a`` and the super-observers measure ``A`` and ``B``
jointly at ``t_b``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from qtotal import linalg, randgen
from qtotal.errors import BadSlotError, DimensionMismatchError, DimensionOverflowError, OutcomeProbabilityZeroError
from qtotal.measurement import (
    P_MIN,
    DensityOperator,
    OutcomeLabel,
    PovmElement,
    PovmSet,
    trace_to_probability,
)
from qtotal.twotime import (
    CONDITION_TOL,
    ConditionEntry,
    ConditionReport,
    Evolution,
    TotalLawResult,
    element_conditional,
)


@dataclass(frozen=True)
class CompositeSpace:
    factors: tuple[tuple[str, int], ...]
    max_dim: int = linalg.MAX_DIM

    def __post_init__(self):
        factors = tuple((str(label), int(dim)) for label, dim in self.factors)
        labels = [f[0] for f in factors]
        if len(set(labels)) != len(labels):
            raise ValueError(f"factor labels must be unique, got {labels}")
        if any(d < 1 for _, d in factors):
            raise ValueError("factor dimensions must be positive")
        if math.prod(d for _, d in factors) > self.max_dim:
            raise DimensionOverflowError(f"total dimension exceeds {self.max_dim}")
        object.__setattr__(self, "factors", factors)

    @classmethod
    def of(cls, **dims: int) -> "CompositeSpace":
        return cls(tuple(dims.items()))

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(d for _, d in self.factors)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(label for label, _ in self.factors)

    @property
    def total_dim(self) -> int:
        return math.prod(self.dims)

    def slot(self, key) -> int:
        """Resolve a slot index or factor label."""
        if isinstance(key, str) and not key.isdigit():
            try:
                return self.labels.index(key)
            except ValueError:
                raise BadSlotError(f"no factor labelled {key!r}") from None
        idx = int(key)
        if not 0 <= idx < len(self.factors):
            raise BadSlotError(f"slot {idx} out of range for {len(self.factors)} factors")
        return idx


def lift(op, slot, space: CompositeSpace) -> np.ndarray:
    """Embed a local operator as ``I (x) ... (x) op (x) ... (x) I``."""
    k = space.slot(slot)
    op = linalg.as_square(op, "local operator")
    if op.shape[0] != space.dims[k]:
        raise DimensionMismatchError(f"operator dim {op.shape[0]} != factor dim {space.dims[k]}")
    parts = [np.eye(d) for d in space.dims]
    parts[k] = op
    return linalg.tensor(*parts, max_dim=space.max_dim)


def lift_set(povm: PovmSet, slot, space: CompositeSpace) -> PovmSet:
    return povm.map(lambda m: lift(m, slot, space))


def joint_set(left: PovmSet, right: PovmSet) -> PovmSet:
    """Simultaneous measurement of two local sets on adjacent factors.

    Elements are ``L_l (x) R_r`` in row-major order of ``(l, r)`` with labels
    ``"l,r"``.
    """
    elems = []
    for lo in left:
        for ro in right:
            idx = lo.label.index * len(right) + ro.label.index
            elems.append(PovmElement(np.kron(lo.matrix, ro.matrix), OutcomeLabel(f"{lo.name},{ro.name}", idx)))
    return PovmSet(tuple(elems), None)


def composite_two_time_conditional(
    rho: DensityOperator,
    p: PovmElement,
    slot_p,
    evolution: Evolution,
    q: PovmElement,
    slot_q,
    space: CompositeSpace,
    p_min: float = P_MIN,
) -> float:
    """Two-time conditional for local elements ``P`` then ``Q`` lifted into ``space``."""
    lp = PovmElement(lift(p.matrix, slot_p, space), p.label)
    lq = PovmElement(lift(q.matrix, slot_q, space), q.label)
    return element_conditional(rho, lp, evolution, lq, p_min)


@dataclass(frozen=True, eq=False)
class EwfExperiment:
    """Two labs with a friend and a super-observer each.

    ``friend_sets`` holds ``({C}, {D})``, ``super_sets`` holds ``({A}, {B})``;
    all four are local sets on their lab's factor.
    """

    initial: DensityOperator
    space: CompositeSpace
    friend_sets: tuple[PovmSet, PovmSet]
    super_sets: tuple[PovmSet, PovmSet]
    evolution: Evolution
    settings: tuple = (None, None)

    def __post_init__(self):
        if len(self.space.factors) != 2:
            raise DimensionMismatchError("an EWF experiment needs exactly two labs")
        d1, d2 = self.space.dims
        for name, (left, right) in (("friend", self.friend_sets), ("super", self.super_sets)):
            if left.dim != d1 or right.dim != d2:
                raise DimensionMismatchError(f"{name} sets have dims ({left.dim}, {right.dim}), labs are ({d1}, {d2})")
        if self.initial.dim != self.space.total_dim or self.evolution.dim != self.space.total_dim:
            raise DimensionMismatchError("state or evolution does not match the composite space")

    @property
    def friend_joint(self) -> PovmSet:
        return joint_set(*self.friend_sets)

    @property
    def super_joint(self) -> PovmSet:
        return joint_set(*self.super_sets)

    def friend_root(self, c: int, d: int) -> np.ndarray:
        """``sqrt(C_c) (x) sqrt(D_d)``."""
        return np.kron(self.friend_sets[0][c].sqrt, self.friend_sets[1][d].sqrt)

    def friend_product(self, c: int, d: int) -> np.ndarray:
        return np.kron(self.friend_sets[0][c].matrix, self.friend_sets[1][d].matrix)

    def super_product(self, a: int, b: int) -> np.ndarray:
        return np.kron(self.super_sets[0][a].matrix, self.super_sets[1][b].matrix)

    def friend_outcomes(self):
        for c in range(len(self.friend_sets[0])):
            for d in range(len(self.friend_sets[1])):
                yield c, d


def _ewf_weight(exp: EwfExperiment, c: int, d: int, heis: np.ndarray) -> float:
    k = exp.friend_root(c, d)
    return trace_to_probability(np.trace(exp.initial.matrix @ k @ heis @ k))


def ewf_conditional(exp: EwfExperiment, c: int, d: int, a: int, b: int, p_min: float = P_MIN) -> float:
    """``p(ab at t2 | cd at t1)``."""
    marginal = trace_to_probability(np.trace(exp.initial.matrix @ exp.friend_product(c, d)))
    if marginal < p_min:
        raise OutcomeProbabilityZeroError(f"friend outcome ({c},{d}) has probability {marginal:.3g}")
    heis = exp.evolution.heisenberg(exp.super_product(a, b))
    return min(_ewf_weight(exp, c, d, heis) / marginal, 1.0)


def ewf_total_law_residual(exp: EwfExperiment, a: int, b: int) -> TotalLawResult:
    heis = exp.evolution.heisenberg(exp.super_product(a, b))
    lhs = trace_to_probability(np.trace(exp.initial.matrix @ heis))
    rhs = sum(_ewf_weight(exp, c, d, heis) for c, d in exp.friend_outcomes())
    return TotalLawResult(lhs, rhs, abs(lhs - rhs))


def ewf_stationarity_residual(exp: EwfExperiment) -> float:
    worst = 0.0
    for c, d in exp.friend_outcomes():
        k = exp.friend_root(c, d)
        num = k @ exp.initial.matrix @ k
        p = np.trace(num).real
        if p < P_MIN:
            continue
        post = num / p
        worst = max(worst, linalg.frobenius(exp.evolution.apply(post) - post))
    return worst


def c5_terms(exp: EwfExperiment, a: int, b: int) -> dict[tuple[int, int], float]:
    """``|<Psi|[C_c D_d, A B] C_c D_d|Psi>|`` for every friend outcome pair."""
    m = exp.super_product(a, b)
    rho = exp.initial.matrix
    terms = {}
    for c, d in exp.friend_outcomes():
        k = exp.friend_product(c, d)
        terms[(c, d)] = abs(complex(np.trace(rho @ linalg.commutator(k, m) @ k)))
    return terms


def check_corollary2(exp: EwfExperiment, a: int, b: int, tol: float = CONDITION_TOL) -> ConditionReport:
    """Conditions C4 and C5 for super outcome ``(a, b)``.

    Both presuppose that post-measurement states do not change between the
    two measurement times; when that fails they are reported as not
    applicable. C5 additionally needs a pure state and projective friends.
    """
    stationary = ewf_stationarity_residual(exp) <= tol
    cset, dset = exp.friend_sets
    a_el, b_el = exp.super_sets[0][a], exp.super_sets[1][b]
    ac = [linalg.frobenius(linalg.commutator(a_el.matrix, c.matrix)) for c in cset]
    bd = [linalg.frobenius(linalg.commutator(b_el.matrix, d.matrix)) for d in dset]
    c4 = max(max(ac), max(bd))
    wit = None
    if c4 > tol:
        wit = f"max ||[A,C]|| = {max(ac):.3g}, max ||[B,D]|| = {max(bd):.3g}"
    entries = {"C4": ConditionEntry("C4", stationary, stationary and c4 <= tol, c4, wit if stationary else "evolution is not stationary")}

    pure = exp.initial.is_pure(tol)
    projective = cset.is_projective(tol) and dset.is_projective(tol)
    terms = c5_terms(exp, a, b)
    c5 = sum(terms.values())
    applicable = stationary and pure and projective
    missing = []
    if not stationary:
        missing.append("evolution is not stationary")
    if not pure:
        missing.append("state is mixed")
    if not projective:
        missing.append("friend sets are not projective")
    if not missing and c5 > tol:
        worst = max(terms, key=terms.get)
        missing.append(f"largest term at (c,d)={worst}: {terms[worst]:.3g}")
    entries["C5"] = ConditionEntry(
        "C5", applicable, applicable and c5 <= tol, c5, "; ".join(missing) or None, tuple(terms.values())
    )
    return ConditionReport(entries, tol)


@dataclass(frozen=True)
class LabCommutators:
    """Within-lab and cross-lab commutator norms of an EWF experiment."""

    alice: dict[tuple[int, int], float]
    bob: dict[tuple[int, int], float]
    cross_friends: float
    cross_supers: float


def ewf_commutators(exp: EwfExperiment) -> LabCommutators:
    cset, dset = exp.friend_sets
    aset, bset = exp.super_sets
    alice = {(x.label.index, y.label.index): linalg.frobenius(linalg.commutator(x.matrix, y.matrix)) for x in aset for y in cset}
    bob = {(x.label.index, y.label.index): linalg.frobenius(linalg.commutator(x.matrix, y.matrix)) for x in bset for y in dset}
    sp = exp.space
    cross_f = max(
        linalg.frobenius(linalg.commutator(lift(c.matrix, 0, sp), lift(d.matrix, 1, sp))) for c in cset for d in dset
    )
    cross_s = max(
        linalg.frobenius(linalg.commutator(lift(x.matrix, 0, sp), lift(y.matrix, 1, sp))) for x in aset for y in bset
    )
    return LabCommutators(alice, bob, cross_f, cross_s)


@dataclass
class CorollaryImplicationReport:
    c4_residuals: list[float]
    c5_residuals: list[float]
    c4_flagged: list[bool]
    c5_flagged: list[bool]
    c5_rejected: int
    tol: float

    @property
    def passed(self) -> bool:
        return (
            len(self.c4_residuals) > 0
            and len(self.c5_residuals) > 0
            and all(self.c4_flagged)
            and all(self.c5_flagged)
            and max(self.c4_residuals + self.c5_residuals) <= self.tol
        )


def _c4_case(d1, d2, rng):
    space = CompositeSpace((("L1", d1), ("L2", d2)))
    v1, v2 = randgen.random_unitary(d1, rng), randgen.random_unitary(d2, rng)
    cset = randgen.random_diagonal_povm(v1, int(rng.integers(2, 4)), rng)
    aset = randgen.random_diagonal_povm(v1, 2, rng)
    dset = randgen.random_diagonal_povm(v2, int(rng.integers(2, 4)), rng)
    bset = randgen.random_diagonal_povm(v2, 2, rng)
    rho = randgen.random_density(d1 * d2, rng)
    return EwfExperiment(rho, space, (cset, dset), (aset, bset), Evolution.identity(d1 * d2))


def _local_conditioned(dim, rng):
    basis = randgen.random_unitary(dim, rng)
    xi = randgen.random_pure(dim, rng).vector
    w = randgen.conditioned_effect(basis, xi, rng)
    return xi, PovmSet.from_basis(basis), randgen.binary_set(w)


def _c5_case(d1, d2, rng):
    space = CompositeSpace((("L1", d1), ("L2", d2)))
    xi, cset, aset = _local_conditioned(d1, rng)
    zeta, dset, bset = _local_conditioned(d2, rng)
    rho = DensityOperator.from_vector(np.kron(xi, zeta), dims=(d1, d2))
    return EwfExperiment(rho, space, (cset, dset), (aset, bset), Evolution.identity(d1 * d2))


def verify_corollary2_implication(
    sample_count: int = 50, dims=((3, 3), (3, 4), (4, 4)), seed=0, tol: float = CONDITION_TOL, filter_tol: float = 1e-10
) -> CorollaryImplicationReport:
    """Randomised check that C4 and C5 each force the composite total law.

    C4 cases use friend and super sets diagonal in a shared per-lab basis on
    a random mixed state. C5 cases use product pure states with super
    effects whose per-lab terms vanish; a case is kept only if its summed C5
    residual is at most ``filter_tol``.
    """
    rng = randgen.rng_from(seed)
    dims = list(dims)
    c4r, c4f, c5r, c5f = [], [], [], []
    rejected = 0
    for k in range(sample_count):
        exp = _c4_case(*dims[k % len(dims)], rng)
        outcomes = [(a, b) for a in range(len(exp.super_sets[0])) for b in range(len(exp.super_sets[1]))]
        c4f.append(all(check_corollary2(exp, a, b, tol)["C4"].satisfied for a, b in outcomes))
        c4r.append(max(ewf_total_law_residual(exp, a, b).residual for a, b in outcomes))
    attempts = 0
    while len(c5r) < sample_count and attempts < 20 * sample_count:
        attempts += 1
        exp = _c5_case(*dims[len(c5r) % len(dims)], rng)
        outcomes = [(a, b) for a in range(2) for b in range(2)]
        reports = [check_corollary2(exp, a, b, tol) for a, b in outcomes]
        if max(r["C5"].residual for r in reports) > filter_tol:
            rejected += 1
            continue
        c5f.append(all(r["C5"].satisfied for r in reports))
        c5r.append(max(ewf_total_law_residual(exp, a, b).residual for a, b in outcomes))
    return CorollaryImplicationReport(c4r, c5r, c4f, c5f, rejected, tol)
