"""Single-time measurement calculus: states, POVMs, Born rule and state update.

The post-measurement update is always the symmetric square-root rule
``rho -> sqrt(A) rho sqrt(A) / Tr(rho A)``; other Kraus decompositions of
the same POVM element are not modelled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterator, Sequence

import numpy as np

from qtotal import linalg
from qtotal.errors import (
    DimensionMismatchError,
    IncompletePovmError,
    InvalidPovmError,
    InvariantViolation,
    NonHermitianError,
    NonRealProbabilityError,
    NotPSDError,
    OutcomeProbabilityZeroError,
    TraceNotOneError,
)

STATE_TOL = 1e-10
COMPLETENESS_TOL = 1e-9
P_MIN = 1e-12
PROB_TOL = 1e-10


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=np.complex128, copy=True)
    arr.setflags(write=False)
    return arr


def _dims_for(dim: int, dims) -> tuple[int, ...]:
    if dims is None:
        return (dim,)
    dims = tuple(int(d) for d in dims)
    if math.prod(dims) != dim:
        raise DimensionMismatchError(f"subsystem dims {dims} do not multiply to {dim}")
    return dims


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """Hermitian, positive semidefinite, unit-trace operator.

    Construction validates the invariants; see :func:`validate_density`.
    """

    matrix: np.ndarray
    space_label: str = "S"
    dims: tuple[int, ...] | None = None
    tol: float = field(default=STATE_TOL, repr=False)

    def __post_init__(self):
        m = linalg.as_square(self.matrix, "density matrix")
        herm = linalg.hermiticity_residual(m)
        if herm > self.tol:
            raise NonHermitianError(herm)
        m = 0.5 * (m + linalg.dagger(m))
        lowest = float(np.linalg.eigvalsh(m)[0])
        if lowest < -self.tol:
            raise NotPSDError(-lowest, f"density matrix has eigenvalue {lowest:.3g}")
        tr = float(np.trace(m).real)
        if abs(tr - 1.0) > self.tol:
            raise TraceNotOneError(abs(tr - 1.0), f"trace is {tr:.12g}")
        object.__setattr__(self, "matrix", _frozen(m))
        object.__setattr__(self, "dims", _dims_for(m.shape[0], self.dims))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))

    def is_pure(self, tol: float = 1e-9) -> bool:
        return abs(self.purity - 1.0) <= tol

    def spectrum(self) -> np.ndarray:
        return linalg.hermitian_eig(self.matrix).eigenvalues

    @classmethod
    def from_vector(cls, vector, dims=None, space_label: str = "S") -> "DensityOperator":
        return PureState(vector, dims).density(space_label)

    @classmethod
    def maximally_mixed(cls, dim: int, dims=None) -> "DensityOperator":
        return cls(np.eye(dim) / dim, dims=dims)


@dataclass(frozen=True, eq=False)
class PureState:
    vector: np.ndarray
    dims: tuple[int, ...] | None = None

    def __post_init__(self):
        v = np.asarray(self.vector, dtype=np.complex128).ravel()
        if not np.all(np.isfinite(v)):
            raise InvariantViolation("finite", float("inf"))
        norm = float(np.linalg.norm(v))
        if abs(norm - 1.0) > STATE_TOL:
            raise InvariantViolation("unit-norm", abs(norm - 1.0), f"state norm is {norm:.12g}")
        object.__setattr__(self, "vector", _frozen(v))
        object.__setattr__(self, "dims", _dims_for(v.size, self.dims))

    @property
    def dim(self) -> int:
        return self.vector.size

    def projector(self) -> np.ndarray:
        return np.outer(self.vector, np.conj(self.vector))

    def density(self, space_label: str = "S") -> DensityOperator:
        return DensityOperator(self.projector(), space_label=space_label, dims=self.dims)


@dataclass(frozen=True)
class OutcomeLabel:
    name: str
    index: int

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True, eq=False)
class PovmElement:
    """A positive operator ``0 <= A <= I`` tied to one outcome."""

    matrix: np.ndarray
    label: OutcomeLabel | None = None

    def __post_init__(self):
        m = linalg.as_square(self.matrix, "POVM element")
        herm = linalg.hermiticity_residual(m)
        if herm > STATE_TOL:
            raise NonHermitianError(herm)
        m = 0.5 * (m + linalg.dagger(m))
        w = np.linalg.eigvalsh(m) if m.size else np.zeros(0)
        excess = max(-float(w[0]), float(w[-1]) - 1.0, 0.0)
        if excess > STATE_TOL:
            raise InvalidPovmError(excess, f"eigenvalues span [{w[0]:.3g}, {w[-1]:.3g}]")
        object.__setattr__(self, "matrix", _frozen(m))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @cached_property
    def sqrt(self) -> np.ndarray:
        return _frozen(linalg.psd_sqrt(self.matrix))

    def projector_residual(self) -> float:
        return linalg.frobenius(self.matrix @ self.matrix - self.matrix)

    def is_projector(self, tol: float = 1e-9) -> bool:
        return self.projector_residual() <= tol

    @property
    def name(self) -> str:
        return self.label.name if self.label is not None else "?"


@dataclass(frozen=True, eq=False)
class PovmSet:
    """Ordered, complete family of POVM elements (``sum_i A_i = I``)."""

    elements: tuple[PovmElement, ...]
    setting_label: str | None = None

    def __post_init__(self):
        elems = tuple(self.elements)
        if not elems:
            raise ValueError("a POVM set needs at least one element")
        linalg.check_same_shape(*(e.matrix for e in elems))
        relabelled = []
        for i, e in enumerate(elems):
            if e.label is None:
                e = PovmElement(e.matrix, OutcomeLabel(str(i), i))
            relabelled.append(e)
        indices = [e.label.index for e in relabelled]
        if len(set(indices)) != len(indices):
            raise ValueError(f"duplicate outcome indices {indices}")
        gap = linalg.frobenius(sum(e.matrix for e in relabelled) - np.eye(elems[0].dim))
        if gap > COMPLETENESS_TOL:
            raise IncompletePovmError(gap)
        object.__setattr__(self, "elements", tuple(relabelled))

    @classmethod
    def from_matrices(
        cls, matrices: Sequence, names: Sequence[str] | None = None, setting_label: str | None = None
    ) -> "PovmSet":
        names = list(names) if names is not None else [str(i) for i in range(len(matrices))]
        if len(names) != len(matrices):
            raise ValueError("names and matrices differ in length")
        elems = tuple(
            PovmElement(m, OutcomeLabel(str(n), i)) for i, (m, n) in enumerate(zip(matrices, names))
        )
        return cls(elems, setting_label)

    @classmethod
    def projective(
        cls, vectors: Sequence, names: Sequence[str] | None = None, setting_label: str | None = None
    ) -> "PovmSet":
        """Rank-one projectors onto the given orthonormal vectors."""
        return cls.from_matrices([linalg.projector(v) for v in vectors], names, setting_label)

    @classmethod
    def from_basis(cls, basis: np.ndarray, names=None, setting_label=None) -> "PovmSet":
        """Rank-one projectors onto the columns of a unitary matrix."""
        basis = np.asarray(basis)
        return cls.projective([basis[:, k] for k in range(basis.shape[1])], names, setting_label)

    @property
    def dim(self) -> int:
        return self.elements[0].dim

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self) -> Iterator[PovmElement]:
        return iter(self.elements)

    def __getitem__(self, i: int) -> PovmElement:
        return self.elements[i]

    @property
    def names(self) -> list[str]:
        return [e.name for e in self.elements]

    def is_projective(self, tol: float = 1e-9) -> bool:
        return all(e.is_projector(tol) for e in self.elements)

    def map(self, fn, setting_label: str | None = None) -> "PovmSet":
        """Apply ``fn`` to every element matrix, keeping the labels."""
        elems = tuple(PovmElement(fn(e.matrix), e.label) for e in self.elements)
        return PovmSet(elems, setting_label if setting_label is not None else self.setting_label)


def validate_density(rho, tol: float = STATE_TOL, space_label: str = "S", dims=None) -> DensityOperator:
    """Validate a raw matrix as a density operator.

    Raises one of :class:`NonHermitianError`, :class:`NotPSDError` or
    :class:`TraceNotOneError`; each carries ``invariant`` and ``magnitude``.
    """
    return DensityOperator(rho, space_label=space_label, dims=dims, tol=tol)


def _check_dims(rho: DensityOperator, *elems: PovmElement) -> None:
    for e in elems:
        if e.dim != rho.dim:
            raise DimensionMismatchError(f"state has dim {rho.dim}, operator has dim {e.dim}")


def trace_to_probability(value: complex) -> float:
    """Turn a trace into a probability, clamping float noise at 0 and 1."""
    value = complex(value)
    if abs(value.imag) > PROB_TOL:
        raise NonRealProbabilityError(f"imaginary part {value.imag:.3g}")
    p = value.real
    if p < -PROB_TOL or p > 1.0 + PROB_TOL:
        raise InvariantViolation("probability-range", max(-p, p - 1.0), f"probability {p:.12g}")
    return min(max(p, 0.0), 1.0)


def born_probability(rho: DensityOperator, element: PovmElement) -> float:
    """``Tr(rho A)``."""
    _check_dims(rho, element)
    return trace_to_probability(np.trace(rho.matrix @ element.matrix))


def branch_operator(rho: DensityOperator, element: PovmElement) -> np.ndarray:
    """Unnormalised updated state ``sqrt(A) rho sqrt(A)``."""
    _check_dims(rho, element)
    s = element.sqrt
    out = s @ rho.matrix @ s
    return 0.5 * (out + linalg.dagger(out))


def post_measurement_state(rho: DensityOperator, element: PovmElement, p_min: float = P_MIN) -> DensityOperator:
    p = born_probability(rho, element)
    if p < p_min:
        raise OutcomeProbabilityZeroError(f"outcome {element.name} has probability {p:.3g} < {p_min:g}")
    num = branch_operator(rho, element)
    # rounding in the numerator is amplified by 1/p
    tol = max(STATE_TOL, 1e-15 / p)
    return DensityOperator(num / np.trace(num).real, rho.space_label, rho.dims, tol=tol)


def conditional_probability(
    rho: DensityOperator, first: PovmElement, then: PovmElement, p_min: float = P_MIN
) -> float:
    """``Tr(sqrt(A) rho sqrt(A) B) / Tr(rho A)``: ``then`` given ``first``."""
    _check_dims(rho, first, then)
    p = born_probability(rho, first)
    if p < p_min:
        raise OutcomeProbabilityZeroError(f"outcome {first.name} has probability {p:.3g} < {p_min:g}")
    joint = trace_to_probability(np.trace(branch_operator(rho, first) @ then.matrix))
    return min(joint / p, 1.0)


def sequential_weight(rho: DensityOperator, first: PovmElement, then: PovmElement) -> float:
    """``Tr(sqrt(A) rho sqrt(A) B)``, the product ``p(b|a) p(a)``."""
    _check_dims(rho, first, then)
    return trace_to_probability(np.trace(branch_operator(rho, first) @ then.matrix))


def bayes_gap(rho: DensityOperator, a: PovmElement, b: PovmElement) -> float:
    """Distance between the two measurement orders' joint weights.

    Zero exactly when ``p(b|a) p(a) == p(a|b) p(b)`` for this triple.
    """
    return abs(sequential_weight(rho, a, b) - sequential_weight(rho, b, a))
