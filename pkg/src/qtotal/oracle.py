"""Brute-force ground truth for sequential measurements.

Nothing here calls the analytic engines in :mod:`qtotal.twotime` or
:mod:`qtotal.composite`; square roots and state updates are recomputed per
branch so that the two code paths can be compared against each other.

Random numbers come from ``numpy.random.Generator`` over ``PCG64``;
``SeedSequence(seed).spawn(shards)`` derives one independent stream per
shard, so the output depends only on ``(seed, n, shards)``.
"""

from __future__ import annotations

import builtins
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from qtotal.errors import DimensionMismatchError, InvalidJointError
from qtotal.measurement import DensityOperator, PovmSet

BRANCH_CUTOFF = 1e-15
CLAMP = 1e-12
SUM_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class MeasurementStep:
    time: float
    povm: PovmSet
    evolution: np.ndarray | None = None  # unitary applied just before this step

    def __post_init__(self):
        if self.evolution is not None:
            u = np.asarray(getattr(self.evolution, "unitary", self.evolution), dtype=np.complex128)
            object.__setattr__(self, "evolution", u)


@dataclass(frozen=True, eq=False)
class MeasurementSchedule:
    steps: tuple[MeasurementStep, ...]

    def __post_init__(self):
        steps = tuple(self.steps)
        if not steps:
            raise ValueError("a schedule needs at least one step")
        dim = steps[0].povm.dim
        for k, s in builtins.enumerate(steps):
            if s.povm.dim != dim or (s.evolution is not None and s.evolution.shape != (dim, dim)):
                raise DimensionMismatchError(f"step {k} does not act on dimension {dim}")
            if k and not s.time > steps[k - 1].time:
                raise ValueError(f"step times must increase strictly, got {[x.time for x in steps]}")
        object.__setattr__(self, "steps", steps)

    @classmethod
    def of(cls, *items) -> "MeasurementSchedule":
        """Build from ``PovmSet`` or ``(povm, evolution)`` items at times 0, 1, 2, ..."""
        steps = []
        for t, item in builtins.enumerate(items):
            povm, evo = (item, None) if isinstance(item, PovmSet) else item
            steps.append(MeasurementStep(float(t), povm, evo))
        return cls(tuple(steps))

    @property
    def dim(self) -> int:
        return self.steps[0].povm.dim

    def __len__(self) -> int:
        return len(self.steps)


@dataclass(frozen=True)
class OutcomeDistribution:
    """Probabilities keyed by tuples of outcome indices, one per step."""

    probabilities: Mapping[tuple[int, ...], float]
    names: tuple[tuple[str, ...], ...]
    samples: int | None = None

    def __post_init__(self):
        probs = {k: (0.0 if -CLAMP <= v < 0 else float(v)) for k, v in self.probabilities.items()}
        if any(v < 0 for v in probs.values()):
            raise ValueError("negative probability in distribution")
        total = sum(probs.values())
        if abs(total - 1.0) > SUM_TOL:
            raise ValueError(f"distribution sums to {total}")
        object.__setattr__(self, "probabilities", probs)

    def __getitem__(self, key) -> float:
        return self.probabilities.get(tuple(key), 0.0)

    @property
    def steps(self) -> int:
        return len(self.names)

    def label(self, key: tuple[int, ...]) -> str:
        parts = [self.names[k][i] for k, i in builtins.enumerate(key)]
        sep = "" if all(len(p) == 1 for p in parts) else ","
        return sep.join(parts)

    def by_label(self) -> dict[str, float]:
        return {self.label(k): v for k, v in sorted(self.probabilities.items())}

    def marginal(self, steps: Iterable[int]) -> dict[tuple[int, ...], float]:
        steps = tuple(steps)
        out: dict[tuple[int, ...], float] = {}
        for k, v in self.probabilities.items():
            sub = tuple(k[s] for s in steps)
            out[sub] = out.get(sub, 0.0) + v
        return out

    def conditional(self, given: Mapping[int, int], step: int, outcome: int) -> float:
        """``p(outcome at step | given)`` read off the table."""
        num = den = 0.0
        for k, v in self.probabilities.items():
            if all(k[s] == i for s, i in given.items()):
                den += v
                if k[step] == outcome:
                    num += v
        if den <= 0:
            raise ZeroDivisionError("conditioning event has zero probability")
        return num / den


def _branch_root(m: np.ndarray) -> np.ndarray:
    h = 0.5 * (m + m.conj().T)
    w, v = np.linalg.eigh(h)
    w = np.where(w > 1e-13 * max(1.0, np.abs(w).max()), w, 0.0)
    return (v * np.sqrt(w)) @ v.conj().T


def _branches(rho: np.ndarray, step: MeasurementStep):
    """Yield ``(index, probability, normalised post-state)`` for one step."""
    if step.evolution is not None:
        rho = step.evolution @ rho @ step.evolution.conj().T
    for i, el in builtins.enumerate(step.povm):
        root = _branch_root(el.matrix)
        unnorm = root @ rho @ root
        p = float(np.trace(unnorm).real)
        yield i, p, (unnorm / p if p >= BRANCH_CUTOFF else None)


def _names(schedule: MeasurementSchedule) -> tuple[tuple[str, ...], ...]:
    return tuple(tuple(s.povm.names) for s in schedule.steps)


def enumerate_outcomes(rho0: DensityOperator, schedule: MeasurementSchedule) -> OutcomeDistribution:
    """Exact outcome distribution by depth-first expansion of every branch."""
    if rho0.dim != schedule.dim:
        raise DimensionMismatchError(f"state dim {rho0.dim} vs schedule dim {schedule.dim}")
    table: dict[tuple[int, ...], float] = {}
    n = len(schedule)

    def walk(rho, depth, prefix, weight):
        for i, p, post in _branches(rho, schedule.steps[depth]):
            key = prefix + (i,)
            if depth + 1 == n:
                table[key] = weight * max(p, 0.0)
            elif post is None:
                table[key + (0,) * (n - depth - 1)] = 0.0
            else:
                walk(post, depth + 1, key, weight * p)

    walk(np.asarray(rho0.matrix), 0, (), 1.0)
    return OutcomeDistribution(table, _names(schedule))


# public name used throughout the package and CLI
enumerate = enumerate_outcomes  # noqa: A001


class _TrajectoryTree:
    """Per-prefix conditional distributions, computed lazily and cached."""

    def __init__(self, rho0: np.ndarray, schedule: MeasurementSchedule):
        self.schedule = schedule
        self._states = {(): rho0}
        self._cdf: dict[tuple[int, ...], np.ndarray] = {}

    def cdf(self, prefix: tuple[int, ...]) -> np.ndarray:
        if prefix not in self._cdf:
            probs = []
            for i, p, post in _branches(self._states[prefix], self.schedule.steps[len(prefix)]):
                probs.append(max(p, 0.0) if post is not None else 0.0)
                if post is not None:
                    self._states[prefix + (i,)] = post
            c = np.cumsum(probs)
            self._cdf[prefix] = c / c[-1]
        return self._cdf[prefix]


def _sample_shard(tree: _TrajectoryTree, n: int, rng: np.random.Generator) -> np.ndarray:
    steps = len(tree.schedule)
    out = np.zeros((n, steps), dtype=np.int64)
    for k in range(steps):
        u = rng.random(n)
        prefixes, inverse = np.unique(out[:, :k], axis=0, return_inverse=True)
        inverse = np.asarray(inverse).ravel()
        for g, pref in builtins.enumerate(prefixes):
            rows = inverse == g
            c = tree.cdf(tuple(int(x) for x in pref))
            out[rows, k] = np.minimum(np.searchsorted(c, u[rows], side="right"), c.size - 1)
    return out


def sample(rho0: DensityOperator, schedule: MeasurementSchedule, n: int, seed=0, shards: int = 1) -> OutcomeDistribution:
    """Empirical distribution of ``n`` simulated trajectories.

    Shard ``s`` draws ``n // shards`` trajectories (the first ``n % shards``
    shards draw one more) from ``SeedSequence(seed).spawn(shards)[s]``.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if rho0.dim != schedule.dim:
        raise DimensionMismatchError(f"state dim {rho0.dim} vs schedule dim {schedule.dim}")
    shards = max(1, min(int(shards), n))
    tree = _TrajectoryTree(np.asarray(rho0.matrix), schedule)
    sizes = [n // shards + (1 if s < n % shards else 0) for s in range(shards)]
    children = np.random.SeedSequence(seed).spawn(shards)
    draws = np.vstack([
        _sample_shard(tree, m, np.random.Generator(np.random.PCG64(ss))) for m, ss in zip(sizes, children)
    ])
    keys, counts = np.unique(draws, axis=0, return_counts=True)
    probs = {tuple(int(x) for x in k): c / n for k, c in zip(keys, counts)}
    return OutcomeDistribution(probs, _names(schedule), samples=n)


def sampling_sigma(p: float, n: int) -> float:
    return float(np.sqrt(max(p * (1 - p), 0.0) / n))


def total_variation(a: OutcomeDistribution, b: OutcomeDistribution) -> float:
    keys = set(a.probabilities) | set(b.probabilities)
    return 0.5 * sum(abs(a[k] - b[k]) for k in keys)


# --- schedules for the analytic experiment types ------------------------------

def two_time_schedule(exp) -> MeasurementSchedule:
    """``first`` at ``t1``, then the evolution, then ``second`` at ``t2``."""
    return MeasurementSchedule((
        MeasurementStep(exp.t1, exp.first),
        MeasurementStep(exp.t2, exp.second, exp.evolution.unitary),
    ))


def ewf_schedule(exp) -> MeasurementSchedule:
    """Joint friend measurement, then the evolution, then the joint super measurement."""
    return MeasurementSchedule((
        MeasurementStep(0.0, exp.friend_joint),
        MeasurementStep(1.0, exp.super_joint, exp.evolution.unitary),
    ))


@dataclass(frozen=True)
class OracleTotalLaw:
    lhs: float
    rhs: float
    residual: float


def oracle_total_law(rho0: DensityOperator, first: PovmSet, evolution, second: PovmSet, j: int) -> OracleTotalLaw:
    """``p(j)`` with no earlier measurement against ``sum_i p(i, j)`` with it."""
    u = np.asarray(getattr(evolution, "unitary", evolution), dtype=np.complex128)
    lone = enumerate_outcomes(rho0, MeasurementSchedule((MeasurementStep(1.0, second, u),)))
    pair = enumerate_outcomes(rho0, MeasurementSchedule((MeasurementStep(0.0, first), MeasurementStep(1.0, second, u))))
    lhs = lone[(j,)]
    rhs = pair.marginal([1]).get((j,), 0.0)
    return OracleTotalLaw(lhs, rhs, abs(lhs - rhs))


# --- classical reference --------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ClassicalJoint:
    """Table ``p(a_i, b_j)``: rows index ``a``, columns index ``b``."""

    table: np.ndarray

    def __post_init__(self):
        try:
            t = np.asarray(self.table, dtype=float)
        except (TypeError, ValueError) as exc:
            raise InvalidJointError(f"joint table is not numeric: {exc}") from exc
        if t.ndim != 2 or t.size == 0:
            raise InvalidJointError(f"joint table must be a non-empty 2-D array, got shape {t.shape}")
        if not np.all(np.isfinite(t)):
            raise InvalidJointError("joint table has non-finite entries")
        if t.min() < -CLAMP:
            raise InvalidJointError(f"joint table has negative entry {t.min():.3g}")
        if abs(t.sum() - 1.0) > SUM_TOL:
            raise InvalidJointError(f"joint table sums to {t.sum():.12g}")
        t = np.clip(t, 0.0, None)
        t.flags.writeable = False
        object.__setattr__(self, "table", t)


@dataclass(frozen=True)
class ClassicalLawReport:
    p_b: np.ndarray
    reconstructed: np.ndarray
    residuals: np.ndarray
    degenerate: tuple[int, ...] = field(default=())

    @property
    def max_residual(self) -> float:
        return float(self.residuals.max())


def classical_total_law(joint) -> ClassicalLawReport:
    """Check ``p(b_j) = sum_i p(b_j | a_i) p(a_i)`` for a classical table.

    Rows with zero mass have no conditional; they are skipped and listed in
    ``degenerate``.
    """
    joint = joint if isinstance(joint, ClassicalJoint) else ClassicalJoint(joint)
    t = joint.table
    p_a = t.sum(axis=1)
    p_b = t.sum(axis=0)
    rebuilt = np.zeros_like(p_b)
    degenerate = []
    for i, pa in builtins.enumerate(p_a):
        if pa <= 0:
            degenerate.append(i)
            continue
        rebuilt += (t[i] / pa) * pa
    return ClassicalLawReport(p_b, rebuilt, np.abs(p_b - rebuilt), tuple(degenerate))
