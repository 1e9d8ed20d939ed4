"""Builtin scenarios, available by name from the CLI and from scenario files."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from qtotal import scenarios as sc
from qtotal.composite import CompositeSpace
from qtotal.errors import ScenarioValidationError, UnknownParameterError, UnknownScenarioError
from qtotal.measurement import DensityOperator, PovmSet, PureState
from qtotal.scenario_file import CheckSpec, LocalOperator, LocalSet, Scenario
from qtotal.twotime import Evolution


@dataclass(frozen=True)
class Builtin:
    name: str
    defaults: dict
    doc: str
    sweepable: tuple[str, ...]
    factory: Callable[..., Scenario]


def _checks(*names) -> list[CheckSpec]:
    return [CheckSpec(n) for n in names]


def _brukner(theta: float = np.pi / 2) -> Scenario:
    b = sc.build_brukner(float(theta))
    meas = {"A1": LocalSet(b.a1, 0), "A2": LocalSet(b.a2, 0), "B1": LocalSet(b.b1, 1), "B2": LocalSet(b.b2, 1)}
    comm = [(f"A1:{i}", f"A2:{j}") for i in range(2) for j in range(2)]
    comm += [(f"B1:{i}", f"B2:{j}") for i in range(2) for j in range(2)]
    return Scenario(
        "brukner", b.space, b.density, Evolution.identity(16), meas,
        {"type": "ewf", "friends": ["A1", "B1"], "supers": ["A2", "B2"], "outcomes": [0, 0]},
        commutators=comm,
        checks=_checks("appendix-d", "total-law", "conditions", "commutators", "oracle"),
    )


def _bong(entangler: str = "twisted-copy", e_choices: dict | None = None, theta: float = np.pi / 2,
          x: int = 2, y: int = 2) -> Scenario:
    choices = {int(k): v for k, v in (e_choices or {}).items()}
    b = sc.build_bong(entangler, choices, float(theta))
    meas = {}
    for s in (1, 2, 3):
        meas[f"A{s}"] = LocalSet(b.alice[s], 0)
        meas[f"B{s}"] = LocalSet(b.bob[s], 1)
    meas["C"] = LocalSet(b.c_refined, 0)
    meas["D"] = LocalSet(b.d_refined, 1)
    ops = {"UC": LocalOperator(b.c_unitary, 0), "UD": LocalOperator(b.d_unitary, 1)}
    comm = []
    for lab, sup, fr, u in (("A", "A", "C", "UC"), ("B", "B", "D", "UD")):
        for s in (1, 2, 3):
            for a in range(2):
                comm.append((f"{sup}{s}:{a}", u))
                comm += [(f"{sup}{s}:{a}", f"{fr}:{c}") for c in range(2)]
    comm += [(f"C:{c}", f"D:{d}") for c in range(2) for d in range(2)]
    comm.append(("UC", "UD"))
    comm += [(f"A{s}:{a}", f"B{t}:{bb}") for s in (1, 2, 3) for t in (1, 2, 3) for a in range(2) for bb in range(2)]
    return Scenario(
        "bong", b.space, b.state.density(), Evolution.identity(16), meas,
        {"type": "ewf", "friends": ["C", "D"], "supers": [f"A{x}", f"B{y}"], "settings": [x, y]},
        operators=ops, commutators=comm,
        checks=_checks("commutators", "total-law", "conditions"),
    )


def _probe(probe, n: int) -> np.ndarray:
    if probe in (None, "uniform"):
        return np.ones(n) / np.sqrt(n)
    v = np.asarray([complex(*z) if isinstance(z, (list, tuple)) else complex(z) for z in probe])
    if v.size != n:
        raise ValueError(f"probe has {v.size} amplitudes, expected {n}")
    return v


def _stable_facts(lambdas=None, lambda0: float | None = None, probe=None, decohered: bool = True) -> Scenario:
    if lambda0 is not None:
        weights = (float(lambda0), 1.0 - float(lambda0))
    else:
        weights = tuple(float(w) for w in (lambdas or (0.3, 0.7)))
    n = len(weights)
    vec = _probe(probe, n)
    state = None if decohered else DensityOperator.from_vector(vec)
    s = sc.StableFactsScenario(weights, probe=np.outer(vec, vec.conj()) / np.vdot(vec, vec).real, state=state)
    exp = s.to_experiment()
    return Scenario(
        "stable-facts", CompositeSpace((("F", n),)), exp.initial, exp.evolution,
        {"pointer": LocalSet(exp.first), "probe": LocalSet(exp.second)},
        {"type": "two-time", "first": "pointer", "second": "probe", "outcome": 0},
        checks=_checks("total-law", "conditions", "oracle"),
    )


_QUBIT_SETS = {"pauli-z": sc.z_set, "pauli-x": sc.x_set}


def _guerin(theta: float = np.pi / 2, first: str = "pauli-z", second: str = "pauli-x") -> Scenario:
    for nm in (first, second):
        if nm not in _QUBIT_SETS:
            raise ValueError(f"unknown set {nm!r}; choose from {sorted(_QUBIT_SETS)}")
    psi = np.array([np.cos(theta / 2), np.sin(theta / 2)])
    return Scenario(
        "guerin", CompositeSpace((("S", 2),)), PureState(psi).density(), Evolution.identity(2),
        {"F1": LocalSet(_QUBIT_SETS[first]()), "F2": LocalSet(_QUBIT_SETS[second]())},
        {"type": "two-time", "first": "F1", "second": "F2"},
        checks=_checks("marginals", "total-law"),
    )


def _double_slit() -> Scenario:
    exp = sc.double_slit()
    return Scenario(
        "double-slit", CompositeSpace((("S", 2),)), exp.initial, exp.evolution,
        {"Z": LocalSet(exp.first), "X": LocalSet(exp.second)},
        {"type": "two-time", "first": "Z", "second": "X", "outcome": 0},
        checks=_checks("total-law", "conditions", "bayes-gap", "oracle", "sample"),
    )


BUILTINS: dict[str, Builtin] = {
    b.name: b for b in (
        Builtin("brukner", {"theta": np.pi / 2},
                "two labs of spin (x) pointer; theta sets the shared state", ("theta",), _brukner),
        Builtin("bong", {"entangler": "twisted-copy", "e_choices": {"2": "x", "3": "xz"}, "theta": np.pi / 2, "x": 2, "y": 2},
                "friend (x) spin labs; entangler in {twisted-copy, cnot}, settings 2 and 3 from {z, x, y, xz, identity}",
                ("theta",), _bong),
        Builtin("stable-facts", {"lambdas": [0.3, 0.7], "lambda0": None, "probe": "uniform", "decohered": True},
                "decohered pointer mixture probed by a non-commuting projector", ("lambda0",), _stable_facts),
        Builtin("guerin", {"theta": np.pi / 2, "first": "pauli-z", "second": "pauli-x"},
                "sequential qubit pair; marginals of the joint against one-time probabilities", ("theta",), _guerin),
        Builtin("double-slit", {}, "|+> measured in Z then X", (), _double_slit),
    )
}


def _plain(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    return v


def get(name: str) -> Builtin:
    if name not in BUILTINS:
        raise UnknownScenarioError(f"unknown builtin scenario {name!r}; known: {', '.join(BUILTINS)}")
    return BUILTINS[name]


def build(name: str, **params) -> Scenario:
    """Instantiate a builtin, rejecting parameters its builder does not take."""
    b = get(name)
    unknown = sorted(set(params) - set(b.defaults))
    if unknown:
        raise UnknownParameterError(f"builtin {name!r} has no parameter {unknown[0]!r}; known: {sorted(b.defaults) or 'none'}")
    try:
        scn = b.factory(**params)
    except (ValueError, KeyError, TypeError) as exc:
        raise ScenarioValidationError(f"params of {name}", exc) from exc
    merged = dict(b.defaults)
    merged.update(params)
    scn.origin = (name, _plain(merged))
    return scn
