"""Scenario documents: JSON schema, parsing, validation and export.

A document is one JSON object::

    {
      "name": "double-slit",
      "space": {"factors": [{"label": "S", "dim": 2}]},
      "state": {"amplitudes": [[0.7071, 0], [0.7071, 0]]},
      "evolution": "identity",
      "measurements": {
        "Z": {"slot": "S", "builtin": "pauli-z"},
        "X": {"slot": "S", "elements": [{"label": "+", "matrix": [[[0.5, 0], [0.5, 0]], ...]}, ...]}
      },
      "experiment": {"type": "two-time", "first": "Z", "second": "X", "outcome": 0},
      "checks": ["total-law", {"check": "sample", "n": 10000, "seed": 1}]
    }

Complex numbers are always ``[re, im]`` pairs. ``{"builtin": name,
"params": {...}}`` stands for a library scenario; it may also carry
``checks`` and ``tolerance`` overrides.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from qtotal import linalg
from qtotal.composite import CompositeSpace, EwfExperiment, lift, lift_set
from qtotal.errors import QTotalError, ScenarioParseError, ScenarioValidationError
from qtotal.measurement import DensityOperator, PovmSet, PureState
from qtotal.twotime import Evolution, TwoTimeExperiment

KNOWN_CHECKS = ("total-law", "conditions", "bayes-gap", "appendix-d", "commutators", "oracle", "sample", "marginals")
DEFAULT_TOL = 1e-9

_SQ = 1 / np.sqrt(2)
BUILTIN_BASES = {
    "pauli-z": (np.eye(2), ["0", "1"]),
    "pauli-x": (np.array([[_SQ, _SQ], [_SQ, -_SQ]]), ["+", "-"]),
    "pauli-y": (np.array([[_SQ, _SQ], [1j * _SQ, -1j * _SQ]]), ["+i", "-i"]),
}


@dataclass(frozen=True, eq=False)
class LocalSet:
    """A measurement acting on one factor (``slot``) or on the whole space (``None``)."""

    povm: PovmSet
    slot: int | None = None


@dataclass(frozen=True, eq=False)
class LocalOperator:
    matrix: np.ndarray
    slot: int | None = None


@dataclass(frozen=True)
class CheckSpec:
    name: str
    params: dict = field(default_factory=dict)


@dataclass(eq=False)
class Scenario:
    name: str
    space: CompositeSpace
    state: DensityOperator
    evolution: Evolution
    measurements: dict[str, LocalSet]
    experiment: dict
    operators: dict[str, LocalOperator] = field(default_factory=dict)
    commutators: list[tuple[str, str]] = field(default_factory=list)
    checks: list[CheckSpec] = field(default_factory=list)
    tolerance: float = DEFAULT_TOL
    meta: dict = field(default_factory=dict)
    origin: tuple[str, dict] | None = None

    @property
    def kind(self) -> str:
        return self.experiment["type"]

    def full_set(self, name: str) -> PovmSet:
        m = self.measurements[name]
        return m.povm if m.slot is None else lift_set(m.povm, m.slot, self.space)

    def two_time(self) -> TwoTimeExperiment:
        e = self.experiment
        return TwoTimeExperiment(self.state, self.full_set(e["first"]), self.evolution, self.full_set(e["second"]))

    def ewf(self) -> EwfExperiment:
        e = self.experiment
        sets = {k: tuple(self.measurements[n].povm for n in e[k]) for k in ("friends", "supers")}
        return EwfExperiment(
            self.state, self.space, sets["friends"], sets["supers"], self.evolution, tuple(e.get("settings", (None, None)))
        )

    def outcomes(self) -> list:
        """Outcome indices the law checks report on: the declared one, else all."""
        e = self.experiment
        if self.kind == "two-time":
            if e.get("outcome") is not None:
                return [e["outcome"]]
            return list(range(len(self.measurements[e["second"]].povm)))
        if e.get("outcomes") is not None:
            return [tuple(e["outcomes"])]
        la, lb = (len(self.measurements[n].povm) for n in e["supers"])
        return [(a, b) for a in range(la) for b in range(lb)]

    def resolve(self, ref: str) -> tuple[np.ndarray, int | None]:
        """``"Set:outcome"`` (index or label) or an operator name, as ``(matrix, slot)``."""
        if ref in self.operators:
            op = self.operators[ref]
            return op.matrix, op.slot
        name, sep, out = ref.rpartition(":")
        if not sep or name not in self.measurements:
            raise KeyError(f"unknown operator reference {ref!r}")
        m = self.measurements[name]
        names = m.povm.names
        idx = names.index(out) if out in names else int(out)
        return m.povm[idx].matrix, m.slot

    def resolve_full(self, ref: str) -> np.ndarray:
        mat, slot = self.resolve(ref)
        return mat if slot is None else lift(mat, slot, self.space)


# --- parsing helpers ---------------------------------------------------------

def _fail(path: str, msg: str):
    raise ScenarioParseError(path, msg)


def _is_num(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _complex(v, path: str) -> complex:
    if not (isinstance(v, list) and len(v) == 2 and all(_is_num(x) for x in v)):
        _fail(path, f"expected a complex number as [re, im], got {json.dumps(v)[:40]}")
    return complex(float(v[0]), float(v[1]))


def _cvector(v, path: str) -> np.ndarray:
    if not isinstance(v, list) or not v:
        _fail(path, "expected a non-empty list of [re, im] pairs")
    return np.array([_complex(x, f"{path}[{i}]") for i, x in enumerate(v)], dtype=np.complex128)


def _cmatrix(v, path: str) -> np.ndarray:
    if not isinstance(v, list) or not v:
        _fail(path, "expected a non-empty list of rows")
    rows = [_cvector(r, f"{path}[{i}]") for i, r in enumerate(v)]
    if len({r.size for r in rows}) != 1:
        _fail(path, "rows have different lengths")
    return np.vstack(rows)


def _obj(v, path: str, allowed=None, required=()) -> dict:
    if not isinstance(v, dict):
        _fail(path, f"expected an object, got {type(v).__name__}")
    for k in required:
        if k not in v:
            _fail(f"{path}.{k}" if path else k, "missing required field")
    if allowed is not None:
        extra = sorted(set(v) - set(allowed))
        if extra:
            _fail(f"{path}.{extra[0]}" if path else extra[0], "unknown field")
    return v


def _str(v, path: str) -> str:
    if not isinstance(v, str):
        _fail(path, "expected a string")
    return v


def _int(v, path: str) -> int:
    if not isinstance(v, int) or isinstance(v, bool):
        _fail(path, "expected an integer")
    return v


def _num(v, path: str) -> float:
    if not _is_num(v):
        _fail(path, "expected a number")
    return float(v)


class _Validating:
    """Turn domain errors raised inside the block into path-anchored ones."""

    def __init__(self, path: str):
        self.path = path

    def __enter__(self):
        return self

    def __exit__(self, typ, exc, tb):
        if exc is not None and isinstance(exc, (QTotalError, ValueError, KeyError, IndexError)) \
                and not isinstance(exc, (ScenarioParseError, ScenarioValidationError)):
            raise ScenarioValidationError(self.path, exc) from exc
        return False


# --- sections ----------------------------------------------------------------

def _parse_space(v) -> CompositeSpace:
    v = _obj(v, "space", {"factors"}, ("factors",))
    factors = v["factors"]
    if not isinstance(factors, list) or not factors:
        _fail("space.factors", "expected a non-empty list")
    items = []
    for i, f in enumerate(factors):
        p = f"space.factors[{i}]"
        f = _obj(f, p, {"label", "dim"}, ("label", "dim"))
        items.append((_str(f["label"], f"{p}.label"), _int(f["dim"], f"{p}.dim")))
    with _Validating("space"):
        return CompositeSpace(tuple(items))


def _parse_state(v, space: CompositeSpace) -> DensityOperator:
    v = _obj(v, "state", {"amplitudes", "density", "builtin", "theta", "index"})
    kinds = [k for k in ("amplitudes", "density", "builtin") if k in v]
    if len(kinds) != 1:
        _fail("state", "give exactly one of amplitudes, density or builtin")
    kind = kinds[0]
    with _Validating(f"state.{kind}"):
        if kind == "amplitudes":
            amp = _cvector(v["amplitudes"], "state.amplitudes")
            if amp.size != space.total_dim:
                _fail("state.amplitudes", f"{amp.size} amplitudes for a space of dimension {space.total_dim}")
            return PureState(amp, space.dims).density()
        if kind == "density":
            m = _cmatrix(v["density"], "state.density")
            if m.shape != (space.total_dim,) * 2:
                _fail("state.density", f"shape {m.shape} for a space of dimension {space.total_dim}")
            return DensityOperator(m, dims=space.dims)
        name = _str(v["builtin"], "state.builtin")
        n = space.total_dim
        if name == "brukner":
            from qtotal.scenarios import brukner_state

            if space.dims != (4, 4):
                _fail("state.builtin", "the brukner state needs two 4-dim factors")
            return brukner_state(_num(v.get("theta", np.pi / 2), "state.theta")).density()
        if name == "basis":
            idx = _int(v.get("index", 0), "state.index")
            return PureState(linalg.basis_vector(idx, n), space.dims).density()
        if name == "plus":
            return PureState(np.ones(n) / np.sqrt(n), space.dims).density()
        if name == "maximally-mixed":
            return DensityOperator.maximally_mixed(n, dims=space.dims)
        _fail("state.builtin", f"unknown builtin state {name!r}")


def _parse_evolution(v, dim: int) -> Evolution:
    if v is None or v == "identity":
        return Evolution.identity(dim)
    v = _obj(v, "evolution", {"unitary", "hamiltonian", "dt"})
    if "unitary" in v:
        m = _cmatrix(v["unitary"], "evolution.unitary")
        with _Validating("evolution.unitary"):
            if m.shape != (dim, dim):
                raise ValueError(f"shape {m.shape} for a space of dimension {dim}")
            return Evolution(m)
    if "hamiltonian" in v:
        h = _cmatrix(v["hamiltonian"], "evolution.hamiltonian")
        dt = _num(v.get("dt", 1.0), "evolution.dt")
        with _Validating("evolution.hamiltonian"):
            if h.shape != (dim, dim):
                raise ValueError(f"shape {h.shape} for a space of dimension {dim}")
            return Evolution.from_hamiltonian(h, dt)
    _fail("evolution", "expected \"identity\", {unitary} or {hamiltonian, dt}")


def _parse_measurement(name: str, v, space: CompositeSpace) -> LocalSet:
    p = f"measurements.{name}"
    v = _obj(v, p, {"slot", "elements", "builtin"})
    slot = None
    dim = space.total_dim
    if v.get("slot") is not None:
        with _Validating(f"{p}.slot"):
            slot = space.slot(v["slot"])
        dim = space.dims[slot]
    if ("elements" in v) == ("builtin" in v):
        _fail(p, "give exactly one of elements or builtin")
    with _Validating(p):
        if "builtin" in v:
            b = _str(v["builtin"], f"{p}.builtin")
            if b == "computational":
                return LocalSet(PovmSet.from_basis(np.eye(dim), setting_label=name), slot)
            if b not in BUILTIN_BASES:
                _fail(f"{p}.builtin", f"unknown builtin measurement {b!r}")
            if dim != 2:
                raise ValueError(f"{b} needs a qubit, slot has dimension {dim}")
            basis, names = BUILTIN_BASES[b]
            return LocalSet(PovmSet.from_basis(basis, names, name), slot)
        elems = v["elements"]
        if not isinstance(elems, list) or not elems:
            _fail(f"{p}.elements", "expected a non-empty list")
        mats, labels = [], []
        for i, e in enumerate(elems):
            ep = f"{p}.elements[{i}]"
            e = _obj(e, ep, {"label", "matrix"}, ("matrix",))
            m = _cmatrix(e["matrix"], f"{ep}.matrix")
            if m.shape != (dim, dim):
                _fail(f"{ep}.matrix", f"shape {m.shape}, expected ({dim}, {dim})")
            mats.append(m)
            labels.append(_str(e.get("label", str(i)), f"{ep}.label"))
        return LocalSet(PovmSet.from_matrices(mats, labels, name), slot)


def _parse_operator(name: str, v, space: CompositeSpace) -> LocalOperator:
    p = f"operators.{name}"
    v = _obj(v, p, {"slot", "matrix"}, ("matrix",))
    slot = None
    dim = space.total_dim
    if v.get("slot") is not None:
        with _Validating(f"{p}.slot"):
            slot = space.slot(v["slot"])
        dim = space.dims[slot]
    m = _cmatrix(v["matrix"], f"{p}.matrix")
    if m.shape != (dim, dim):
        _fail(f"{p}.matrix", f"shape {m.shape}, expected ({dim}, {dim})")
    return LocalOperator(m, slot)


def _outcome_index(v, povm: PovmSet, path: str) -> int:
    if isinstance(v, str):
        if v not in povm.names:
            _fail(path, f"unknown outcome {v!r}; set has {povm.names}")
        return povm.names.index(v)
    i = _int(v, path)
    if not 0 <= i < len(povm):
        _fail(path, f"outcome index {i} out of range")
    return i


def _parse_experiment(v, measurements: dict[str, LocalSet], space: CompositeSpace) -> dict:
    v = _obj(v, "experiment", None, ("type",))
    kind = _str(v["type"], "experiment.type")

    def ref(key, path):
        n = _str(key, path)
        if n not in measurements:
            _fail(path, f"unknown measurement {n!r}")
        return n

    if kind == "two-time":
        _obj(v, "experiment", {"type", "first", "second", "outcome"}, ("first", "second"))
        out = {"type": kind, "first": ref(v["first"], "experiment.first"), "second": ref(v["second"], "experiment.second")}
        if v.get("outcome") is not None:
            out["outcome"] = _outcome_index(v["outcome"], measurements[out["second"]].povm, "experiment.outcome")
        return out
    if kind == "ewf":
        _obj(v, "experiment", {"type", "friends", "supers", "outcomes", "settings"}, ("friends", "supers"))
        out = {"type": kind}
        for key in ("friends", "supers"):
            pair = v[key]
            if not (isinstance(pair, list) and len(pair) == 2):
                _fail(f"experiment.{key}", "expected two measurement names, one per lab")
            names = [ref(n, f"experiment.{key}[{i}]") for i, n in enumerate(pair)]
            for lab, n in enumerate(names):
                if measurements[n].slot != lab:
                    _fail(f"experiment.{key}[{lab}]", f"{n} must act on lab slot {space.labels[lab]}")
            out[key] = names
        if v.get("outcomes") is not None:
            o = v["outcomes"]
            if not (isinstance(o, list) and len(o) == 2):
                _fail("experiment.outcomes", "expected two outcomes")
            out["outcomes"] = [
                _outcome_index(x, measurements[out["supers"][i]].povm, f"experiment.outcomes[{i}]") for i, x in enumerate(o)
            ]
        if v.get("settings") is not None:
            out["settings"] = list(v["settings"])
        if len(space.factors) != 2:
            _fail("space.factors", "an ewf experiment needs exactly two factors")
        return out
    _fail("experiment.type", f"unknown experiment type {kind!r}; use two-time or ewf")


def _parse_checks(v) -> list[CheckSpec]:
    if not isinstance(v, list):
        _fail("checks", "expected a list")
    out = []
    for i, c in enumerate(v):
        p = f"checks[{i}]"
        if isinstance(c, str):
            name, params = c, {}
        else:
            c = _obj(c, p, None, ("check",))
            name = _str(c["check"], f"{p}.check")
            params = {k: x for k, x in c.items() if k != "check"}
            for k, x in params.items():
                if k not in ("n", "seed", "shards"):
                    _fail(f"{p}.{k}", "unknown check parameter")
                _int(x, f"{p}.{k}")
        if name not in KNOWN_CHECKS:
            _fail(p, f"unknown check {name!r}; known: {', '.join(KNOWN_CHECKS)}")
        out.append(CheckSpec(name, params))
    return out


def _parse_commutators(v, scenario: Scenario) -> list[tuple[str, str]]:
    if not isinstance(v, list):
        _fail("commutators", "expected a list of [ref, ref] pairs")
    out = []
    for i, pair in enumerate(v):
        p = f"commutators[{i}]"
        if not (isinstance(pair, list) and len(pair) == 2 and all(isinstance(x, str) for x in pair)):
            _fail(p, "expected a pair of operator references")
        for j, r in enumerate(pair):
            try:
                scenario.resolve(r)
            except (KeyError, ValueError, IndexError):
                _fail(f"{p}[{j}]", f"unknown operator reference {r!r}")
        out.append((pair[0], pair[1]))
    return out


TOP_LEVEL = {"name", "space", "state", "evolution", "measurements", "operators", "experiment",
             "commutators", "checks", "tolerance", "meta"}


def parse_document(doc: Any) -> Scenario:
    """Validate a decoded JSON document and build a :class:`Scenario`."""
    doc = _obj(doc, "", None)
    if "builtin" in doc:
        return _parse_builtin_ref(doc)
    _obj(doc, "", TOP_LEVEL, ("space", "state", "measurements", "experiment"))
    space = _parse_space(doc["space"])
    state = _parse_state(doc["state"], space)
    evolution = _parse_evolution(doc.get("evolution", "identity"), space.total_dim)
    meas = _obj(doc["measurements"], "measurements")
    if not meas:
        _fail("measurements", "at least one measurement is required")
    measurements = {k: _parse_measurement(k, x, space) for k, x in meas.items()}
    operators = {k: _parse_operator(k, x, space) for k, x in _obj(doc.get("operators", {}), "operators").items()}
    experiment = _parse_experiment(doc["experiment"], measurements, space)
    tol = _num(doc.get("tolerance", DEFAULT_TOL), "tolerance")
    if tol <= 0:
        _fail("tolerance", "must be positive")
    meta = _obj(doc.get("meta", {}), "meta")
    scn = Scenario(
        _str(doc.get("name", "scenario"), "name"), space, state, evolution, measurements, experiment,
        operators, [], _parse_checks(doc.get("checks", [])), tol, dict(meta),
    )
    scn.commutators = _parse_commutators(doc.get("commutators", []), scn)
    return scn


def _parse_builtin_ref(doc: dict) -> Scenario:
    from qtotal import library

    _obj(doc, "", {"builtin", "params", "checks", "tolerance", "name"})
    name = _str(doc["builtin"], "builtin")
    params = _obj(doc.get("params", {}), "params")
    scn = library.build(name, **params)
    if "checks" in doc:
        scn.checks = _parse_checks(doc["checks"])
    if "tolerance" in doc:
        scn.tolerance = _num(doc["tolerance"], "tolerance")
    if "name" in doc:
        scn.name = _str(doc["name"], "name")
    return scn


def loads(text: str) -> Scenario:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioParseError(f"{exc.lineno}:{exc.colno}", exc.msg) from exc
    return parse_document(doc)


def load(path) -> Scenario:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioParseError(str(path), f"cannot read file: {exc.strerror or exc}") from exc
    return loads(text)


# --- export ------------------------------------------------------------------

def _enc_c(z) -> list[float]:
    z = complex(z)
    return [float(z.real), float(z.imag)]


def _enc_m(m) -> list:
    return [[_enc_c(z) for z in row] for row in np.asarray(m)]


def to_document(scn: Scenario) -> dict:
    """Fully explicit document; re-parsing it rebuilds identical matrices."""
    labels = scn.space.labels
    doc = {
        "name": scn.name,
        "space": {"factors": [{"label": l, "dim": d} for l, d in scn.space.factors]},
        "state": {"density": _enc_m(scn.state.matrix)},
        "evolution": "identity" if np.array_equal(scn.evolution.unitary, np.eye(scn.space.total_dim))
        else {"unitary": _enc_m(scn.evolution.unitary)},
        "measurements": {
            k: {
                **({"slot": labels[m.slot]} if m.slot is not None else {}),
                "elements": [{"label": e.name, "matrix": _enc_m(e.matrix)} for e in m.povm],
            }
            for k, m in scn.measurements.items()
        },
        "experiment": dict(scn.experiment),
        "checks": [c.name if not c.params else {"check": c.name, **c.params} for c in scn.checks],
        "tolerance": scn.tolerance,
    }
    if scn.operators:
        doc["operators"] = {
            k: {**({"slot": labels[o.slot]} if o.slot is not None else {}), "matrix": _enc_m(o.matrix)}
            for k, o in scn.operators.items()
        }
    if scn.commutators:
        doc["commutators"] = [list(p) for p in scn.commutators]
    meta = dict(scn.meta)
    if scn.origin is not None:
        meta["exported_from"] = {"builtin": scn.origin[0], "params": scn.origin[1]}
    if meta:
        doc["meta"] = meta
    return doc


def dumps(scn: Scenario) -> str:
    return json.dumps(to_document(scn), indent=1)
