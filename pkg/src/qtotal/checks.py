"""Check runners behind ``qtotal run`` and ``qtotal sweep``.

Each runner takes a :class:`Scenario` and returns a :class:`CheckResult`.
A law that fails is reported through its residual; only checks that
cannot be evaluated raise :class:`CheckExecutionError`.
"""

from __future__ import annotations

import numpy as np

from qtotal import linalg, oracle
from qtotal.composite import check_corollary2, ewf_conditional, ewf_total_law_residual
from qtotal.errors import CheckExecutionError, QTotalError
from qtotal.measurement import P_MIN, bayes_gap, born_probability
from qtotal.report import CheckResult, Report
from qtotal.scenario_file import CheckSpec, Scenario
from qtotal.scenarios import appendix_d_report, guerin_marginal_check
from qtotal.twotime import check_theorem1, total_law_residual, two_time_conditional

PROB_SLACK = 1e-9
DEFAULT_SAMPLES = 100_000


def _prob(v: float, what: str) -> float:
    if not -PROB_SLACK <= v <= 1 + PROB_SLACK:
        raise CheckExecutionError(f"{what} = {v:.6g} lies outside [0, 1]")
    return min(max(float(v), 0.0), 1.0)


def _resid(v: float) -> float:
    return abs(float(v))


def _need(scn: Scenario, kind: str, check: str) -> None:
    if scn.kind != kind:
        raise CheckExecutionError(f"check {check!r} needs the {kind} experiment type, scenario has {scn.kind}")


def _ewf_label(scn: Scenario, ab) -> str:
    sa, sb = (scn.measurements[n].povm for n in scn.experiment["supers"])
    return f"{sa.names[ab[0]]},{sb.names[ab[1]]}"


def _two_time_label(scn: Scenario, j: int) -> str:
    return scn.measurements[scn.experiment["second"]].povm.names[j]


def total_law(scn: Scenario, spec: CheckSpec, tol: float, seed) -> CheckResult:
    res = CheckResult("total-law")
    for out in scn.outcomes():
        if scn.kind == "two-time":
            law, item = total_law_residual(scn.two_time(), out), _two_time_label(scn, out)
        else:
            law, item = ewf_total_law_residual(scn.ewf(), *out), _ewf_label(scn, out)
        res.add(item, "lhs", _prob(law.lhs, "lhs"))
        res.add(item, "rhs", _prob(law.rhs, "rhs"))
        res.add(item, "residual", _resid(law.residual))
    return res


def conditions(scn: Scenario, spec: CheckSpec, tol: float, seed) -> CheckResult:
    res = CheckResult("conditions")
    for out in scn.outcomes():
        if scn.kind == "two-time":
            rep, item = check_theorem1(scn.two_time(), out, tol), _two_time_label(scn, out)
        else:
            rep, item = check_corollary2(scn.ewf(), *out, tol), _ewf_label(scn, out)
        for e in rep:
            res.add(f"{item}:{e.condition}", "applicable", e.applicable)
            res.add(f"{item}:{e.condition}", "satisfied", e.satisfied)
            res.add(f"{item}:{e.condition}", "residual", _resid(e.residual))
        res.add(item, "any_satisfied", rep.any_satisfied())
    return res


def bayes(scn: Scenario, spec: CheckSpec, tol: float, seed) -> CheckResult:
    _need(scn, "two-time", "bayes-gap")
    exp = scn.two_time()
    res = CheckResult("bayes-gap")
    for a in exp.first:
        for b in exp.second:
            res.add(f"{a.name}|{b.name}", "gap", _resid(bayes_gap(exp.initial, a, b)))
    return res


def appendix_d(scn: Scenario, spec: CheckSpec, tol: float, seed) -> CheckResult:
    _need(scn, "ewf", "appendix-d")
    res = CheckResult("appendix-d")
    exp = scn.ewf()
    for out in scn.outcomes():
        r = appendix_d_report(exp, *out)
        item = _ewf_label(scn, out)
        res.add(item, "rhs_sum", _prob(r.rhs_sum, "rhs_sum"))
        res.add(item, "lhs", _prob(r.lhs, "lhs"))
        res.add(item, "residual", _resid(r.residual))
        res.add(item, "c3prime_lab1", _resid(r.c3prime_single_observer[0]))
        res.add(item, "c3prime_lab2", _resid(r.c3prime_single_observer[1]))
        res.add(item, "single_residual_lab1", _resid(r.single_observer_residuals[0]))
        res.add(item, "single_residual_lab2", _resid(r.single_observer_residuals[1]))
        res.add(item, "c5_residual", _resid(r.c5_residual))
    return res


def commutator_norm(scn: Scenario, left: str, right: str) -> float:
    """Frobenius norm of the commutator, on the shared lab when both act on one."""
    a, sa = scn.resolve(left)
    b, sb = scn.resolve(right)
    if sa != sb:
        a, b = scn.resolve_full(left), scn.resolve_full(right)
    return linalg.frobenius(linalg.commutator(a, b))


def commutators(scn: Scenario, spec: CheckSpec, tol: float, seed) -> CheckResult:
    if not scn.commutators:
        raise CheckExecutionError("scenario declares no commutator pairs")
    res = CheckResult("commutators")
    for left, right in scn.commutators:
        res.add(f"[{left},{right}]", "norm", commutator_norm(scn, left, right))
    return res


def _schedule(scn: Scenario):
    if scn.kind == "two-time":
        exp = scn.two_time()
        return exp, oracle.two_time_schedule(exp)
    exp = scn.ewf()
    return exp, oracle.ewf_schedule(exp)


def oracle_check(scn: Scenario, spec: CheckSpec, tol: float, seed) -> CheckResult:
    """Analytic conditionals and residuals next to the enumerated ones."""
    exp, sched = _schedule(scn)
    dist = oracle.enumerate(exp.initial, sched)
    res = CheckResult("oracle")
    worst = 0.0

    def row(item, analytic, brute):
        nonlocal worst
        diff = abs(analytic - brute)
        worst = max(worst, diff)
        res.add(item, "analytic", analytic)
        res.add(item, "oracle", brute)
        res.add(item, "difference", diff)

    if scn.kind == "two-time":
        firsts = [i for i, a in enumerate(exp.first) if born_probability(exp.initial, a) >= P_MIN]
        for j in scn.outcomes():
            for i in firsts:
                row(f"p({exp.second[j].name}|{exp.first[i].name})",
                    two_time_conditional(exp, i, j), dist.conditional({0: i}, 1, j))
            brute = oracle.oracle_total_law(exp.initial, exp.first, exp.evolution, exp.second, j)
            row(f"residual({exp.second[j].name})", total_law_residual(exp, j).residual, brute.residual)
    else:
        fj, sj = exp.friend_joint, exp.super_joint
        nb = len(exp.super_sets[1])
        for a, b in scn.outcomes():
            k = a * nb + b
            for c, d in exp.friend_outcomes():
                idx = c * len(exp.friend_sets[1]) + d
                if born_probability(exp.initial, fj[idx]) < P_MIN:
                    continue
                row(f"p({sj[k].name}|{fj[idx].name})", ewf_conditional(exp, c, d, a, b), dist.conditional({0: idx}, 1, k))
            brute = oracle.oracle_total_law(exp.initial, fj, exp.evolution, sj, k)
            row(f"residual({sj[k].name})", ewf_total_law_residual(exp, a, b).residual, brute.residual)
    res.add("all", "max_difference", worst)
    res.add("all", "agree", worst <= tol)
    return res


def sample_check(scn: Scenario, spec: CheckSpec, tol: float, seed) -> CheckResult:
    n = int(spec.params.get("n", DEFAULT_SAMPLES))
    # --seed from the command line wins over the file
    seed = spec.params.get("seed", 0) if seed is None else seed
    shards = int(spec.params.get("shards", 1))
    exp, sched = _schedule(scn)
    exact = oracle.enumerate(exp.initial, sched)
    emp = oracle.sample(exp.initial, sched, n, seed=seed, shards=shards)
    res = CheckResult("sample")
    worst_z = 0.0
    for key in sorted(set(exact.probabilities) | set(emp.probabilities)):
        p, q = exact[key], emp[key]
        sigma = oracle.sampling_sigma(p, n)
        z = abs(q - p) / sigma if sigma > 0 else (0.0 if q == p else float("inf"))
        worst_z = max(worst_z, z)
        label = exact.label(key)
        res.add(label, "exact", _prob(p, "exact"))
        res.add(label, "empirical", _prob(q, "empirical"))
        res.add(label, "sigma", sigma)
    res.add("all", "n", float(n))
    res.add("all", "seed", float(seed))
    res.add("all", "total_variation", oracle.total_variation(exact, emp))
    res.add("all", "max_z", worst_z)
    res.add("all", "within_3_sigma", worst_z <= 3.0)
    return res


def marginals(scn: Scenario, spec: CheckSpec, tol: float, seed) -> CheckResult:
    _need(scn, "two-time", "marginals")
    exp = scn.two_time()
    g = guerin_marginal_check(exp.initial, exp.first, exp.second, exp.evolution)
    res = CheckResult("marginals")
    for i, a in enumerate(exp.first):
        res.add(f"first:{a.name}", "joint_marginal", _prob(g.joint.sum(axis=1)[i], "marginal"))
        res.add(f"first:{a.name}", "born", _prob(g.first_marginals[i], "born"))
        res.add(f"first:{a.name}", "residual", _resid(g.first_residuals[i]))
    for j, b in enumerate(exp.second):
        res.add(f"second:{b.name}", "joint_marginal", _prob(g.joint.sum(axis=0)[j], "marginal"))
        res.add(f"second:{b.name}", "born", _prob(g.second_marginals[j], "born"))
        res.add(f"second:{b.name}", "residual", _resid(g.second_residuals[j]))
    return res


RUNNERS = {
    "total-law": total_law,
    "conditions": conditions,
    "bayes-gap": bayes,
    "appendix-d": appendix_d,
    "commutators": commutators,
    "oracle": oracle_check,
    "sample": sample_check,
    "marginals": marginals,
}


def run_check(scn: Scenario, spec: CheckSpec, tol: float | None = None, seed=None) -> CheckResult:
    tol = scn.tolerance if tol is None else tol
    try:
        return RUNNERS[spec.name](scn, spec, tol, seed)
    except CheckExecutionError:
        raise
    except (QTotalError, ValueError, ZeroDivisionError, np.linalg.LinAlgError) as exc:
        raise CheckExecutionError(f"{spec.name}: {exc}") from exc


def select_checks(scn: Scenario, names: list[str] | None) -> list[CheckSpec]:
    """Declared checks in order, filtered by ``names``; undeclared names run with defaults."""
    if not names:
        return list(scn.checks) or [CheckSpec("total-law")]
    declared = [c for c in scn.checks if c.name in names]
    present = {c.name for c in declared}
    return declared + [CheckSpec(n) for n in names if n not in present]


def run_scenario(scn: Scenario, names: list[str] | None = None, tol: float | None = None, seed=None) -> Report:
    return Report(scn.name, [run_check(scn, c, tol, seed) for c in select_checks(scn, names)])
