"""``qtotal`` command line.

Exit status: 0 success (a failing law is still a success), 2 usage error,
3 unreadable or malformed scenario document, 4 invalid scenario contents,
5 a check could not be executed.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from qtotal import library
from qtotal.checks import run_check, run_scenario
from qtotal.errors import (
    CheckExecutionError,
    QTotalError,
    ScenarioParseError,
    UnknownParameterError,
)
from qtotal.report import SweepReport
from qtotal.scenario_file import KNOWN_CHECKS, CheckSpec, dumps, load

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_VALIDATION = 4
EXIT_CHECK = 5

SWEEP_CHECKS = ("total-law", "appendix-d", "conditions")


def parse_range(text: str) -> np.ndarray:
    """``start:stop:steps`` as an evenly spaced, monotone grid."""
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"range must be start:stop:steps, got {text!r}")
    try:
        start, stop, steps = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad range {text!r}: {exc}") from exc
    if steps < 1:
        raise argparse.ArgumentTypeError("range needs at least one step")
    return np.array([start]) if steps == 1 else np.linspace(start, stop, steps)


def _source(source: str) -> tuple[str, dict]:
    """Resolve a builtin name or a scenario file to ``(builtin, params)``."""
    if source in library.BUILTINS:
        return source, {}
    if not Path(source).exists():
        library.get(source)  # raises UnknownScenarioError for a bare unknown name
    try:
        doc = json.loads(Path(source).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ScenarioParseError(source, f"cannot read file: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise ScenarioParseError(f"{exc.lineno}:{exc.colno}", exc.msg) from exc
    if not isinstance(doc, dict) or "builtin" not in doc:
        raise UnknownParameterError(f"{source} is an explicit scenario and has no sweepable parameters")
    params = doc.get("params", {})
    if not isinstance(params, dict):
        raise ScenarioParseError("params", "expected an object")
    return doc["builtin"], dict(params)


def sweep(source: str, param: str, values, check: str = "total-law", tol: float | None = None) -> SweepReport:
    name, base = _source(source)
    b = library.get(name)
    if param not in b.defaults:
        raise UnknownParameterError(f"builtin {name!r} has no parameter {param!r}; known: {sorted(b.defaults) or 'none'}")
    rows: list[dict] = []
    columns = [param, "item"]
    for v in sorted(float(x) for x in values):
        scn = library.build(name, **{**base, param: v})
        result = run_check(scn, CheckSpec(check), tol)
        verdicts = {}
        if check == "total-law":
            cond = run_check(scn, CheckSpec("conditions"), tol)
            for item in cond.items():
                if ":" in item:
                    continue
                sat = [i.split(":", 1)[1] for i in cond.items() if i.startswith(item + ":") and cond.value(i, "satisfied")]
                verdicts[item] = " ".join(sat) if sat else "none"
        for item in result.items():
            row = {param: v, "item": item}
            for r in result.rows:
                if r.item == item:
                    row[r.quantity] = r.value
                    if r.quantity not in columns:
                        columns.append(r.quantity)
            if verdicts:
                row["satisfied_conditions"] = verdicts.get(item, "none")
            rows.append(row)
    if check == "total-law":
        columns.append("satisfied_conditions")
    return SweepReport(name, param, check, columns, rows)


def _checks_arg(text: str) -> list[str]:
    names = [c.strip() for c in text.split(",") if c.strip()]
    bad = [c for c in names if c not in KNOWN_CHECKS]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown check {bad[0]!r}; known: {', '.join(KNOWN_CHECKS)}")
    return names


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qtotal", description="Law-of-total-probability checks for quantum measurement scenarios.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the checks of a scenario file")
    run.add_argument("scenario", help="scenario JSON file")
    run.add_argument("--checks", type=_checks_arg, default=None, help="comma-separated subset of checks")
    run.add_argument("--format", choices=("table", "csv", "json"), default="table")
    run.add_argument("--tol", type=float, default=None, help="condition tolerance (default: the file's)")
    run.add_argument("--seed", type=int, default=None, help="seed for sampling checks")

    sw = sub.add_parser("sweep", help="sweep a builtin parameter")
    sw.add_argument("scenario", help="builtin name or a {builtin, params} file")
    sw.add_argument("--param", required=True)
    sw.add_argument("--range", dest="values", type=parse_range, required=True, metavar="START:STOP:STEPS")
    sw.add_argument("--check", choices=SWEEP_CHECKS, default="total-law")
    sw.add_argument("--format", choices=("table", "csv", "json"), default="csv")
    sw.add_argument("--tol", type=float, default=None)

    sub.add_parser("list", help="list builtin scenarios and their parameters")

    ex = sub.add_parser("export", help="write a builtin as an explicit scenario file")
    ex.add_argument("builtin")
    ex.add_argument("--param", action="append", default=[], metavar="NAME=JSON", help="override a builtin parameter")
    ex.add_argument("-o", "--output", default=None, help="output path (default: stdout)")
    return parser


def _export(args) -> str:
    params = {}
    for item in args.param:
        key, sep, raw = item.partition("=")
        if not sep:
            raise ScenarioParseError(f"--param {item}", "expected NAME=JSON")
        try:
            params[key] = json.loads(raw)
        except json.JSONDecodeError:
            params[key] = raw
    return dumps(library.build(args.builtin, **params)) + "\n"


def _list() -> str:
    lines = []
    for b in library.BUILTINS.values():
        params = ", ".join(f"{k}={json.dumps(library._plain(v))}" for k, v in b.defaults.items()) or "no parameters"
        lines.append(f"{b.name}: {b.doc}\n    params: {params}")
    return "\n".join(lines) + "\n"


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    out = sys.stdout
    stage = "load"
    try:
        if args.command == "list":
            out.write(_list())
        elif args.command == "export":
            text = _export(args)
            if args.output:
                Path(args.output).write_text(text, encoding="utf-8")
            else:
                out.write(text)
        elif args.command == "run":
            scn = load(args.scenario)
            stage = "check"
            out.write(run_scenario(scn, args.checks, args.tol, args.seed).render(args.format))
        else:
            out.write(sweep(args.scenario, args.param, args.values, args.check, args.tol).render(args.format))
    except ScenarioParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except CheckExecutionError as exc:
        print(f"check failed to run: {exc}", file=sys.stderr)
        return EXIT_CHECK
    except QTotalError as exc:
        if stage == "check":
            print(f"check failed to run: {exc}", file=sys.stderr)
            return EXIT_CHECK
        print(f"invalid scenario: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
