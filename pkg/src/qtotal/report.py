"""Check results and their table, CSV and JSON renderings.

Every float is rendered with ``format(v, ".12g")``. The JSON writer emits
the number parsed back from that string, so the CSV text and the JSON
value agree digit for digit.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

SIG_FORMAT = ".12g"


def format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format(v, SIG_FORMAT)
    return str(v)


def json_value(v):
    if isinstance(v, bool) or v is None:
        return v
    if isinstance(v, float):
        return float(format(v, SIG_FORMAT))
    return v


@dataclass(frozen=True)
class Row:
    item: str
    quantity: str
    value: object


@dataclass
class CheckResult:
    check: str
    rows: list[Row] = field(default_factory=list)

    def add(self, item: str, quantity: str, value) -> None:
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            value = float(value)
        self.rows.append(Row(str(item), quantity, value))

    def value(self, item: str, quantity: str):
        for r in self.rows:
            if r.item == item and r.quantity == quantity:
                return r.value
        raise KeyError((item, quantity))

    def items(self) -> list[str]:
        seen = []
        for r in self.rows:
            if r.item not in seen:
                seen.append(r.item)
        return seen


@dataclass
class Report:
    scenario: str
    checks: list[CheckResult] = field(default_factory=list)

    def __getitem__(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.check == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "checks": [
                {"check": c.check, "rows": [
                    {"item": r.item, "quantity": r.quantity, "value": json_value(r.value)} for r in c.rows
                ]}
                for c in self.checks
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["check", "item", "quantity", "value"])
        for c in self.checks:
            for r in c.rows:
                w.writerow([c.check, r.item, r.quantity, format_value(r.value)])
        return buf.getvalue()

    def to_table(self) -> str:
        out = [f"scenario: {self.scenario}"]
        for c in self.checks:
            out.append("")
            out.append(f"[{c.check}]")
            cells = [(r.item, r.quantity, format_value(r.value)) for r in c.rows]
            if not cells:
                out.append("  (no rows)")
                continue
            wi = max(len(x[0]) for x in cells)
            wq = max(len(x[1]) for x in cells)
            out += [f"  {i:<{wi}}  {q:<{wq}}  {v}" for i, q, v in cells]
        return "\n".join(out) + "\n"

    def render(self, fmt: str) -> str:
        return {"json": self.to_json, "csv": self.to_csv, "table": self.to_table}[fmt]()


@dataclass
class SweepReport:
    """One row per (parameter value, item); each quantity becomes a column."""

    scenario: str
    param: str
    check: str
    columns: list[str]
    rows: list[dict]

    def column(self, name: str) -> list:
        return [r.get(name) for r in self.rows]

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario, "param": self.param, "check": self.check, "columns": self.columns,
            "rows": [{k: json_value(r.get(k)) for k in self.columns} for r in self.rows],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([format_value(r.get(k, "")) for k in self.columns])
        return buf.getvalue()

    def to_table(self) -> str:
        cells = [self.columns] + [[format_value(r.get(k, "")) for k in self.columns] for r in self.rows]
        widths = [max(len(row[i]) for row in cells) for i in range(len(self.columns))]
        lines = ["  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() for row in cells]
        return f"scenario: {self.scenario}  sweep: {self.param}  check: {self.check}\n" + "\n".join(lines) + "\n"

    def render(self, fmt: str) -> str:
        return {"json": self.to_json, "csv": self.to_csv, "table": self.to_table}[fmt]()
