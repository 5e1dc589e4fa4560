"""Run reports emitted by the command line tool."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Any, Optional


def _clean(value):
    """Turn numpy scalars/arrays into JSON-native values; NaN becomes None."""
    if hasattr(value, "tolist"):
        value = value.tolist()
    if isinstance(value, float) and not math.isfinite(value):
        return None if math.isnan(value) else value
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    return value


@dataclass
class RunReport:
    command: str
    parameters: dict = field(default_factory=dict)
    results: list = field(default_factory=list)
    passed: Optional[bool] = None
    seed: int = 0
    wall_time_ms: Optional[int] = None

    def to_dict(self) -> dict:
        d = {
            "command": self.command,
            "parameters": _clean(self.parameters),
            "results": _clean(self.results),
            "pass": self.passed,
            "seed": self.seed,
        }
        if self.wall_time_ms is not None:
            d["wall_time_ms"] = self.wall_time_ms
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunReport":
        return cls(d["command"], d.get("parameters", {}), d.get("results", []),
                   d.get("pass"), d.get("seed", 0), d.get("wall_time_ms"))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "RunReport":
        return cls.from_dict(json.loads(text))

    def to_csv(self) -> str:
        rows = _clean(self.results)
        header: list = []
        for r in rows:
            for key in r:
                if key not in header:
                    header.append(key)
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=header, lineterminator="\n")
        writer.writeheader()
        for r in rows:
            writer.writerow({k: json.dumps(v) if isinstance(v, (list, dict)) else ("" if v is None else v)
                             for k, v in r.items()})
        return buf.getvalue()

    def to_pretty(self) -> str:
        lines = [f"{self.command}  seed={self.seed}"
                 + ("" if self.passed is None else f"  {'PASS' if self.passed else 'FAIL'}")]
        if self.parameters:
            lines.append("  " + ", ".join(f"{k}={v}" for k, v in _clean(self.parameters).items()))
        rows = _clean(self.results)
        if rows:
            header: list = []
            for r in rows:
                header += [k for k in r if k not in header]
            cells = [[_fmt(r.get(h)) for h in header] for r in rows]
            widths = [max(len(h), *(len(c[i]) for c in cells)) for i, h in enumerate(header)]
            lines.append("  ".join(h.ljust(w) for h, w in zip(header, widths)))
            lines.extend("  ".join(c.ljust(w) for c, w in zip(row, widths)) for row in cells)
        if self.wall_time_ms is not None:
            lines.append(f"({self.wall_time_ms} ms)")
        return "\n".join(lines)

    def render(self, fmt: str) -> str:
        if fmt == "json":
            return self.to_json()
        if fmt == "csv":
            return self.to_csv()
        return self.to_pretty()


def _fmt(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "yes" if v else "no"
    if isinstance(v, float):
        return f"{v:.6g}"
    if isinstance(v, list):
        return "[" + ",".join(_fmt(i) for i in v) + "]"
    return str(v)
