"""Suite reports and their CSV / JSON serialization."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

METRIC_COLUMNS = ("suite", "metric", "value", "tolerance", "comparison", "passed")


def fmt(x) -> str:
    """Numbers with 12 significant digits; everything else via str."""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, float)) and not isinstance(x, bool):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return f"{x:.12g}"
    return str(x)


@dataclass
class Metric:
    name: str
    value: float
    tolerance: float
    comparison: str          # "<=", ">=", "true"
    passed: bool
    note: str = ""

    @classmethod
    def at_most(cls, name, value, tol, note=""):
        return cls(name, float(value), float(tol), "<=", bool(value <= tol), note)

    @classmethod
    def at_least(cls, name, value, tol, note=""):
        return cls(name, float(value), float(tol), ">=", bool(value >= tol), note)

    @classmethod
    def flag(cls, name, ok, note=""):
        return cls(name, float(bool(ok)), 1.0, "true", bool(ok), note)


@dataclass
class Table:
    name: str
    columns: tuple
    rows: list


@dataclass
class Report:
    suite: str
    metrics: list = field(default_factory=list)
    tables: list = field(default_factory=list)
    provenance: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(m.passed for m in self.metrics)

    def add(self, metric: Metric) -> Metric:
        if any(m.name == metric.name for m in self.metrics):
            raise ValueError(f"duplicate metric {metric.name!r}")
        self.metrics.append(metric)
        return metric

    def failures(self) -> list:
        return [m for m in self.metrics if not m.passed]

    def rows(self) -> list[tuple]:
        return [(self.suite, m.name, m.value, m.tolerance, m.comparison, m.passed)
                for m in self.metrics]

    def to_dict(self) -> dict:
        return {"suite": self.suite,
                "metrics": [asdict(m) for m in self.metrics],
                "tables": [{"name": t.name, "columns": list(t.columns),
                            "rows": [list(r) for r in t.rows]} for t in self.tables],
                "provenance": dict(self.provenance)}

    @classmethod
    def from_dict(cls, d: dict) -> "Report":
        return cls(d["suite"], [Metric(**m) for m in d["metrics"]],
                   [Table(t["name"], tuple(t["columns"]), [tuple(r) for r in t["rows"]])
                    for t in d["tables"]],
                   dict(d["provenance"]))


def csv_text(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    return buf.getvalue()


def metrics_csv(reports) -> str:
    rows = [r for rep in reports for r in rep.rows()]
    return csv_text(METRIC_COLUMNS, rows)


def _json_default(x):
    if hasattr(x, "item"):
        return x.item()
    raise TypeError(f"cannot serialize {type(x).__name__}")


def json_text(reports) -> str:
    return json.dumps([r.to_dict() for r in reports], indent=2, sort_keys=True,
                      default=_json_default) + "\n"


def emit_table(reports, path, fmt_name: str = "csv") -> Path:
    """Write the metric table (csv) or the full reports (json); UTF-8, newline \\n."""
    path = Path(path)
    if fmt_name == "csv":
        text = metrics_csv(reports)
    elif fmt_name == "json":
        text = json_text(reports)
    else:
        raise ValueError(f"unknown format {fmt_name!r}")
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path


def emit_extra_tables(reports, directory) -> list[Path]:
    """One CSV per auxiliary table, named <suite>__<table>.csv."""
    out = []
    for rep in reports:
        for t in rep.tables:
            p = Path(directory) / f"{rep.suite}__{t.name}.csv"
            with open(p, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(csv_text(t.columns, t.rows))
            out.append(p)
    return out
