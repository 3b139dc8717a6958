"""Versioned report serialization: one JSON report per study plus CSV tables.

Schema (version "1"):
  report.json: {schema_version, kind, timestamp, config, environment,
                flags: {out_of_theory, ...}, tables: {name: {columns, rows}},
                summary: {...}}
  <table>.csv: header row of column names, then data rows.

Reports are deterministic given config and seed: keys are sorted, floats use
repr, and the timestamp is the single volatile field.
"""

from __future__ import annotations

import json
import os
import platform
from dataclasses import dataclass, field
from datetime import datetime, timezone

SCHEMA_VERSION = "1"

__all__ = ["SCHEMA_VERSION", "Table", "StudyReport"]


@dataclass
class Table:
    columns: list[str]
    rows: list[list] = field(default_factory=list)

    def append(self, *values):
        if len(values) != len(self.columns):
            raise ValueError("row length does not match columns")
        self.rows.append([_plain(v) for v in values])

    def to_dict(self) -> dict:
        return {"columns": self.columns, "rows": self.rows}

    def write_csv(self, path: str) -> None:
        with open(path, "w") as fh:
            fh.write(",".join(self.columns) + "\n")
            for row in self.rows:
                fh.write(",".join(_csv_cell(v) for v in row) + "\n")


def _plain(v):
    import numpy as np

    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, float) and v != v:  # NaN
        return None
    return v


def _csv_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _json_default(v):
    import math

    import numpy as np

    if isinstance(v, (np.floating,)):
        v = float(v)
    if isinstance(v, float) and math.isinf(v):
        return "saturated"
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (np.integer,)):
        return int(v)
    raise TypeError(f"not JSON serializable: {type(v)}")


def environment_stamp() -> dict:
    import numpy
    import scipy

    return {
        "python": platform.python_version(),
        "numpy": numpy.__version__,
        "scipy": scipy.__version__,
        "platform": platform.system().lower(),
    }


@dataclass
class StudyReport:
    kind: str
    config: dict
    flags: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)

    def add_table(self, name: str, columns: list[str]) -> Table:
        t = Table(columns=columns)
        self.tables[name] = t
        return t

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": self.kind,
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "config": self.config,
            "environment": environment_stamp(),
            "flags": self.flags,
            "tables": {k: t.to_dict() for k, t in self.tables.items()},
            "summary": self.summary,
        }

    def write(self, outdir: str) -> str:
        """Write report.json plus one CSV per table; returns the JSON path."""
        os.makedirs(outdir, exist_ok=True)
        path = os.path.join(outdir, "report.json")
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True, default=_json_default)
            fh.write("\n")
        for name, t in self.tables.items():
            t.write_csv(os.path.join(outdir, f"{name}.csv"))
        return path
