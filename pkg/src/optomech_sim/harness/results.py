"""Sweep tables and their CSV / JSON serialisation."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from ..errors import IOFailure

META_PREFIX = "# metadata: "


@dataclass
class SweepResult:
    """Rows of named columns plus a metadata block.

    Failed points stay in the table: cells that could not be computed are NaN
    and the ``error`` column carries the error code and message. ``extras``
    holds auxiliary tables (Wigner grids) written next to the main output.
    """

    columns: Sequence[str]
    rows: list[dict[str, Any]] = field(default_factory=list)
    metadata: dict[str, Any] = field(default_factory=dict)
    extras: dict[str, "SweepResult"] = field(default_factory=dict)

    def __post_init__(self):
        self.columns = list(self.columns)
        if "error" not in self.columns:
            self.columns.append("error")

    def add(self, **values) -> None:
        unknown = set(values) - set(self.columns)
        if unknown:
            raise KeyError(f"unknown columns {sorted(unknown)}")
        row = {c: values.get(c, math.nan) for c in self.columns}
        if row["error"] is None or (isinstance(row["error"], float) and math.isnan(row["error"])):
            row["error"] = ""
        self.rows.append(row)

    def column(self, name: str) -> np.ndarray:
        return np.array([r[name] for r in self.rows])

    def ok_rows(self) -> list[dict[str, Any]]:
        return [r for r in self.rows if not r["error"]]

    def __len__(self):
        return len(self.rows)


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % float(v)
    return str(v)


def _json_value(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        f = float(v)
        return f if math.isfinite(f) else None
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, dict):
        return {str(k): _json_value(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_json_value(x) for x in v]
    return v


def to_csv_text(result: SweepResult) -> str:
    buf = io.StringIO()
    meta = json.dumps(_json_value(result.metadata), sort_keys=True)
    buf.write(META_PREFIX + meta + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(result.columns)
    for row in result.rows:
        w.writerow([_cell(row[c]) for c in result.columns])
    return buf.getvalue()


def to_json_text(result: SweepResult) -> str:
    payload = {
        "metadata": _json_value(result.metadata),
        "columns": list(result.columns),
        "rows": [[_json_value(r[c]) for c in result.columns] for r in result.rows],
    }
    return json.dumps(payload, indent=1, sort_keys=False) + "\n"


def atomic_write(path, text: str) -> None:
    """Write ``text`` to a temporary file in the target directory, then rename."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
    except OSError as exc:
        raise IOFailure(f"cannot write {path}: {exc}") from exc


def write_result(result: SweepResult, path, fmt: str = "csv") -> None:
    text = to_csv_text(result) if fmt == "csv" else to_json_text(result)
    atomic_write(path, text)


def read_metadata(path) -> dict:
    """Metadata block of a CSV or JSON output file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IOFailure(f"cannot read {path}: {exc}") from exc
    if text.startswith(META_PREFIX):
        return json.loads(text.splitlines()[0][len(META_PREFIX):])
    try:
        return json.loads(text)["metadata"]
    except (ValueError, KeyError) as exc:
        raise IOFailure(f"{path} carries no metadata block") from exc


def read_table(path) -> tuple[list[str], list[list[str]]]:
    """Header and raw cell strings of a CSV output (metadata line skipped)."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    body = [ln for ln in lines if not ln.startswith("#")]
    rows = list(csv.reader(body))
    return rows[0], rows[1:]


def numeric_digest(path) -> str:
    """Everything except the metadata line, for determinism comparisons."""
    text = Path(path).read_text(encoding="utf-8")
    if text.startswith(META_PREFIX):
        return text.split("\n", 1)[1]
    payload = json.loads(text)
    return json.dumps({"columns": payload["columns"], "rows": payload["rows"]})
