"""Deterministic JSON and CSV output.

Floats are printed with 17 significant digits and object keys are sorted, so
a fixed input produces identical bytes on every run.  Non-finite floats are
written as the strings ``"nan"``, ``"inf"`` and ``"-inf"``.
"""
from __future__ import annotations

import csv
import io
import json
import math
from fractions import Fraction
from pathlib import Path

import numpy as np

FORMATS = ("json", "csv")


def format_float(x: float) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    text = format(x, ".17g")
    if "e" not in text and "." not in text and "n" not in text:
        text += ".0"
    return text


def to_jsonable(obj):
    """Plain Python structure with reports, numpy scalars and tuples converted."""
    if hasattr(obj, "to_dict") and not isinstance(obj, type):
        return to_jsonable(obj.to_dict())
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, Fraction):
        return float(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else format_float(x)
    if obj is None or isinstance(obj, str):
        return obj
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _emit(obj, indent: int, level: int, out: list):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        for i, k in enumerate(sorted(obj)):
            out.append(f"{pad}{json.dumps(k)}: ")
            _emit(obj[k], indent, level + 1, out)
            out.append(",\n" if i < len(obj) - 1 else "\n")
        out.append(end + "}")
    elif isinstance(obj, list):
        if not obj:
            out.append("[]")
            return
        out.append("[\n")
        for i, v in enumerate(obj):
            out.append(pad)
            _emit(v, indent, level + 1, out)
            out.append(",\n" if i < len(obj) - 1 else "\n")
        out.append(end + "]")
    elif isinstance(obj, bool):
        out.append("true" if obj else "false")
    elif isinstance(obj, int):
        out.append(str(obj))
    elif isinstance(obj, float):
        out.append(format_float(obj))
    elif obj is None:
        out.append("null")
    else:
        out.append(json.dumps(obj))


def dumps(report, indent: int = 2) -> str:
    """Canonical JSON text of a report (trailing newline included)."""
    out: list = []
    _emit(to_jsonable(report), indent, 0, out)
    return "".join(out) + "\n"


def _csv_cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return format_float(v)
    return v


def csv_text(columns, rows) -> str:
    """CSV with a header; rows are mappings or sequences in column order."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        if isinstance(r, dict):
            r = [r.get(c, "") for c in columns]
        w.writerow([_csv_cell(v) for v in r])
    return buf.getvalue()


def report_csv(report) -> str:
    """CSV for reports exposing ``csv_columns`` and ``csv_rows``.

    Other reports become ``field,value`` rows of their scalar top-level fields.
    """
    if callable(getattr(report, "csv_rows", None)):
        cols = report.csv_columns() if callable(getattr(report, "csv_columns", None)) else report.CSV_COLUMNS
        return csv_text(cols, report.csv_rows())
    data = to_jsonable(report)
    rows = [(k, data[k]) for k in sorted(data) if not isinstance(data[k], (dict, list))]
    return csv_text(("field", "value"), rows)


def validate_report(report) -> None:
    """Check a report against the shipped schema for its ``report_type``."""
    from .schemas import validate

    data = to_jsonable(report)
    rtype = data.get("report_type")
    if rtype is None:
        raise ValueError("report has no report_type")
    validate(data, rtype)


def report_write(report, path, fmt: str = "json") -> Path | None:
    """Write ``report`` to ``path`` (``"-"`` or ``None`` for stdout)."""
    if fmt not in FORMATS:
        raise ValueError(f"format must be one of {FORMATS}")
    text = dumps(report) if fmt == "json" else report_csv(report)
    if path in (None, "-"):
        import sys

        sys.stdout.write(text)
        return None
    p = Path(path)
    p.write_text(text)
    return p


class Table:
    """Minimal CSV-capable report made of columns and rows."""

    def __init__(self, report_type: str, columns, rows, meta=None):
        self.report_type = report_type
        self.columns = list(columns)
        self.rows = [list(r) for r in rows]
        self.meta = dict(meta or {})

    def csv_columns(self):
        return self.columns

    def csv_rows(self):
        return self.rows

    def to_dict(self) -> dict:
        return {"report_type": self.report_type, **self.meta,
                "columns": self.columns, "rows": [dict(zip(self.columns, r)) for r in self.rows]}
