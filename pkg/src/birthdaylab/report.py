"""Deterministic CSV / JSON emission.

Floats are written with 17 significant digits; exact rationals become a
``"num/den"`` string plus a ``<key>_value`` decimal field.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import math
from fractions import Fraction
from pathlib import Path
from typing import Any, Iterable

import mpmath
import numpy as np


def format_float(x: float) -> str:
    return format(float(x), ".17g")


def flatten_row(row: dict) -> dict:
    """Expand Fractions into string + decimal pair and coerce numeric scalars to plain floats."""
    out: dict[str, Any] = {}
    for key, value in row.items():
        if isinstance(value, Fraction):
            out[key] = f"{value.numerator}/{value.denominator}"
            out[f"{key}_value"] = float(value)
        else:
            out[key] = normalize(value)
    return out


def normalize(value: Any) -> Any:
    if isinstance(value, bool) or value is None or isinstance(value, str):
        return value
    if isinstance(value, enum.Enum):
        return value.value
    if isinstance(value, Fraction):
        return {"exact": f"{value.numerator}/{value.denominator}", "value": float(value)}
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating, mpmath.mpf)):
        return float(value)
    if isinstance(value, dict):
        return {str(k): normalize(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [normalize(v) for v in value]
    raise TypeError(f"cannot serialise {type(value).__name__}")


def _json(value: Any, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if value is None:
        return "null"
    if value is True:
        return "true"
    if value is False:
        return "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return format_float(value) if math.isfinite(value) else "null"
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, list):
        if not value:
            return "[]"
        if all(not isinstance(v, (dict, list)) for v in value):
            return "[" + ", ".join(_json(v, indent, level + 1) for v in value) + "]"
        return "[\n" + ",\n".join(pad + _json(v, indent, level + 1) for v in value) + "\n" + end + "]"
    if isinstance(value, dict):
        if not value:
            return "{}"
        items = (f"{pad}{json.dumps(k)}: {_json(v, indent, level + 1)}" for k, v in value.items())
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    raise TypeError(f"cannot serialise {type(value).__name__}")


def to_json(obj: Any, indent: int = 2) -> str:
    return _json(normalize(obj), indent, 0) + "\n"


def to_csv(rows: Iterable[dict], columns: list[str] | None = None) -> str:
    """Header row plus one line per row; LF line endings. Empty input gives a header-only file."""
    rows = [flatten_row(r) for r in rows]
    if columns is None:
        columns = []
        for r in rows:
            columns.extend(k for k in r if k not in columns)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_cell(r.get(c)) for c in columns])
    return buf.getvalue()


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return format_float(value) if math.isfinite(value) else "nan"
    if isinstance(value, (dict, list)):
        return to_json(value, indent=0).replace("\n", "")
    return str(value)


def emit(report: dict, fmt: str = "json", path: str | Path | None = None, columns: list[str] | None = None) -> str:
    """Serialise ``report`` (CSV takes its ``results`` rows) and write it to ``path`` if given."""
    if fmt == "json":
        text = to_json(report)
    elif fmt == "csv":
        text = to_csv(report.get("results", []), columns)
    else:
        raise ValueError(f"unknown format {fmt!r}; use csv or json")
    if path is not None:
        try:
            Path(path).write_text(text, newline="")
        except OSError as exc:
            raise OSError(f"cannot write report to {path}: {exc.strerror or exc}") from exc
    return text
