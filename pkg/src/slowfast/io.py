"""CSV / JSON writers with fixed, reproducible float formatting."""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

FLOAT_FMT = "{:.17g}"


def fmt(value) -> str:
    if isinstance(value, str):
        return value
    if value is None:
        return ""
    return FLOAT_FMT.format(float(value))


def csv_text(header, rows, comment=None) -> str:
    lines = []
    if comment:
        for c in str(comment).splitlines():
            lines.append(f"# {c}")
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def write_csv(path, header, rows, comment=None) -> Path:
    path = Path(path)
    path.write_text(csv_text(header, rows, comment))
    return path


def read_csv(path):
    """Return ``(header, array)``; comment lines are skipped."""
    lines = [ln for ln in Path(path).read_text().splitlines() if ln and not ln.startswith("#")]
    header = lines[0].split(",")
    data = []
    for ln in lines[1:]:
        row = []
        for tok in ln.split(","):
            try:
                row.append(float(tok))
            except ValueError:
                row.append(tok)
        data.append(row)
    return header, data


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else repr(f)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if hasattr(obj, "value") and hasattr(obj, "name") and not isinstance(obj, (int, float)):
        return obj.value  # enum
    return obj


def json_text(payload) -> str:
    return json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n"


def write_json(path, payload) -> Path:
    path = Path(path)
    path.write_text(json_text(payload))
    return path
