"""Deterministic CSV/JSON writers. Floats in CSV use 17 significant digits;
JSON uses Python's shortest round-trip repr. Both are exact for 64-bit."""

from __future__ import annotations

import csv
import io
import json
import math

import numpy as np


def fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def _plain(obj):
    """Convert numpy scalars/arrays and non-finite floats to JSON-safe values."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    return obj


def to_json(obj) -> str:
    return json.dumps(_plain(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def to_csv(columns: list, rows, header: dict | None = None) -> str:
    """CSV text with optional ``# key=value`` comment lines (sorted keys) before the column row."""
    buf = io.StringIO()
    for key in sorted(header or {}):
        buf.write(f"# {key}={fmt(header[key])}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def read_csv(text: str) -> tuple:
    """Inverse of :func:`to_csv`: (header dict of strings, column names, float array)."""
    header, body = {}, []
    for line in text.splitlines():
        if line.startswith("# "):
            key, _, value = line[2:].partition("=")
            header[key] = value
        elif line:
            body.append(line)
    reader = csv.reader(body)
    columns = next(reader)
    data = np.array([[float(v) for v in row] for row in reader], dtype=float)
    return header, columns, data.reshape(-1, len(columns))
