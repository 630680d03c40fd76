"""CSV and JSON emitters.

CSV follows RFC 4180 (``csv`` module, CRLF line ends) with floats written
to 15 significant digits.  JSON is written with sorted keys so that equal
inputs give byte-identical files.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, is_dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

EXPONENT_COLUMNS = ["d", "l", "family", "N", "rho", "rho_lower", "d_f", "d_w", "d_s", "tau"]


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating, Fraction)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return f"{x:.15g}"
    return "" if x is None else str(x)


def to_csv(rows, columns) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt(row.get(c)) for c in columns])
    return buf.getvalue()


def exponent_row(table, status="ok") -> dict:
    """ExponentTable -> CSV row with the crossover diagnostic column appended."""
    return {"d": table.d, "l": table.l, "family": table.family, "N": table.N, "rho": table.rho,
            "rho_lower": table.rho_lower_bound, "d_f": table.d_f, "d_w": table.d_w,
            "d_s": table.d_s, "tau": table.tau, "diagnostic": table.crossover_diagnostic,
            "status": status}


def _plain(obj):
    if is_dataclass(obj) and not isinstance(obj, type):
        return _plain(asdict(obj))
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float, Fraction)):
        x = float(obj)
        # JSON has no nan/inf; keep them readable as strings
        return x if math.isfinite(x) else fmt(x)
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):
        return obj.value
    return obj


def to_json(report) -> str:
    return json.dumps(_plain(report), sort_keys=True, indent=1) + "\n"


def gate_report(spec, operation, inputs, outputs, tolerances, passed) -> dict:
    return {"spec": spec, "operation": operation, "inputs": inputs, "outputs": outputs,
            "tolerances": tolerances, "pass": bool(passed)}


def write_text(path, text: str):
    path = Path(path)
    if path.parent != Path(""):
        path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", newline="") as fh:
        fh.write(text)
    tmp.replace(path)
