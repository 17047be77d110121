"""Deterministic JSON reports.

Dataclasses are written field by field in declaration order, complex
numbers as {"re", "im"} pairs, arrays as lists, and every float rounded to
12 significant digits.  Non-finite floats become the strings "inf", "-inf"
and "nan" so the output stays valid JSON.
"""
from __future__ import annotations

import dataclasses
import json
import math

import numpy as np

SCHEMA = "minsurf-report/1"
CONVENTIONS = {
    "length": "model units; dh is normalised with a unit constant, so the overall scale "
              "of each surface is conventional",
    "angles": "radians",
    "growth": "logarithmic growth alpha = -Re residue(dh); positive ends rise with rho",
    "complex": "complex numbers are written as {re, im}",
}


def _num(x: float):
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if x == 0.0:
        return 0.0
    return float(f"{x:.12g}")


def to_jsonable(obj):
    if obj is None or isinstance(obj, (bool, str)):
        return obj
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _num(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": _num(obj.real), "im": _num(obj.imag)}
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        out = {}
        for f in dataclasses.fields(obj):
            val = getattr(obj, f.name)
            if callable(val):
                continue
            out[f.name] = to_jsonable(val)
        return out
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if hasattr(obj, "to_dict"):
        return to_jsonable(obj.to_dict())
    return str(obj)


def envelope(command: str, result=None, error=None, **meta) -> dict:
    rec = {"schema": SCHEMA, "command": command}
    rec.update(meta)
    rec["conventions"] = CONVENTIONS
    rec["result"] = result
    rec["error"] = error
    return rec


def dumps(rec) -> str:
    return json.dumps(to_jsonable(rec), indent=2, allow_nan=False) + "\n"
