"""Deterministic JSON/CSV serialization helpers.

Every floating-point number in experiment outputs is written with 17
significant digits so reruns are byte-identical and values round-trip
exactly through text.
"""

from __future__ import annotations

import json
import math
import numbers


def fmt_float(x: float) -> str:
    """17-significant-digit representation; exact round trip for float64."""
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return f"{x:.17g}"


def dumps_json(obj, indent: int = 2) -> str:
    """JSON text with floats in fmt_float form and stable key order.

    Dict keys keep their insertion order (callers build them
    deterministically); containers may hold dicts, lists, strings, numbers,
    bools, and None. NaN/Infinity are emitted as quoted strings since JSON
    has no literals for them.
    """
    out: list[str] = []
    _emit(obj, out, indent, 0)
    return "".join(out) + "\n"


def dump_json(obj, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps_json(obj))


def _emit(obj, out: list[str], indent: int, level: int) -> None:
    pad = " " * (indent * (level + 1))
    close_pad = " " * (indent * level)
    if obj is None:
        out.append("null")
    elif isinstance(obj, bool):
        out.append("true" if obj else "false")
    elif isinstance(obj, numbers.Integral):
        out.append(str(int(obj)))
    elif isinstance(obj, numbers.Real):
        x = float(obj)
        if math.isnan(x) or math.isinf(x):
            out.append(json.dumps(fmt_float(x)))
        else:
            out.append(fmt_float(x))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        for idx, (key, val) in enumerate(obj.items()):
            out.append(pad + json.dumps(str(key)) + ": ")
            _emit(val, out, indent, level + 1)
            out.append(",\n" if idx < len(obj) - 1 else "\n")
        out.append(close_pad + "}")
    elif isinstance(obj, (list, tuple)):
        seq = list(obj)
        if not seq:
            out.append("[]")
            return
        out.append("[\n")
        for idx, val in enumerate(seq):
            out.append(pad)
            _emit(val, out, indent, level + 1)
            out.append(",\n" if idx < len(seq) - 1 else "\n")
        out.append(close_pad + "]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")
