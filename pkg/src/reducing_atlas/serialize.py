"""JSON and CSV encoders with a fixed float format (17 significant digits)."""
from __future__ import annotations

import csv
import io
import json
import math

import numpy as np


def fmt_float(x: float) -> str:
    return format(float(x), ".17g")


def to_plain(obj):
    """Convert numpy scalars/arrays and complex numbers to JSON-ready Python values.

    Complex numbers become ``[re, im]``; complex arrays become nested lists of
    such pairs (row-major).  Non-finite floats become ``None``.
    """
    if isinstance(obj, dict):
        return {str(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [to_plain(obj.real), to_plain(obj.imag)]
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    return obj


def _emit(obj, level: int, indent: int, out: list):
    pad = "\n" + " " * (indent * (level + 1))
    end = "\n" + " " * (indent * level)
    if isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{")
        for k, (key, v) in enumerate(obj.items()):
            out.append(("," if k else "") + pad + json.dumps(key) + ": ")
            _emit(v, level + 1, indent, out)
        out.append(end + "}")
    elif isinstance(obj, list):
        # short lists of scalars (complex pairs, permutations, table rows) stay on one line
        if all(not isinstance(v, (list, dict)) for v in obj):
            out.append("[" + ", ".join(_scalar(v) for v in obj) + "]")
            return
        out.append("[")
        for k, v in enumerate(obj):
            out.append(("," if k else "") + pad)
            _emit(v, level + 1, indent, out)
        out.append(end + "]")
    else:
        out.append(_scalar(obj))


def _scalar(v) -> str:
    if isinstance(v, float):
        text = fmt_float(v)
        return text if any(c in text for c in ".en") else text + ".0"
    return json.dumps(v)


def dumps(obj, indent: int = 1) -> str:
    """Deterministic JSON text: insertion-ordered keys, floats with 17 significant digits."""
    out = []
    _emit(to_plain(obj), 0, indent, out)
    return "".join(out) + "\n"


def loads(text: str):
    return json.loads(text)


def complex_from_pair(pair) -> complex:
    return complex(float(pair[0]), float(pair[1]))


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt_float(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()
