"""Deterministic artifact encoding and atomic file writes.

Canonical JSON: keys sorted, floats rendered with 17 significant digits,
complex numbers as objects {"im": ..., "re": ...}, no NaN or infinity.
Identical inputs produce identical bytes, so artifacts can be compared
byte for byte across runs.

All file writes go through a temporary file in the target directory
followed by an atomic rename, so readers never observe partial output.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from typing import Iterable, Sequence

from .errors import ParameterError


def _format_float(x: float) -> str:
    if not math.isfinite(x):
        raise ParameterError(f"cannot serialize non-finite number {x!r}")
    return format(x, ".17g")


def _encode(obj, out: list[str]) -> None:
    if obj is None:
        out.append("null")
    elif isinstance(obj, bool):
        out.append("true" if obj else "false")
    elif isinstance(obj, int):
        out.append(str(obj))
    elif isinstance(obj, float):
        out.append(_format_float(obj))
    elif isinstance(obj, complex):
        _encode({"im": obj.imag, "re": obj.real}, out)
    elif isinstance(obj, str):
        out.append(json.dumps(obj, ensure_ascii=True))
    elif isinstance(obj, dict):
        out.append("{")
        first = True
        for key in sorted(obj):
            if not isinstance(key, str):
                raise ParameterError(f"JSON keys must be strings, got {key!r}")
            if not first:
                out.append(",")
            first = False
            out.append(json.dumps(key, ensure_ascii=True))
            out.append(":")
            _encode(obj[key], out)
        out.append("}")
    elif isinstance(obj, (list, tuple)):
        out.append("[")
        for i, item in enumerate(obj):
            if i:
                out.append(",")
            _encode(item, out)
        out.append("]")
    else:
        raise ParameterError(f"cannot serialize {type(obj).__name__}")


def canonical_json(obj) -> str:
    out: list[str] = []
    _encode(obj, out)
    return "".join(out)


def format_number(x) -> str:
    """Number rendering for delimited text: ints verbatim, floats with 17
    significant digits."""
    if isinstance(x, bool):
        raise ParameterError("booleans are not numbers here")
    if isinstance(x, int):
        return str(x)
    return _format_float(float(x))


def csv_text(header: str, rows: Iterable[Sequence]) -> str:
    lines = [header]
    for row in rows:
        cells = []
        for cell in row:
            if isinstance(cell, str):
                cells.append(cell)
            else:
                cells.append(format_number(cell))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def atomic_write_bytes(path: str, data: bytes) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def atomic_write_text(path: str, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))
