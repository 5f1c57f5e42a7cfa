"""Deterministic result files: JSON and CSV with 17-significant-digit floats.

Every output file embeds the resolved configuration: JSON files carry a
``config`` member, CSV files a leading ``# config: {...}`` comment line
(readers should skip ``#`` lines).  Nonfinite floats serialize as ``null``
in JSON; CSV cells render ``inf``/``nan`` literally.
"""

from __future__ import annotations

import math
from pathlib import Path

__all__ = ["format_float", "dumps_json", "write_json", "write_csv"]


def format_float(x: float) -> str:
    """Render a float with 17 significant digits (lossless round trip)."""
    return f"{x:.17g}"


def _encode(obj, indent: int, level: int) -> str:
    pad = " " * (indent * level)
    pad_in = " " * (indent * (level + 1))
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, str):
        return _encode_str(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        if not math.isfinite(obj):
            return "null"
        return format_float(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [
            f"{pad_in}{_encode_str(str(k))}: {_encode(v, indent, level + 1)}"
            for k, v in obj.items()
        ]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not len(obj):
            return "[]"
        items = [f"{pad_in}{_encode(v, indent, level + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    # numpy scalars and anything float-like
    if hasattr(obj, "item"):
        return _encode(obj.item(), indent, level)
    raise TypeError(f"cannot serialize {type(obj)!r}")


_ESCAPES = {'"': '\\"', "\\": "\\\\", "\n": "\\n", "\r": "\\r", "\t": "\\t"}


def _encode_str(s: str) -> str:
    out = []
    for ch in s:
        if ch in _ESCAPES:
            out.append(_ESCAPES[ch])
        elif ord(ch) < 0x20:
            out.append(f"\\u{ord(ch):04x}")
        else:
            out.append(ch)
    return '"' + "".join(out) + '"'


def dumps_json(obj, indent: int = 2) -> str:
    return _encode(obj, indent, 0) + "\n"


def write_json(path, obj) -> None:
    Path(path).write_text(dumps_json(obj), encoding="utf-8")


def write_csv(path, columns, rows, config_echo: dict | None = None) -> None:
    """Write a CSV with an optional config-echo comment line.

    ``rows`` is an iterable of sequences aligned with ``columns``; floats are
    rendered with 17 significant digits, everything else via ``str``.
    """
    lines = []
    if config_echo is not None:
        lines.append("# config: " + " ".join(dumps_json(config_echo, indent=0).split()))
    lines.append(",".join(columns))
    for row in rows:
        cells = []
        for v in row:
            if hasattr(v, "item"):
                v = v.item()
            if isinstance(v, bool):
                cells.append(str(v).lower())
            elif isinstance(v, float):
                cells.append(format_float(v))
            else:
                cells.append(str(v))
        lines.append(",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
