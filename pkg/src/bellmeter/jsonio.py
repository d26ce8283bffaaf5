"""JSON output with a fixed float contract.

The stdlib encoder prints floats with ``repr`` (shortest round-trip
form); the CLI instead promises every float with 17 significant digits,
so the emitter here formats them with ``%.17g`` itself.  Parsing is the
stdlib's job — only the writing side needs the custom path.
"""

from __future__ import annotations

import json
import math
import numbers

from .errors import StructureError


def _format_float(value: float) -> str:
    if not math.isfinite(value):
        raise StructureError(f"cannot emit non-finite value {value!r} as JSON")
    return format(value, ".17g")


def _emit(obj, out: list[str], indent: int, level: int) -> None:
    pad = " " * (indent * (level + 1))
    closing_pad = " " * (indent * level)
    if obj is None:
        out.append("null")
    elif isinstance(obj, bool):
        out.append("true" if obj else "false")
    elif isinstance(obj, numbers.Integral):
        out.append(str(int(obj)))
    elif isinstance(obj, numbers.Real):
        out.append(_format_float(float(obj)))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        for i, (key, value) in enumerate(obj.items()):
            if not isinstance(key, str):
                raise StructureError(f"JSON object keys must be strings, got {key!r}")
            out.append(pad)
            out.append(json.dumps(key))
            out.append(": ")
            _emit(value, out, indent, level + 1)
            out.append(",\n" if i + 1 < len(obj) else "\n")
        out.append(closing_pad + "}")
    elif isinstance(obj, (list, tuple)):
        if not len(obj):
            out.append("[]")
            return
        out.append("[\n")
        for i, value in enumerate(obj):
            out.append(pad)
            _emit(value, out, indent, level + 1)
            out.append(",\n" if i + 1 < len(obj) else "\n")
        out.append(closing_pad + "]")
    else:
        raise StructureError(f"cannot emit {type(obj).__name__} as JSON")


def dump_json(obj, indent: int = 2) -> str:
    """Serialize to JSON text; floats carry 17 significant digits."""
    out: list[str] = []
    _emit(obj, out, indent, 0)
    return "".join(out)


def parse_json(text: str):
    """Parse JSON text into plain Python objects."""
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise StructureError(f"invalid JSON: {exc}") from exc
