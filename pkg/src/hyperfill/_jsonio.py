"""Canonical JSON serialization.

Reports and artifacts are compared byte for byte across reruns, so floats
are always written with 17 significant digits (enough to round-trip an IEEE
double), keys are sorted, and the layout is fixed.  NaN and infinities are
not representable in JSON; builders are expected to map them to ``None``
before serializing, and `canonical_dumps` raises if one slips through.
"""

from __future__ import annotations

import json
import math

import numpy as np

from .errors import ConfigError


def sanitize(obj):
    """Recursively convert numpy containers/scalars to plain Python types."""
    if isinstance(obj, dict):
        return {str(k): sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [sanitize(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [sanitize(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def _write(obj, parts, indent):
    pad = "  " * indent
    if obj is None:
        parts.append("null")
    elif obj is True:
        parts.append("true")
    elif obj is False:
        parts.append("false")
    elif isinstance(obj, int):
        parts.append(str(obj))
    elif isinstance(obj, float):
        if not math.isfinite(obj):
            raise ConfigError("non-finite float in canonical JSON output")
        parts.append(format(obj, ".17g"))
    elif isinstance(obj, str):
        parts.append(json.dumps(obj))
    elif isinstance(obj, dict):
        if not obj:
            parts.append("{}")
            return
        parts.append("{\n")
        keys = sorted(obj)
        for i, k in enumerate(keys):
            parts.append(pad + "  " + json.dumps(str(k)) + ": ")
            _write(obj[k], parts, indent + 1)
            parts.append(",\n" if i + 1 < len(keys) else "\n")
        parts.append(pad + "}")
    elif isinstance(obj, (list, tuple)):
        if not len(obj):
            parts.append("[]")
            return
        parts.append("[\n")
        for i, v in enumerate(obj):
            parts.append(pad + "  ")
            _write(v, parts, indent + 1)
            parts.append(",\n" if i + 1 < len(obj) else "\n")
        parts.append(pad + "]")
    else:
        raise ConfigError(f"cannot serialize object of type {type(obj).__name__}")


def canonical_dumps(obj) -> str:
    """Serialize `obj` to the canonical JSON text (trailing newline included)."""
    parts = []
    _write(sanitize(obj), parts, 0)
    parts.append("\n")
    return "".join(parts)


def write_json(path, obj):
    with open(path, "w") as fh:
        fh.write(canonical_dumps(obj))


def read_json(path):
    with open(path) as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
