"""Seeded RNG stream derivation and deterministic JSON serialization."""

from __future__ import annotations

import math

import numpy as np

from .errors import NumericError

# Stream tags keep independent randomness consumers from colliding on one seed.
STREAM_SPLIT = 1
STREAM_FEATURE_SELECT = 2
STREAM_TREE = 3
STREAM_SEARCH = 4
STREAM_CV = 5
STREAM_SYNTH = 6


def derive_rng(seed: int, *stream: int) -> np.random.Generator:
    """A generator deterministically derived from (seed, stream path).

    Distinct stream paths give statistically independent streams, so parallel
    consumers (one per tree, per fold, ...) reproduce the serial result.
    """
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, stream)]))


def _format_float(x: float) -> str:
    if math.isnan(x) or math.isinf(x):
        raise NumericError(f"non-finite value {x!r} cannot be serialized to JSON")
    if x == 0.0:
        x = 0.0  # normalize -0.0 so bytes round-trip
    return format(x, ".17g")


def _write_json(obj, out: list[str]) -> None:
    if obj is None:
        out.append("null")
    elif obj is True:
        out.append("true")
    elif obj is False:
        out.append("false")
    elif isinstance(obj, str):
        out.append(_escape_string(obj))
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(_format_float(float(obj)))
    elif isinstance(obj, dict):
        out.append("{")
        for i, key in enumerate(sorted(obj)):
            if not isinstance(key, str):
                raise TypeError(f"JSON object keys must be strings, got {key!r}")
            if i:
                out.append(", ")
            out.append(_escape_string(key))
            out.append(": ")
            _write_json(obj[key], out)
        out.append("}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        out.append("[")
        for i, item in enumerate(obj):
            if i:
                out.append(", ")
            _write_json(item, out)
        out.append("]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__} to JSON")


_ESCAPES = {'"': '\\"', "\\": "\\\\", "\n": "\\n", "\r": "\\r", "\t": "\\t"}


def _escape_string(s: str) -> str:
    parts = ['"']
    for ch in s:
        if ch in _ESCAPES:
            parts.append(_ESCAPES[ch])
        elif ord(ch) < 0x20:
            parts.append(f"\\u{ord(ch):04x}")
        else:
            parts.append(ch)
    parts.append('"')
    return "".join(parts)


def dumps_json(obj) -> str:
    """Canonical JSON: sorted keys, floats at 17 significant digits.

    Identical objects always produce identical bytes, and load -> dump is a
    byte-level fixed point (floats round-trip exactly at 17 digits).
    """
    out: list[str] = []
    _write_json(obj, out)
    out.append("\n")
    return "".join(out)


def dump_json(obj, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(dumps_json(obj))
