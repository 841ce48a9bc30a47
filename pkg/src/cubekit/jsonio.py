"""Canonical JSON helpers: exact rationals, sorted keys, atomic writes.

Rationals serialize as [numerator, denominator]; integers stay integers.
Identical in-memory reports serialize to identical bytes.
"""

from __future__ import annotations

import json
import os
from fractions import Fraction

import numpy as np


def encode_number(x):
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, Fraction):
        return int(x) if x.denominator == 1 else [x.numerator, x.denominator]
    if isinstance(x, float):
        if x.is_integer():
            return int(x)
        f = Fraction(x).limit_denominator(10**9)
        return [f.numerator, f.denominator]
    raise TypeError(f"not a number: {x!r}")


def decode_number(v):
    if isinstance(v, list):
        return Fraction(int(v[0]), int(v[1]))
    if isinstance(v, (int, float)):
        f = Fraction(v)
        return int(f) if f.denominator == 1 else f
    raise ValueError(f"not a serialized number: {v!r}")


def parse_number(text: str):
    """Integers, fractions ('3/2'), and decimal strings ('1.5'), exactly."""
    f = Fraction(text)
    return int(f) if f.denominator == 1 else f


def jsonable(obj):
    """Recursively convert values (numpy, Fraction, sets) to JSON-safe types."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, (set, frozenset)):
        return sorted(jsonable(v) for v in obj)
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer, Fraction, float)):
        return encode_number(obj)
    if obj is None or isinstance(obj, str):
        return obj
    raise TypeError(f"cannot serialize {type(obj)}")


def canonical_dumps(obj) -> str:
    return json.dumps(jsonable(obj), sort_keys=True, separators=(",", ":")) + "\n"


def atomic_write(path: str, text: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


def load_json(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)
