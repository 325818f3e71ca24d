"""Input validation helpers in the spirit of ``sklearn.utils.validation``."""

from __future__ import annotations

import math

import numpy as np

from .exceptions import InvalidParameter, PoleAtDeltaOne

POLE_GUARD = 1e-9
DELTA_MAX = 10.0
OPE_SQ_MAX = 1.0


def check_coupling(g) -> float:
    g = float(g)
    if not (math.isfinite(g) and g > 0):
        raise InvalidParameter(f"coupling g must be a positive finite real, got {g!r}")
    return g


def check_delta(delta, index=None) -> float:
    delta = float(delta)
    if not (math.isfinite(delta) and delta > 0):
        raise InvalidParameter(f"Delta must be positive and finite, got {delta!r}")
    if abs(delta - 1.0) < POLE_GUARD:
        raise PoleAtDeltaOne(delta, index)
    return delta


def check_deltas(deltas) -> np.ndarray:
    arr = np.asarray(deltas, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise InvalidParameter(f"deltas must be a non-empty 1-D sequence, got shape {arr.shape}")
    for n, d in enumerate(arr):
        check_delta(d, index=n)
    return arr


def in_lens(x, margin: float = 0.0) -> bool:
    """True when both ``x`` and ``1 - x`` lie strictly inside the disc of radius ``1 - margin``."""
    return abs(x) < 1.0 - margin and abs(1.0 - x) < 1.0 - margin


def check_lens_point(x) -> complex:
    x = complex(x)
    if not in_lens(x):
        raise InvalidParameter(f"point {x!r} is outside the region |x| < 1, |1 - x| < 1")
    return x


def check_probability_like(name, value, low=0.0, high=1.0, *, open_low=False, open_high=False) -> float:
    value = float(value)
    lo_ok = value > low if open_low else value >= low
    hi_ok = value < high if open_high else value <= high
    if not (math.isfinite(value) and lo_ok and hi_ok):
        lb = "(" if open_low else "["
        rb = ")" if open_high else "]"
        raise InvalidParameter(f"{name} must lie in {lb}{low}, {high}{rb}, got {value!r}")
    return value


def check_positive_int(name, value, minimum: int = 1) -> int:
    if isinstance(value, bool) or int(value) != value or value < minimum:
        raise InvalidParameter(f"{name} must be an integer >= {minimum}, got {value!r}")
    return int(value)
