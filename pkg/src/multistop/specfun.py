"""Scalar special functions evaluated by direct power series.

Only what the conformal-block formulas need: the rising factorial, the Gauss
hypergeometric series inside the unit disc and the modified Bessel function
of the first kind at integer order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from numbers import Real

from .exceptions import InvalidParameter, NonConvergent

__all__ = ["SeriesControl", "DEFAULT_SERIES", "pochhammer", "hyp2f1", "bessel_i"]


@dataclass(frozen=True)
class SeriesControl:
    """Truncation rule for the power series.

    Summation stops once two consecutive terms fall below
    ``rel_tol * |partial sum| + abs_tol``; hitting ``max_terms`` first is an error.
    A ``2F1`` sum whose largest term exceeds the result by more than
    ``max_cancellation`` is rejected as well, since its trailing digits are
    rounding noise.
    """

    max_terms: int = 2000
    rel_tol: float = 1e-14
    abs_tol: float = 1e-30
    max_cancellation: float = 1e4

    def __post_init__(self):
        if int(self.max_terms) != self.max_terms or self.max_terms < 1:
            raise InvalidParameter(f"max_terms must be a positive integer, got {self.max_terms!r}")
        if not self.rel_tol > 0:
            raise InvalidParameter(f"rel_tol must be positive, got {self.rel_tol!r}")
        if not self.abs_tol > 0:
            raise InvalidParameter(f"abs_tol must be positive, got {self.abs_tol!r}")
        if not self.max_cancellation >= 1:
            raise InvalidParameter(f"max_cancellation must be at least 1, got {self.max_cancellation!r}")


DEFAULT_SERIES = SeriesControl()


def pochhammer(q: float, n: int) -> float:
    """Rising factorial ``q (q+1) ... (q+n-1)``; equal to 1 for ``n == 0``."""
    if n < 0 or int(n) != n:
        raise InvalidParameter(f"n must be a nonnegative integer, got {n!r}")
    out = 1.0
    for k in range(int(n)):
        out *= q + k
    return out


def _is_nonpositive_integer(c: float) -> bool:
    return c <= 0 and float(c).is_integer()


def hyp2f1(a: float, b: float, c: float, z: complex, ctl: SeriesControl = DEFAULT_SERIES) -> complex:
    """Gauss hypergeometric function by its defining series, ``|z| < 1`` only.

    Real ``z`` is summed in real arithmetic so the imaginary part of the
    result is exactly zero.
    """
    if _is_nonpositive_integer(c):
        raise InvalidParameter(f"c must not be zero or a negative integer, got {c!r}")
    if isinstance(z, complex) and z.imag == 0.0:
        z = z.real
    if abs(z) >= 1.0:
        raise InvalidParameter(f"series requires |z| < 1, got |z| = {abs(z)!r}")

    term = 1.0
    total = 1.0
    peak = 1.0
    small = 0
    for n in range(ctl.max_terms):
        term *= (a + n) * (b + n) / ((c + n) * (n + 1)) * z
        total += term
        peak = max(peak, abs(term))
        if abs(term) <= ctl.rel_tol * abs(total) + ctl.abs_tol:
            small += 1
            if small == 2:
                if peak > ctl.max_cancellation * abs(total):
                    raise NonConvergent(
                        f"2F1({a}, {b}; {c}; {z}): terms up to {peak:.3g} cancel to {abs(total):.3g}"
                    )
                return complex(total)
        else:
            small = 0
    raise NonConvergent(
        f"2F1({a}, {b}; {c}; {z}) did not converge within {ctl.max_terms} terms"
    )


def bessel_i(alpha: int, x: float, ctl: SeriesControl = DEFAULT_SERIES) -> float:
    """Modified Bessel function of the first kind ``I_alpha(x)`` for integer ``alpha >= 0``."""
    if int(alpha) != alpha or alpha < 0:
        raise InvalidParameter(f"alpha must be a nonnegative integer, got {alpha!r}")
    if not isinstance(x, Real) or x < 0:
        raise InvalidParameter(f"x must be a nonnegative real, got {x!r}")
    alpha = int(alpha)
    half = 0.5 * float(x)
    quarter_sq = half * half
    term = half**alpha / math.factorial(alpha)
    total = term
    if quarter_sq == 0.0:
        return total
    small = 0
    for m in range(ctl.max_terms):
        term *= quarter_sq / ((m + 1) * (m + 1 + alpha))
        total += term
        if abs(term) <= ctl.rel_tol * abs(total) + ctl.abs_tol:
            small += 1
            if small == 2:
                return total
        else:
            small = 0
    raise NonConvergent(f"I_{alpha}({x}) did not converge within {ctl.max_terms} terms")
