"""Constraint integrals of a conformal block over ``(0, 1/2)``.

Both integrands behave like a power of ``x`` at the origin. The interval
``(eps, 1/2)`` is integrated adaptively with a 15-point Kronrod rule (7-point
Gauss estimate embedded); ``(0, eps)`` is added in closed form from the
leading power of the block.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidDelta, InvalidParameter, NonConvergent
from .model import block_delta
from .specfun import DEFAULT_SERIES, SeriesControl
from .validation import check_delta

# Kronrod abscissae on [-1, 1] (non-negative half, descending); the odd
# positions 1, 3, 5, 7 are the 7-point Gauss nodes.
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
KRONROD_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
GAUSS_WEIGHTS = np.zeros(15)
GAUSS_WEIGHTS[[1, 3, 5]] = _WG[:3]
GAUSS_WEIGHTS[[9, 11, 13]] = _WG[2::-1]
GAUSS_WEIGHTS[7] = _WG[3]


@dataclass(frozen=True)
class QuadratureControl:
    rel_tol: float = 1e-12
    abs_tol: float = 1e-15
    max_subdivisions: int = 2000
    endpoint_offset: float = 1e-8

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise InvalidParameter("quadrature tolerances must be positive")
        if int(self.max_subdivisions) != self.max_subdivisions or self.max_subdivisions < 4:
            raise InvalidParameter("max_subdivisions must be an integer >= 4")
        if not 0 < self.endpoint_offset < 0.25:
            raise InvalidParameter("endpoint_offset must lie in (0, 1/4)")


DEFAULT_QUADRATURE = QuadratureControl()


def gauss_kronrod_panel(func, a: float, b: float):
    """Kronrod estimate and ``|Kronrod - Gauss|`` on one panel."""
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    values = np.array([func(mid + half * t) for t in NODES])
    kronrod = half * float(KRONROD_WEIGHTS @ values)
    gauss = half * float(GAUSS_WEIGHTS @ values)
    return kronrod, abs(kronrod - gauss)


def integrate_adaptive(func, a: float, b: float, rel_tol: float, abs_tol: float, max_subdivisions: int):
    """Globally adaptive bisection; returns ``(value, error_estimate, panels)``.

    The panel with the largest error estimate is split until the summed
    estimate meets ``max(abs_tol, rel_tol * |value|)``.
    """
    value, err = gauss_kronrod_panel(func, a, b)
    heap = [(-err, a, b, value)]
    total, total_err = value, err
    splits = 0
    while total_err > max(abs_tol, rel_tol * abs(total)):
        if splits >= max_subdivisions:
            raise NonConvergent(
                f"adaptive quadrature on [{a}, {b}] exceeded {max_subdivisions} subdivisions "
                f"(error estimate {total_err:.3e})"
            )
        neg_err, lo, hi, val = heapq.heappop(heap)
        mid = 0.5 * (lo + hi)
        left, left_err = gauss_kronrod_panel(func, lo, mid)
        right, right_err = gauss_kronrod_panel(func, mid, hi)
        heapq.heappush(heap, (-left_err, lo, mid, left))
        heapq.heappush(heap, (-right_err, mid, hi, right))
        splits += 1
        # re-sum instead of updating incrementally to avoid drift
        total = math.fsum(item[3] for item in heap)
        total_err = math.fsum(-item[0] for item in heap)
    return total, total_err, len(heap)


def _int1_weight(x: float) -> float:
    # -(x - 1 - x^2) / x^2 * d/dx log(x (1 - x))
    return -(x - 1.0 - x * x) / (x * x) * (1.0 / x - 1.0 / (1.0 - x))


def _int2_weight(x: float) -> float:
    return (2.0 * x - 1.0) / (x * x)


def _constraint_integral(delta, ctl, sctl, block, weight, leading_coeff, leading_power, full_output):
    eps = ctl.endpoint_offset

    def integrand(x):
        return weight(x) * block(delta, x, sctl).real

    body, err, panels = integrate_adaptive(integrand, eps, 0.5, ctl.rel_tol, ctl.abs_tol, ctl.max_subdivisions)
    # near 0 the block is A x^(D+1); A is read off the block itself so that
    # scaled or zero blocks keep the tail consistent
    amplitude = block(delta, eps, sctl).real / eps ** (delta + 1.0)
    tail = leading_coeff * amplitude * eps ** (leading_power + 1.0) / (leading_power + 1.0)
    value = body + tail
    if full_output:
        return value, err, {"body": body, "tail": tail, "panels": panels}
    return value


def int1(delta: float, ctl: QuadratureControl = DEFAULT_QUADRATURE, sctl: SeriesControl = DEFAULT_SERIES,
         *, block=block_delta, full_output: bool = False):
    """First constraint integral of the block at dimension ``delta`` (> 1).

    With ``full_output`` a tuple ``(value, error_estimate, info)`` is returned.
    """
    delta = check_delta(delta)
    if delta <= 1.0:
        raise InvalidDelta(f"Int1 needs Delta > 1 for an integrable integrand, got {delta!r}")
    # integrand ~ A x^(D+1) * x^(-3) at the origin
    return _constraint_integral(delta, ctl, sctl, block, _int1_weight, 1.0, delta - 2.0, full_output)


def int2(delta: float, ctl: QuadratureControl = DEFAULT_QUADRATURE, sctl: SeriesControl = DEFAULT_SERIES,
         *, block=block_delta, full_output: bool = False):
    """Second constraint integral of the block at dimension ``delta`` (> 0, != 1)."""
    delta = check_delta(delta)
    # integrand ~ -A x^(D-1) at the origin
    return _constraint_integral(delta, ctl, sctl, block, _int2_weight, -1.0, delta - 1.0, full_output)
