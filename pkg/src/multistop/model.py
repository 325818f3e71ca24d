"""Formula stack of the one-dimensional defect CFT crossing equation.

Blocks take a (possibly complex) point ``x``; everything that needs a
hypergeometric series requires ``|x| < 1`` and, for the crossed terms,
``|1 - x| < 1`` as well.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import DivergenceAtZero, InvalidParameter, OutOfTableRange, ParseError
from .specfun import DEFAULT_SERIES, SeriesControl, bessel_i, hyp2f1
from .validation import check_coupling, check_delta

LOG2 = math.log(2.0)
G_MIN = 1e-6


@dataclass(frozen=True)
class CurvatureTable:
    """Tabulated curvature ``C(g)``, linearly interpolated between rows."""

    g: tuple
    curvature: tuple

    def __post_init__(self):
        if len(self.g) == 0 or len(self.g) != len(self.curvature):
            raise InvalidParameter("curvature table must be non-empty with matching columns")
        if any(b <= a for a, b in zip(self.g, self.g[1:])):
            raise InvalidParameter("curvature table g values must be strictly increasing")

    @classmethod
    def from_pairs(cls, pairs):
        pairs = list(pairs)
        return cls(tuple(float(g) for g, _ in pairs), tuple(float(c) for _, c in pairs))

    def __call__(self, g: float) -> float:
        g = float(g)
        if g < self.g[0] or g > self.g[-1]:
            raise OutOfTableRange(f"g = {g} outside curvature table range [{self.g[0]}, {self.g[-1]}]")
        return float(np.interp(g, self.g, self.curvature))


def load_curvature_table(path) -> CurvatureTable:
    """Read a ``g,curvature`` CSV (header required)."""
    path = Path(path)
    if not path.is_file():
        raise ParseError("curvature file not found", path=path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or [h.strip().lower() for h in rows[0]] != ["g", "curvature"]:
        raise ParseError("expected header 'g,curvature'", path=path, line=1)
    pairs = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != 2:
            raise ParseError(f"expected 2 columns, got {len(row)}", path=path, line=lineno)
        try:
            pairs.append((float(row[0]), float(row[1])))
        except ValueError as exc:
            raise ParseError(str(exc), path=path, line=lineno) from None
    try:
        return CurvatureTable.from_pairs(pairs)
    except InvalidParameter as exc:
        raise ParseError(str(exc), path=path) from None


# --- conformal blocks -------------------------------------------------------

def block_identity(x: complex) -> complex:
    return x


def block_b2(x: complex, ctl: SeriesControl = DEFAULT_SERIES) -> complex:
    return x - x * hyp2f1(1.0, 2.0, 4.0, x, ctl)


def block_delta(delta: float, x: complex, ctl: SeriesControl = DEFAULT_SERIES) -> complex:
    """``x^(D+1) / (1-D) * 2F1(D+1, D+2; 2D+4; x)`` on the principal branch."""
    delta = check_delta(delta)
    if x == 0:
        return 0j
    if isinstance(x, complex) and x.imag == 0.0:
        x = x.real
    power = x ** (delta + 1.0) if (not isinstance(x, complex) and x > 0) else complex(x) ** (delta + 1.0)
    return complex(power / (1.0 - delta) * hyp2f1(delta + 1.0, delta + 2.0, 2.0 * delta + 4.0, x, ctl))


def big_f_delta(delta: float, x: complex, ctl: SeriesControl = DEFAULT_SERIES) -> complex:
    """Crossing-symmetric combination ``x^2 f(1-x) + (1-x)^2 f(x)`` of one block."""
    y = 1.0 - x
    return x * x * block_delta(delta, y, ctl) + y * y * block_delta(delta, x, ctl)


# --- coupling-dependent constants ---------------------------------------------

def _bessels(g: float, ctl: SeriesControl):
    g = check_coupling(g)
    if g < G_MIN:
        raise DivergenceAtZero(f"g = {g} is below {G_MIN}; the closed forms degenerate there")
    arg = 4.0 * math.pi * g
    return g, bessel_i(0, arg, ctl), bessel_i(1, arg, ctl), bessel_i(2, arg, ctl)


def f_of_g(g: float, ctl: SeriesControl = DEFAULT_SERIES) -> float:
    g, i0, i1, i2 = _bessels(g, ctl)
    pi = math.pi
    num = 3.0 * i1 * ((2.0 * pi**2 * g**2 + 1.0) * i1 - 2.0 * g * pi * i0)
    return num / (2.0 * g**2 * pi**2 * i2**2)


def c_bps_sq(g: float, ctl: SeriesControl = DEFAULT_SERIES) -> float:
    return f_of_g(g, ctl) - 1.0


def b_of_g(g: float, ctl: SeriesControl = DEFAULT_SERIES) -> float:
    g, _, i1, i2 = _bessels(g, ctl)
    return g / math.pi * i2 / i1


def rhs(i: int, g: float, curv: CurvatureTable, ctl: SeriesControl = DEFAULT_SERIES) -> float:
    """Right-hand side of integral constraint ``i`` (1 or 2) at coupling ``g``."""
    if i not in (1, 2):
        raise InvalidParameter(f"constraint index must be 1 or 2, got {i!r}")
    c = curv(g)
    big_f = f_of_g(g, ctl)
    big_b = b_of_g(g, ctl)
    if i == 1:
        return (big_b - 3.0 * c) / (8.0 * big_b**2) + (7.0 * LOG2 - 41.0 / 8.0) * (big_f - 1.0) + LOG2
    return (1.0 - big_f) / 6.0 + (2.0 - big_f) * LOG2 + 1.0 - c / (4.0 * big_b**2)


def h_func(x: complex, g: float, ctl: SeriesControl = DEFAULT_SERIES, *, bps=None) -> complex:
    """Known part of the crossing equation (identity plus BPS block).

    ``bps`` short-circuits the Bessel evaluation of ``C^2_BPS(g)`` when the
    caller has it already.
    """
    if bps is None:
        bps = c_bps_sq(g, ctl)
    y = 1.0 - x
    return x * x * (block_identity(y) + bps * block_b2(y, ctl)) + y * y * (block_identity(x) + bps * block_b2(x, ctl))


def crossing_sum(x: complex, g: float, deltas, ope_sq, ctl: SeriesControl = DEFAULT_SERIES) -> complex:
    """Truncated crossing equation ``h(x) + sum_n C^2_n F_{D_n}(x)``."""
    total = h_func(x, g, ctl)
    for d, c in zip(deltas, ope_sq):
        total += c * big_f_delta(d, x, ctl)
    return total


def crossing_from_blocks(x: complex, g: float, deltas, ope_sq, ctl: SeriesControl = DEFAULT_SERIES) -> complex:
    """Same equation assembled as ``x^2 f(1-x) + (1-x)^2 f(x)`` from the full block sum ``f``."""
    bps = c_bps_sq(g, ctl)

    def f(t):
        out = block_identity(t) + bps * block_b2(t, ctl)
        for d, c in zip(deltas, ope_sq):
            out += c * block_delta(d, t, ctl)
        return out

    y = 1.0 - x
    return x * x * f(y) + y * y * f(x)
