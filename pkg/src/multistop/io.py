"""File formats and data ingestion: delta tables, point sets, run results."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import InvalidParameter, NoRowForG, ParseError
from .precompute import SamplePointSet
from .validation import POLE_GUARD, in_lens


# --- delta tables ---------------------------------------------------------------

@dataclass(frozen=True)
class DeltaTable:
    """Rows of ``(g, Delta_1..Delta_N)``; lookups match ``g`` exactly."""

    g: tuple
    deltas: tuple

    def row(self, g: float) -> np.ndarray:
        g = float(g)
        for gi, row in zip(self.g, self.deltas):
            if gi == g:
                return np.array(row, dtype=float)
        raise NoRowForG(f"delta table has no row for g = {g!r} (available: {list(self.g)})")

    def __len__(self):
        return len(self.g)


def load_delta_table(path) -> DeltaTable:
    path = Path(path)
    if not path.is_file():
        raise ParseError("delta table not found", path=path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ParseError("empty delta table", path=path, line=1)
    header = [h.strip().lower() for h in rows[0]]
    n_terms = len(header) - 1
    if n_terms < 1 or header != ["g"] + [f"d{i}" for i in range(1, n_terms + 1)]:
        raise ParseError("expected header 'g,d1,...,dN'", path=path, line=1)
    gs, table = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != n_terms + 1:
            raise ParseError(f"expected {n_terms + 1} columns, got {len(row)}", path=path, line=lineno)
        try:
            values = [float(c) for c in row]
        except ValueError as exc:
            raise ParseError(str(exc), path=path, line=lineno) from None
        g, ds = values[0], values[1:]
        if gs and g <= gs[-1]:
            raise ParseError("g values must be strictly increasing", path=path, line=lineno)
        for i, d in enumerate(ds, start=1):
            if not (math.isfinite(d) and d > 0):
                raise ParseError(f"d{i} must be positive, got {d!r}", path=path, line=lineno)
            if abs(d - 1.0) < POLE_GUARD:
                raise ParseError(f"d{i} = {d!r} sits on the Delta = 1 pole", path=path, line=lineno)
        gs.append(g)
        table.append(tuple(ds))
    if not gs:
        raise ParseError("delta table has no data rows", path=path)
    return DeltaTable(tuple(gs), tuple(table))


# --- sample points ---------------------------------------------------------------

def generate_point_set(count: int = 180, seed: int = 0, min_margin: float = 0.05,
                       complex_points: bool = False) -> SamplePointSet:
    """Pseudo-random crossing-symmetric points inside the convergence lens.

    Real mode emits pairs ``(x, 1 - x)`` with ``x`` in ``(margin, 1/2)``; an
    odd count adds ``x = 1/2`` once. Complex mode emits quadruples
    ``(x, 1 - x, conj x, 1 - conj x)`` and fills any remainder with real pairs.
    """
    if int(count) != count or count < 1:
        raise InvalidParameter(f"count must be a positive integer, got {count!r}")
    if not 0 < min_margin < 0.5:
        raise InvalidParameter(f"min_margin must lie in (0, 1/2), got {min_margin!r}")
    rng = np.random.default_rng(seed)
    points: list[complex] = []
    seen: set[complex] = set()

    def push(*xs):
        if any(x in seen for x in xs):
            return False
        points.extend(xs)
        seen.update(xs)
        return True

    remaining = int(count)
    if remaining % 2:
        push(complex(0.5, 0.0))
        remaining -= 1
    if complex_points:
        # the lens is symmetric under x -> 1 - x and x -> conj x, so sampling
        # the quarter Re x < 1/2, Im x > 0 is enough
        height = math.sqrt((1.0 - min_margin) ** 2 - 0.25)
        while remaining >= 4:
            x = complex(rng.uniform(0.0, 0.5), rng.uniform(0.0, height))
            if x.imag == 0.0 or x.real == 0.5 or not in_lens(x, min_margin):
                continue
            if push(x, 1.0 - x, x.conjugate(), 1.0 - x.conjugate()):
                remaining -= 4
    while remaining >= 2:
        x = complex(rng.uniform(min_margin, 0.5), 0.0)
        if x.real == 0.5 or not in_lens(x, min_margin):
            continue
        if push(x, 1.0 - x):
            remaining -= 2
    return SamplePointSet(tuple(points))


def load_point_set(path) -> SamplePointSet:
    path = Path(path)
    if not path.is_file():
        raise ParseError("point-set file not found", path=path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or [h.strip().lower() for h in rows[0]] != ["re", "im"]:
        raise ParseError("expected header 're,im'", path=path, line=1)
    pts = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        try:
            pts.append(complex(float(row[0]), float(row[1])))
        except (ValueError, IndexError) as exc:
            raise ParseError(str(exc), path=path, line=lineno) from None
    try:
        return SamplePointSet(tuple(pts))
    except InvalidParameter as exc:
        raise ParseError(str(exc), path=path) from None


def save_point_set(points: SamplePointSet, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["re", "im"])
        for x in points.points:
            w.writerow([format(x.real, ".17g"), format(x.imag, ".17g")])
    return path
