"""One-time evaluation of everything the search needs at fixed dimensions.

A :class:`BlockTable` holds ``F_Delta_n(x_k)`` for every sample point and
term, ``h(x_k)``, both constraint integrals per term and the constraint
right-hand sides. Searching then only needs a matrix-vector product.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import InvalidParameter, MultiStopError, ParseError
from .model import CurvatureTable, big_f_delta, c_bps_sq, h_func, rhs
from .quadrature import DEFAULT_QUADRATURE, QuadratureControl, int1, int2
from .specfun import DEFAULT_SERIES, SeriesControl
from .validation import check_coupling, check_deltas, in_lens

TABLE_FORMAT_VERSION = 1


@dataclass(frozen=True)
class SamplePointSet:
    points: tuple

    def __post_init__(self):
        if len(self.points) == 0:
            raise InvalidParameter("a sample point set needs at least one point")
        seen = set()
        for x in self.points:
            x = complex(x)
            if not in_lens(x):
                raise InvalidParameter(f"sample point {x!r} is outside the convergence lens")
            if x in seen:
                raise InvalidParameter(f"duplicate sample point {x!r}")
            seen.add(x)

    @property
    def count(self) -> int:
        return len(self.points)

    def as_array(self) -> np.ndarray:
        return np.array(self.points, dtype=complex)


@dataclass(frozen=True, eq=False)
class BlockTable:
    """Precomputed crossing-equation and constraint data at coupling ``g``.

    ``rhs1``/``rhs2`` may be NaN when no curvature data was supplied; such a
    table is only usable with constraints switched off or after
    :func:`plant_solution`.
    """

    g: float
    deltas: np.ndarray
    points: np.ndarray
    f_matrix: np.ndarray
    h_vector: np.ndarray
    int1_vec: np.ndarray
    int2_vec: np.ndarray
    rhs1: float
    rhs2: float
    _stacked: tuple = field(init=False, repr=False)

    def __post_init__(self):
        n_pts, n_terms = self.points.shape[0], self.deltas.shape[0]
        if self.f_matrix.shape != (n_pts, n_terms):
            raise InvalidParameter(f"f_matrix has shape {self.f_matrix.shape}, expected {(n_pts, n_terms)}")
        if self.h_vector.shape != (n_pts,):
            raise InvalidParameter("h_vector length does not match the point count")
        if self.int1_vec.shape != (n_terms,) or self.int2_vec.shape != (n_terms,):
            raise InvalidParameter("integral vectors must have one entry per term")
        for name in ("f_matrix", "h_vector", "int1_vec", "int2_vec"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise InvalidParameter(f"{name} contains non-finite entries")
        for arr in (self.deltas, self.points, self.f_matrix, self.h_vector, self.int1_vec, self.int2_vec):
            arr.setflags(write=False)
        # real-stacked copies: the complex residual as 2K reals
        f_real = np.ascontiguousarray(np.vstack([self.f_matrix.real, self.f_matrix.imag]))
        h_real = np.concatenate([self.h_vector.real, self.h_vector.imag])
        object.__setattr__(self, "_stacked", (f_real, h_real))

    @property
    def n_terms(self) -> int:
        return self.deltas.shape[0]

    @property
    def n_points(self) -> int:
        return self.points.shape[0]

    @property
    def has_rhs(self) -> bool:
        return math.isfinite(self.rhs1) and math.isfinite(self.rhs2)

    def __eq__(self, other):
        if not isinstance(other, BlockTable):
            return NotImplemented
        scalars = all(
            a == b or (math.isnan(a) and math.isnan(b))
            for a, b in ((self.g, other.g), (self.rhs1, other.rhs1), (self.rhs2, other.rhs2))
        )
        return scalars and all(
            np.array_equal(getattr(self, k), getattr(other, k))
            for k in ("deltas", "points", "f_matrix", "h_vector", "int1_vec", "int2_vec")
        )

    __hash__ = None

    def with_updates(self, **changes) -> "BlockTable":
        kwargs = {k: getattr(self, k) for k in
                  ("g", "deltas", "points", "f_matrix", "h_vector", "int1_vec", "int2_vec", "rhs1", "rhs2")}
        kwargs.update(changes)
        return BlockTable(**kwargs)


def _annotate(exc: MultiStopError, n=None, k=None):
    parts = []
    if n is not None:
        parts.append(f"term n={n}")
        if getattr(exc, "index", None) is None:
            exc.index = n if k is None else (n, k)
    if k is not None:
        parts.append(f"point k={k}")
    exc.args = (f"{exc} [{', '.join(parts)}]",) + exc.args[1:]
    return exc


def build_table(g, deltas, points, curv: CurvatureTable | None = None,
                qctl: QuadratureControl = DEFAULT_QUADRATURE,
                sctl: SeriesControl = DEFAULT_SERIES) -> BlockTable:
    """Evaluate blocks, integrals and right-hand sides at exact dimensions.

    ``points`` is a :class:`SamplePointSet` or a sequence of complex numbers.
    Without ``curv`` the right-hand sides are left as NaN.
    """
    g = check_coupling(g)
    deltas = check_deltas(deltas)
    if not isinstance(points, SamplePointSet):
        points = SamplePointSet(tuple(complex(p) for p in points))
    pts = points.as_array()

    bps = c_bps_sq(g, sctl)
    f_matrix = np.empty((pts.size, deltas.size), dtype=complex)
    h_vector = np.empty(pts.size, dtype=complex)
    for k, x in enumerate(pts):
        x = complex(x)
        try:
            h_vector[k] = h_func(x, g, sctl, bps=bps)
        except MultiStopError as exc:
            raise _annotate(exc, k=k)
        for n, d in enumerate(deltas):
            try:
                f_matrix[k, n] = big_f_delta(float(d), x, sctl)
            except MultiStopError as exc:
                raise _annotate(exc, n=n, k=k)

    int1_vec = np.empty(deltas.size)
    int2_vec = np.empty(deltas.size)
    for n, d in enumerate(deltas):
        try:
            int1_vec[n] = int1(float(d), qctl, sctl)
            int2_vec[n] = int2(float(d), qctl, sctl)
        except MultiStopError as exc:
            raise _annotate(exc, n=n)

    if curv is None:
        rhs1 = rhs2 = math.nan
    else:
        rhs1 = rhs(1, g, curv, sctl)
        rhs2 = rhs(2, g, curv, sctl)
    return BlockTable(g, deltas.copy(), pts, f_matrix, h_vector, int1_vec, int2_vec, float(rhs1), float(rhs2))


def plant_solution(table: BlockTable, ope_sq) -> BlockTable:
    """Synthetic problem whose exact solution is ``ope_sq``.

    The known parts are replaced by ``h = -F c*`` and ``RHS_i = -Int_i . c*``
    so the crossing residual and both constraints vanish at the plant.
    """
    c = np.asarray(ope_sq, dtype=float)
    if c.shape != (table.n_terms,):
        raise InvalidParameter(f"planted vector must have {table.n_terms} entries, got shape {c.shape}")
    return table.with_updates(
        h_vector=-(table.f_matrix @ c),
        rhs1=float(-(table.int1_vec @ c)),
        rhs2=float(-(table.int2_vec @ c)),
    )


# --- CSV cache -------------------------------------------------------------------

def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def table_to_csv(table: BlockTable) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["#multistop-blocktable", TABLE_FORMAT_VERSION])
    w.writerow(["g", _fmt(table.g)])
    w.writerow(["[deltas]"])
    w.writerow([_fmt(d) for d in table.deltas])
    w.writerow(["[points]"])
    w.writerow(["re", "im"])
    for x in table.points:
        w.writerow([_fmt(x.real), _fmt(x.imag)])
    w.writerow(["[f_matrix]"])
    w.writerow([f"{part}{n + 1}" for n in range(table.n_terms) for part in ("re", "im")])
    for row in table.f_matrix:
        w.writerow([_fmt(v) for z in row for v in (z.real, z.imag)])
    w.writerow(["[h_vector]"])
    w.writerow(["re", "im"])
    for z in table.h_vector:
        w.writerow([_fmt(z.real), _fmt(z.imag)])
    w.writerow(["[integrals]"])
    w.writerow(["int1", "int2"])
    for a, b in zip(table.int1_vec, table.int2_vec):
        w.writerow([_fmt(a), _fmt(b)])
    w.writerow(["[rhs]"])
    w.writerow(["rhs1", "rhs2"])
    w.writerow([_fmt(table.rhs1), _fmt(table.rhs2)])
    return buf.getvalue()


def save_table(table: BlockTable, path) -> Path:
    path = Path(path)
    path.write_text(table_to_csv(table))
    return path


def load_table(path) -> BlockTable:
    path = Path(path)
    if not path.is_file():
        raise ParseError("table file not found", path=path)
    rows = list(csv.reader(path.read_text().splitlines()))
    if not rows or rows[0][:1] != ["#multistop-blocktable"]:
        raise ParseError("not a multistop block table", path=path, line=1)
    if int(rows[0][1]) != TABLE_FORMAT_VERSION:
        raise ParseError(f"unsupported table format version {rows[0][1]}", path=path, line=1)

    sections = {}
    current = None
    header_g = None
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if row[0] == "g" and current is None:
            header_g = float(row[1])
        elif len(row) == 1 and row[0].startswith("[") and row[0].endswith("]"):
            current = row[0][1:-1]
            sections[current] = []
        elif current is not None:
            sections[current].append((lineno, row))
    try:
        deltas = np.array([float(v) for v in sections["deltas"][0][1]])
        pts_rows = sections["points"][1:]
        points = np.array([complex(float(r[0]), float(r[1])) for _, r in pts_rows])
        f_rows = [np.array([float(v) for v in r]) for _, r in sections["f_matrix"][1:]]
        f_matrix = np.array([r[0::2] + 1j * r[1::2] for r in f_rows], dtype=complex).reshape(len(points), len(deltas))
        h_vector = np.array([complex(float(r[0]), float(r[1])) for _, r in sections["h_vector"][1:]])
        ints = [(float(r[0]), float(r[1])) for _, r in sections["integrals"][1:]]
        rhs_row = sections["rhs"][1][1]
    except (KeyError, IndexError, ValueError) as exc:
        raise ParseError(f"malformed table: {exc}", path=path) from None
    if header_g is None:
        raise ParseError("missing g header", path=path)
    return BlockTable(
        g=header_g,
        deltas=deltas,
        points=points,
        f_matrix=f_matrix,
        h_vector=h_vector,
        int1_vec=np.array([a for a, _ in ints]),
        int2_vec=np.array([b for _, b in ints]),
        rhs1=float(rhs_row[0]),
        rhs2=float(rhs_row[1]),
    )


__all__ = [
    "SamplePointSet", "BlockTable", "build_table", "plant_solution",
    "table_to_csv", "save_table", "load_table",
]
