"""Best-k selection and the statistics reported over it.

Standard deviations use the population convention (divide by ``k``).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .environment import CftState
from .exceptions import InsufficientRuns, InvalidParameter, ParseError
from .search import RunRecord


class SumMode(str, Enum):
    DIRECT = "direct"
    PROPAGATED = "propagated"


def top_k(records, k: int) -> list:
    """The ``k`` records with the largest best reward; ties go to the lower seed."""
    if int(k) != k or k < 1:
        raise InvalidParameter(f"k must be a positive integer, got {k!r}")
    records = list(records)
    if len(records) < k:
        raise InsufficientRuns(f"need at least {k} runs, got {len(records)}")
    return sorted(records, key=lambda r: (-r.best_reward, r.seed))[:int(k)]


def _ope_matrix(records) -> np.ndarray:
    return np.array([r.best_state.ope_sq for r in records], dtype=float)


def _check_indices(indices, n_terms):
    idx = [int(i) for i in indices]
    if not idx:
        raise InvalidParameter("a sum group needs at least one index")
    for i in idx:
        if not 0 <= i < n_terms:
            raise InvalidParameter(f"index {i} outside 0..{n_terms - 1}")
    return idx


def sum_group_stats(records, indices, mode=SumMode.DIRECT):
    """Mean and std of ``sum_{i in indices} C2_i`` over ``records``.

    ``direct`` sums per record first; ``propagated`` combines per-coefficient
    statistics as if the coefficients were independent.
    """
    mode = SumMode(mode)
    ope = _ope_matrix(records)
    if ope.size == 0:
        raise InsufficientRuns("no records to aggregate")
    cols = ope[:, _check_indices(indices, ope.shape[1])]
    if mode is SumMode.DIRECT:
        sums = cols.sum(axis=1)
        return float(sums.mean()), float(sums.std())
    return float(cols.mean(axis=0).sum()), float(math.sqrt(cols.var(axis=0).sum()))


@dataclass(frozen=True)
class SumGroupStats:
    indices: tuple
    direct_mean: float
    direct_std: float
    propagated_mean: float
    propagated_std: float


@dataclass(frozen=True, eq=False)
class AggregateStats:
    """Statistics over the best ``k`` of ``n_runs`` records.

    ``mean``/``std``/``sem`` cover the full parameter vector
    ``(Delta_1..Delta_N, C2_1..C2_N)``; ``sem`` is ``std / sqrt(k)``.
    """

    k: int
    n_runs: int
    seeds: tuple
    rewards: tuple
    mean: np.ndarray
    std: np.ndarray
    sem: np.ndarray
    sum_groups: dict = field(default_factory=dict)

    @property
    def n_terms(self) -> int:
        return self.mean.size // 2

    @property
    def ope_mean(self) -> np.ndarray:
        return self.mean[self.n_terms:]

    @property
    def ope_std(self) -> np.ndarray:
        return self.std[self.n_terms:]

    def relative_errors(self, reference) -> np.ndarray:
        """``|mean / reference - 1|`` for each ``C^2``."""
        ref = np.asarray(reference, dtype=float)
        if ref.shape != self.ope_mean.shape:
            raise InvalidParameter("reference must have one value per term")
        return np.abs(self.ope_mean / ref - 1.0)

    def __eq__(self, other):
        if not isinstance(other, AggregateStats):
            return NotImplemented
        return (self.k == other.k and self.n_runs == other.n_runs and self.seeds == other.seeds
                and self.rewards == other.rewards and self.sum_groups == other.sum_groups
                and all(np.array_equal(getattr(self, a), getattr(other, a)) for a in ("mean", "std", "sem")))


def aggregate(records, k: int, sum_groups=None) -> AggregateStats:
    """Select the best ``k`` records and summarise them.

    ``sum_groups`` maps a label to 0-based ``C^2`` indices.
    """
    records = list(records)
    best = top_k(records, k)
    vecs = np.array([r.best_state.vector for r in best], dtype=float)
    std = vecs.std(axis=0)
    groups = {}
    for name, idx in (sum_groups or {}).items():
        dm, ds = sum_group_stats(best, idx, SumMode.DIRECT)
        pm, ps = sum_group_stats(best, idx, SumMode.PROPAGATED)
        groups[str(name)] = SumGroupStats(tuple(int(i) for i in idx), dm, ds, pm, ps)
    return AggregateStats(
        k=len(best),
        n_runs=len(records),
        seeds=tuple(r.seed for r in best),
        rewards=tuple(r.best_reward for r in best),
        mean=vecs.mean(axis=0),
        std=std,
        sem=std / math.sqrt(len(best)),
        sum_groups=groups,
    )


# --- results files ------------------------------------------------------------------

def _columns(n_terms):
    return (["seed", "best_reward"] + [f"d{i}" for i in range(1, n_terms + 1)]
            + [f"c{i}" for i in range(1, n_terms + 1)])


def write_results_csv(records, path) -> Path:
    """One row per run, sorted by seed."""
    records = sorted(records, key=lambda r: r.seed)
    if not records:
        raise InsufficientRuns("no records to write")
    n = records[0].best_state.n_terms
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(_columns(n))
        for r in records:
            w.writerow([r.seed, format(r.best_reward, ".17g")] + [format(v, ".17g") for v in r.best_state.vector])
    return path


def read_results_csv(path) -> list:
    """Records carrying seed, best reward and best state only."""
    path = Path(path)
    if not path.is_file():
        raise ParseError("results file not found", path=path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ParseError("empty results file", path=path, line=1)
    header = rows[0]
    n = (len(header) - 2) // 2
    if n < 1 or header != _columns(n):
        raise ParseError("expected header 'seed,best_reward,d1..dN,c1..cN'", path=path, line=1)
    out = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} columns, got {len(row)}", path=path, line=lineno)
        try:
            seed = int(row[0])
            values = [float(v) for v in row[1:]]
            state = CftState(values[1:1 + n], values[1 + n:])
        except (ValueError, InvalidParameter) as exc:
            raise ParseError(str(exc), path=path, line=lineno) from None
        out.append(RunRecord(best_reward=values[0], best_state=state, reward_history=[],
                             total_steps=0, seed=seed))
    return out


def format_summary(stats: AggregateStats, reference=None, fixed=None) -> str:
    """Human-readable summary block; ``fixed`` lists 0-based ``C^2`` indices held fixed."""
    n = stats.n_terms
    fixed = set(fixed or ())
    lines = [
        f"runs: {stats.n_runs}",
        f"top_k: {stats.k}",
        "best rewards: " + " ".join(format(r, ".6e") for r in stats.rewards),
        "",
        "param,mean,std,std_over_sqrt_k" + (",reference,rel_error" if reference is not None else ""),
    ]
    ref = None if reference is None else np.asarray(reference, dtype=float)
    for i in range(n):
        j = n + i
        row = f"c{i + 1},{stats.mean[j]:.12g},{stats.std[j]:.6g},{stats.sem[j]:.6g}"
        if ref is not None:
            row += f",{ref[i]:.12g},{abs(stats.mean[j] / ref[i] - 1.0):.6g}"
        if i in fixed:
            row += ",fixed"
        lines.append(row)
    if stats.sum_groups:
        lines += ["", "group,indices,direct_mean,direct_std,propagated_mean,propagated_std"]
        for name, g in stats.sum_groups.items():
            idx = "+".join(f"c{i + 1}" for i in g.indices)
            lines.append(f"{name},{idx},{g.direct_mean:.12g},{g.direct_std:.6g},"
                         f"{g.propagated_mean:.12g},{g.propagated_std:.6g}")
    return "\n".join(lines) + "\n"


__all__ = [
    "SumMode", "top_k", "sum_group_stats", "SumGroupStats", "AggregateStats", "aggregate",
    "write_results_csv", "read_results_csv", "format_summary",
]
