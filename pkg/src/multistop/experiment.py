"""End-to-end experiments: problem setup, seeded parallel runs, reports."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .config import ExperimentConfig
from .environment import CftState, CrossingEnvironment, RewardConfig
from .exceptions import ConfigError, InvalidParameter, RunFailed
from .io import generate_point_set, load_delta_table, load_point_set
from .model import load_curvature_table
from .plotting import coefficient_plot, reward_plot, write_svg
from .precompute import BlockTable, build_table, load_table, plant_solution
from .sac import SacHyperParams
from .search import RunRecord, SearchSchedule, default_initial_state, run_search
from .stats import AggregateStats, aggregate, format_summary, top_k, write_results_csv


@dataclass(frozen=True, eq=False)
class Problem:
    """Everything a single search needs; shared read-only across runs."""

    table: BlockTable
    initial: CftState
    reward: RewardConfig
    reference: np.ndarray | None = None

    @property
    def free_ope(self) -> list:
        return [i for i in range(self.table.n_terms) if not self.initial.fixed_ope[i]]


def prepare_problem(cfg: ExperimentConfig) -> Problem:
    """Load and validate every input; raises before any search step."""
    if cfg.table:
        table = load_table(cfg.resolve(cfg.table))
        if table.g != cfg.g:
            raise ConfigError(f"cached table is for g = {table.g!r}, config asks for g = {cfg.g!r}")
    else:
        if cfg.deltas:
            deltas = np.array(cfg.deltas)
        else:
            deltas = load_delta_table(cfg.resolve(cfg.delta_table)).row(cfg.g)
        curv = load_curvature_table(cfg.resolve(cfg.curvature)) if cfg.curvature else None
        p = cfg.points
        if p.path:
            points = load_point_set(cfg.resolve(p.path))
        else:
            points = generate_point_set(p.count, p.seed, p.min_margin, p.complex_points)
        table = build_table(cfg.g, deltas, points, curv)
    n = table.n_terms
    for name in ("plant", "reference"):
        vals = getattr(cfg, name)
        if vals and len(vals) != n:
            raise ConfigError(f"problem.{name} needs {n} values, got {len(vals)}")
    for k in cfg.fixed:
        if not 0 <= k < n:
            raise ConfigError(f"fixed index c{k + 1} outside c1..c{n}")
    for grp in cfg.sum_groups:
        if any(not 0 <= k < n for k in grp):
            raise ConfigError(f"sum group outside c1..c{n}")
    if cfg.synthetic:
        table = plant_solution(table, cfg.plant)
    initial = default_initial_state(table, cfg.fixed)
    CrossingEnvironment(table, cfg.reward, initial)  # surfaces reward/table mismatches now
    ref = cfg.reference_values
    return Problem(table, initial, cfg.reward, None if ref is None else np.array(ref, dtype=float))


# --- runs ----------------------------------------------------------------------------

_WORKER: dict = {}


def _init_worker(problem, sac, schedule):
    _WORKER["args"] = (problem, sac, schedule)


def _one_run(problem: Problem, sac: SacHyperParams, schedule: SearchSchedule, seed: int) -> RunRecord:
    try:
        return run_search(problem.table, problem.reward, sac, schedule, seed=seed, initial=problem.initial)
    except Exception as exc:  # noqa: BLE001 - every failure is reported with its seed
        raise RunFailed(seed, exc) from exc


def _worker_run(seed: int) -> RunRecord:
    problem, sac, schedule = _WORKER["args"]
    return _one_run(problem, sac, schedule, seed)


def run_seeds(problem: Problem, sac: SacHyperParams, schedule: SearchSchedule, seeds, n_jobs: int = 1,
              progress=None) -> list:
    """Run one search per seed; the result is sorted by seed whatever the completion order."""
    seeds = [int(s) for s in seeds]
    if len(set(seeds)) != len(seeds):
        raise InvalidParameter("seeds must be distinct")
    records = []
    if n_jobs <= 1 or len(seeds) == 1:
        for s in seeds:
            records.append(_one_run(problem, sac, schedule, s))
            if progress:
                progress(records[-1])
    else:
        with ProcessPoolExecutor(max_workers=n_jobs, initializer=_init_worker,
                                 initargs=(problem, sac, schedule)) as pool:
            for rec in pool.map(_worker_run, seeds):
                records.append(rec)
                if progress:
                    progress(rec)
    return sorted(records, key=lambda r: r.seed)


@dataclass
class ExperimentResult:
    records: list
    stats: AggregateStats
    summary: str
    files: dict = field(default_factory=dict)


def summarize(cfg: ExperimentConfig, problem: Problem, records) -> tuple:
    groups = {"+".join(f"c{i + 1}" for i in grp): grp for grp in cfg.sum_groups}
    stats = aggregate(records, cfg.top_k, groups)
    fixed = [i for i in range(problem.table.n_terms) if problem.initial.fixed_ope[i]]
    summary = f"g: {cfg.g!r}\n" + format_summary(stats, problem.reference, fixed)
    return stats, summary


def write_reports(out_dir: Path, cfg: ExperimentConfig, problem: Problem, records, stats, summary) -> dict:
    out_dir.mkdir(parents=True, exist_ok=True)
    fixed = [i for i in range(problem.table.n_terms) if problem.initial.fixed_ope[i]]
    best = top_k(records, stats.k)
    return {
        "results": write_results_csv(records, out_dir / "results.csv"),
        "summary": _write_text(out_dir / "summary.txt", summary),
        "coefficients": write_svg(coefficient_plot(stats, best, problem.reference, fixed,
                                                   title=f"g = {cfg.g:g}, best {stats.k} runs"),
                                  out_dir / "coefficients.svg"),
        "rewards": write_svg(reward_plot({cfg.g: [r.best_reward for r in records]}), out_dir / "rewards.svg"),
    }


def _write_text(path: Path, text: str) -> Path:
    path.write_text(text)
    return path


def run_experiment(cfg: ExperimentConfig, *, write: bool = True, progress=None) -> ExperimentResult:
    """Seeds ``base_seed .. base_seed + run_count - 1``, aggregated over the best ``top_k``."""
    problem = prepare_problem(cfg)
    out_dir = cfg.output_path() if write else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
    seeds = range(cfg.base_seed, cfg.base_seed + cfg.run_count)
    records = run_seeds(problem, cfg.sac, cfg.schedule, seeds, cfg.n_jobs, progress)
    stats, summary = summarize(cfg, problem, records)
    files = write_reports(out_dir, cfg, problem, records, stats, summary) if write else {}
    return ExperimentResult(records, stats, summary, files)


# --- constraint ablation -----------------------------------------------------------------

@dataclass(frozen=True)
class Variant:
    name: str
    w1: float
    w2: float

    def reward_config(self, base: RewardConfig) -> RewardConfig:
        return replace(base, w1=self.w1, w2=self.w2, use_constraints=bool(self.w1 or self.w2))


@dataclass
class VariantReport:
    variant: Variant
    records: list
    stats: AggregateStats
    coefficient_errors: np.ndarray
    median_error: float
    crossing_norm: float
    median_run_error: float


@dataclass
class AblationReport:
    reports: list

    def ratio(self, baseline: int = 0, other: int = -1) -> float:
        """Baseline median error over the other variant's; above 1 means improvement."""
        b, o = self.reports[baseline].median_error, self.reports[other].median_error
        if o == 0:
            return math.inf if b > 0 else 1.0
        return b / o

    def text(self) -> str:
        lines = ["variant,w1,w2,median_rel_error,median_run_rel_error,crossing_norm,per_coefficient_rel_error"]
        for r in self.reports:
            per = " ".join(format(e, ".4e") for e in r.coefficient_errors)
            lines.append(f"{r.variant.name},{r.variant.w1:g},{r.variant.w2:g},{r.median_error:.6e},"
                         f"{r.median_run_error:.6e},{r.crossing_norm:.6e},{per}")
        if len(self.reports) > 1:
            lines.append(f"improvement ratio ({self.reports[0].variant.name} / {self.reports[-1].variant.name}): "
                         f"{self.ratio():.4g}")
        return "\n".join(lines) + "\n"


def ablation_compare(cfg: ExperimentConfig, variants, *, write: bool = False, progress=None) -> AblationReport:
    """Run every constraint variant on the same seeds and compare against the reference values.

    Errors cover free coefficients only: relative error of the best-``k``
    mean per coefficient, then the median over coefficients.
    """
    variants = list(variants)
    if len(variants) < 2:
        raise InvalidParameter("an ablation needs at least two variants")
    base = prepare_problem(cfg)
    if base.reference is None:
        raise ConfigError("ablation needs reference values (problem.reference or problem.plant)")
    # validate every variant before the first run
    problems = []
    for v in variants:
        p = replace(base, reward=v.reward_config(cfg.reward))
        CrossingEnvironment(p.table, p.reward, p.initial)
        problems.append(p)
    seeds = range(cfg.base_seed, cfg.base_seed + cfg.run_count)
    free = base.free_ope
    reports = []
    for v, p in zip(variants, problems):
        records = run_seeds(p, cfg.sac, cfg.schedule, seeds, cfg.n_jobs, progress)
        stats = aggregate(records, cfg.top_k)
        errs = stats.relative_errors(base.reference)[free]
        best = top_k(records, cfg.top_k)
        run_errs = np.array([np.abs(r.best_state.ope_sq / base.reference - 1.0)[free] for r in best])
        mean_state = stats.ope_mean
        resid = base.table._stacked[1] + base.table._stacked[0] @ mean_state
        reports.append(VariantReport(v, records, stats, errs, float(np.median(errs)),
                                     float(np.linalg.norm(resid)), float(np.median(run_errs))))
    report = AblationReport(reports)
    if write:
        out = cfg.output_path()
        out.mkdir(parents=True, exist_ok=True)
        _write_text(out / "ablation.txt", report.text())
    return report


__all__ = [
    "Problem", "prepare_problem", "run_seeds", "ExperimentResult", "summarize", "write_reports",
    "run_experiment", "Variant", "VariantReport", "AblationReport", "ablation_compare",
]
