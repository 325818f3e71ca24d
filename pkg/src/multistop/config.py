"""Experiment configuration file.

Grammar: INI-style flat sections of ``key = value`` lines; ``#`` starts a
comment line. Lists are comma separated. Term indices in the file are
1-based (``c1``, ``c2``, ...). Relative paths resolve against the
directory holding the config file.

Sections and keys (defaults in :class:`ExperimentConfig`)::

    [problem]   g, deltas | delta_table | table, curvature, plant, reference
    [fixed]     cN = value
    [points]    path | count, seed, min_margin, complex
    [reward]    form, w1, w2, use_constraints, cap
    [sac]       reward_scale, tau, gamma, learning_rate, hidden_sizes,
                batch_size, buffer_capacity
    [schedule]  faff_max, pc_max, max_window_exp, window_rate
    [run]       run_count, top_k, base_seed, n_jobs, output_dir, sum_groups

``sum_groups`` is a comma separated list of ``c2+c3`` style expressions.
"""

from __future__ import annotations

import configparser
import math
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

from .environment import RewardConfig, RewardForm
from .exceptions import ConfigError, InvalidParameter, ParseError
from .sac import SacHyperParams
from .search import DESK_SCHEDULE, SearchSchedule

DESK_SAC = SacHyperParams(hidden_sizes=(32, 32), batch_size=32, buffer_capacity=20_000)


@dataclass(frozen=True)
class PointSpec:
    """Either a ``re,im`` CSV path or generator settings."""

    path: str = ""
    count: int = 180
    seed: int = 0
    min_margin: float = 0.05
    complex_points: bool = False


@dataclass(frozen=True)
class ExperimentConfig:
    g: float = 1.0
    deltas: tuple = ()
    delta_table: str = ""
    table: str = ""
    curvature: str = ""
    plant: tuple = ()
    reference: tuple = ()
    fixed: dict = field(default_factory=dict)
    points: PointSpec = PointSpec()
    reward: RewardConfig = RewardConfig()
    sac: SacHyperParams = DESK_SAC
    schedule: SearchSchedule = DESK_SCHEDULE
    run_count: int = 16
    top_k: int = 4
    base_seed: int = 0
    n_jobs: int = 1
    output_dir: str = "multistop-out"
    sum_groups: tuple = ()
    base_dir: str = field(default=".", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "deltas", tuple(float(d) for d in self.deltas))
        object.__setattr__(self, "plant", tuple(float(c) for c in self.plant))
        object.__setattr__(self, "reference", tuple(float(c) for c in self.reference))
        object.__setattr__(self, "fixed", {int(k): float(v) for k, v in sorted(self.fixed.items())})
        object.__setattr__(self, "sum_groups", tuple(tuple(int(i) for i in grp) for grp in self.sum_groups))
        if not (math.isfinite(self.g) and self.g > 0):
            raise ConfigError(f"g must be positive, got {self.g!r}")
        sources = [bool(self.deltas), bool(self.delta_table), bool(self.table)]
        if sum(sources) != 1:
            raise ConfigError("give exactly one of problem.deltas, problem.delta_table, problem.table")
        for name in ("run_count", "top_k", "n_jobs"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"run.{name} must be at least 1")
        if self.top_k > self.run_count:
            raise ConfigError("run.top_k cannot exceed run.run_count")
        n = self.n_terms_hint
        if n is not None:
            for name in ("plant", "reference"):
                vals = getattr(self, name)
                if vals and len(vals) != n:
                    raise ConfigError(f"problem.{name} needs {n} values, got {len(vals)}")
            for k in self.fixed:
                if not 0 <= k < n:
                    raise ConfigError(f"fixed index c{k + 1} outside c1..c{n}")
            for grp in self.sum_groups:
                for k in grp:
                    if not 0 <= k < n:
                        raise ConfigError(f"sum group index c{k + 1} outside c1..c{n}")

    @property
    def n_terms_hint(self):
        return len(self.deltas) if self.deltas else None

    @property
    def synthetic(self) -> bool:
        return bool(self.plant)

    @property
    def reference_values(self):
        return self.reference or self.plant or None

    def resolve(self, path: str) -> Path:
        p = Path(path)
        return p if p.is_absolute() else Path(self.base_dir) / p

    def output_path(self, env=None) -> Path:
        """Output directory; ``MULTISTOP_OUTPUT_DIR`` overrides the configured one."""
        env = os.environ if env is None else env
        override = env.get("MULTISTOP_OUTPUT_DIR")
        return Path(override) if override else self.resolve(self.output_dir)


# --- text form --------------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (tuple, list)):
        return ", ".join(_fmt(x) for x in v)
    return str(v)


def _group_text(grp) -> str:
    return "+".join(f"c{i + 1}" for i in grp)


def dumps(cfg: ExperimentConfig) -> str:
    """Deterministic serialisation; ``loads(dumps(c))`` reproduces ``c``."""
    p, r, s, sch = cfg.points, cfg.reward, cfg.sac, cfg.schedule
    sections = [
        ("problem", [("g", float(cfg.g)), ("deltas", cfg.deltas), ("delta_table", cfg.delta_table),
                     ("table", cfg.table), ("curvature", cfg.curvature), ("plant", cfg.plant),
                     ("reference", cfg.reference)]),
        ("fixed", [(f"c{k + 1}", float(v)) for k, v in cfg.fixed.items()]),
        ("points", [("path", p.path), ("count", p.count), ("seed", p.seed),
                    ("min_margin", float(p.min_margin)), ("complex", p.complex_points)]),
        ("reward", [("form", r.form.value), ("w1", float(r.w1)), ("w2", float(r.w2)),
                    ("use_constraints", r.use_constraints), ("cap", float(r.cap))]),
        ("sac", [("reward_scale", float(s.reward_scale)), ("tau", float(s.tau)), ("gamma", float(s.gamma)),
                 ("learning_rate", float(s.learning_rate)), ("hidden_sizes", s.hidden_sizes),
                 ("batch_size", s.batch_size), ("buffer_capacity", s.buffer_capacity)]),
        ("schedule", [("faff_max", sch.faff_max), ("pc_max", sch.pc_max),
                      ("max_window_exp", sch.max_window_exp), ("window_rate", float(sch.window_rate))]),
        ("run", [("run_count", cfg.run_count), ("top_k", cfg.top_k), ("base_seed", cfg.base_seed),
                 ("n_jobs", cfg.n_jobs), ("output_dir", cfg.output_dir),
                 ("sum_groups", ", ".join(_group_text(g) for g in cfg.sum_groups))]),
    ]
    out = []
    for name, items in sections:
        out.append(f"[{name}]")
        out.extend(f"{k} = {_fmt(v)}".rstrip() for k, v in items)
        out.append("")
    return "\n".join(out)


_KNOWN = {
    "problem": {"g", "deltas", "delta_table", "table", "curvature", "plant", "reference"},
    "points": {"path", "count", "seed", "min_margin", "complex"},
    "reward": {"form", "w1", "w2", "use_constraints", "cap"},
    "sac": {"reward_scale", "tau", "gamma", "learning_rate", "hidden_sizes", "batch_size", "buffer_capacity"},
    "schedule": {"faff_max", "pc_max", "max_window_exp", "window_rate"},
    "run": {"run_count", "top_k", "base_seed", "n_jobs", "output_dir", "sum_groups"},
}


def _parser() -> configparser.ConfigParser:
    cp = configparser.ConfigParser(interpolation=None, comment_prefixes=("#",), inline_comment_prefixes=None)
    cp.optionxform = str
    return cp


def _floats(text: str) -> tuple:
    return tuple(float(x) for x in text.split(",") if x.strip())


def _term_index(label: str) -> int:
    label = label.strip().lower()
    if not (label.startswith("c") and label[1:].isdigit() and int(label[1:]) >= 1):
        raise ValueError(f"expected a term label like c1, got {label!r}")
    return int(label[1:]) - 1


def _groups(text: str) -> tuple:
    out = []
    for expr in text.split(","):
        if expr.strip():
            out.append(tuple(_term_index(t) for t in expr.split("+")))
    return tuple(out)


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("true", "yes", "1", "on"):
        return True
    if t in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def apply_overrides(cp: configparser.ConfigParser, overrides) -> None:
    """Apply ``section.key=value`` strings on top of parsed file contents."""
    for item in overrides or ():
        key, sep, value = item.partition("=")
        section, dot, name = key.strip().partition(".")
        if not sep or not dot or not name:
            raise ConfigError(f"override {item!r} is not of the form section.key=value")
        if not cp.has_section(section):
            cp.add_section(section)
        cp.set(section, name, value.strip())


def _from_parser(cp: configparser.ConfigParser, base_dir: str, source: str) -> ExperimentConfig:
    for section in cp.sections():
        if section == "fixed":
            continue
        if section not in _KNOWN:
            raise ParseError(f"unknown section [{section}]", path=source)
        unknown = set(cp[section]) - _KNOWN[section]
        if unknown:
            raise ParseError(f"unknown key(s) in [{section}]: {', '.join(sorted(unknown))}", path=source)

    def get(section, key, conv, default):
        if not cp.has_option(section, key):
            return default
        raw = cp.get(section, key)
        try:
            return conv(raw.strip())
        except (ValueError, InvalidParameter) as exc:
            raise ParseError(f"[{section}] {key}: {exc}", path=source) from None

    d = ExperimentConfig.__dataclass_fields__
    try:
        fixed = {}
        if cp.has_section("fixed"):
            for k, v in cp["fixed"].items():
                fixed[_term_index(k)] = float(v)
        points = PointSpec(
            path=get("points", "path", str, ""),
            count=get("points", "count", int, 180),
            seed=get("points", "seed", int, 0),
            min_margin=get("points", "min_margin", float, 0.05),
            complex_points=get("points", "complex", _bool, False),
        )
        rdef = RewardConfig()
        reward = RewardConfig(
            form=get("reward", "form", lambda t: RewardForm(t.upper()), rdef.form),
            w1=get("reward", "w1", float, rdef.w1),
            w2=get("reward", "w2", float, rdef.w2),
            use_constraints=get("reward", "use_constraints", _bool, rdef.use_constraints),
            cap=get("reward", "cap", float, rdef.cap),
        )
        sac = SacHyperParams(
            reward_scale=get("sac", "reward_scale", float, DESK_SAC.reward_scale),
            tau=get("sac", "tau", float, DESK_SAC.tau),
            gamma=get("sac", "gamma", float, DESK_SAC.gamma),
            learning_rate=get("sac", "learning_rate", float, DESK_SAC.learning_rate),
            hidden_sizes=get("sac", "hidden_sizes", lambda t: tuple(int(x) for x in t.split(",")),
                             DESK_SAC.hidden_sizes),
            batch_size=get("sac", "batch_size", int, DESK_SAC.batch_size),
            buffer_capacity=get("sac", "buffer_capacity", int, DESK_SAC.buffer_capacity),
        )
        schedule = SearchSchedule(
            faff_max=get("schedule", "faff_max", int, DESK_SCHEDULE.faff_max),
            pc_max=get("schedule", "pc_max", int, DESK_SCHEDULE.pc_max),
            max_window_exp=get("schedule", "max_window_exp", int, DESK_SCHEDULE.max_window_exp),
            window_rate=get("schedule", "window_rate", float, DESK_SCHEDULE.window_rate),
        )
        return ExperimentConfig(
            g=get("problem", "g", float, 1.0),
            deltas=get("problem", "deltas", _floats, ()),
            delta_table=get("problem", "delta_table", str, ""),
            table=get("problem", "table", str, ""),
            curvature=get("problem", "curvature", str, ""),
            plant=get("problem", "plant", _floats, ()),
            reference=get("problem", "reference", _floats, ()),
            fixed=fixed,
            points=points,
            reward=reward,
            sac=sac,
            schedule=schedule,
            run_count=get("run", "run_count", int, d["run_count"].default),
            top_k=get("run", "top_k", int, d["top_k"].default),
            base_seed=get("run", "base_seed", int, d["base_seed"].default),
            n_jobs=get("run", "n_jobs", int, d["n_jobs"].default),
            output_dir=get("run", "output_dir", str, d["output_dir"].default),
            sum_groups=get("run", "sum_groups", _groups, ()),
            base_dir=base_dir,
        )
    except (ValueError, InvalidParameter) as exc:
        if isinstance(exc, (ParseError, ConfigError)):
            raise
        raise ParseError(str(exc), path=source) from None


def loads(text: str, base_dir: str = ".", overrides=None, source: str = "<string>") -> ExperimentConfig:
    cp = _parser()
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        raise ParseError(exc.message if hasattr(exc, "message") else str(exc), path=source, line=line) from None
    apply_overrides(cp, overrides)
    return _from_parser(cp, base_dir, source)


def load_config(path, overrides=None) -> ExperimentConfig:
    path = Path(path)
    if not path.is_file():
        raise ParseError("config file not found", path=path)
    return loads(path.read_text(), base_dir=str(path.parent), overrides=overrides, source=str(path))


def save_config(cfg: ExperimentConfig, path) -> Path:
    path = Path(path)
    path.write_text(dumps(cfg))
    return path


def with_reward(cfg: ExperimentConfig, **changes) -> ExperimentConfig:
    return replace(cfg, reward=replace(cfg.reward, **changes))


__all__ = [
    "DESK_SAC", "DESK_SCHEDULE", "PointSpec", "ExperimentConfig", "dumps", "loads",
    "load_config", "save_config", "apply_overrides", "with_reward",
]
