"""Search environment: the CFT-data state, actions on it and the reward.

Parameters are addressed as one flat vector ``(Delta_1..Delta_N, C2_1..C2_N)``;
term indices are 0-based throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .exceptions import ConfigError, DeltaMismatch, InvalidParameter
from .precompute import BlockTable
from .validation import DELTA_MAX, OPE_SQ_MAX

DELTA_TOL = 1e-12
DEFAULT_REWARD_CAP = 1e12


class RewardForm(str, Enum):
    R1 = "R1"
    R2 = "R2"


@dataclass(frozen=True)
class RewardConfig:
    """Reward selector.

    ``R1`` adds inverse residuals, ``R2`` inverts their weighted sum. With
    ``use_constraints=False`` both reduce to ``1 / ||E||``.
    """

    form: RewardForm = RewardForm.R2
    w1: float = 1e4
    w2: float = 1e5
    use_constraints: bool = True
    cap: float = DEFAULT_REWARD_CAP

    def __post_init__(self):
        object.__setattr__(self, "form", RewardForm(self.form))
        for name in ("w1", "w2"):
            w = getattr(self, name)
            if not (math.isfinite(w) and w >= 0):
                raise InvalidParameter(f"{name} must be finite and nonnegative, got {w!r}")
        if not (self.cap > 0 and math.isfinite(self.cap)):
            raise InvalidParameter("reward cap must be positive and finite")

    @property
    def effective_weights(self):
        return (self.w1, self.w2) if self.use_constraints else (0.0, 0.0)


def parameter_bounds(n_terms: int):
    lower = np.zeros(2 * n_terms)
    upper = np.concatenate([np.full(n_terms, DELTA_MAX), np.full(n_terms, OPE_SQ_MAX)])
    return lower, upper


@dataclass(frozen=True, eq=False)
class CftState:
    """Current guess of the CFT data.

    ``fixed_delta``/``fixed_ope`` mark inputs that actions never touch.
    """

    deltas: np.ndarray
    ope_sq: np.ndarray
    fixed_delta: np.ndarray = None
    fixed_ope: np.ndarray = None

    def __post_init__(self):
        deltas = np.array(self.deltas, dtype=float)
        ope = np.array(self.ope_sq, dtype=float)
        if deltas.ndim != 1 or deltas.shape != ope.shape:
            raise InvalidParameter("deltas and ope_sq must be 1-D vectors of equal length")
        n = deltas.size
        fd = np.ones(n, bool) if self.fixed_delta is None else np.array(self.fixed_delta, dtype=bool)
        fo = np.zeros(n, bool) if self.fixed_ope is None else np.array(self.fixed_ope, dtype=bool)
        if fd.shape != (n,) or fo.shape != (n,):
            raise InvalidParameter("masks must match the number of terms")
        if np.any(deltas < 0) or np.any(deltas > DELTA_MAX):
            raise InvalidParameter(f"Delta values must lie in [0, {DELTA_MAX}]")
        if np.any(ope < 0) or np.any(ope > OPE_SQ_MAX):
            raise InvalidParameter(f"C^2 values must lie in [0, {OPE_SQ_MAX}]")
        for arr in (deltas, ope, fd, fo):
            arr.setflags(write=False)
        object.__setattr__(self, "deltas", deltas)
        object.__setattr__(self, "ope_sq", ope)
        object.__setattr__(self, "fixed_delta", fd)
        object.__setattr__(self, "fixed_ope", fo)

    @property
    def n_terms(self) -> int:
        return self.deltas.size

    @property
    def vector(self) -> np.ndarray:
        return np.concatenate([self.deltas, self.ope_sq])

    @property
    def free_mask(self) -> np.ndarray:
        return ~np.concatenate([self.fixed_delta, self.fixed_ope])

    def free_slots(self, n: int) -> list:
        """Flat parameter indices acted on when term ``n`` is selected."""
        slots = []
        if not self.fixed_delta[n]:
            slots.append(n)
        if not self.fixed_ope[n]:
            slots.append(self.n_terms + n)
        return slots

    def with_vector(self, vec) -> "CftState":
        n = self.n_terms
        return CftState(vec[:n], vec[n:], self.fixed_delta, self.fixed_ope)

    def __eq__(self, other):
        if not isinstance(other, CftState):
            return NotImplemented
        return all(np.array_equal(getattr(self, k), getattr(other, k))
                   for k in ("deltas", "ope_sq", "fixed_delta", "fixed_ope"))

    __hash__ = None


@dataclass(frozen=True, eq=False)
class SearchWindow:
    """Nominal ``center +- half_width`` for each free parameter slot.

    The nominal box may stick out of the global bounds; values are clipped
    when an action is applied so widths follow the geometric schedule exactly.
    """

    slots: tuple
    center: np.ndarray
    half_width: np.ndarray
    lower: np.ndarray = field(default=None)
    upper: np.ndarray = field(default=None)

    def __post_init__(self):
        c = np.array(self.center, dtype=float)
        hw = np.array(self.half_width, dtype=float)
        if c.shape != (len(self.slots),) or hw.shape != c.shape:
            raise InvalidParameter("window center/half_width must have one entry per slot")
        if np.any(hw <= 0):
            raise InvalidParameter("window half widths must be positive")
        lo = np.array(self.lower, dtype=float) if self.lower is not None else np.full(c.shape, -np.inf)
        hi = np.array(self.upper, dtype=float) if self.upper is not None else np.full(c.shape, np.inf)
        for arr in (c, hw, lo, hi):
            arr.setflags(write=False)
        object.__setattr__(self, "slots", tuple(int(s) for s in self.slots))
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "half_width", hw)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def full_range(cls, state: CftState) -> "SearchWindow":
        """Window covering the whole allowed box for every free parameter."""
        lower, upper = parameter_bounds(state.n_terms)
        slots = np.flatnonzero(state.free_mask)
        return cls(tuple(slots), (lower[slots] + upper[slots]) / 2, (upper[slots] - lower[slots]) / 2,
                   lower[slots], upper[slots])

    def position(self, slot: int) -> int:
        return self.slots.index(slot)

    def clipped_bounds(self):
        return np.maximum(self.center - self.half_width, self.lower), np.minimum(self.center + self.half_width, self.upper)

    def normalize(self, values) -> np.ndarray:
        """Map slot values to ``[-1, 1]`` relative to the nominal window."""
        return np.clip((np.asarray(values) - self.center) / self.half_width, -1.0, 1.0)


# --- residuals and reward ------------------------------------------------------------

def _check_deltas(state: CftState, table: BlockTable):
    if state.n_terms != table.n_terms or np.max(np.abs(state.deltas - table.deltas)) > DELTA_TOL:
        raise DeltaMismatch("state dimensions differ from the precomputed table")


def crossing_vector(state: CftState, table: BlockTable) -> np.ndarray:
    """``E_k = h(x_k) + sum_n C2_n F_{Delta_n}(x_k)`` from the table."""
    _check_deltas(state, table)
    return table.h_vector + table.f_matrix @ state.ope_sq


def constraint_values(state: CftState, table: BlockTable):
    _check_deltas(state, table)
    return (float(table.int1_vec @ state.ope_sq + table.rhs1),
            float(table.int2_vec @ state.ope_sq + table.rhs2))


def reward_from_residuals(norm_e: float, i1: float, i2: float, cfg: RewardConfig) -> float:
    w1, w2 = cfg.effective_weights
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        if cfg.form is RewardForm.R1:
            value = 1.0 / norm_e if norm_e > 0 else math.inf
            if w1:
                value += w1 / abs(i1) if i1 != 0 else math.inf
            if w2:
                value += w2 / abs(i2) if i2 != 0 else math.inf
        else:
            denom = norm_e + (w1 * abs(i1) if w1 else 0.0) + (w2 * abs(i2) if w2 else 0.0)
            value = 1.0 / denom if denom > 0 else math.inf
    if not value < cfg.cap:  # also catches NaN and inf
        return cfg.cap
    return value


def reward(state: CftState, table: BlockTable, cfg: RewardConfig) -> float:
    norm_e = float(np.linalg.norm(crossing_vector(state, table)))
    if cfg.use_constraints and (cfg.w1 or cfg.w2):
        if not table.has_rhs:
            raise ConfigError("constraints are enabled but the table has no right-hand sides")
        i1, i2 = constraint_values(state, table)
    else:
        i1 = i2 = 0.0
    return reward_from_residuals(norm_e, i1, i2, cfg)


def apply_action(state: CftState, n: int, raw_action, window: SearchWindow) -> CftState:
    """Set the free members of term ``n`` to ``center + a * half_width``, clipped to bounds."""
    slots = state.free_slots(n)
    if not slots:
        raise InvalidParameter(f"term {n} has no free parameters")
    raw = np.asarray(raw_action, dtype=float).ravel()
    if raw.size < len(slots):
        raise InvalidParameter(f"action has {raw.size} components, term {n} needs {len(slots)}")
    vec = state.vector
    lower, upper = parameter_bounds(state.n_terms)
    for j, slot in enumerate(slots):
        p = window.position(slot)
        value = window.center[p] + float(np.clip(raw[j], -1.0, 1.0)) * window.half_width[p]
        vec[slot] = min(max(value, lower[slot]), upper[slot])
    return state.with_vector(vec)


class CrossingEnvironment:
    """Fast stateful wrapper used by the search loop.

    Works on the raw parameter vector to keep per-step overhead low; the
    public functions above are the reference semantics and are checked
    against this class in the tests.
    """

    def __init__(self, table: BlockTable, cfg: RewardConfig, initial: CftState):
        _check_deltas(initial, table)
        if not np.all(initial.fixed_delta):
            raise ConfigError("free scaling dimensions need live block evaluation; fix all Deltas for table search")
        self.table = table
        self.cfg = cfg
        self.template = initial
        self.n_terms = initial.n_terms
        self.free_mask = initial.free_mask
        if not self.free_mask.any():
            raise ConfigError("no free parameters to search over")
        self.cycle = [n for n in range(self.n_terms) if initial.free_slots(n)]
        self.slots_per_term = {n: initial.free_slots(n) for n in self.cycle}
        self.action_dim = max(len(s) for s in self.slots_per_term.values())
        self.lower, self.upper = parameter_bounds(self.n_terms)
        self._f_real, self._h_real = table._stacked
        self._constrained = cfg.use_constraints and bool(cfg.w1 or cfg.w2)
        if self._constrained and not table.has_rhs:
            raise ConfigError("constraints are enabled but the table has no right-hand sides")

    def reward_vector(self, vec: np.ndarray) -> float:
        ope = vec[self.n_terms:]
        resid = self._h_real + self._f_real @ ope
        norm_e = math.sqrt(float(resid @ resid))
        if self._constrained:
            t = self.table
            i1 = float(t.int1_vec @ ope) + t.rhs1
            i2 = float(t.int2_vec @ ope) + t.rhs2
        else:
            i1 = i2 = 0.0
        return reward_from_residuals(norm_e, i1, i2, self.cfg)

    def residuals(self, vec: np.ndarray):
        ope = vec[self.n_terms:]
        resid = self._h_real + self._f_real @ ope
        t = self.table
        return (math.sqrt(float(resid @ resid)),
                float(t.int1_vec @ ope) + t.rhs1,
                float(t.int2_vec @ ope) + t.rhs2)

    def apply(self, vec: np.ndarray, n: int, raw_action, window: SearchWindow) -> np.ndarray:
        out = vec.copy()
        for j, slot in enumerate(self.slots_per_term[n]):
            p = window.position(slot)
            a = raw_action[j]
            a = -1.0 if a < -1.0 else (1.0 if a > 1.0 else a)
            value = window.center[p] + a * window.half_width[p]
            lo, hi = self.lower[slot], self.upper[slot]
            out[slot] = lo if value < lo else (hi if value > hi else value)
        return out

    def state(self, vec: np.ndarray) -> CftState:
        return self.template.with_vector(vec)


def balanced_weights(table: BlockTable):
    """Constraint weights that give each constraint row the crossing map's largest gain.

    ``w_i = sigma_max(F) / ||Int_i||``; a scale-free choice for planted
    problems, where the physical weights are not meaningful.
    """
    f_real, _ = table._stacked
    smax = float(np.linalg.svd(f_real, compute_uv=False)[0])
    n1, n2 = float(np.linalg.norm(table.int1_vec)), float(np.linalg.norm(table.int2_vec))
    if n1 == 0 or n2 == 0:
        raise InvalidParameter("constraint integrals vanish; weights are undefined")
    return smax / n1, smax / n2
