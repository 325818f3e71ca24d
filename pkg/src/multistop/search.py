"""Outer optimisation loop: patience-driven agent restarts and window shrinking."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .environment import CftState, CrossingEnvironment, RewardConfig, SearchWindow
from .exceptions import ConfigError, InvalidParameter
from .precompute import BlockTable
from .sac import SacAgent, SacHyperParams
from .validation import check_positive_int


@dataclass(frozen=True)
class SearchSchedule:
    faff_max: int = 10_000
    pc_max: int = 10
    max_window_exp: int = 25
    window_rate: float = 0.7
    initial_windows: SearchWindow | None = None

    def __post_init__(self):
        check_positive_int("faff_max", self.faff_max)
        check_positive_int("pc_max", self.pc_max)
        check_positive_int("max_window_exp", self.max_window_exp)
        if not 0 < self.window_rate < 1:
            raise InvalidParameter(f"window_rate must lie in (0, 1), got {self.window_rate!r}")


DESK_SCHEDULE = SearchSchedule(faff_max=1500, pc_max=3, max_window_exp=8)


@dataclass
class StageLog:
    stage: int
    half_width: np.ndarray
    center: np.ndarray
    reinit_steps: list = field(default_factory=list)
    max_streaks: list = field(default_factory=list)
    final_streaks: list = field(default_factory=list)

    @property
    def reinits(self) -> int:
        return len(self.reinit_steps)


@dataclass
class RunRecord:
    best_reward: float
    best_state: CftState
    reward_history: list
    total_steps: int
    seed: int
    stages: list = field(default_factory=list)
    window_reductions: int = 0
    final_window: SearchWindow | None = None

    def __eq__(self, other):
        if not isinstance(other, RunRecord):
            return NotImplemented
        return (self.best_reward == other.best_reward and self.best_state == other.best_state
                and self.reward_history == other.reward_history and self.total_steps == other.total_steps
                and self.seed == other.seed)


def recenter_and_shrink(window: SearchWindow, best: CftState, rate: float, *, initial_half_width=None,
                        stage: int | None = None) -> SearchWindow:
    """Center every slot on the best state and scale half widths by ``rate``.

    With ``initial_half_width`` and ``stage`` the new width is computed as
    ``initial * rate**stage`` directly, so no rounding accumulates.
    """
    if not 0 < rate < 1:
        raise InvalidParameter(f"rate must lie in (0, 1), got {rate!r}")
    vec = best.vector
    center = vec[list(window.slots)]
    # a center outside the global box would leave an empty clipped window
    center = np.clip(center, window.lower, window.upper)
    if initial_half_width is None:
        width = window.half_width * rate
    else:
        width = np.asarray(initial_half_width) * rate**stage
    return SearchWindow(window.slots, center, width, window.lower, window.upper)


def default_initial_state(table: BlockTable, fixed_ope=None) -> CftState:
    """All dimensions fixed to the table's, free ``C^2`` at mid-range.

    ``fixed_ope`` maps 0-based term index to a pinned ``C^2`` value.
    """
    n = table.n_terms
    ope = np.full(n, 0.5)
    mask = np.zeros(n, bool)
    for k, v in (fixed_ope or {}).items():
        if not 0 <= k < n:
            raise ConfigError(f"fixed index {k} outside 0..{n - 1}")
        ope[k] = v
        mask[k] = True
    return CftState(table.deltas, ope, np.ones(n, bool), mask)


class _Observer:
    """Encodes the parameter vector as a network observation."""

    def __init__(self, env, window):
        self.slots = list(window.slots)
        self.n_free = len(self.slots)
        self.n_cycle = len(env.cycle)
        self.dim = self.n_free + self.n_cycle
        self.set_window(window)

    def set_window(self, window):
        self.center = window.center
        self.half_width = window.half_width

    def __call__(self, vec, pos):
        obs = np.zeros(self.dim)
        z = (vec[self.slots] - self.center) / self.half_width
        np.clip(z, -1.0, 1.0, out=obs[:self.n_free])
        obs[self.n_free + pos] = 1.0
        return obs


def run_search(problem, cfg: RewardConfig | None = None, hp: SacHyperParams = SacHyperParams(),
               sched: SearchSchedule = SearchSchedule(), seed: int = 0, *,
               initial: CftState | None = None, trace_path=None) -> RunRecord:
    """Run the full restart / window-reduction loop once.

    ``problem`` is a :class:`BlockTable` (combined with ``cfg`` and
    ``initial``) or a ready :class:`CrossingEnvironment`; any object with the
    same interface works, which is how tests plug in stub rewards.
    """
    if isinstance(problem, BlockTable):
        if cfg is None:
            cfg = RewardConfig()
        env = CrossingEnvironment(problem, cfg, initial or default_initial_state(problem))
    else:
        env = problem
    template = env.template
    window = sched.initial_windows or SearchWindow.full_range(template)
    free_slots = set(np.flatnonzero(template.free_mask).tolist())
    if set(window.slots) != free_slots:
        raise ConfigError("search windows must cover exactly the free parameters")

    initial_width = window.half_width.copy()
    observe = _Observer(env, window)
    agent = SacAgent(observe.dim, env.action_dim, hp, seed=[seed, 0, 0])
    cycle = env.cycle
    n_cycle = len(cycle)

    vec = template.vector
    vec[list(window.slots)] = window.center
    best_vec = vec.copy()
    best_reward = 0.0
    history = []
    stages = []
    total = 0
    trace = Path(trace_path).open("w") if trace_path else None
    try:
        for stage in range(sched.max_window_exp):
            log = StageLog(stage, window.half_width.copy(), window.center.copy())
            stages.append(log)
            observe.set_window(window)
            for reinit in range(sched.pc_max):
                agent.reinitialize([seed, stage, reinit])
                vec = template.vector
                vec[list(window.slots)] = window.center
                t = 0
                streak = 0
                max_streak = 0
                steps = 0
                obs = observe(vec, 0)
                while True:
                    n = cycle[t % n_cycle]
                    action, _ = agent.sample_action(obs)
                    new_vec = env.apply(vec, n, action, window)
                    r = env.reward_vector(new_vec)
                    if r > best_reward:
                        best_reward = r
                        best_vec = new_vec.copy()
                        history.append((total, r))
                        if trace is not None:
                            trace.write(json.dumps({"step": total, "best_reward": r}) + "\n")
                        t = 0
                        streak = 0
                    else:
                        t += 1
                        streak += 1
                        max_streak = max(max_streak, streak)
                    next_obs = observe(new_vec, t % n_cycle)
                    agent.buffer.add(obs, action, r, next_obs, False)
                    if len(agent.buffer) >= hp.batch_size:
                        agent.update_step()
                    vec = new_vec
                    obs = next_obs
                    steps += 1
                    total += 1
                    if streak >= sched.faff_max:
                        break
                log.reinit_steps.append(steps)
                log.max_streaks.append(max_streak)
                log.final_streaks.append(streak)
            window = recenter_and_shrink(window, env.state(best_vec), sched.window_rate,
                                         initial_half_width=initial_width, stage=stage + 1)
    finally:
        if trace is not None:
            trace.close()

    return RunRecord(
        best_reward=best_reward,
        best_state=env.state(best_vec),
        reward_history=history,
        total_steps=total,
        seed=seed,
        stages=stages,
        window_reductions=len(stages),
        final_window=window,
    )


__all__ = [
    "SearchSchedule", "DESK_SCHEDULE", "RunRecord", "StageLog",
    "recenter_and_shrink", "default_initial_state", "run_search",
]

