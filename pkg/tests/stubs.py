"""Stub problems for exercising the outer search loop without block tables."""

import numpy as np

from multistop.environment import CftState, parameter_bounds


class StubEnvironment:
    """Environment-shaped object with a scripted reward.

    ``reward_fn(vec, call_index)`` supplies rewards; every call is logged.
    """

    def __init__(self, n_terms=2, reward_fn=None):
        self.template = CftState(np.full(n_terms, 2.0), np.full(n_terms, 0.5))
        self.cycle = list(range(n_terms))
        self.action_dim = 1
        self.lower, self.upper = parameter_bounds(n_terms)
        self.reward_fn = reward_fn or (lambda vec, i: 1.0)
        self.calls = 0
        self.applied = []

    def apply(self, vec, n, action, window):
        out = vec.copy()
        slot = n_terms_slot = len(self.cycle) + n
        p = window.position(n_terms_slot)
        a = float(np.clip(action[0], -1.0, 1.0))
        out[slot] = min(max(window.center[p] + a * window.half_width[p], self.lower[slot]), self.upper[slot])
        self.applied.append((n, window.half_width[p]))
        return out

    def reward_vector(self, vec):
        r = self.reward_fn(vec, self.calls)
        self.calls += 1
        return r

    def state(self, vec):
        return self.template.with_vector(vec)


def constant_reward(vec, i):
    return 1.0
