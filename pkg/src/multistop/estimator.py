"""Estimator-style wrapper so searches compose with parameter grids and ``clone``."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .environment import RewardConfig, crossing_vector
from .exceptions import InvalidParameter
from .experiment import Problem, run_seeds
from .precompute import BlockTable
from .sac import SacHyperParams
from .search import SearchSchedule, default_initial_state
from .stats import aggregate


class MultiSTOP(BaseEstimator):
    """Repeated seeded searches on a :class:`BlockTable`, summarised over the best runs.

    ``fit`` takes the table in place of a design matrix. After fitting,
    ``ope_sq_`` holds the best-``top_k`` mean of every ``C^2``.
    """

    def __init__(self, *, reward_form="R2", w1=1e4, w2=1e5, use_constraints=True, fixed=None,
                 reward_scale=10.0, tau=0.0005, gamma=0.99, learning_rate=0.005, hidden_sizes=(32, 32),
                 batch_size=32, buffer_capacity=20_000, faff_max=1500, pc_max=3, max_window_exp=8,
                 window_rate=0.7, run_count=16, top_k=4, base_seed=0, n_jobs=1):
        self.reward_form = reward_form
        self.w1 = w1
        self.w2 = w2
        self.use_constraints = use_constraints
        self.fixed = fixed
        self.reward_scale = reward_scale
        self.tau = tau
        self.gamma = gamma
        self.learning_rate = learning_rate
        self.hidden_sizes = hidden_sizes
        self.batch_size = batch_size
        self.buffer_capacity = buffer_capacity
        self.faff_max = faff_max
        self.pc_max = pc_max
        self.max_window_exp = max_window_exp
        self.window_rate = window_rate
        self.run_count = run_count
        self.top_k = top_k
        self.base_seed = base_seed
        self.n_jobs = n_jobs

    def _configs(self):
        reward = RewardConfig(self.reward_form, self.w1, self.w2, self.use_constraints)
        sac = SacHyperParams(self.reward_scale, self.tau, self.gamma, self.learning_rate,
                             tuple(self.hidden_sizes), self.batch_size, self.buffer_capacity)
        sched = SearchSchedule(self.faff_max, self.pc_max, self.max_window_exp, self.window_rate)
        return reward, sac, sched

    @staticmethod
    def _check_table(X) -> BlockTable:
        if not isinstance(X, BlockTable):
            raise InvalidParameter(f"expected a BlockTable, got {type(X).__name__}")
        return X

    def fit(self, X, y=None):
        table = self._check_table(X)
        if self.top_k > self.run_count:
            raise InvalidParameter("top_k cannot exceed run_count")
        reward, sac, sched = self._configs()
        initial = default_initial_state(table, self.fixed)
        problem = Problem(table, initial, reward)
        seeds = range(self.base_seed, self.base_seed + self.run_count)
        self.records_ = run_seeds(problem, sac, sched, seeds, self.n_jobs)
        self.stats_ = aggregate(self.records_, self.top_k)
        self.ope_sq_ = self.stats_.ope_mean.copy()
        best = max(self.records_, key=lambda r: (r.best_reward, -r.seed))
        self.best_state_ = best.best_state
        self.best_reward_ = best.best_reward
        self.n_terms_ = table.n_terms
        return self

    def predict(self, X):
        """Crossing residual ``E`` on ``X``'s sample points using the fitted ``C^2``."""
        check_is_fitted(self, "ope_sq_")
        table = self._check_table(X)
        if table.n_terms != self.n_terms_:
            raise InvalidParameter(f"table has {table.n_terms} terms, estimator was fitted on {self.n_terms_}")
        return crossing_vector(self.best_state_.with_vector(
            np.concatenate([table.deltas, self.ope_sq_])), table)

    def score(self, X, y=None):
        """Negative crossing norm, so larger is better."""
        return -float(np.linalg.norm(self.predict(X)))


__all__ = ["MultiSTOP"]
