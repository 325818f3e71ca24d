"""Soft Actor-Critic with a squashed-Gaussian policy and twin critics.

The entropy coefficient is fixed to one and rewards are multiplied by
``reward_scale``, which is the same as an entropy coefficient of
``1 / reward_scale`` on unscaled rewards.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .exceptions import InvalidParameter, NotEnoughData, ParseError
from .nn import MLP, Adam

LOG_STD_MIN = -20.0
LOG_STD_MAX = 2.0
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
_LOG2 = math.log(2.0)


@dataclass(frozen=True)
class SacHyperParams:
    reward_scale: float = 10.0
    tau: float = 0.0005
    gamma: float = 0.99
    learning_rate: float = 0.005
    hidden_sizes: tuple = (256, 256)
    batch_size: int = 256
    buffer_capacity: int = 100_000
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "hidden_sizes", tuple(int(h) for h in self.hidden_sizes))
        if not self.reward_scale > 0:
            raise InvalidParameter("reward_scale must be positive")
        if not 0 < self.tau <= 1:
            raise InvalidParameter("tau must lie in (0, 1]")
        if not 0 <= self.gamma <= 1:
            raise InvalidParameter("gamma must lie in [0, 1]")
        if not self.learning_rate > 0:
            raise InvalidParameter("learning_rate must be positive")
        if len(self.hidden_sizes) != 2 or min(self.hidden_sizes) < 1:
            raise InvalidParameter("hidden_sizes must be two positive integers")
        if self.batch_size < 1 or self.buffer_capacity < self.batch_size:
            raise InvalidParameter("need 1 <= batch_size <= buffer_capacity")


@dataclass(frozen=True)
class Transition:
    state_obs: np.ndarray
    action: np.ndarray
    reward: float
    next_state_obs: np.ndarray
    done: bool = False


class ReplayBuffer:
    """Fixed-capacity ring buffer with uniform sampling."""

    def __init__(self, capacity, obs_dim, act_dim):
        self.capacity = int(capacity)
        self.obs = np.zeros((capacity, obs_dim))
        self.act = np.zeros((capacity, act_dim))
        self.rew = np.zeros(capacity)
        self.next_obs = np.zeros((capacity, obs_dim))
        self.done = np.zeros(capacity)
        self.ptr = 0
        self.size = 0
        self.inserted = 0

    def __len__(self):
        return self.size

    def add(self, obs, action, reward, next_obs, done=False):
        i = self.ptr
        self.obs[i] = obs
        self.act[i] = action
        self.rew[i] = reward
        self.next_obs[i] = next_obs
        self.done[i] = float(done)
        self.ptr = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)
        self.inserted += 1

    def push(self, t: Transition):
        self.add(t.state_obs, t.action, t.reward, t.next_state_obs, t.done)

    def sample_indices(self, batch_size, rng):
        return rng.integers(0, self.size, size=batch_size)

    def batch(self, idx):
        return self.obs[idx], self.act[idx], self.rew[idx], self.next_obs[idx], self.done[idx]


def _log1m_tanh2(u):
    # log(1 - tanh(u)^2), stable for large |u|
    return 2.0 * (_LOG2 - u - np.logaddexp(0.0, -2.0 * u))


class SacAgent:
    """Actor, twin critics with targets, their optimizers and the replay buffer."""

    def __init__(self, obs_dim: int, act_dim: int, hp: SacHyperParams = SacHyperParams(), seed=None):
        self.obs_dim = int(obs_dim)
        self.act_dim = int(act_dim)
        self.hp = hp
        self.reinitialize(hp.seed if seed is None else seed)

    def reinitialize(self, seed):
        """Fresh networks, optimizers and an empty buffer, all derived from ``seed``."""
        hp = self.hp
        self.seed = seed
        ss = np.random.SeedSequence(seed)
        init_rng, self.rng = (np.random.default_rng(s) for s in ss.spawn(2))
        h1, h2 = hp.hidden_sizes
        self.actor = MLP((self.obs_dim, h1, h2, 2 * self.act_dim), init_rng, zero_output=True)
        self.q1 = MLP((self.obs_dim + self.act_dim, h1, h2, 1), init_rng)
        self.q2 = MLP((self.obs_dim + self.act_dim, h1, h2, 1), init_rng)
        self.q1_target = self.q1.copy()
        self.q2_target = self.q2.copy()
        self._make_optimizers()
        self.buffer = ReplayBuffer(hp.buffer_capacity, self.obs_dim, self.act_dim)
        self.updates = 0
        return self

    def _make_optimizers(self):
        lr = self.hp.learning_rate
        self.actor_opt = Adam(self.actor.data, lr)
        self.q1_opt = Adam(self.q1.data, lr)
        self.q2_opt = Adam(self.q2.data, lr)

    # --- policy -----------------------------------------------------------------

    def _policy_head(self, out):
        d = self.act_dim
        mean = out[:, :d]
        raw_log_std = out[:, d:]
        log_std = np.clip(raw_log_std, LOG_STD_MIN, LOG_STD_MAX)
        return mean, raw_log_std, log_std

    def _squash(self, mean, log_std, noise):
        std = np.exp(log_std)
        u = mean + std * noise
        a = np.tanh(u)
        logp = (-0.5 * noise**2 - log_std - _HALF_LOG_2PI - _log1m_tanh2(u)).sum(axis=1)
        return u, a, logp, std

    def sample_action(self, obs, deterministic=False):
        """One action in ``(-1, 1)^d`` and its log-density for a single observation."""
        obs = np.asarray(obs, dtype=float).reshape(1, -1)
        mean, _, log_std = self._policy_head(self.actor.predict(obs))
        if deterministic:
            noise = np.zeros_like(mean)
        else:
            noise = self.rng.standard_normal(mean.shape)
        _, a, logp, _ = self._squash(mean, log_std, noise)
        return a[0], float(logp[0])

    # --- losses with explicit noise (used by the gradient checks) ---------------------

    def critic_targets(self, batch, noise):
        _, _, rew, next_obs, done = batch
        hp = self.hp
        mean, _, log_std = self._policy_head(self.actor.predict(next_obs))
        _, a2, logp2, _ = self._squash(mean, log_std, noise)
        x2 = np.concatenate([next_obs, a2], axis=1)
        q_next = np.minimum(self.q1_target.predict(x2), self.q2_target.predict(x2))[:, 0]
        return hp.reward_scale * rew + hp.gamma * (1.0 - done) * (q_next - logp2)

    def critic_loss_and_grads(self, batch, target):
        """``0.5 * mean((Q_i - y)^2)`` for both critics and their gradients."""
        obs, act = batch[0], batch[1]
        x = np.concatenate([obs, act], axis=1)
        b = x.shape[0]
        out = []
        for net in (self.q1, self.q2):
            q, cache = net.forward(x)
            err = q[:, 0] - target
            grads, _ = net.backward(cache, (err / b)[:, None])
            out.append((0.5 * float(err @ err) / b, grads))
        return out

    def actor_loss_and_grads(self, obs, noise):
        """Loss ``mean(log pi - min Q)`` and its gradient w.r.t. actor parameters."""
        b = obs.shape[0]
        out, cache = self.actor.forward(obs)
        mean, raw_log_std, log_std = self._policy_head(out)
        u, a, logp, std = self._squash(mean, log_std, noise)
        x = np.concatenate([obs, a], axis=1)
        q1, c1 = self.q1.forward(x)
        q2, c2 = self.q2.forward(x)
        use_first = (q1[:, 0] <= q2[:, 0])[:, None].astype(float)
        q_min = np.where(use_first > 0, q1, q2)[:, 0]
        loss = float((logp - q_min).mean())

        _, dx1 = self.q1.backward(c1, -use_first / b, need_input_grad=True)
        _, dx2 = self.q2.backward(c2, -(1.0 - use_first) / b, need_input_grad=True)
        d_a = (dx1 + dx2)[:, self.obs_dim:]
        d_u = d_a * (1.0 - a * a) + 2.0 * a / b
        d_mean = d_u
        d_log_std = d_u * std * noise - 1.0 / b
        d_log_std = d_log_std * ((raw_log_std > LOG_STD_MIN) & (raw_log_std < LOG_STD_MAX))
        grads, _ = self.actor.backward(cache, np.concatenate([d_mean, d_log_std], axis=1))
        return loss, grads, float(-logp.mean())

    # --- training --------------------------------------------------------------------

    def soft_update(self, tau=None):
        tau = self.hp.tau if tau is None else tau
        for target, online in ((self.q1_target, self.q1), (self.q2_target, self.q2)):
            target.data *= 1.0 - tau
            target.data += tau * online.data

    def update_step(self, batch=None):
        """One gradient step on both critics and the actor, then the target update."""
        hp = self.hp
        if batch is None:
            if len(self.buffer) < hp.batch_size:
                raise NotEnoughData(f"buffer holds {len(self.buffer)} transitions, need {hp.batch_size}")
            batch = self.buffer.batch(self.buffer.sample_indices(hp.batch_size, self.rng))
        b = batch[0].shape[0]
        target = self.critic_targets(batch, self.rng.standard_normal((b, self.act_dim)))
        (l1, g1), (l2, g2) = self.critic_loss_and_grads(batch, target)
        self.q1_opt.step(g1)
        self.q2_opt.step(g2)
        actor_loss, ga, entropy = self.actor_loss_and_grads(batch[0], self.rng.standard_normal((b, self.act_dim)))
        self.actor_opt.step(ga)
        self.soft_update()
        self.updates += 1
        return {"q1_loss": l1, "q2_loss": l2, "actor_loss": actor_loss, "entropy": entropy}

    def networks(self):
        return {"actor": self.actor, "q1": self.q1, "q2": self.q2,
                "q1_target": self.q1_target, "q2_target": self.q2_target}


def save_checkpoint(agent: SacAgent, path) -> Path:
    """One CSV row per network: name, ``;``-joined layer sizes, flattened parameters."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["#multistop-sac-checkpoint", 1, agent.obs_dim, agent.act_dim])
        for name, net in agent.networks().items():
            w.writerow([name, ";".join(str(s) for s in net.sizes)] + [format(v, ".17g") for v in net.flat()])
    return path


def load_checkpoint(path, hp: SacHyperParams = SacHyperParams()) -> SacAgent:
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][0] != "#multistop-sac-checkpoint":
        raise ParseError("not a SAC checkpoint", path=path, line=1)
    obs_dim, act_dim = int(rows[0][2]), int(rows[0][3])
    nets = {}
    for lineno, row in enumerate(rows[1:], start=2):
        try:
            sizes = tuple(int(s) for s in row[1].split(";"))
            nets[row[0]] = MLP.from_flat(sizes, [float(v) for v in row[2:]])
        except (ValueError, IndexError) as exc:
            raise ParseError(str(exc), path=path, line=lineno) from None
    hp_sizes = nets["actor"].sizes[1:3]
    if tuple(hp.hidden_sizes) != hp_sizes:
        hp = replace(hp, hidden_sizes=hp_sizes)
    agent = SacAgent(obs_dim, act_dim, hp)
    for name, net in nets.items():
        setattr(agent, name, net)
    agent._make_optimizers()
    return agent
