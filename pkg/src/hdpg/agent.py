"""DDPG, MHDDPG and HDPG actor-critic agents over vector rewards.

All three share one code path. They differ only in how many critic heads are
learned and in how the per-head policy gradients are weighted:

* ``ddpg``   - one head trained on the sum of normalized reward components.
* ``mhddpg`` - one head per component, every head weighted 1.
* ``hdpg``   - one head per component, weights refreshed every T episodes from
  the mean/variance of recent normalized rewards.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, fields

import numpy as np

from .nn import (AdamState, MlpParams, MlpSpec, adam_step, backward, forward,
                 init_mlp, soft_update)
from .replay import Batch, NotReady

ALGOS = ("ddpg", "mhddpg", "hdpg")


@dataclass
class AgentConfig:
    algo: str = "hdpg"
    gamma: float = 0.99
    lr_actor: float = 1e-5
    lr_critic: float = 1e-4
    batch: int = 64
    tau: float = 0.005
    weight_period: int = 20        # T, in episodes
    stats_window: int = 2000       # N, in environment steps
    ou_theta: float = 0.15
    ou_sigma: float = 0.2
    ou_dt: float = 1.0
    buffer_capacity: int = 1_000_000
    actor_hidden: tuple = (128, 256)
    critic_branch: int = 128
    critic_trunk: int = 256
    merge_heads: bool = False      # learn a single head on the summed normalized reward

    def __post_init__(self):
        self.actor_hidden = tuple(int(h) for h in self.actor_hidden)
        self.validate()

    def validate(self):
        if self.algo not in ALGOS:
            raise ValueError(f"unknown algo {self.algo!r}; expected one of {ALGOS}")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in [0, 1], got {self.gamma}")
        if self.lr_actor <= 0 or self.lr_critic <= 0:
            raise ValueError("learning rates must be positive")
        if self.batch < 1:
            raise ValueError(f"batch must be >= 1, got {self.batch}")
        if not 0.0 < self.tau <= 1.0:
            raise ValueError(f"tau must lie in (0, 1], got {self.tau}")
        if self.weight_period < 1:
            raise ValueError(f"weight_period must be >= 1, got {self.weight_period}")
        if self.stats_window < 2:
            raise ValueError(f"stats_window must be >= 2, got {self.stats_window}")
        if self.buffer_capacity < 1:
            raise ValueError("buffer_capacity must be positive")
        if self.ou_dt <= 0 or self.ou_sigma < 0 or self.ou_theta < 0:
            raise ValueError("OU parameters must satisfy dt > 0, sigma >= 0, theta >= 0")

    @property
    def single_head(self) -> bool:
        return self.algo == "ddpg" or self.merge_heads

    @classmethod
    def field_names(cls):
        return [f.name for f in fields(cls)]


# ---------------------------------------------------------------- rewards

@dataclass(frozen=True)
class RewardNormalizer:
    low: np.ndarray
    high: np.ndarray

    def __post_init__(self):
        low = np.asarray(self.low, dtype=np.float64)
        high = np.asarray(self.high, dtype=np.float64)
        if low.shape != high.shape or low.ndim != 1:
            raise ValueError("reward bounds must be two vectors of equal length")
        if not (high > low).all():
            raise ValueError(f"every reward bound needs max > min, got {low} / {high}")
        object.__setattr__(self, "low", low)
        object.__setattr__(self, "high", high)

    @property
    def K(self) -> int:
        return len(self.low)


def normalize_reward(raw, norm: RewardNormalizer) -> np.ndarray:
    """Per-component max-min map onto [0, 1], clipped. Accepts (K,) or (B, K)."""
    z = (np.asarray(raw, dtype=np.float64) - norm.low) / (norm.high - norm.low)
    return np.clip(z, 0.0, 1.0)


@dataclass(frozen=True)
class RewardStats:
    mean: np.ndarray
    var: np.ndarray


def update_reward_stats(window) -> RewardStats:
    """Sample mean and population variance of each component over the window.

    Raises :class:`NotReady` with fewer than two samples.
    """
    w = np.asarray(window, dtype=np.float64)
    if w.ndim != 2 or w.shape[0] < 2:
        raise NotReady(f"reward window needs at least 2 samples, got {w.shape[0] if w.ndim else 0}")
    return RewardStats(mean=w.mean(axis=0), var=w.var(axis=0))


def compute_priority_weights(stats: RewardStats) -> np.ndarray:
    """m_k = K (mu_k + exp(var_k)) / sum_j (mu_j + exp(var_j))."""
    score = stats.mean + np.exp(stats.var)
    return len(score) * score / score.sum()


# ---------------------------------------------------------------- exploration

@dataclass
class OUState:
    x: np.ndarray
    theta: float = 0.15
    sigma: float = 0.2
    dt: float = 1.0

    def reset(self):
        self.x = np.zeros_like(self.x)

    def advance(self, rng: np.random.Generator) -> np.ndarray:
        xi = rng.standard_normal(self.x.shape)
        self.x = self.x + self.theta * (0.0 - self.x) * self.dt + self.sigma * np.sqrt(self.dt) * xi
        return self.x


def select_action(actor: MlpParams, stacked_state, ou: OUState | None,
                  explore: bool, rng: np.random.Generator | None = None) -> np.ndarray:
    """Actor output, plus OU noise when exploring, clipped to [-1, 1]."""
    out, _ = forward(actor, stacked_state)
    if not np.isfinite(out).all():
        raise FloatingPointError(f"actor produced a non-finite action {out}")
    if not explore:
        return out
    return np.clip(out + ou.advance(rng), -1.0, 1.0)


# ---------------------------------------------------------------- networks

class CriticParams:
    """Multi-head critic: state and action branches, concatenated into a shared
    trunk, then one independent linear output per reward head.

    Layer order (as checkpointed): state branch, action branch, trunk, heads.
    """

    def __init__(self, state_dim, act_dim, n_heads, branch=128, trunk=256, flat=None):
        self.dims = (int(state_dim), int(act_dim), int(n_heads), int(branch), int(trunk))
        self.state_spec = MlpSpec((state_dim, branch), "relu", "relu")
        self.action_spec = MlpSpec((act_dim, branch), "relu", "relu")
        self.head_spec = MlpSpec((2 * branch, trunk, n_heads), "relu", "linear")
        sizes = [s.n_params for s in (self.state_spec, self.action_spec, self.head_spec)]
        if flat is None:
            flat = np.zeros(sum(sizes))
        if flat.shape != (sum(sizes),):
            raise ValueError(f"critic buffer must have length {sum(sizes)}, got {flat.shape}")
        self.flat = flat
        a, b = sizes[0], sizes[0] + sizes[1]
        self.state_branch = MlpParams(self.state_spec, flat[:a])
        self.action_branch = MlpParams(self.action_spec, flat[a:b])
        self.head = MlpParams(self.head_spec, flat[b:])
        self._parts = ((0, "state branch", self.state_branch),
                       (a, "action branch", self.action_branch),
                       (b, "trunk/head", self.head))

    @property
    def n_heads(self) -> int:
        return self.dims[2]

    def copy(self) -> "CriticParams":
        return CriticParams(*self.dims, flat=self.flat.copy())

    def zeros_like(self) -> "CriticParams":
        return CriticParams(*self.dims)

    def locate(self, index: int) -> str:
        for off, name, part in reversed(self._parts):
            if index >= off:
                return f"critic {name} {part.locate(index - off)}"
        raise IndexError(index)

    def layers(self):
        for part in (self.state_branch, self.action_branch, self.head):
            yield from zip(part.weights, part.biases)


def build_critic(state_dim: int, act_dim: int, n_heads: int, rng,
                 branch: int = 128, trunk: int = 256) -> CriticParams:
    for name, v in (("state_dim", state_dim), ("act_dim", act_dim), ("n_heads", n_heads)):
        if v < 1:
            raise ValueError(f"{name} must be positive, got {v}")
    critic = CriticParams(state_dim, act_dim, n_heads, branch, trunk)
    for part in (critic.state_branch, critic.action_branch, critic.head):
        part.flat[...] = init_mlp(part.spec, rng).flat
    return critic


def build_actor(state_dim: int, act_dim: int, rng, hidden=(128, 256)) -> MlpParams:
    return init_mlp(MlpSpec((state_dim, *hidden, act_dim), "relu", "tanh"), rng)


def critic_forward(critic: CriticParams, states, actions):
    hs, cs = forward(critic.state_branch, states)
    ha, ca = forward(critic.action_branch, actions)
    q, ch = forward(critic.head, np.concatenate([hs, ha], axis=-1))
    return q, (cs, ca, ch)


def critic_backward(critic: CriticParams, cache, q_grad, grads: CriticParams | None = None,
                    param_grads: bool = True):
    """Gradients of <q_grad, Q> w.r.t. critic parameters, states and actions.

    With ``param_grads=False`` only the action gradient is formed (the actor
    step needs nothing else) and the other two results are None.
    """
    cs, ca, ch = cache
    n = critic.dims[3]
    if not param_grads:
        _, dh = backward(critic.head, ch, q_grad, param_grads=False)
        _, da = backward(critic.action_branch, ca, dh[..., n:], param_grads=False)
        return None, None, da
    if grads is None:
        grads = critic.zeros_like()
    _, dh = backward(critic.head, ch, q_grad, out=grads.head)
    _, ds = backward(critic.state_branch, cs, dh[..., :n], out=grads.state_branch)
    _, da = backward(critic.action_branch, ca, dh[..., n:], out=grads.action_branch)
    return grads, ds, da


def critic_values(critic: CriticParams, states, actions) -> np.ndarray:
    return critic_forward(critic, states, actions)[0]


# ---------------------------------------------------------------- agent

class Agent:
    """Owns actor, multi-head critic, their target copies and optimizer state."""

    def __init__(self, config: AgentConfig, state_dim: int, act_dim: int,
                 normalizer: RewardNormalizer, init_rng: np.random.Generator):
        config.validate()
        self.config = config
        self.normalizer = normalizer
        self.K = normalizer.K
        self.n_heads = 1 if config.single_head else self.K
        self.state_dim, self.act_dim = state_dim, act_dim
        self.actor = build_actor(state_dim, act_dim, init_rng, config.actor_hidden)
        self.critic = build_critic(state_dim, act_dim, self.n_heads, init_rng,
                                   config.critic_branch, config.critic_trunk)
        self.target_actor = self.actor.copy()
        self.target_critic = self.critic.copy()
        self._critic_grads = self.critic.zeros_like()
        self.actor_opt = AdamState.for_params(self.actor)
        self.critic_opt = AdamState.for_params(self.critic)
        self.ou = OUState(np.zeros(act_dim), config.ou_theta, config.ou_sigma, config.ou_dt)
        self.weights = np.ones(self.n_heads)
        self.reward_window: deque = deque(maxlen=config.stats_window)
        self.updates = 0

    # -- acting
    def act(self, stacked_state, explore: bool, rng=None) -> np.ndarray:
        return select_action(self.actor, stacked_state, self.ou, explore, rng)

    def begin_episode(self):
        self.ou.reset()

    # -- reward bookkeeping
    def head_rewards(self, raw) -> np.ndarray:
        """Normalized rewards as seen by the critic heads."""
        norm = normalize_reward(raw, self.normalizer)
        if self.n_heads == 1:
            return norm.sum(axis=-1, keepdims=True)
        return norm

    def record_reward(self, raw) -> None:
        self.reward_window.append(normalize_reward(raw, self.normalizer))

    def end_episode(self, episode: int) -> bool:
        """Refresh HDPG weights after every T-th episode. Returns True on refresh."""
        cfg = self.config
        if cfg.algo != "hdpg" or self.n_heads == 1:
            return False
        if (episode + 1) % cfg.weight_period:
            return False
        if len(self.reward_window) < cfg.stats_window:
            return False
        self.weights = compute_priority_weights(update_reward_stats(self.reward_window))
        return True

    # -- learning
    def td_targets(self, batch: Batch) -> np.ndarray:
        """(B, heads) bootstrapped targets from the target actor and critic."""
        a_next, _ = forward(self.target_actor, batch.next_states)
        q_next = critic_values(self.target_critic, batch.next_states, a_next)
        r = self.head_rewards(batch.rewards)
        return r + self.config.gamma * (1.0 - batch.dones)[:, None] * q_next

    def critic_update(self, batch: Batch) -> float:
        cfg = self.config
        y = self.td_targets(batch)
        q, cache = critic_forward(self.critic, batch.states, batch.actions)
        err = q - y
        loss = float(np.mean(np.sum(err * err, axis=1)))
        if not np.isfinite(loss):
            raise FloatingPointError(f"critic loss is non-finite ({loss})")
        grads = self._critic_grads
        grads.flat[...] = 0.0
        critic_backward(self.critic, cache, 2.0 * err / len(batch), grads)
        adam_step(self.critic, grads, self.critic_opt, cfg.lr_critic)
        return loss

    def policy_gradient(self, states, weights=None):
        """Gradient of -mean_b sum_k m_k Q_k(s_b, pi(s_b)) w.r.t. actor parameters."""
        m = self.weights if weights is None else np.asarray(weights, dtype=np.float64)
        if m.shape != (self.n_heads,):
            raise ValueError(f"weights must have length {self.n_heads}, got {m.shape}")
        actions, actor_cache = forward(self.actor, states)
        q, cache = critic_forward(self.critic, states, actions)
        q_grad = np.broadcast_to(-m / len(states), q.shape)
        _, _, da = critic_backward(self.critic, cache, q_grad, param_grads=False)
        grads, _ = backward(self.actor, actor_cache, da, input_grad=False)
        return grads

    def actor_update(self, batch: Batch, weights=None) -> float:
        grads = self.policy_gradient(batch.states, weights)
        norm = float(np.linalg.norm(grads.flat))
        if not np.isfinite(norm):
            raise FloatingPointError("actor gradient is non-finite")
        adam_step(self.actor, grads, self.actor_opt, self.config.lr_actor)
        return norm

    def update(self, batch: Batch) -> tuple[float, float]:
        """One critic step, one actor step, then soft target tracking."""
        loss = self.critic_update(batch)
        gnorm = self.actor_update(batch)
        soft_update(self.target_critic, self.critic, self.config.tau)
        soft_update(self.target_actor, self.actor, self.config.tau)
        self.updates += 1
        return loss, gnorm

    def parameter_vector(self) -> np.ndarray:
        return np.concatenate([self.actor.flat, self.critic.flat,
                               self.target_actor.flat, self.target_critic.flat])
