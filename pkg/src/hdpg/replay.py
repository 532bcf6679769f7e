"""Experience replay over vector-reward transitions, and 3-frame state stacking."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class Transition:
    stacked_state: np.ndarray
    action: np.ndarray
    reward: np.ndarray        # raw, length K
    next_stacked_state: np.ndarray
    done: bool


@dataclass
class Batch:
    """Column-wise view of sampled transitions."""
    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_states: np.ndarray
    dones: np.ndarray

    def __len__(self):
        return len(self.states)

    def transitions(self) -> list[Transition]:
        return [
            Transition(self.states[i], self.actions[i], self.rewards[i],
                       self.next_states[i], bool(self.dones[i]))
            for i in range(len(self))
        ]


class NotReady(Exception):
    """Raised when the buffer holds fewer transitions than a batch needs."""


class ReplayBuffer:
    """Fixed-capacity FIFO ring of transitions stored column-wise."""

    def __init__(self, capacity: int, state_dim: int, act_dim: int, n_rewards: int):
        if capacity < 1:
            raise ValueError(f"capacity must be positive, got {capacity}")
        self.capacity = int(capacity)
        self.state_dim, self.act_dim, self.n_rewards = state_dim, act_dim, n_rewards
        self._s = np.zeros((capacity, state_dim))
        self._a = np.zeros((capacity, act_dim))
        self._r = np.zeros((capacity, n_rewards))
        self._s2 = np.zeros((capacity, state_dim))
        self._d = np.zeros(capacity)
        self._cursor = 0
        self._size = 0

    def __len__(self):
        return self._size

    def push(self, t: Transition) -> None:
        checks = (
            ("stacked_state", t.stacked_state, self.state_dim),
            ("action", t.action, self.act_dim),
            ("reward", t.reward, self.n_rewards),
            ("next_stacked_state", t.next_stacked_state, self.state_dim),
        )
        for name, value, dim in checks:
            value = np.asarray(value)
            if value.shape != (dim,):
                raise ValueError(f"transition {name} has shape {value.shape}, expected ({dim},)")
            if not np.isfinite(value).all():
                raise ValueError(f"transition {name} contains non-finite entries")
        i = self._cursor
        self._s[i] = t.stacked_state
        self._a[i] = t.action
        self._r[i] = t.reward
        self._s2[i] = t.next_stacked_state
        self._d[i] = float(t.done)
        self._cursor = (i + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)

    def _ordered_index(self) -> np.ndarray:
        start = self._cursor if self._size == self.capacity else 0
        return (start + np.arange(self._size)) % self.capacity

    def contents(self) -> list[Transition]:
        """Stored transitions, oldest first."""
        return self._take(self._ordered_index()).transitions()

    def _take(self, idx) -> Batch:
        return Batch(self._s[idx], self._a[idx], self._r[idx], self._s2[idx], self._d[idx])

    def sample(self, batch: int, rng: np.random.Generator) -> Batch:
        """Uniform draw with replacement; raises :class:`NotReady` when underfilled."""
        if self._size < batch:
            raise NotReady(f"buffer holds {self._size} transitions, batch needs {batch}")
        order = self._ordered_index()
        return self._take(order[rng.integers(0, self._size, size=batch)])


class FrameStack:
    """Concatenates the last three observations, oldest first."""

    depth = 3

    def __init__(self, obs_dim: int):
        self.obs_dim = obs_dim
        self._history: list[np.ndarray] = []

    @property
    def stacked_dim(self) -> int:
        return self.depth * self.obs_dim

    def reset(self, first_obs) -> np.ndarray:
        obs = self._check(first_obs)
        self._history = [obs] * self.depth
        return np.concatenate(self._history)

    def stack(self, raw_obs) -> np.ndarray:
        obs = self._check(raw_obs)
        if not self._history:
            return self.reset(obs)
        self._history = self._history[1:] + [obs]
        return np.concatenate(self._history)

    def _check(self, obs) -> np.ndarray:
        obs = np.array(obs, dtype=np.float64)
        if obs.shape != (self.obs_dim,):
            raise ValueError(f"observation shape {obs.shape} != ({self.obs_dim},)")
        return obs
