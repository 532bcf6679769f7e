from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from ..agent import RewardNormalizer


@dataclass(frozen=True)
class EnvSpec:
    name: str
    obs_dim: int
    act_dim: int
    reward_names: tuple
    reward_low: tuple
    reward_high: tuple
    dt_ctrl: float
    max_steps: int
    action_low: tuple
    action_high: tuple

    def __post_init__(self):
        if self.obs_dim < 1 or self.act_dim < 1:
            raise ValueError("environment dimensions must be positive")
        k = len(self.reward_names)
        if not (len(self.reward_low) == len(self.reward_high) == k):
            raise ValueError("reward names and bounds differ in length")
        if any(hi <= lo for lo, hi in zip(self.reward_low, self.reward_high)):
            raise ValueError(f"{self.name}: reward bounds need max > min")

    @property
    def K(self) -> int:
        return len(self.reward_names)


@dataclass
class StepResult:
    obs: np.ndarray
    reward: np.ndarray
    done: bool
    info: dict = field(default_factory=dict)


def reward_bounds(spec: EnvSpec) -> RewardNormalizer:
    return RewardNormalizer(np.array(spec.reward_low), np.array(spec.reward_high))


def scale_action(spec: EnvSpec, action) -> np.ndarray:
    """Map an agent action in [-1, 1]^d affinely onto the environment's box."""
    lo, hi = np.asarray(spec.action_low), np.asarray(spec.action_high)
    a = np.clip(np.asarray(action, dtype=np.float64), -1.0, 1.0)
    return lo + 0.5 * (a + 1.0) * (hi - lo)


class TrajectoryRecorder:
    """Wraps an environment and keeps (time, obs, action, raw reward) rows."""

    def __init__(self, env):
        self.env = env
        self.rows: list[list[float]] = []
        self._t = 0.0

    def __getattr__(self, name):
        return getattr(self.env, name)

    def reset(self, rng=None):
        self._t = 0.0
        obs = self.env.reset(rng)
        self.rows.append([self._t, *obs, *([np.nan] * self.env.spec.act_dim),
                          *([np.nan] * self.env.spec.K)])
        return obs

    def step(self, action):
        res = self.env.step(action)
        self._t += self.env.spec.dt_ctrl
        self.rows.append([self._t, *res.obs, *np.atleast_1d(action), *res.reward])
        return res

    def write_csv(self, path):
        spec = self.env.spec
        header = (["time"] + [f"obs_{i}" for i in range(spec.obs_dim)]
                  + [f"action_{i}" for i in range(spec.act_dim)]
                  + [f"r_{n}" for n in spec.reward_names])
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for row in self.rows:
                w.writerow([repr(float(v)) for v in row])
