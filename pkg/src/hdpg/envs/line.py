"""One-dimensional double-integrator walker with a 3-component reward."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .base import EnvSpec, StepResult


@dataclass
class LineWalkerConfig:
    dt: float = 0.05
    drag: float = 0.1
    v_max: float = 3.0
    max_steps: int = 400
    effort_weight: float = 0.1
    alive_bonus: float = 0.05
    crash_penalty: float = -5.0


class LineWalker:
    """Point mass pushed along a line.

    Rewards: progress (distance moved this step), effort (-w |force|) and
    alive (+bonus per step; the crash penalty instead once |v| exceeds
    v_max, which also ends the episode). Observation: [v / v_max, last force,
    fraction of the episode elapsed].
    """

    name = "line"
    reward_names = ("progress", "effort", "alive")

    def __init__(self, config: LineWalkerConfig | None = None, **overrides):
        self.config = config or LineWalkerConfig(**overrides)
        c = self.config
        progress = c.v_max * c.dt
        self.spec = EnvSpec(
            name=self.name, obs_dim=3, act_dim=1, reward_names=self.reward_names,
            reward_low=(-progress, -c.effort_weight, c.crash_penalty),
            reward_high=(progress, 0.0, c.alive_bonus),
            dt_ctrl=c.dt, max_steps=c.max_steps,
            action_low=(-1.0,), action_high=(1.0,),
        )
        self.x = self.v = self.last_force = 0.0
        self.t = 0

    def reset(self, rng=None) -> np.ndarray:
        self.x = self.v = self.last_force = 0.0
        self.t = 0
        return self._obs()

    def _obs(self) -> np.ndarray:
        c = self.config
        return np.array([self.v / c.v_max, self.last_force, self.t / c.max_steps])

    def step(self, action) -> StepResult:
        force = float(np.asarray(action, dtype=np.float64).reshape(-1)[0])
        if not np.isfinite(force):
            raise ValueError(f"non-finite action {action!r}")
        force = min(max(force, -1.0), 1.0)
        c = self.config
        x_old = self.x
        self.x = self.x + self.v * c.dt
        self.v = self.v + (force - c.drag * self.v) * c.dt
        self.last_force = force
        self.t += 1
        crashed = abs(self.v) > c.v_max
        reward = np.array([
            self.x - x_old,
            -c.effort_weight * abs(force),
            c.crash_penalty if crashed else c.alive_bonus,
        ])
        truncated = self.t >= c.max_steps
        return StepResult(self._obs(), reward, crashed or truncated,
                          {"crashed": crashed, "truncated": truncated and not crashed,
                           "distance": self.x})
