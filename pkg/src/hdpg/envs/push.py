from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PushEvent:
    magnitude: float            # N
    duration: float = 0.2       # s
    direction: str = "forward"  # forward (+x) or backward (-x)
    onset: float = 0.0          # s after reset

    def __post_init__(self):
        if self.magnitude < 0:
            raise ValueError(f"push magnitude must be >= 0, got {self.magnitude}")
        if self.duration <= 0:
            raise ValueError(f"push duration must be > 0, got {self.duration}")
        if self.direction not in ("forward", "backward"):
            raise ValueError(f"push direction must be forward or backward, got {self.direction!r}")
        if self.onset < 0:
            raise ValueError("push onset must be >= 0")

    @property
    def signed_magnitude(self) -> float:
        return self.magnitude if self.direction == "forward" else -self.magnitude

    def substep_window(self, dt_phys: float) -> tuple[int, int]:
        """(first substep index, number of substeps) during which the force acts."""
        return int(round(self.onset / dt_phys)), int(round(self.duration / dt_phys))

    @classmethod
    def random(cls, magnitude: float, rng: np.random.Generator, max_onset: float = 5.0,
               duration: float = 0.2, dt_phys: float = 0.002) -> "PushEvent":
        """Onset uniform over [0, max_onset), snapped to the physics grid; random direction."""
        onset = int(rng.integers(0, int(round(max_onset / dt_phys)))) * dt_phys
        direction = "forward" if rng.integers(0, 2) == 0 else "backward"
        return cls(magnitude, duration, direction, onset)


class PushedEnv:
    """Applies a horizontal pelvis force to a :class:`PlanarWalker`.

    Counts the substeps during which the force was actually applied.
    """

    def __init__(self, env, event: PushEvent):
        self.env = env
        self.event = event
        self.active_substeps = 0

    def __getattr__(self, name):
        return getattr(self.env, name)

    def reset(self, rng=None):
        self.active_substeps = 0
        self.env.push_events = [self.event]
        return self.env.reset(rng)

    def step(self, action):
        start, count = self.event.substep_window(self.env.config.dt_phys)
        here, n = self.env.substep_count, self.env.config.substeps
        self.active_substeps += max(0, min(start + count, here + n) - max(start, here))
        return self.env.step(action)


def apply_push(env, event: PushEvent) -> PushedEnv:
    env.push_events = [event]
    return PushedEnv(env, event)
