from .base import EnvSpec, StepResult, TrajectoryRecorder, reward_bounds, scale_action
from .grid import GridMDP, grid_mdp
from .line import LineWalker, LineWalkerConfig
from .push import PushEvent, PushedEnv, apply_push
from .walker import (GaitDetector, PlanarWalker, WalkerConfig, planar_walker_step,
                     standing_pose, walker_rewards)

ENV_NAMES = ("grid", "line", "walker")


def make_env(name: str, **overrides):
    """Build a named environment; ``overrides`` set its physical constants."""
    if name == "line":
        return LineWalker(**overrides)
    if name == "walker":
        return PlanarWalker(**overrides)
    if name == "grid":
        return GridMDP.chain(**overrides)
    raise ValueError(f"unknown environment {name!r}; expected one of {ENV_NAMES}")
