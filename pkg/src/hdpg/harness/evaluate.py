"""Push-recovery benchmark for walker checkpoints."""
from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from ..agent import Agent, AgentConfig, select_action
from ..envs import (PlanarWalker, PushEvent, WalkerConfig, reward_bounds, scale_action,
                    standing_pose)
from ..replay import FrameStack
from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .seeding import child_rng


@dataclass
class EvalReport:
    magnitudes: list = field(default_factory=list)
    successes: list = field(default_factory=list)
    trials: int = 0

    def rates(self) -> list[Fraction]:
        return [Fraction(s, self.trials) for s in self.successes]

    def write_csv(self, path) -> Path:
        path = Path(path)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["magnitude", "successes", "trials", "rate", "rate_float"])
            for m, s, r in zip(self.magnitudes, self.successes, self.rates()):
                w.writerow([repr(float(m)), s, self.trials, f"{r.numerator}/{r.denominator}",
                            repr(float(r))])
        return path


def _walker_for(ckpt, steps_needed: int) -> PlanarWalker:
    m = ckpt.manifest
    if m.get("env") != "walker":
        raise CheckpointError(f"push evaluation needs a walker checkpoint, got env={m.get('env')!r}")
    env_cfg = dict(m.get("env_config", {}))
    env_cfg["max_steps"] = steps_needed + 1
    unknown = sorted(set(env_cfg) - set(asdict(WalkerConfig())))
    if unknown:
        raise CheckpointError(f"checkpoint env_config has non-walker keys {unknown}")
    env = PlanarWalker(WalkerConfig(**env_cfg))
    depth = m.get("frame_depth", FrameStack.depth)
    want_in, want_out = depth * env.spec.obs_dim, env.spec.act_dim
    sizes = ckpt.actor.spec.layer_sizes
    if sizes[0] != want_in or sizes[-1] != want_out:
        raise CheckpointError(
            f"checkpoint actor maps {sizes[0]} -> {sizes[-1]} but the walker needs "
            f"{want_in} (= {depth} x {env.spec.obs_dim} obs) -> {want_out} actions")
    return env


def run_trial(ckpt, magnitude: float, mag_index: int, trial: int, seed: int,
              horizon: float, max_onset: float, duration: float) -> bool:
    """One push trial. True when the fall predicate stays clear until onset + horizon."""
    rng = child_rng(seed, "eval", mag_index, trial)
    env = _walker_for(ckpt, 1)
    c = env.config
    event = PushEvent.random(magnitude, rng, max_onset, duration, c.dt_phys)
    steps_needed = math.ceil(round((event.onset + horizon) / c.dt_ctrl, 9))
    env = _walker_for(ckpt, steps_needed)
    env.push_events = [event]
    frames = FrameStack(env.spec.obs_dim)
    s = frames.reset(env.reset(rng))
    for _ in range(steps_needed):
        a = select_action(ckpt.actor, s, None, False)
        res = env.step(scale_action(env.spec, a))
        if res.info["fell"]:
            return False
        s = frames.stack(res.obs)
    return True


def _magnitude_task(args):
    ckpt_path, m, i, trials, seed, horizon, max_onset, duration = args
    ckpt = load_checkpoint(ckpt_path)
    return sum(run_trial(ckpt, m, i, j, seed, horizon, max_onset, duration)
               for j in range(trials))


def evaluate_push(checkpoint, magnitudes, trials: int = 100, seed: int = 0,
                  horizon: float = 10.0, max_onset: float = 5.0, duration: float = 0.2,
                  workers: int = 1) -> EvalReport:
    """Success counts per push magnitude. The checkpoint file is only read."""
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    mags = [float(m) for m in magnitudes]
    if any(m < 0 for m in mags):
        raise ValueError(f"push magnitudes must be non-negative, got {mags}")
    ckpt = load_checkpoint(checkpoint)
    _walker_for(ckpt, 1)  # fail fast on a spec mismatch
    tasks = [(str(checkpoint), m, i, trials, seed, horizon, max_onset, duration)
             for i, m in enumerate(mags)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            successes = list(pool.map(_magnitude_task, tasks))
    else:
        successes = [sum(run_trial(ckpt, m, i, j, seed, horizon, max_onset, duration)
                         for j in range(trials)) for (_, m, i, *_rest) in tasks]
    return EvalReport(mags, [int(s) for s in successes], trials)


def standing_actor_checkpoint(path, cfg: WalkerConfig | None = None, hidden=(32, 32)):
    """Write a walker checkpoint whose actor always commands the standing pose.

    Hidden weights are zero, so the output is tanh(final bias); the bias is set
    to the inverse of the action scaling at the standing joint targets.
    """
    cfg = cfg or WalkerConfig()
    env = PlanarWalker(cfg)
    acfg = AgentConfig(algo="hdpg", actor_hidden=hidden, critic_branch=hidden[0],
                       critic_trunk=hidden[-1], buffer_capacity=1)
    agent = Agent(acfg, FrameStack.depth * env.spec.obs_dim, env.spec.act_dim,
                  reward_bounds(env.spec), np.random.default_rng(0))
    lo, hi = np.array(env.spec.action_low), np.array(env.spec.action_high)
    target = standing_pose(cfg)[3:]
    u = np.clip(2.0 * (target - lo) / (hi - lo) - 1.0, -1 + 1e-12, 1 - 1e-12)
    agent.actor.flat[...] = 0.0
    agent.actor.biases[-1][...] = np.arctanh(u)
    agent.target_actor.flat[...] = agent.actor.flat
    extra = {"env": "walker", "env_config": asdict(cfg),
             "reward_names": list(env.spec.reward_names), "frame_depth": FrameStack.depth,
             "note": "hand-built standing policy"}
    return save_checkpoint(path, agent, extra)
