"""Episode loop, per-episode metrics and periodic checkpoints."""
from __future__ import annotations

import csv
import logging
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..agent import Agent, normalize_reward
from ..envs import make_env, reward_bounds, scale_action
from ..replay import FrameStack, ReplayBuffer, Transition
from .checkpoint import save_checkpoint
from .config import RunConfig
from .seeding import child_rng

log = logging.getLogger(__name__)


class TrainingDiverged(RuntimeError):
    def __init__(self, episode: int, message: str):
        super().__init__(f"episode {episode}: {message}")
        self.episode = episode


@dataclass
class TrainResult:
    out_dir: Path
    metrics_path: Path
    checkpoint_path: Path
    episodes: int
    env_steps: int
    agent: Agent


def fmt(x) -> str:
    return repr(float(x))


def metrics_header(reward_names) -> list[str]:
    return (["episode", "steps", "env_steps"]
            + [f"raw_{n}" for n in reward_names]
            + [f"norm_{n}" for n in reward_names]
            + ["total_return", "total_norm"]
            + [f"m_{n}" for n in reward_names]
            + ["updates", "critic_loss", "actor_grad_norm"])


def build_agent(cfg: RunConfig, env) -> Agent:
    spec = env.spec
    return Agent(cfg.agent_config(), FrameStack.depth * spec.obs_dim, spec.act_dim,
                 reward_bounds(spec), child_rng(cfg.seed, "net-init"))


def train(cfg: RunConfig, out_dir=None) -> TrainResult:
    """Run ``cfg.episodes`` episodes and write metrics.csv, timing.csv and checkpoints."""
    cfg.validate()
    out = Path(out_dir or cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    env = make_env(cfg.env, **cfg.env_overrides)
    spec = env.spec
    agent = build_agent(cfg, env)
    acfg = agent.config
    buffer = ReplayBuffer(acfg.buffer_capacity, agent.state_dim, spec.act_dim, spec.K)
    frames = FrameStack(spec.obs_dim)
    env_rng = child_rng(cfg.seed, "env")
    noise_rng = child_rng(cfg.seed, "noise")
    replay_rng = child_rng(cfg.seed, "replay")

    extra = {"env": cfg.env, "env_config": cfg.canonical()["env_config"],
             "reward_names": list(spec.reward_names), "config_hash": cfg.hash(),
             "seed": cfg.seed, "frame_depth": FrameStack.depth}
    metrics_path = out / "metrics.csv"
    total_steps = 0
    ckpt_path = out / "checkpoint_final.hdpg"
    with open(metrics_path, "w", newline="") as mf, open(out / "timing.csv", "w", newline="") as tf:
        mf.write(f"# config_hash={cfg.hash()} algo={cfg.algo} env={cfg.env} seed={cfg.seed}\n")
        writer = csv.writer(mf, lineterminator="\n")
        writer.writerow(metrics_header(spec.reward_names))
        timing = csv.writer(tf, lineterminator="\n")
        timing.writerow(["episode", "wall_ms"])
        for ep in range(cfg.episodes):
            t0 = time.perf_counter()
            weights = agent.weights.copy()
            try:
                row_stats = _run_episode(cfg, env, agent, buffer, frames,
                                         env_rng, noise_rng, replay_rng)
            except (FloatingPointError, ValueError) as exc:
                mf.flush()
                raise TrainingDiverged(ep, str(exc)) from exc
            steps, raw, norm, losses, gnorms = row_stats
            total_steps += steps
            agent.end_episode(ep)
            m = np.ones(spec.K) if agent.n_heads == 1 else weights
            writer.writerow([ep, steps, total_steps, *map(fmt, raw), *map(fmt, norm),
                             fmt(raw.sum()), fmt(norm.sum()), *map(fmt, m), agent.updates,
                             fmt(np.mean(losses)) if losses else "nan",
                             fmt(np.mean(gnorms)) if gnorms else "nan"])
            timing.writerow([ep, f"{1000 * (time.perf_counter() - t0):.3f}"])
            if (ep + 1) % cfg.checkpoint_every == 0:
                save_checkpoint(out / f"checkpoint_ep{ep + 1}.hdpg", agent,
                                dict(extra, episode=ep + 1))
        save_checkpoint(ckpt_path, agent, dict(extra, episode=cfg.episodes))
    log.info("trained %d episodes, %d env steps -> %s", cfg.episodes, total_steps, out)
    return TrainResult(out, metrics_path, ckpt_path, cfg.episodes, total_steps, agent)


def _run_episode(cfg, env, agent, buffer, frames, env_rng, noise_rng, replay_rng):
    spec = env.spec
    batch = agent.config.batch
    max_updates = cfg.max_updates
    raw_ret = np.zeros(spec.K)
    norm_ret = np.zeros(spec.K)
    losses, gnorms = [], []
    agent.begin_episode()
    s = frames.reset(env.reset(env_rng))
    steps = 0
    while True:
        a = agent.act(s, True, noise_rng)
        res = env.step(scale_action(spec, a))
        s2 = frames.stack(res.obs)
        buffer.push(Transition(s, a, res.reward, s2, res.done))
        agent.record_reward(res.reward)
        raw_ret += res.reward
        norm_ret += normalize_reward(res.reward, agent.normalizer)
        steps += 1
        if len(buffer) >= batch and (max_updates == 0 or agent.updates < max_updates):
            loss, gnorm = agent.update(buffer.sample(batch, replay_rng))
            losses.append(loss)
            gnorms.append(gnorm)
        s = s2
        if res.done:
            return steps, raw_ret, norm_ret, losses, gnorms


def read_metrics(path):
    """Parse metrics.csv into (header, rows of floats); comment lines are skipped."""
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.reader(lines)
    header = next(reader)
    rows = [[float(v) for v in r] for r in reader if r]
    return header, np.array(rows) if rows else np.zeros((0, len(header)))
