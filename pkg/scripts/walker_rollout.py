"""Roll out a walker policy and dump (time, obs, action, reward) rows to CSV."""
import argparse

import numpy as np

from hdpg.agent import select_action
from hdpg.envs import PlanarWalker, PushEvent, TrajectoryRecorder, WalkerConfig, scale_action
from hdpg.harness import load_checkpoint, standing_actor_checkpoint
from hdpg.replay import FrameStack


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--checkpoint", help="defaults to the hand-built standing policy")
    ap.add_argument("--seconds", type=float, default=5.0)
    ap.add_argument("--push", type=float, default=0.0, help="push magnitude in N")
    ap.add_argument("--onset", type=float, default=1.0)
    ap.add_argument("--out", default="walker_rollout.csv")
    args = ap.parse_args()

    path = args.checkpoint or standing_actor_checkpoint("standing.hdpg")
    ckpt = load_checkpoint(path)
    cfg = dict(ckpt.manifest["env_config"])
    steps = int(round(args.seconds / WalkerConfig(**cfg).dt_ctrl))
    cfg["max_steps"] = steps
    env = PlanarWalker(WalkerConfig(**cfg))
    if args.push:
        env.push_events = [PushEvent(args.push, onset=args.onset)]
    rec = TrajectoryRecorder(env)
    frames = FrameStack(env.spec.obs_dim)
    s = frames.reset(rec.reset(np.random.default_rng(0)))
    for _ in range(steps):
        res = rec.step(scale_action(env.spec, select_action(ckpt.actor, s, None, False)))
        s = frames.stack(res.obs)
        if res.done:
            break
    rec.write_csv(args.out)
    print(f"{len(rec.rows)} rows -> {args.out}; fell={res.info['fell']}")


if __name__ == "__main__":
    main()
