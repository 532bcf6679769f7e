"""Command-line entry point: ``hdpg train|eval-push|compare|plot|standing``.

On failure the process exits nonzero and prints a single JSON line on stderr,
e.g. ``{"error": "ConfigError", "message": "episodes must be >= 1, got 0"}``.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from ..agent import ALGOS
from ..envs import ENV_NAMES
from .compare import compare, parse_seeds
from .config import ConfigError, load_config
from .evaluate import evaluate_push, standing_actor_checkpoint
from .plot import emit_plotdata
from .train import TrainingDiverged, train


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _error_line(kind: str, message: str, **extra) -> str:
    return json.dumps({"error": kind, "message": message, **extra})


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        print(_error_line("UsageError", message), file=sys.stderr)
        sys.exit(2)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="hdpg", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train one agent")
    t.add_argument("--config", required=True)
    t.add_argument("--seed", type=int)
    t.add_argument("--algo", choices=ALGOS)
    t.add_argument("--env", choices=ENV_NAMES)
    t.add_argument("--episodes", type=int)
    t.add_argument("--out")

    e = sub.add_parser("eval-push", help="push-recovery benchmark of a walker checkpoint")
    e.add_argument("--checkpoint", required=True)
    e.add_argument("--magnitudes", type=_floats, default=[6.0, 8.0, 10.0, 12.0, 14.0])
    e.add_argument("--trials", type=int, default=100)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--horizon", type=float, default=10.0)
    e.add_argument("--workers", type=int, default=1)
    e.add_argument("--out", required=True)

    c = sub.add_parser("compare", help="paired multi-seed comparison")
    c.add_argument("--config", required=True)
    c.add_argument("--algos", default="ddpg,mhddpg,hdpg",
                   help="comma list; 'hdpg+merge' is HDPG with one merged head")
    c.add_argument("--seeds", default="0..9")
    c.add_argument("--episodes", type=int)
    c.add_argument("--out", required=True)

    pl = sub.add_parser("plot", help="smoothed per-component curve files")
    pl.add_argument("--metrics", required=True)
    pl.add_argument("--out", required=True)
    pl.add_argument("--window", type=int, default=50)

    s = sub.add_parser("standing", help="write a hand-built standing walker checkpoint")
    s.add_argument("--out", required=True)
    return p


def run(args) -> str:
    if args.command == "train":
        cfg = load_config(args.config)
        env_overrides = None
        if args.env and args.env != cfg.env:
            env_overrides = {}  # constants in the file belong to the other env
        cfg = cfg.with_overrides(seed=args.seed, algo=args.algo, env=args.env,
                                 episodes=args.episodes, out_dir=args.out,
                                 env_overrides=env_overrides)
        res = train(cfg)
        return f"wrote {res.metrics_path} ({res.episodes} episodes, {res.env_steps} steps)"
    if args.command == "eval-push":
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        rep = evaluate_push(args.checkpoint, args.magnitudes, args.trials, args.seed,
                            horizon=args.horizon, workers=args.workers)
        path = rep.write_csv(out / "eval_push.csv")
        rates = ", ".join(f"{m:g}N {r}" for m, r in zip(rep.magnitudes, rep.rates()))
        return f"wrote {path}: {rates}"
    if args.command == "compare":
        cfg = load_config(args.config).with_overrides(episodes=args.episodes)
        res = compare(cfg, args.algos.split(","), parse_seeds(args.seeds), args.out)
        lines = [f"{p.a} vs {p.b}: mean diff {p.mean_diff:+.4g}, wins {p.wins}/{p.n}, "
                 f"p(a>b)={p.p_greater:.3g}" for p in res.pairs]
        return "\n".join([f"wrote {args.out}/compare.csv"] + lines)
    if args.command == "plot":
        res = emit_plotdata(args.metrics, args.out, args.window)
        return f"wrote {len(res.files)} curve files ({res.skipped_rows} malformed rows skipped)"
    if args.command == "standing":
        return f"wrote {standing_actor_checkpoint(args.out)}"
    raise ConfigError(f"unknown command {args.command}")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        print(run(args))
    except TrainingDiverged as exc:
        print(_error_line("TrainingDiverged", str(exc), episode=exc.episode), file=sys.stderr)
        return 3
    except (ConfigError, ValueError, OSError, FloatingPointError, KeyError) as exc:
        print(_error_line(type(exc).__name__, str(exc)), file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
