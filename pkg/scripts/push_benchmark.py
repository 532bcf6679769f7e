"""Push-recovery benchmark: 100 trials at each of 6, 8, 10, 12 and 14 N.

Without --checkpoint a hand-built standing policy is evaluated, which gives a
baseline for what a non-stepping controller survives.
"""
import argparse
from pathlib import Path

from hdpg.harness import evaluate_push, standing_actor_checkpoint


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--checkpoint")
    ap.add_argument("--magnitudes", default="0,6,8,10,12,14")
    ap.add_argument("--trials", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="runs/push")
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ckpt = args.checkpoint or standing_actor_checkpoint(out / "standing.hdpg")
    rep = evaluate_push(ckpt, [float(m) for m in args.magnitudes.split(",")],
                        args.trials, args.seed)
    rep.write_csv(out / "eval_push.csv")
    for m, s, r in zip(rep.magnitudes, rep.successes, rep.rates()):
        print(f"{m:5.1f} N  {s:3d}/{rep.trials}  rate {r}")


if __name__ == "__main__":
    main()
