"""Train DDPG, MHDDPG and HDPG on shared seeds and print the paired comparison.

    python scripts/run_comparison.py --config configs/line.cfg --seeds 0..9 --out runs/compare
"""
import argparse

from hdpg.harness import compare, emit_plotdata, load_config, parse_seeds


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default="configs/line.cfg")
    ap.add_argument("--algos", default="ddpg,mhddpg,hdpg")
    ap.add_argument("--seeds", default="0..9")
    ap.add_argument("--out", default="runs/compare")
    ap.add_argument("--plots", action="store_true", help="also write curve files per run")
    args = ap.parse_args()

    res = compare(load_config(args.config), args.algos.split(","), parse_seeds(args.seeds),
                  args.out)
    print("seed  " + "  ".join(f"{lb:>10}" for lb in res.labels))
    for seed, row in zip(res.seeds, res.table):
        print(f"{seed:>4}  " + "  ".join(f"{v:10.4f}" for v in row))
    print("mean  " + "  ".join(f"{v:10.4f}" for v in res.table.mean(axis=0)))
    for p in res.pairs:
        print(f"{p.a} - {p.b}: mean {p.mean_diff:+.4f}, {p.a} ahead on {p.wins}/{p.n}, "
              f"p({p.a} better)={p.p_greater:.3f}, p({p.a} worse)={p.p_less:.3f}")
    if args.plots:
        for label in res.labels:
            for seed in res.seeds:
                run = f"{args.out}/{label}/seed{seed}"
                emit_plotdata(f"{run}/metrics.csv", f"{run}/plots")


if __name__ == "__main__":
    main()
