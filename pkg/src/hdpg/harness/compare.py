"""Paired multi-seed comparison of algorithms on one environment."""
from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.stats import binomtest

from .config import ConfigError, RunConfig
from .train import read_metrics, train


@dataclass(frozen=True)
class Variant:
    """An algorithm label such as ``ddpg`` or ``hdpg+merge`` (HDPG with one merged head)."""
    label: str
    algo: str
    merge_heads: bool = False

    @classmethod
    def parse(cls, label: str) -> "Variant":
        algo, _, flag = label.strip().partition("+")
        if flag not in ("", "merge"):
            raise ConfigError(f"unknown variant modifier {flag!r} in {label!r}")
        return cls(label.strip(), algo, flag == "merge")

    def apply(self, cfg: RunConfig, seed: int) -> RunConfig:
        agent = dict(cfg.agent)
        if self.merge_heads:
            agent["merge_heads"] = True
        return cfg.with_overrides(algo=self.algo, seed=seed, agent=agent)


@dataclass
class PairStats:
    a: str
    b: str
    n: int               # seeds with a nonzero difference
    wins: int            # seeds where a > b
    losses: int
    mean_diff: float     # mean over all seeds of (a - b)
    p_greater: float     # one-sided sign test, H1: a tends to beat b
    p_less: float        # one-sided sign test, H1: a tends to lose to b
    p_two_sided: float


@dataclass
class Comparison:
    labels: list
    seeds: list
    table: np.ndarray    # (n_seeds, n_labels) final-window mean returns
    pairs: list


def final_window_mean(metrics_path, fraction: float = 0.1, column: str = "total_return") -> float:
    header, rows = read_metrics(metrics_path)
    n = max(1, math.ceil(len(rows) * fraction))
    return float(rows[-n:, header.index(column)].mean())


def sign_test(a, b, label_a="a", label_b="b") -> PairStats:
    d = np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64)
    wins, losses = int((d > 0).sum()), int((d < 0).sum())
    n = wins + losses
    if n == 0:
        p_gt = p_lt = p_two = 1.0
    else:
        p_gt = binomtest(wins, n, 0.5, alternative="greater").pvalue
        p_lt = binomtest(wins, n, 0.5, alternative="less").pvalue
        p_two = binomtest(wins, n, 0.5, alternative="two-sided").pvalue
    return PairStats(label_a, label_b, n, wins, losses, float(d.mean()),
                     float(p_gt), float(p_lt), float(p_two))


def compare_tables(labels, seeds, table) -> list[PairStats]:
    return [sign_test(table[:, i], table[:, j], labels[i], labels[j])
            for i, j in itertools.combinations(range(len(labels)), 2)]


def compare(base: RunConfig, labels, seeds, out_dir, fraction: float = 0.1,
            seed_lists: dict | None = None) -> Comparison:
    """Train every (variant, seed) pair and compare final-window mean total return.

    ``seed_lists`` lets a caller state per-variant seed lists; they must agree.
    """
    variants = [Variant.parse(lb) for lb in labels]
    if len(variants) < 2:
        raise ConfigError("compare needs at least two algorithms")
    if len({v.label for v in variants}) != len(variants):
        raise ConfigError(f"duplicate algorithm labels in {list(labels)}")
    seeds = [int(s) for s in seeds]
    if seed_lists:
        for label, lst in seed_lists.items():
            if [int(s) for s in lst] != seeds:
                raise ConfigError(f"seed list for {label} {list(lst)} differs from {seeds}")
    if not seeds or len(set(seeds)) != len(seeds):
        raise ConfigError(f"seed list must be non-empty and distinct, got {seeds}")
    out = Path(out_dir)
    table = np.zeros((len(seeds), len(variants)))
    for j, v in enumerate(variants):
        for i, seed in enumerate(seeds):
            cfg = v.apply(base, seed)
            res = train(cfg, out / v.label / f"seed{seed}")
            table[i, j] = final_window_mean(res.metrics_path, fraction)
    result = Comparison([v.label for v in variants], seeds, table,
                        compare_tables([v.label for v in variants], seeds, table))
    write_comparison(result, out)
    return result


def write_comparison(result: Comparison, out_dir) -> tuple[Path, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    table_path, pairs_path = out / "compare.csv", out / "compare_pairs.csv"
    with open(table_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["seed", *result.labels])
        for seed, row in zip(result.seeds, result.table):
            w.writerow([seed, *(repr(float(x)) for x in row)])
        w.writerow(["mean", *(repr(float(x)) for x in result.table.mean(axis=0))])
    with open(pairs_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["a", "b", "n_nonzero", "wins_a", "wins_b", "mean_diff",
                    "p_a_greater", "p_a_less", "p_two_sided"])
        for p in result.pairs:
            w.writerow([p.a, p.b, p.n, p.wins, p.losses, repr(p.mean_diff),
                        repr(p.p_greater), repr(p.p_less), repr(p.p_two_sided)])
    return table_path, pairs_path


def parse_seeds(text: str) -> list[int]:
    """``0..9`` (inclusive range) or a comma list such as ``0,3,7``."""
    text = text.strip()
    try:
        if ".." in text:
            lo, hi = (int(x) for x in text.split(".."))
            if hi < lo:
                raise ValueError
            return list(range(lo, hi + 1))
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"bad seed list {text!r}; use 0..9 or 0,1,2") from None
