"""Smoothed training curves as two-column text files."""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

log = logging.getLogger(__name__)


@dataclass
class PlotResult:
    files: list
    skipped_rows: int


def trailing_mean(x, window: int) -> np.ndarray:
    """Mean of the last ``window`` values (fewer at the start).

    Computed as x[i] + mean(x[j] - x[i]), so a constant run reproduces its
    value exactly and window 1 is the identity.
    """
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    for i in range(len(x)):
        seg = x[max(0, i - window + 1):i + 1]
        out[i] = x[i] + (seg - x[i]).mean()
    return out


def _read_rows(path):
    header, rows, skipped = None, [], 0
    with open(path, newline="") as fh:
        for lineno, rec in enumerate(csv.reader(fh), 1):
            if not rec or rec[0].startswith("#"):
                continue
            if header is None:
                header = rec
                continue
            try:
                if len(rec) != len(header):
                    raise ValueError(f"{len(rec)} fields, expected {len(header)}")
                vals = [float(v) for v in rec]
                if not math.isfinite(vals[0]):
                    raise ValueError("non-finite episode index")
            except ValueError as exc:
                log.warning("%s:%d: skipping malformed row (%s)", path, lineno, exc)
                skipped += 1
                continue
            rows.append(vals)
    if header is None:
        raise ValueError(f"{path}: no header row")
    return header, np.array(rows).reshape(-1, len(header)), skipped


def emit_plotdata(metrics_path, out_dir, window: int = 50) -> PlotResult:
    """Write curve_<component>.dat, curve_total.dat and curve_m_<component>.dat."""
    header, rows, skipped = _read_rows(metrics_path)
    if skipped:
        log.warning("%s: %d malformed rows skipped", metrics_path, skipped)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    episodes = rows[:, header.index("episode")]
    series = [(f"curve_{h[4:]}.dat", h) for h in header if h.startswith("raw_")]
    series.append(("curve_total.dat", "total_return"))
    series += [(f"curve_m_{h[2:]}.dat", h) for h in header if h.startswith("m_")]
    files = []
    for fname, col in series:
        smooth = trailing_mean(rows[:, header.index(col)], window)
        path = out / fname
        with open(path, "w") as fh:
            fh.write(f"# episode {col} (trailing mean, window {window})\n")
            for e, v in zip(episodes, smooth):
                fh.write(f"{int(e)} {float(v)!r}\n")
        files.append(path)
    return PlotResult(files, skipped)
