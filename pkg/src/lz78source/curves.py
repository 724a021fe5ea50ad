"""Checkpoint grids and the ``n,value`` CSV series every statistic emits."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

DEFAULT_PER_DECADE = 50


def log_checkpoints(n: int, per_decade: int = DEFAULT_PER_DECADE, start: int = 1) -> np.ndarray:
    """Distinct integers ``start <= m <= n`` spaced evenly in log10, always ending at ``n``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    start = max(1, min(start, n))
    lo, hi = math.log10(start), math.log10(n)
    count = max(1, int(math.ceil((hi - lo) * per_decade)) + 1)
    pts = np.unique(np.round(np.logspace(lo, hi, count)).astype(np.int64))
    pts = pts[(pts >= start) & (pts <= n)]
    if pts.size == 0 or pts[-1] != n:
        pts = np.append(pts, n)
    return pts


def normalize_checkpoints(checkpoints, n: int, start: int = 1) -> np.ndarray:
    if checkpoints is None:
        return log_checkpoints(n, start=start)
    ck = np.unique(np.asarray(checkpoints, dtype=np.int64))
    if ck.size and (ck[0] < start or ck[-1] > n):
        raise ValueError(f"checkpoints must lie in [{start}, {n}]")
    return ck


def _fmt(v: float) -> str:
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return repr(float(v))


@dataclass
class CurveSeries:
    """A statistic evaluated at increasing prefix lengths."""

    n: np.ndarray
    value: np.ndarray

    def __post_init__(self):
        self.n = np.asarray(self.n, dtype=np.int64)
        self.value = np.asarray(self.value, dtype=np.float64)
        if self.n.shape != self.value.shape:
            raise ValueError("checkpoint and value arrays differ in length")

    def __len__(self) -> int:
        return self.n.size

    @property
    def final(self) -> float:
        return float(self.value[-1])

    def at(self, n: int) -> float:
        idx = np.searchsorted(self.n, n)
        if idx >= self.n.size or self.n[idx] != n:
            raise KeyError(n)
        return float(self.value[idx])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["n", "value"])
            for m, v in zip(self.n.tolist(), self.value.tolist()):
                w.writerow([m, _fmt(v)])

    @classmethod
    def from_csv(cls, path) -> "CurveSeries":
        with open(Path(path), newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows or rows[0] != ["n", "value"]:
            raise ValueError(f"{path}: expected header 'n,value'")
        body = rows[1:]
        return cls([int(r[0]) for r in body], [float(r[1]) for r in body])
