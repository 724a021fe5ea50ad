"""Reference sequential probability assignments: binary CTW, add-gamma Markov
plug-in, and the LZ78 mixture SPA itself."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from . import _kernels as K
from .curves import CurveSeries, normalize_checkpoints
from .lz_source import as_symbols, log_probability
from .prior import LN2, Prior

MAX_CTW_DEPTH = 24


class CtwModel:
    """Binary context-tree weighting with KT estimators at every node.

    Nodes are created lazily along the context path; before D symbols have
    been seen the missing history is filled with ``pad``.
    """

    def __init__(self, depth: int, pad: int = 0, capacity: int = 1024):
        if not 0 <= depth <= MAX_CTW_DEPTH:
            raise ValueError(f"CTW depth must lie in [0, {MAX_CTW_DEPTH}]")
        if pad not in (0, 1):
            raise ValueError("CTW is binary; pad must be 0 or 1")
        self.depth = depth
        self.pad = pad
        capacity = max(capacity, depth + 2)
        self.children = np.full((capacity, 2), -1, dtype=np.int32)
        self.counts = np.zeros((capacity, 2), dtype=np.int64)
        self.log_kt = np.zeros(capacity)
        self.log_beta = np.zeros(capacity)
        self.n_nodes = np.ones(1, dtype=np.int64)
        self.history = np.full(max(depth, 1), pad, dtype=np.int64)
        self.hpos = np.zeros(1, dtype=np.int64)
        self._path = np.empty(depth + 1, dtype=np.int64)
        self.t = 0

    @property
    def log_probability(self) -> float:
        """log2 of the weighted probability of everything seen so far."""
        return float(self.log_beta[0]) / LN2

    def _grow(self) -> None:
        old = self.children.shape[0]

        def ext(a, fill):
            out = np.full((2 * old,) + a.shape[1:], fill, dtype=a.dtype)
            out[:old] = a
            return out

        self.children = ext(self.children, -1)
        self.counts = ext(self.counts, 0)
        self.log_kt = ext(self.log_kt, 0.0)
        self.log_beta = ext(self.log_beta, 0.0)

    def predict(self) -> np.ndarray:
        """Ratio of weighted root probabilities with each symbol appended."""
        base = self.log_beta[0]
        out = np.empty(2)
        for s in (0, 1):
            after = K.ctw_root_after(self.depth, self.history, int(self.hpos[0]), self.children,
                                     self.counts, self.log_kt, self.log_beta, self._path, s)
            out[s] = math.exp(after - base)
        return out

    def update(self, symbol: int) -> "CtwModel":
        if symbol not in (0, 1):
            raise ValueError("CTW is binary")
        self.run(np.asarray([symbol], dtype=np.uint8))
        return self

    def run(self, x) -> np.ndarray:
        """Absorb every symbol of ``x``; returns per-symbol log loss in nats."""
        xs = as_symbols(x, 2)
        out = np.empty(xs.size)
        t = 0
        while t < xs.size:
            t = K.ctw_run(xs, t, self.depth, self.history, self.hpos, self.children,
                          self.counts, self.log_kt, self.log_beta, self.n_nodes, self._path, out)
            if t < xs.size:
                self._grow()
        self.t += xs.size
        return -out


def ctw_new(depth: int, pad: int = 0) -> CtwModel:
    return CtwModel(depth, pad)


def ctw_predict(model: CtwModel) -> np.ndarray:
    return model.predict()


def ctw_update(model: CtwModel, symbol: int) -> CtwModel:
    return model.update(symbol)


# -- SPA configurations ---------------------------------------------------------


@dataclass(frozen=True)
class Ctw:
    depth: int
    pad: int = 0

    @property
    def label(self) -> str:
        return f"ctw_{self.depth}"


@dataclass(frozen=True)
class MarkovPlugin:
    """Adaptive k-th order Markov SPA scoring (count + gamma) / (total + |A| gamma)."""

    order: int
    gamma: float = 0.5
    pad: int = 0

    @property
    def label(self) -> str:
        return f"plugin_{self.order}_{self.gamma!r}"


@dataclass(frozen=True)
class Lz78Spa:
    prior: Prior

    @property
    def label(self) -> str:
        return "lz78"


Spa = Union[Ctw, MarkovPlugin, Lz78Spa]


def spa_log_loss(spa: Spa, x, checkpoints=None, alphabet_size: int | None = None) -> CurveSeries:
    """Cumulative normalized log loss (bits/symbol) of ``spa`` on each prefix of ``x``."""
    if isinstance(spa, Lz78Spa):
        lp = log_probability(spa.prior, x, checkpoints)
        return CurveSeries(lp.n, -lp.value / lp.n)
    if isinstance(spa, Ctw):
        xs = as_symbols(x, 2)
        cap = min((xs.size + 1) * (spa.depth + 1) + 1, 1 << 20)
        losses = CtwModel(spa.depth, spa.pad, capacity=cap).run(xs)
    elif isinstance(spa, MarkovPlugin):
        xs = as_symbols(x, alphabet_size)
        A = alphabet_size or max(2, int(xs.max()) + 1)
        if not spa.gamma > 0.0:
            raise ValueError("plug-in smoothing gamma must be positive")
        losses = K.plugin_losses(xs, A, spa.order, spa.gamma, spa.pad)
    else:
        raise TypeError(f"unknown SPA configuration {spa!r}")
    ck = normalize_checkpoints(checkpoints, xs.size)
    cum = np.cumsum(losses) / LN2
    return CurveSeries(ck, cum[ck - 1] / ck)
