"""Empirical measures of realized sequences and traces.

Windows are sliding (overlapping) and windows that would run past the end of
the sequence are dropped, never padded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .curves import CurveSeries, normalize_checkpoints
from .events import SimplexBox, TestEvent
from .lz_source import GenerationTrace, as_symbols
from .prior import ATOM, LN2, Prior, flatten

MAX_DENSE_ORDER = 12
# contexts above this size go through the sparse (relabelled) path
_DENSE_CELLS = 1 << 22


@dataclass
class Estimate:
    """A value with its Monte-Carlo standard error (0 when exact)."""

    value: float
    stderr: float = 0.0


@dataclass
class TupleCounts:
    order: int
    alphabet_size: int
    table: np.ndarray  # counts indexed by base-A code, oldest symbol most significant

    @property
    def windows(self) -> int:
        return int(self.table.sum())

    def code(self, word) -> int:
        c = 0
        for s in word:
            c = c * self.alphabet_size + int(s)
        return c

    def __getitem__(self, word) -> int:
        if isinstance(word, str):
            word = [int(ch) for ch in word]
        return int(self.table[self.code(word)])

    def frequencies(self) -> np.ndarray:
        return self.table / max(1, self.windows)

    def as_dict(self) -> dict[str, int]:
        out = {}
        for code in np.flatnonzero(self.table):
            digits = []
            c = int(code)
            for _ in range(self.order):
                digits.append(c % self.alphabet_size)
                c //= self.alphabet_size
            out["".join(str(d) for d in reversed(digits))] = int(self.table[code])
        return out


def _alphabet(xs: np.ndarray, alphabet_size: int | None) -> int:
    if alphabet_size is not None:
        return alphabet_size
    return max(2, int(xs.max()) + 1) if xs.size else 2


def tuple_counts(x, r: int, alphabet_size: int | None = None) -> TupleCounts:
    """Sliding-window counts of every r-gram of ``x``."""
    xs = as_symbols(x, alphabet_size)
    A = _alphabet(xs, alphabet_size)
    if not 1 <= r <= min(MAX_DENSE_ORDER, xs.size):
        raise ValueError(f"order r={r} must satisfy 1 <= r <= min({MAX_DENSE_ORDER}, len(x)={xs.size})")
    codes = K.window_codes(xs, r, A)
    return TupleCounts(r, A, np.bincount(codes, minlength=A ** r).astype(np.int64))


@dataclass
class MuCurve:
    k: int
    curve: CurveSeries


def mu_k(x, k: int, checkpoints=None, alphabet_size: int | None = None) -> MuCurve:
    """k-th order empirical conditional entropy (bits) of each prefix x^m.

    At prefix length m the m - k windows of length k+1 are counted, and the
    context counts are their k-symbol heads, so the weights sum to one.
    """
    xs = as_symbols(x, alphabet_size)
    A = _alphabet(xs, alphabet_size)
    if k < 0:
        raise ValueError("k must be >= 0")
    if xs.size < k + 1:
        raise ValueError(f"sequence of length {xs.size} is too short for k={k}")
    ck = normalize_checkpoints(checkpoints, xs.size, start=k + 1)
    if math.log(A) * (k + 1) >= math.log(2.0) * 62:
        raise ValueError(f"order k={k} is too large for alphabet size {A}")
    codes = K.window_codes(xs, k + 1, A)
    if A ** (k + 1) <= _DENSE_CELLS and k + 1 <= MAX_DENSE_ORDER:
        tuple_ids, n_tuple = codes, A ** (k + 1)
        ctx_ids, n_ctx = codes // A, A ** k
    else:
        uniq, tuple_ids = np.unique(codes, return_inverse=True)
        n_tuple = uniq.size
        cuniq, ctx_ids = np.unique(codes // A, return_inverse=True)
        n_ctx = cuniq.size
    nats = K.conditional_entropy_curve(tuple_ids.astype(np.int64), ctx_ids.astype(np.int64),
                                       n_tuple, n_ctx, k, ck)
    return MuCurve(k, CurveSeries(ck, nats / LN2))


# -- measures involving the B process -----------------------------------------


def _need_b(trace: GenerationTrace) -> None:
    if not isinstance(trace, GenerationTrace) or trace.b_index is None:
        raise ValueError("this statistic needs a generation trace with B indices")


def empirical_measure_B(trace: GenerationTrace, boxes, checkpoints=None) -> list[CurveSeries]:
    """M_m(A) = fraction of steps t <= m with B_t in A, for each box A."""
    _need_b(trace)
    single = isinstance(boxes, SimplexBox)
    boxes = [boxes] if single else list(boxes)
    ck = normalize_checkpoints(checkpoints, trace.n)
    out = []
    for box in boxes:
        inside = box.contains(trace.thetas)[trace.b_index]
        cum = np.cumsum(inside, dtype=np.int64)
        out.append(CurveSeries(ck, cum[ck - 1] / ck))
    return out[0] if single else out


def empirical_measure_joint(trace: GenerationTrace, event: TestEvent,
                            checkpoints=None) -> CurveSeries:
    """L_m^(r)(A): fraction of full r-windows of x^m matching the word with B in the boxes."""
    _need_b(trace)
    r = event.r
    if r > 8:
        raise ValueError("event order r must be <= 8")
    n = trace.n
    ck = normalize_checkpoints(checkpoints, n, start=r)
    w = n - r + 1
    hit = np.ones(w, dtype=bool)
    for j, (sym, box) in enumerate(zip(event.word, event.boxes)):
        hit &= trace.x[j:j + w] == sym
        if not box.is_full:
            hit &= box.contains(trace.thetas)[trace.b_index[j:j + w]]
    cum = np.cumsum(hit, dtype=np.int64)
    windows = ck - r + 1
    return CurveSeries(ck, cum[windows - 1] / windows)


def _factor(prior: Prior, box: SimplexBox, symbol: int, rng, samples: int) -> Estimate:
    """E[1{Theta in box} Theta[symbol]] for Theta ~ prior."""
    flat = flatten(prior)
    value = 0.0
    var = 0.0
    for kind, param, w in zip(flat.kinds, flat.params, flat.weights):
        if kind == ATOM:
            if box.contains(param):
                value += w * param[symbol]
        elif box.is_full:
            value += w * param[symbol] / param.sum()
        else:
            th = rng.dirichlet(param, size=samples)
            f = np.where(box.contains(th), th[:, symbol], 0.0)
            value += w * f.mean()
            var += (w ** 2) * f.var(ddof=1) / samples
    return Estimate(value, math.sqrt(var))


def eta_star(prior: Prior, event: TestEvent, rng: np.random.Generator | None = None,
             samples: int = 1_000_000) -> Estimate:
    """Limiting joint measure prod_j E[1{Theta in A_j} Theta[x_j]].

    Atoms and unconstrained Dirichlet factors are exact; box-constrained
    Dirichlet factors are Monte-Carlo averages over ``samples`` draws, and the
    returned standard error combines them by the delta method.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    value = 1.0
    rel2 = 0.0
    factors = [_factor(prior, box, s, rng, samples) for s, box in zip(event.word, event.boxes)]
    for f in factors:
        value *= f.value
        if f.stderr > 0.0:
            rel2 += (f.stderr / f.value) ** 2 if f.value > 0 else math.inf
    stderr = abs(value) * math.sqrt(rel2) if rel2 < math.inf else max(f.stderr for f in factors)
    return Estimate(value, stderr)


def box_mass(prior: Prior, box: SimplexBox, rng: np.random.Generator | None = None,
             samples: int = 1_000_000) -> Estimate:
    """Pi(box): exact for atoms and full boxes, Monte Carlo for constrained Dirichlet parts."""
    if rng is None:
        rng = np.random.default_rng(0)
    flat = flatten(prior)
    value = 0.0
    var = 0.0
    for kind, param, w in zip(flat.kinds, flat.params, flat.weights):
        if kind == ATOM:
            value += w * float(box.contains(param))
        elif box.is_full:
            value += w
        else:
            f = box.contains(rng.dirichlet(param, size=samples)).astype(np.float64)
            value += w * f.mean()
            var += (w ** 2) * f.var(ddof=1) / samples
    return Estimate(value, math.sqrt(var))
