"""Limits the LZ78 source provably attains, evaluated in closed form or by Monte Carlo."""

from __future__ import annotations

import itertools
import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .curves import CurveSeries, normalize_checkpoints
from .empirical import Estimate
from .lz_source import as_symbols
from .prior import (ATOM, Prior, as_pmf, describe, entropy_of_mean, expected_entropy, flatten,
                    mean_pmf)

MAX_MARKOV_ORDER = 8


@dataclass
class MarkovLaw:
    """Order-k Markov law; ``table[c, a] = P(a | context c)``.

    Context codes are base-|A| with the oldest symbol most significant. The
    first k symbols are scored i.i.d. from ``initial``, which defaults to the
    symbol marginal of a stationary distribution of the chain.
    """

    order: int
    table: np.ndarray
    initial: np.ndarray | None = None

    def __post_init__(self):
        self.table = np.atleast_2d(np.asarray(self.table, dtype=np.float64))
        if not 0 <= self.order <= MAX_MARKOV_ORDER:
            raise ValueError(f"Markov order must lie in [0, {MAX_MARKOV_ORDER}]")
        A = self.table.shape[1]
        if self.table.shape[0] != A ** self.order:
            raise ValueError(f"order-{self.order} law over {A} symbols needs {A ** self.order} rows")
        for row in self.table:
            as_pmf(row)
        if self.initial is not None:
            self.initial = as_pmf(self.initial)

    @property
    def alphabet_size(self) -> int:
        return self.table.shape[1]

    @classmethod
    def iid(cls, pmf) -> "MarkovLaw":
        return cls(0, np.asarray([pmf], dtype=np.float64))

    def initial_pmf(self) -> np.ndarray:
        if self.initial is not None:
            return self.initial
        if self.order == 0:
            return self.table[0]
        return self._stationary_marginal()

    def _stationary_marginal(self) -> np.ndarray:
        A, k = self.alphabet_size, self.order
        S = A ** k
        # transition on contexts: c -> (c * A + a) mod S with prob table[c, a]
        P = np.zeros((S, S))
        for c in range(S):
            for a in range(A):
                P[c, (c * A + a) % S] += self.table[c, a]
        M = np.vstack([P.T - np.eye(S), np.ones(S)])
        rhs = np.zeros(S + 1)
        rhs[-1] = 1.0
        pi = np.clip(np.linalg.lstsq(M, rhs, rcond=None)[0], 0.0, None)
        pi /= pi.sum()
        # the newest symbol of a context is its least significant digit
        return np.bincount(np.arange(S) % A, weights=pi, minlength=A)

    def to_json(self) -> dict:
        d = {"order": self.order, "table": self.table.tolist()}
        if self.initial is not None:
            d["initial"] = self.initial.tolist()
        return d

    @classmethod
    def from_json(cls, d: dict) -> "MarkovLaw":
        return cls(int(d["order"]), np.asarray(d["table"]), d.get("initial"))


def parse_law(text: str) -> MarkovLaw:
    """``iid(p0,p1,...)`` or a path to a JSON file with ``order``/``table``."""
    m = re.match(r"^\s*iid\((.*)\)\s*$", text)
    if m:
        return MarkovLaw.iid([float(v) for v in m.group(1).split(",")])
    return MarkovLaw.from_json(json.loads(Path(text).read_text()))


def _kl_bits(p: np.ndarray, q: np.ndarray) -> float:
    total = 0.0
    for pa, qa in zip(p, q):
        if pa <= 0.0:
            continue
        if qa <= 0.0:
            return math.inf
        total += pa * math.log2(pa / qa)
    return total


def relative_entropy_limit(prior: Prior, law: MarkovLaw) -> float:
    """E_Y[D(E[Theta] || P(.|Y_{-k}^{-1}))] + H(E[Theta]) - E[H(Theta)] in bits.

    Y_{-k}^{-1} is i.i.d. E[Theta]; the expectation is an exact sum over
    contexts. Returns +inf when a context of positive weight has a row that
    gives probability 0 to a symbol E[Theta] can emit.
    """
    if law.alphabet_size != prior.alphabet_size:
        raise ValueError("law and prior disagree on alphabet size")
    mean = mean_pmf(prior)
    A, k = law.alphabet_size, law.order
    div = 0.0
    for ctx in itertools.product(range(A), repeat=k):
        w = math.prod(mean[s] for s in ctx)
        if w <= 0.0:
            continue
        code = 0
        for s in ctx:
            code = code * A + s
        d = _kl_bits(mean, law.table[code])
        if math.isinf(d):
            return math.inf
        div += w * d
    return div + entropy_of_mean(prior) - expected_entropy(prior)


def mutual_information_gap(prior: Prior, rng: np.random.Generator | None = None,
                           samples: int = 200_000) -> Estimate:
    """I(Theta; Y) = E_Theta[D(Theta || E[Theta])] with Y | Theta ~ Theta.

    Exact for atoms; Dirichlet components are averaged over ``samples`` draws.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    mean = mean_pmf(prior)
    flat = flatten(prior)
    value = 0.0
    var = 0.0
    for kind, param, w in zip(flat.kinds, flat.params, flat.weights):
        if kind == ATOM:
            value += w * _kl_bits(param, mean)
            continue
        th = rng.dirichlet(param, size=samples)
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(th > 0.0, th * np.log2(th / mean), 0.0).sum(axis=1)
        value += w * terms.mean()
        var += w ** 2 * terms.var(ddof=1) / samples
    return Estimate(value, math.sqrt(var))


def _fmt_bits(v: float):
    return "inf" if math.isinf(v) else v


@dataclass
class LimitReport:
    prior: str
    entropy_rate: float
    mu_limit: float
    jensen_gap: float
    relative_entropy: dict[str, float] = field(default_factory=dict)
    stderr: dict[str, float] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "units": "bits",
            "prior": self.prior,
            "entropy_rate": self.entropy_rate,
            "mu_limit": self.mu_limit,
            "jensen_gap": self.jensen_gap,
            "relative_entropy_limit": {k: _fmt_bits(v) for k, v in self.relative_entropy.items()},
            "stderr": dict(self.stderr),
        }


def limits(prior: Prior, laws: dict[str, MarkovLaw] | None = None) -> LimitReport:
    h = expected_entropy(prior)
    mu = entropy_of_mean(prior)
    report = LimitReport(describe(prior), h, mu, mu - h)
    for name, law in (laws or {}).items():
        report.relative_entropy[name] = relative_entropy_limit(prior, law)
    return report


def markov_law_log_loss(law: MarkovLaw, x) -> np.ndarray:
    """Per-symbol log loss in bits (inf for zero-probability transitions)."""
    A, k = law.alphabet_size, law.order
    xs = as_symbols(x, A).astype(np.int64)
    n = xs.size
    with np.errstate(divide="ignore"):
        init = -np.log2(law.initial_pmf())
        tab = -np.log2(law.table)
    losses = np.empty(n)
    head = min(k, n)
    losses[:head] = init[xs[:head]]
    if n > k:
        ctx = np.zeros(n - k, dtype=np.int64)
        for j in range(k):
            ctx = ctx * A + xs[j:n - k + j]
        losses[k:] = tab[ctx, xs[k:]]
    return losses


def markov_law_score(law: MarkovLaw, x, checkpoints=None) -> CurveSeries:
    """(1/m) log2 1/P(x^m) for a fixed Markov law at each checkpoint m."""
    losses = markov_law_log_loss(law, x)
    ck = normalize_checkpoints(checkpoints, losses.size)
    cum = np.cumsum(losses)
    return CurveSeries(ck, cum[ck - 1] / ck)
