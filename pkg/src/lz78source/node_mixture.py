"""Per-node Bayesian mixture of i.i.d. laws.

A node of the LZ78 tree sees an exchangeable stream of symbols whose law is the
mixture ``q(x^n) = E_{Theta ~ prior}[prod_a Theta[a]^{C(a|x^n)}]``. The state
here keeps the symbol counts plus, for every leaf component of the prior, the
log of (component weight x likelihood of the counts), so the predictive is a
posterior-weighted average of component predictives.
"""

from __future__ import annotations

import math

import numpy as np

from .prior import ATOM, LN2, FlatPrior, Prior, flatten


def _logsumexp(v: np.ndarray) -> float:
    m = float(v.max())
    if m == -math.inf:
        return -math.inf
    return m + math.log(float(np.exp(v - m).sum()))


class NodeMixtureState:
    """Sufficient statistics of one node under a mixture prior.

    For a pure Dirichlet prior the component list is elided and the
    log-marginal is kept as a running sum of log predictives.
    """

    __slots__ = ("flat", "counts", "total", "log_weights", "_log_marginal")

    def __init__(self, prior: Prior | FlatPrior):
        flat = prior if isinstance(prior, FlatPrior) else flatten(prior)
        self.flat = flat
        self.counts = np.zeros(flat.alphabet_size, dtype=np.int64)
        self.total = 0
        if flat.dirichlet_only:
            self.log_weights = None
        else:
            with np.errstate(divide="ignore"):
                self.log_weights = np.log(flat.weights)
        self._log_marginal = 0.0

    def copy(self) -> "NodeMixtureState":
        other = NodeMixtureState.__new__(NodeMixtureState)
        other.flat = self.flat
        other.counts = self.counts.copy()
        other.total = self.total
        other.log_weights = None if self.log_weights is None else self.log_weights.copy()
        other._log_marginal = self._log_marginal
        return other

    def _component_predictives(self) -> np.ndarray:
        flat = self.flat
        out = np.empty_like(flat.params)
        for k in range(flat.n_components):
            if flat.kinds[k] == ATOM:
                out[k] = flat.params[k]
            else:
                g = flat.params[k]
                out[k] = (self.counts + g) / (self.total + g.sum())
        return out

    def predictive(self) -> np.ndarray:
        """Next-symbol pmf given the counts seen so far."""
        if self.log_weights is None:
            g = self.flat.params[0]
            return (self.counts + g) / (self.total + g.sum())
        m = self.log_weights.max()
        if m == -math.inf:
            raise ValueError("predictive is undefined: the observed counts have probability 0")
        post = np.exp(self.log_weights - m)
        post /= post.sum()
        return post @ self._component_predictives()

    def update(self, symbol: int) -> "NodeMixtureState":
        """Absorb one symbol in place; returns ``self``."""
        if not 0 <= symbol < self.counts.size:
            raise IndexError(f"symbol {symbol} outside alphabet of size {self.counts.size}")
        if self.log_weights is None:
            self._log_marginal += math.log(self.predictive()[symbol])
        else:
            comp = self._component_predictives()[:, symbol]
            with np.errstate(divide="ignore"):
                self.log_weights = self.log_weights + np.log(comp)
        self.counts[symbol] += 1
        self.total += 1
        return self

    def log_marginal(self) -> float:
        """log2 q(counts); identical for every ordering of the same symbols."""
        if self.log_weights is None:
            return self._log_marginal / LN2
        return _logsumexp(self.log_weights) / LN2


def new_state(prior: Prior) -> NodeMixtureState:
    return NodeMixtureState(prior)
