"""Laws over the probability simplex of a finite alphabet.

A prior is one of three immutable shapes:

* :class:`Dirichlet` - a Dirichlet density with concentration vector ``gamma``;
* :class:`Atoms` - finitely many point masses on the simplex;
* :class:`Mixture` - a convex combination of the two shapes above.

Every prior can be written as a text descriptor::

    dirichlet(0.5,0.5)
    atoms((0.05,0.95)@0.5,(0.95,0.05)@0.5)
    mix(dirichlet(2,2)@0.05,atoms((0.05,0.95)@0.5,(0.95,0.05)@0.5)@0.95)

Entropies are reported in bits.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .special import digamma

LN2 = math.log(2.0)
SUM_TOL = 1e-12
MAX_DEPTH = 2

DIRICHLET = 0
ATOM = 1


class PriorError(ValueError):
    """Raised for malformed priors or descriptors."""


def as_pmf(probs: Sequence[float]) -> np.ndarray:
    """Validate ``probs`` as a probability mass function and return a float array."""
    p = np.asarray(probs, dtype=np.float64)
    if p.ndim != 1 or p.size < 2:
        raise PriorError(f"a pmf needs at least two entries, got shape {p.shape}")
    if np.any(p < 0.0) or np.any(p > 1.0) or not np.all(np.isfinite(p)):
        raise PriorError(f"pmf entries must lie in [0, 1]: {p.tolist()}")
    if abs(p.sum() - 1.0) > SUM_TOL:
        raise PriorError(f"pmf entries sum to {p.sum()!r}, not 1")
    return p


def entropy_bits(p) -> float:
    """Shannon entropy of a pmf in bits, with 0 log 0 = 0."""
    p = np.asarray(p, dtype=np.float64)
    nz = p[p > 0.0]
    return float(-(nz * np.log2(nz)).sum())


def _check_weights(weights: Sequence[float], what: str) -> None:
    if len(weights) == 0:
        raise PriorError(f"{what} needs at least one entry")
    if any(not (w > 0.0) for w in weights):
        raise PriorError(f"{what} weights must be positive: {list(weights)}")
    if abs(math.fsum(weights) - 1.0) > SUM_TOL:
        raise PriorError(f"{what} weights sum to {math.fsum(weights)!r}, not 1")


@dataclass(frozen=True)
class Dirichlet:
    gamma: tuple[float, ...]

    def __post_init__(self):
        g = tuple(float(v) for v in self.gamma)
        if len(g) < 2:
            raise PriorError("Dirichlet needs an alphabet of size >= 2")
        if any(not (v > 0.0 and math.isfinite(v)) for v in g):
            raise PriorError(f"Dirichlet concentrations must be positive: {g}")
        object.__setattr__(self, "gamma", g)

    @property
    def alphabet_size(self) -> int:
        return len(self.gamma)

    @property
    def depth(self) -> int:
        return 1


@dataclass(frozen=True)
class Atoms:
    points: tuple[tuple[tuple[float, ...], float], ...]

    def __post_init__(self):
        pts = tuple((tuple(float(v) for v in as_pmf(p)), float(w)) for p, w in self.points)
        _check_weights([w for _, w in pts], "atoms")
        sizes = {len(p) for p, _ in pts}
        if len(sizes) != 1:
            raise PriorError(f"atoms disagree on alphabet size: {sorted(sizes)}")
        object.__setattr__(self, "points", pts)

    @property
    def alphabet_size(self) -> int:
        return len(self.points[0][0])

    @property
    def depth(self) -> int:
        return 1


@dataclass(frozen=True)
class Mixture:
    components: tuple[tuple["Prior", float], ...]

    def __post_init__(self):
        comps = tuple((c, float(w)) for c, w in self.components)
        _check_weights([w for _, w in comps], "mixture")
        sizes = {c.alphabet_size for c, _ in comps}
        if len(sizes) != 1:
            raise PriorError(f"mixture components disagree on alphabet size: {sorted(sizes)}")
        object.__setattr__(self, "components", comps)
        if self.depth > MAX_DEPTH:
            raise PriorError(f"mixture nesting depth {self.depth} exceeds {MAX_DEPTH}")

    @property
    def alphabet_size(self) -> int:
        return self.components[0][0].alphabet_size

    @property
    def depth(self) -> int:
        return 1 + max(c.depth for c, _ in self.components)


Prior = Union[Dirichlet, Atoms, Mixture]


# -- flattening ---------------------------------------------------------------


@dataclass(frozen=True)
class FlatPrior:
    """A prior unrolled into its leaf components.

    ``kinds[k]`` is DIRICHLET or ATOM, ``params[k]`` is the concentration
    vector or the atom pmf, and ``weights[k]`` the total prior mass of that
    component with nested mixture weights multiplied through.
    """

    kinds: np.ndarray
    params: np.ndarray
    weights: np.ndarray

    @property
    def alphabet_size(self) -> int:
        return self.params.shape[1]

    @property
    def n_components(self) -> int:
        return self.kinds.shape[0]

    @property
    def dirichlet_only(self) -> bool:
        return self.n_components == 1 and self.kinds[0] == DIRICHLET

    @property
    def cumulative(self) -> np.ndarray:
        return np.cumsum(self.weights)


def flatten(prior: Prior) -> FlatPrior:
    kinds: list[int] = []
    params: list[tuple[float, ...]] = []
    weights: list[float] = []

    def walk(p: Prior, w: float) -> None:
        if isinstance(p, Dirichlet):
            kinds.append(DIRICHLET)
            params.append(p.gamma)
            weights.append(w)
        elif isinstance(p, Atoms):
            for pmf, aw in p.points:
                kinds.append(ATOM)
                params.append(pmf)
                weights.append(w * aw)
        else:
            for c, cw in p.components:
                walk(c, w * cw)

    walk(prior, 1.0)
    return FlatPrior(
        np.asarray(kinds, dtype=np.int64),
        np.asarray(params, dtype=np.float64),
        np.asarray(weights, dtype=np.float64),
    )


# -- sampling -----------------------------------------------------------------


def _sample_dirichlet(gamma, rng: np.random.Generator) -> np.ndarray:
    # log-domain Gamma draws; shape < 1 uses G(a) = G(a + 1) * U**(1/a) so tiny
    # concentrations cannot underflow every coordinate to zero
    lg = np.empty(len(gamma))
    for a, g in enumerate(gamma):
        if g < 1.0:
            lg[a] = math.log(rng.gamma(g + 1.0)) + np.log(rng.random()) / g
        else:
            lg[a] = math.log(rng.gamma(g))
    w = np.exp(lg - lg.max())
    return w / w.sum()


def sample_theta(prior: Prior, rng: np.random.Generator) -> np.ndarray:
    """Draw one pmf from ``prior``.

    The draw order is part of the reproducibility contract and is mirrored by
    the compiled generator: one uniform to pick a component (skipped when there
    is a single component), then per-coordinate Gamma draws for a Dirichlet.
    """
    flat = flatten(prior)
    k = 0
    if flat.n_components > 1:
        u = rng.random()
        cum = flat.cumulative
        while k < flat.n_components - 1 and u >= cum[k]:
            k += 1
    if flat.kinds[k] == ATOM:
        return flat.params[k].copy()
    return _sample_dirichlet(flat.params[k], rng)


# -- moments ------------------------------------------------------------------


def mean_pmf(prior: Prior) -> np.ndarray:
    if isinstance(prior, Dirichlet):
        g = np.asarray(prior.gamma)
        return g / g.sum()
    if isinstance(prior, Atoms):
        return sum(w * np.asarray(p) for p, w in prior.points)
    return sum(w * mean_pmf(c) for c, w in prior.components)


def _dirichlet_expected_entropy(gamma) -> float:
    # E[-theta_a ln theta_a] = (g_a / g0) (psi(g0 + 1) - psi(g_a + 1))
    g0 = math.fsum(gamma)
    psi0 = digamma(g0 + 1.0)
    nats = math.fsum(g / g0 * (psi0 - digamma(g + 1.0)) for g in gamma)
    return nats / LN2


def expected_entropy(prior: Prior) -> float:
    """E[H(Theta)] in bits: the entropy rate of the LZ78 source built on ``prior``."""
    if isinstance(prior, Dirichlet):
        return _dirichlet_expected_entropy(prior.gamma)
    if isinstance(prior, Atoms):
        return math.fsum(w * entropy_bits(p) for p, w in prior.points)
    return math.fsum(w * expected_entropy(c) for c, w in prior.components)


def entropy_of_mean(prior: Prior) -> float:
    return entropy_bits(mean_pmf(prior))


def jensen_gap(prior: Prior) -> float:
    return entropy_of_mean(prior) - expected_entropy(prior)


def has_full_support(prior: Prior) -> bool:
    """True iff some mixture path reaches a Dirichlet component."""
    if isinstance(prior, Dirichlet):
        return True
    if isinstance(prior, Atoms):
        return False
    return any(has_full_support(c) for c, _ in prior.components)


# -- descriptors --------------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(?P<num>[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[a-z]+)|(?P<punct>[(),@]))")


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens: list[tuple[str, str]] = []
        pos = 0
        while pos < len(text):
            if text[pos:].strip() == "":
                break
            m = _TOKEN.match(text, pos)
            if not m or m.end() == pos:
                raise PriorError(f"unexpected character at {pos} in {text!r}")
            kind = m.lastgroup
            self.tokens.append((kind, m.group(kind)))
            pos = m.end()
        self.i = 0

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else (None, None)

    def take(self, value: str | None = None, kind: str | None = None) -> str:
        k, v = self.peek()
        if k is None or (value is not None and v != value) or (kind is not None and k != kind):
            want = value or kind
            raise PriorError(f"expected {want!r} in {self.text!r}, got {v!r}")
        self.i += 1
        return v

    def number(self) -> float:
        return float(self.take(kind="num"))

    def numbers(self) -> list[float]:
        self.take("(")
        out = [self.number()]
        while self.peek()[1] == ",":
            self.take(",")
            out.append(self.number())
        self.take(")")
        return out

    def prior(self) -> Prior:
        name = self.take(kind="name")
        if name == "dirichlet":
            return Dirichlet(tuple(self.numbers()))
        if name == "atoms":
            self.take("(")
            pts = [self.atom()]
            while self.peek()[1] == ",":
                self.take(",")
                pts.append(self.atom())
            self.take(")")
            return Atoms(tuple(pts))
        if name == "mix":
            self.take("(")
            comps = [self.weighted()]
            while self.peek()[1] == ",":
                self.take(",")
                comps.append(self.weighted())
            self.take(")")
            return Mixture(tuple(comps))
        raise PriorError(f"unknown prior family {name!r}")

    def atom(self):
        probs = self.numbers()
        self.take("@")
        return (tuple(probs), self.number())

    def weighted(self):
        p = self.prior()
        self.take("@")
        return (p, self.number())


def parse_prior(text: str) -> Prior:
    p = _Parser(text)
    prior = p.prior()
    if p.peek()[0] is not None:
        raise PriorError(f"trailing input in {text!r}")
    return prior


def _num(v: float) -> str:
    return repr(float(v))


def describe(prior: Prior) -> str:
    """Canonical descriptor; ``parse_prior(describe(p)) == p``."""
    if isinstance(prior, Dirichlet):
        return "dirichlet(" + ",".join(_num(g) for g in prior.gamma) + ")"
    if isinstance(prior, Atoms):
        body = ",".join(
            "(" + ",".join(_num(v) for v in p) + ")@" + _num(w) for p, w in prior.points
        )
        return f"atoms({body})"
    body = ",".join(describe(c) + "@" + _num(w) for c, w in prior.components)
    return f"mix({body})"


def dirac_dirichlet(gamma: float, xi: float, atom_weight: float) -> Mixture:
    """Binary mixture of Dirichlet(gamma, gamma) and equal point masses at xi, 1 - xi."""
    return Mixture(
        (
            (Dirichlet((gamma, gamma)), 1.0 - atom_weight),
            (Atoms((((xi, 1.0 - xi), 0.5), ((1.0 - xi, xi), 0.5))), atom_weight),
        )
    )
