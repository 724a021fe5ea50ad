"""The LZ78 probability source: generation, exact scoring and phrase statistics.

Two drivers share the same semantics:

* :class:`Lz78Tree` is a plain-Python tree that advances one step at a time and
  accepts arbitrary parameter/symbol samplers (useful for scripted runs and
  as a reference);
* :func:`generate` and :func:`score` run the compiled arena kernels and are
  what everything else uses.

Both consume randomness in the same order: a node's Theta is drawn the first
time the node is visited, then one uniform picks the emitted symbol.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import _kernels as K
from .curves import CurveSeries, normalize_checkpoints
from .events import SimplexBox
from .node_mixture import NodeMixtureState
from .prior import LN2, FlatPrior, Prior, describe, flatten, parse_prior, sample_theta

FORMAT_VERSION = 1


def as_symbols(x, alphabet_size: int | None = None) -> np.ndarray:
    if isinstance(x, str):
        arr = np.frombuffer(x.encode("ascii"), dtype=np.uint8) - ord("0")
    else:
        arr = np.asarray(x)
        if arr.size and (arr.min() < 0 or arr.max() > 255):
            raise ValueError("symbols must fit in one byte")
    arr = np.ascontiguousarray(arr, dtype=np.uint8)
    if alphabet_size is not None and arr.size and int(arr.max()) >= alphabet_size:
        raise ValueError(f"symbol {int(arr.max())} outside alphabet of size {alphabet_size}")
    return arr


# -- reference tree -----------------------------------------------------------


class Lz78Tree:
    """Growable LZ78 prefix tree stepping one symbol at a time.

    Each node may carry a realized ``theta`` (sampling) and a
    :class:`NodeMixtureState` (scoring). ``visits[z]`` is m_z, the number of
    symbols emitted while at node z.
    """

    def __init__(self, alphabet_size: int, prior: Prior | None = None):
        self.alphabet_size = alphabet_size
        self.prior = prior
        self._flat = flatten(prior) if prior is not None else None
        self.children: list[list[int]] = []
        self.thetas: list[np.ndarray | None] = []
        self.states: list[NodeMixtureState | None] = []
        self.visits: list[int] = []
        self.root = self._new_node()
        self.cursor = self.root
        self.t = 0
        self.log_q = 0.0  # nats
        self.phrase_ends: list[int] = []

    def _new_node(self) -> int:
        self.children.append([-1] * self.alphabet_size)
        self.thetas.append(None)
        self.states.append(NodeMixtureState(self._flat) if self._flat is not None else None)
        self.visits.append(0)
        return len(self.children) - 1

    @property
    def n_nodes(self) -> int:
        return len(self.children)

    @property
    def root_visits(self) -> int:
        return len(self.phrase_ends)

    def advance(self, symbol: int) -> int:
        """Consume ``symbol`` at the cursor; returns the node that emitted it."""
        node = self.cursor
        state = self.states[node]
        if state is not None:
            dead = state.log_weights is not None and state.log_weights.max() == -math.inf
            p = 0.0 if dead else state.predictive()[symbol]
            self.log_q += math.log(p) if p > 0.0 else -math.inf
            state.update(symbol)
        self.visits[node] += 1
        self.t += 1
        child = self.children[node][symbol]
        if child < 0:
            self.children[node][symbol] = self._new_node()
            self.phrase_ends.append(self.t)
            self.cursor = self.root
        else:
            self.cursor = child
        return node

    def sample_step(self, draw_theta: Callable[[], np.ndarray],
                    draw_symbol: Callable[[np.ndarray], int]) -> tuple[int, int]:
        """One step of the source; returns (symbol, emitting node)."""
        node = self.cursor
        if self.thetas[node] is None:
            self.thetas[node] = np.asarray(draw_theta(), dtype=np.float64)
        symbol = int(draw_symbol(self.thetas[node]))
        self.advance(symbol)
        return symbol, node

    def sample(self, n: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        """Draw ``n`` symbols with ``rng``; same stream order as :func:`generate`."""
        if self.prior is None:
            raise ValueError("sampling needs a prior")
        xs = np.empty(n, dtype=np.uint8)
        bs = np.empty(n, dtype=np.int32)
        for i in range(n):
            xs[i], bs[i] = self.sample_step(
                lambda: sample_theta(self.prior, rng),
                lambda th: K.emit(th, rng.random()),
            )
        return xs, bs


# -- compiled driver ----------------------------------------------------------


@dataclass
class GenerationTrace:
    """Output of :func:`generate`.

    ``b_index[t]`` is the node whose Theta produced ``x[t]`` (so
    ``B_t = thetas[b_index[t]]``); ``phrase_ends`` holds the 1-based time at
    which each completed phrase ended, i.e. N(1), N(2), ...
    """

    prior: Prior
    seed: int | None
    x: np.ndarray
    phrase_ends: np.ndarray
    thetas: np.ndarray
    checkpoints: np.ndarray
    log_q: np.ndarray  # log2 Q(x^m) at each checkpoint m
    b_index: np.ndarray | None = None
    n_nodes: int = 0

    @property
    def n(self) -> int:
        return int(self.x.size)

    @property
    def alphabet_size(self) -> int:
        return self.prior.alphabet_size

    @property
    def phrase_starts(self) -> np.ndarray:
        """1-based times at which the cursor sat at the root."""
        starts = np.concatenate(([1], self.phrase_ends + 1))
        return starts[starts <= self.n]

    @property
    def B(self) -> np.ndarray:
        if self.b_index is None:
            raise ValueError("trace was generated without B indices")
        return self.thetas[self.b_index]

    def normalized_log_loss(self) -> CurveSeries:
        """(1/m) log2 1/Q(x^m) at the trace checkpoints."""
        return CurveSeries(self.checkpoints, -self.log_q / self.checkpoints)

    def to_csv(self, path) -> None:
        """Write ``t,symbol,node_id,is_phrase_start`` rows (t is 1-based)."""
        if self.b_index is None:
            raise ValueError("trace was generated without B indices")
        start = np.zeros(self.n, dtype=np.int8)
        start[self.phrase_starts - 1] = 1
        with open(path, "w") as fh:
            fh.write("t,symbol,node_id,is_phrase_start\n")
            for t in range(self.n):
                fh.write(f"{t + 1},{int(self.x[t])},{int(self.b_index[t])},{int(start[t])}\n")


class _Arena:
    def __init__(self, flat: FlatPrior, capacity: int, sample: bool):
        A = flat.alphabet_size
        self.flat = flat
        self.children = np.full((capacity, A), -1, dtype=np.int32)
        self.counts = np.zeros((capacity, A), dtype=np.int64)
        self.totals = np.zeros(capacity, dtype=np.int64)
        kcomp = 0 if flat.dirichlet_only else flat.n_components
        self.logw = np.zeros((capacity, kcomp))
        with np.errstate(divide="ignore"):
            self.logw0 = np.log(flat.weights)
        if kcomp:
            self.logw[0] = self.logw0
        self.sample = sample
        self.thetas = np.full((capacity if sample else 1, A), np.nan)
        self.has_theta = np.zeros(capacity if sample else 1, dtype=np.bool_)
        self.phrase_ends = np.zeros(capacity, dtype=np.int64)

    @property
    def capacity(self) -> int:
        return self.children.shape[0]

    def grow(self) -> None:
        old = self.capacity
        new = old * 2

        def ext(a, fill):
            out = np.full((new,) + a.shape[1:], fill, dtype=a.dtype)
            out[:old] = a
            return out

        self.children = ext(self.children, -1)
        self.counts = ext(self.counts, 0)
        self.totals = ext(self.totals, 0)
        self.logw = ext(self.logw, 0.0)
        self.phrase_ends = ext(self.phrase_ends, 0)
        if self.sample:
            self.thetas = ext(self.thetas, np.nan)
            self.has_theta = ext(self.has_theta, False)


def _initial_capacity(n: int) -> int:
    return int(min(n + 1, max(1024, 4 * n // max(1, int(math.log2(n + 2))))))


def _run(flat: FlatPrior, x: np.ndarray, n: int, sample: bool, rng, ck: np.ndarray,
         record_b: bool):
    arena = _Arena(flat, _initial_capacity(n), sample)
    istate = np.array([0, 1, 0, 0], dtype=np.int64)
    fstate = np.zeros(1)
    b_index = np.empty(n if record_b else 0, dtype=np.int32)
    ck_logq = np.full(ck.size, np.nan)
    psum = flat.params.sum(axis=1)
    cumw = flat.cumulative
    t = 0
    while True:
        t = K.lz_run(x, n, sample, rng, flat.kinds, flat.params, psum, cumw, arena.logw0,
                     flat.dirichlet_only, arena.children, arena.thetas, arena.has_theta,
                     arena.counts, arena.totals, arena.logw, istate, fstate, t,
                     record_b, b_index, arena.phrase_ends, ck, ck_logq)
        if t >= n:
            break
        arena.grow()
    n_nodes = int(istate[K.N_NODES])
    n_phr = int(istate[K.N_PHRASES])
    return arena, n_nodes, arena.phrase_ends[:n_phr].copy(), b_index, ck_logq / LN2


def generate(prior: Prior, n: int, seed: int, *, checkpoints=None,
             record_b: bool = True) -> GenerationTrace:
    """Draw ``x^n`` from the LZ78 source with law ``prior`` at every node.

    Deterministic in (prior, n, seed, options). The running log2 Q(x^m) under
    the mixture law is recorded at ``checkpoints`` (log-spaced by default).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    flat = flatten(prior)
    ck = normalize_checkpoints(checkpoints, n)
    rng = np.random.default_rng(seed)
    x = np.empty(n, dtype=np.uint8)
    arena, n_nodes, ends, b_index, log_q = _run(flat, x, n, True, rng, ck, record_b)
    return GenerationTrace(
        prior=prior,
        seed=seed,
        x=x,
        phrase_ends=ends,
        thetas=arena.thetas[:n_nodes].copy(),
        checkpoints=ck,
        log_q=log_q,
        b_index=b_index if record_b else None,
        n_nodes=n_nodes,
    )


def log_probability(prior: Prior, x, checkpoints=None) -> CurveSeries:
    """log2 Q(x^m) under the LZ78 source law at each checkpoint m."""
    flat = flatten(prior)
    xs = as_symbols(x, flat.alphabet_size)
    n = xs.size
    ck = normalize_checkpoints(checkpoints, n)
    _, _, _, _, log_q = _run(flat, xs, n, False, np.random.default_rng(0), ck, False)
    return CurveSeries(ck, log_q)


def score(prior: Prior, x, checkpoints=None) -> CurveSeries:
    """(1/m) log2 1/Q(x^m) in bits per symbol; +inf where Q assigns probability 0."""
    lp = log_probability(prior, x, checkpoints)
    return CurveSeries(lp.n, -lp.value / lp.n)


# -- phrase statistics --------------------------------------------------------


@dataclass
class PhraseStats:
    n: int
    phrase_ends: np.ndarray  # N(l) for l = 1..T_n
    n_nodes: int
    N_A: dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def root_visits(self) -> int:
        """T_n: completed phrases."""
        return int(self.phrase_ends.size)

    @property
    def tree_size(self) -> int:
        """Nodes in the prefix tree including the root (T_n + 1)."""
        return self.n_nodes

    @property
    def N(self) -> np.ndarray:
        return self.phrase_ends

    @property
    def phrase_lengths(self) -> np.ndarray:
        return np.diff(self.phrase_ends, prepend=0)

    @property
    def partial_length(self) -> int:
        """Symbols of the unfinished last phrase."""
        return self.n - (int(self.phrase_ends[-1]) if self.phrase_ends.size else 0)

    def T_at(self, checkpoints) -> np.ndarray:
        return np.searchsorted(self.phrase_ends, np.asarray(checkpoints), side="right")


def parse(x, alphabet_size: int | None = None) -> tuple[np.ndarray, np.ndarray, int]:
    """LZ78 parse: (phrase end times, per-step node ids, tree size)."""
    xs = as_symbols(x, alphabet_size)
    A = alphabet_size if alphabet_size is not None else max(2, int(xs.max()) + 1 if xs.size else 2)
    return K.lz_parse(xs, A)


def phrase_stats(source, boxes: dict[str, SimplexBox] | Sequence[SimplexBox] | None = None,
                 alphabet_size: int | None = None) -> PhraseStats:
    """T_n, N(l), phrase lengths and, given a trace, N^A(l) for each box A."""
    if boxes and not isinstance(boxes, dict):
        boxes = {b.describe(): b for b in boxes}
    if isinstance(source, GenerationTrace):
        stats = PhraseStats(source.n, source.phrase_ends, source.n_nodes)
        if boxes:
            if source.b_index is None:
                raise ValueError("N^A needs a trace generated with record_b=True")
            for name, box in boxes.items():
                inside = box.contains(source.thetas)[source.b_index]
                cum = np.cumsum(inside, dtype=np.int64)
                stats.N_A[name] = cum[source.phrase_ends - 1]
        return stats
    if boxes:
        raise ValueError("N^A needs a generation trace carrying B indices")
    xs = as_symbols(source, alphabet_size)
    ends, _, n_nodes = parse(xs, alphabet_size)
    return PhraseStats(int(xs.size), ends, n_nodes)


def compression_ratio(x, checkpoints=None, alphabet_size: int | None = None) -> CurveSeries:
    """T_m log2 T_m / m at each checkpoint m."""
    xs = as_symbols(x, alphabet_size)
    ck = normalize_checkpoints(checkpoints, xs.size)
    ends, _, _ = parse(xs, alphabet_size)
    T = np.searchsorted(ends, ck, side="right").astype(np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        v = np.where(T > 0, T * np.log2(np.maximum(T, 1)) / ck, 0.0)
    return CurveSeries(ck, v)


# -- sequence records ---------------------------------------------------------


@dataclass
class SequenceRecord:
    x: np.ndarray
    alphabet_size: int
    prior: str | None = None
    seed: int | None = None

    @property
    def n(self) -> int:
        return int(self.x.size)

    def metadata(self) -> dict:
        return {
            "alphabet_size": self.alphabet_size,
            "prior": self.prior,
            "seed": self.seed,
            "n": self.n,
            "format_version": FORMAT_VERSION,
        }

    def save(self, base, force: bool = False) -> tuple[Path, Path]:
        base = Path(base)
        sym, meta = base.with_name(base.name + ".sym"), base.with_name(base.name + ".json")
        if not force and (sym.exists() or meta.exists()):
            raise FileExistsError(f"{sym} or {meta} exists; pass force to overwrite")
        sym.parent.mkdir(parents=True, exist_ok=True)
        sym.write_bytes(np.ascontiguousarray(self.x, dtype=np.uint8).tobytes())
        meta.write_text(json.dumps(self.metadata(), indent=2, sort_keys=True) + "\n")
        return sym, meta

    @classmethod
    def load(cls, base) -> "SequenceRecord":
        base = Path(base)
        if base.suffix in (".sym", ".json"):
            base = base.with_suffix("")
        meta = json.loads(base.with_name(base.name + ".json").read_text())
        x = np.frombuffer(base.with_name(base.name + ".sym").read_bytes(), dtype=np.uint8).copy()
        if x.size != meta["n"]:
            raise ValueError(f"{base}: .sym has {x.size} symbols, metadata says {meta['n']}")
        return cls(x, int(meta["alphabet_size"]), meta.get("prior"), meta.get("seed"))

    @classmethod
    def from_trace(cls, trace: GenerationTrace) -> "SequenceRecord":
        return cls(trace.x, trace.alphabet_size, describe(trace.prior), trace.seed)

    def regenerate(self, **kwargs) -> GenerationTrace:
        """Re-run the source from the recorded prior and seed and check it reproduces ``x``."""
        if self.prior is None or self.seed is None:
            raise ValueError("record carries no prior/seed to regenerate from")
        trace = generate(parse_prior(self.prior), self.n, self.seed, **kwargs)
        if not np.array_equal(trace.x, self.x):
            raise ValueError("regenerated sequence differs from the stored symbols")
        return trace
