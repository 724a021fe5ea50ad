"""Experiment grids: a flat config file, per-seed cells and the summarizer.

A config is a plain ``key = value`` file; lists are written ``[a, b, c]`` and
split at top-level commas only, so descriptors with parentheses survive::

    prior = dirichlet(0.5,0.5)
    n = 10000000
    seeds = [1, 2, 3, 4, 5]
    statistics = [score, compression_ratio, mu_0, mu_5, ctw_8, law:iid(0.5,0.5)]
    checkpoints_per_decade = 50
    out = runs/jeffreys
"""

from __future__ import annotations

import json
import math
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .baselines import MAX_CTW_DEPTH, Ctw, MarkovPlugin, spa_log_loss
from .curves import CurveSeries, log_checkpoints
from .empirical import box_mass, empirical_measure_B, empirical_measure_joint, eta_star, mu_k
from .events import parse_box, parse_event
from .lz_source import compression_ratio, generate
from .prior import describe, has_full_support, parse_prior
from .theory import MAX_MARKOV_ORDER, limits, markov_law_score, parse_law

MAX_MU_ORDER = 20
MAX_EVENT_ORDER = 8
MAX_N = 10 ** 9


class ConfigError(ValueError):
    pass


def split_top_level(text: str, sep: str = ",") -> list[str]:
    """Split on ``sep`` outside any parentheses or brackets."""
    parts, depth, cur = [], 0, []
    for ch in text:
        if ch in "([":
            depth += 1
        elif ch in ")]":
            depth -= 1
            if depth < 0:
                raise ConfigError(f"unbalanced brackets in {text!r}")
        if ch == sep and depth == 0:
            parts.append("".join(cur).strip())
            cur = []
        else:
            cur.append(ch)
    if depth != 0:
        raise ConfigError(f"unbalanced brackets in {text!r}")
    tail = "".join(cur).strip()
    if tail or parts:
        parts.append(tail)
    return parts


@dataclass(frozen=True)
class Statistic:
    """One requested curve. ``kind`` is the file stem prefix."""

    kind: str
    param: str = ""
    text: str = ""

    def stem(self, index: int) -> str:
        # descriptors are not filename-safe, so law/box/event cells are numbered
        if self.kind in ("relent", "mn", "ln"):
            return f"{self.kind}_{index}"
        return f"{self.kind}_{self.param}" if self.param else f"{self.kind}_lz78"


_SIMPLE = re.compile(r"^(mu|ctw|plugin)_(\d+)(?:_([0-9.eE+-]+))?$")


def parse_statistic(text: str, alphabet_size: int) -> Statistic:
    t = text.strip()
    if t in ("score", "compression_ratio"):
        return Statistic(t, "", t)
    if t.startswith("law:"):
        law = parse_law(t[4:])
        if law.alphabet_size != alphabet_size:
            raise ConfigError(f"statistics: law {t!r} has the wrong alphabet size")
        return Statistic("relent", "", t)
    if t.startswith("mn:"):
        parse_box(t[3:], alphabet_size)
        return Statistic("mn", "", t)
    if t.startswith("ln:"):
        ev = parse_event(t[3:], alphabet_size)
        if ev.r > MAX_EVENT_ORDER:
            raise ConfigError(f"statistics: event order {ev.r} exceeds {MAX_EVENT_ORDER}")
        return Statistic("ln", "", t)
    m = _SIMPLE.match(t)
    if not m:
        raise ConfigError(f"statistics: unknown statistic {t!r}")
    kind, order, gamma = m.group(1), int(m.group(2)), m.group(3)
    if kind == "mu" and order > MAX_MU_ORDER:
        raise ConfigError(f"statistics: mu order {order} exceeds {MAX_MU_ORDER}")
    if kind == "ctw":
        if order > MAX_CTW_DEPTH:
            raise ConfigError(f"statistics: ctw depth {order} exceeds {MAX_CTW_DEPTH}")
        if alphabet_size != 2:
            raise ConfigError("statistics: ctw needs a binary prior")
    if kind == "plugin" and order > MAX_MARKOV_ORDER:
        raise ConfigError(f"statistics: plug-in order {order} exceeds {MAX_MARKOV_ORDER}")
    if gamma is not None and kind != "plugin":
        raise ConfigError(f"statistics: {t!r} takes no smoothing parameter")
    if gamma is not None and not float(gamma) > 0:
        raise ConfigError(f"statistics: smoothing in {t!r} must be positive")
    param = f"{order}" if gamma is None else f"{order}_{gamma}"
    return Statistic(kind, param, t)


@dataclass
class ExperimentConfig:
    prior: str
    n: int
    seeds: list[int]
    statistics: list[str] = field(default_factory=lambda: ["score"])
    checkpoints_per_decade: int = 50
    out: str = "runs"

    KEYS = ("prior", "n", "seeds", "statistics", "checkpoints_per_decade", "out")

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        try:
            prior = parse_prior(self.prior)
        except ValueError as exc:
            raise ConfigError(f"prior: {exc}") from exc
        if not 1 <= self.n <= MAX_N:
            raise ConfigError(f"n: must lie in [1, {MAX_N}]")
        if not self.seeds:
            raise ConfigError("seeds: at least one seed is required")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigError("seeds: duplicates")
        if any(s < 0 for s in self.seeds):
            raise ConfigError("seeds: must be non-negative")
        if self.checkpoints_per_decade < 1:
            raise ConfigError("checkpoints_per_decade: must be >= 1")
        if not self.statistics:
            raise ConfigError("statistics: empty")
        try:
            parsed = [parse_statistic(s, prior.alphabet_size) for s in self.statistics]
        except ConfigError:
            raise
        except (ValueError, OSError) as exc:
            raise ConfigError(f"statistics: {exc}") from exc
        if len({st.text for st in parsed}) != len(parsed):
            raise ConfigError("statistics: duplicates")
        for st in parsed:
            if st.kind == "mu" and int(st.param) + 1 > self.n:
                raise ConfigError(f"statistics: {st.text} needs n >= {int(st.param) + 1}")

    @staticmethod
    def _stems(parsed: list[Statistic]) -> list[str]:
        counters: dict[str, int] = {}
        out = []
        for st in parsed:
            i = counters.get(st.kind, 0)
            counters[st.kind] = i + 1
            out.append(st.stem(i))
        return out

    def parsed_statistics(self) -> list[tuple[str, Statistic]]:
        A = parse_prior(self.prior).alphabet_size
        parsed = [parse_statistic(s, A) for s in self.statistics]
        return list(zip(self._stems(parsed), parsed))

    def checkpoints(self) -> np.ndarray:
        return log_checkpoints(self.n, self.checkpoints_per_decade)

    # -- file form --------------------------------------------------------

    def dumps(self) -> str:
        return "".join([
            f"prior = {self.prior}\n",
            f"n = {self.n}\n",
            "seeds = [" + ", ".join(str(s) for s in self.seeds) + "]\n",
            "statistics = [" + ", ".join(self.statistics) + "]\n",
            f"checkpoints_per_decade = {self.checkpoints_per_decade}\n",
            f"out = {self.out}\n",
        ])

    @classmethod
    def loads(cls, text: str) -> "ExperimentConfig":
        raw: dict[str, str] = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected key = value")
            key, value = (s.strip() for s in line.split("=", 1))
            if key not in cls.KEYS:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
            if key in raw:
                raise ConfigError(f"line {lineno}: {key} given twice")
            raw[key] = value
        for key in ("prior", "n", "seeds"):
            if key not in raw:
                raise ConfigError(f"{key}: missing")
        kwargs: dict = {"prior": raw["prior"]}
        try:
            kwargs["n"] = _int(raw["n"])
            kwargs["seeds"] = [_int(s) for s in _list(raw["seeds"])]
            if "statistics" in raw:
                kwargs["statistics"] = _list(raw["statistics"])
            if "checkpoints_per_decade" in raw:
                kwargs["checkpoints_per_decade"] = _int(raw["checkpoints_per_decade"])
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if "out" in raw:
            kwargs["out"] = raw["out"]
        return cls(**kwargs)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        return cls.loads(Path(path).read_text())

    def save(self, path) -> None:
        Path(path).write_text(self.dumps())


def _int(text: str) -> int:
    v = float(text) if re.search(r"[eE.]", text) else int(text)
    if v != int(v):
        raise ValueError(f"expected an integer, got {text!r}")
    return int(v)


def _list(text: str) -> list[str]:
    t = text.strip()
    if not (t.startswith("[") and t.endswith("]")):
        raise ValueError(f"expected a [list], got {text!r}")
    return [p for p in split_top_level(t[1:-1]) if p]


# -- running ------------------------------------------------------------------


def run_cell(config: ExperimentConfig, seed: int) -> dict[str, CurveSeries]:
    """Every requested statistic on the realization drawn with ``seed``."""
    prior = parse_prior(config.prior)
    A = prior.alphabet_size
    ck = config.checkpoints()
    stats = config.parsed_statistics()
    need_b = any(st.kind in ("mn", "ln") for _, st in stats)
    trace = generate(prior, config.n, seed, checkpoints=ck, record_b=need_b)
    lz_score = trace.normalized_log_loss()
    out: dict[str, CurveSeries] = {}
    for stem, st in stats:
        if st.kind == "score":
            out[stem] = lz_score
        elif st.kind == "compression_ratio":
            out[stem] = compression_ratio(trace.x, ck, A)
        elif st.kind == "mu":
            k = int(st.param)
            out[stem] = mu_k(trace.x, k, ck[ck >= k + 1], A).curve
        elif st.kind == "ctw":
            out[stem] = spa_log_loss(Ctw(int(st.param)), trace.x, ck)
        elif st.kind == "plugin":
            k, _, g = st.param.partition("_")
            spa = MarkovPlugin(int(k), float(g) if g else 0.5)
            out[stem] = spa_log_loss(spa, trace.x, ck, A)
        elif st.kind == "relent":
            law = markov_law_score(parse_law(st.text[4:]), trace.x, ck)
            with np.errstate(invalid="ignore"):
                out[stem] = CurveSeries(ck, law.value - lz_score.value)
        elif st.kind == "mn":
            out[stem] = empirical_measure_B(trace, parse_box(st.text[3:], A), ck)
        elif st.kind == "ln":
            ev = parse_event(st.text[3:], A)
            out[stem] = empirical_measure_joint(trace, ev, ck[ck >= ev.r])
    return out


def _cell(args):
    config, seed = args
    return seed, run_cell(config, seed)


def _json_float(v: float):
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return float(v)


def theory_report(config: ExperimentConfig) -> dict:
    """Theoretical asymptote for every statistic that has one."""
    prior = parse_prior(config.prior)
    A = prior.alphabet_size
    stats = config.parsed_statistics()
    laws = {stem: parse_law(st.text[4:]) for stem, st in stats if st.kind == "relent"}
    report = limits(prior, laws).to_json()
    report["full_support"] = has_full_support(prior)
    rng = np.random.default_rng(0)
    targets = {}
    for stem, st in stats:
        if st.kind in ("score", "compression_ratio"):
            targets[stem] = {"value": report["entropy_rate"], "stderr": 0.0}
        elif st.kind == "mu":
            targets[stem] = {"value": report["mu_limit"], "stderr": 0.0}
        elif st.kind == "relent":
            targets[stem] = {"value": report["relative_entropy_limit"][stem], "stderr": 0.0}
        elif st.kind == "mn":
            est = box_mass(prior, parse_box(st.text[3:], A), rng)
            targets[stem] = {"value": est.value, "stderr": est.stderr}
        elif st.kind == "ln":
            est = eta_star(prior, parse_event(st.text[3:], A), rng)
            targets[stem] = {"value": est.value, "stderr": est.stderr}
    report["targets"] = targets
    return report


def summarize(config: ExperimentConfig, results: dict[int, dict[str, CurveSeries]]) -> dict:
    summary = {"prior": describe(parse_prior(config.prior)), "n": config.n,
               "seeds": list(config.seeds), "statistics": {}}
    for stem, st in config.parsed_statistics():
        finals = np.array([results[s][stem].final for s in config.seeds])
        finite = finals[np.isfinite(finals)]
        entry = {
            "descriptor": st.text,
            "final": {str(s): _json_float(v) for s, v in zip(config.seeds, finals)},
            "mean": _json_float(finals.mean()) if finite.size == finals.size else _json_float(math.inf),
            "std": _json_float(finals.std(ddof=1)) if finals.size > 1 and finite.size == finals.size else 0.0,
            "min": _json_float(finals.min()),
            "max": _json_float(finals.max()),
        }
        summary["statistics"][stem] = entry
    return summary


def run_experiment(config: ExperimentConfig, out_dir=None, workers: int = 1,
                   force: bool = False) -> dict:
    """Run every (seed) cell, write CSVs, ``limits.json`` and ``summary.json``."""
    out = Path(out_dir if out_dir is not None else config.out)
    stems = [stem for stem, _ in config.parsed_statistics()]
    files = [out / f"{stem}_{seed}.csv" for seed in config.seeds for stem in stems]
    files += [out / "limits.json", out / "summary.json"]
    if not force:
        clash = [f for f in files if f.exists()]
        if clash:
            raise FileExistsError(f"{clash[0]} exists; pass force to overwrite")
    out.mkdir(parents=True, exist_ok=True)
    cells = [(config, s) for s in config.seeds]
    if workers > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = dict(pool.map(_cell, cells))
    else:
        results = dict(_cell(c) for c in cells)
    for seed in config.seeds:
        for stem in stems:
            results[seed][stem].to_csv(out / f"{stem}_{seed}.csv")
    (out / "config.txt").write_text(config.dumps())
    (out / "limits.json").write_text(json.dumps(theory_report(config), indent=2, sort_keys=True) + "\n")
    summary = summarize(config, results)
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return summary
