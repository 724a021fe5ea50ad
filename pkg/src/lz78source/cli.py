"""Command-line entry point: ``lz78source <command> [options]``.

Exit status is 0 on success, 2 for a bad argument or config, 3 for a file
system error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .curves import DEFAULT_PER_DECADE, log_checkpoints
from .empirical import empirical_measure_B, empirical_measure_joint, mu_k
from .events import parse_box, parse_event
from .experiment import ExperimentConfig, _json_float, run_experiment
from .lz_source import (FORMAT_VERSION, SequenceRecord, compression_ratio, generate, phrase_stats,
                        score)
from .prior import describe, parse_prior
from .theory import limits, parse_law

log = logging.getLogger("lz78source")

EXIT_CONFIG = 2
EXIT_IO = 3


def _dump(obj, out: str | None, force: bool) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if out is None:
        sys.stdout.write(text)
        return
    path = Path(out)
    if path.exists() and not force:
        raise FileExistsError(f"{path} exists; pass --force to overwrite")
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def cmd_generate(args) -> None:
    if args.out is None:
        raise ValueError("generate needs --out")
    prior = parse_prior(args.prior)
    trace = generate(prior, args.n, args.seed, record_b=args.trace_csv is not None)
    SequenceRecord.from_trace(trace).save(args.out, force=args.force)
    if args.trace_csv:
        p = Path(args.trace_csv)
        if p.exists() and not args.force:
            raise FileExistsError(f"{p} exists; pass --force to overwrite")
        trace.to_csv(p)
    log.info("wrote %s.sym (%d symbols, %d phrases)", args.out, trace.n, trace.phrase_ends.size)


def cmd_score(args) -> None:
    rec = SequenceRecord.load(args.input)
    text = args.prior or rec.prior
    if text is None:
        raise ValueError("record has no prior; pass --prior")
    prior = parse_prior(text)
    if prior.alphabet_size != rec.alphabet_size:
        raise ValueError("prior and record disagree on alphabet size")
    ck = log_checkpoints(rec.n, args.per_decade)
    curve = score(prior, rec.x, ck)
    if args.out is not None:
        p = Path(args.out)
        if p.exists() and not args.force:
            raise FileExistsError(f"{p} exists; pass --force to overwrite")
        curve.to_csv(p)
    _dump({"prior": describe(prior), "n": rec.n, "score": _json_float(curve.final),
           "units": "bits/symbol"}, None, False)


def cmd_curves(args) -> None:
    config = ExperimentConfig.load(args.config)
    summary = run_experiment(config, args.out, workers=args.workers, force=args.force)
    for stem, entry in summary["statistics"].items():
        log.info("%s: mean %s over %d seeds", stem, entry["mean"], len(summary["seeds"]))


def cmd_dataset(args) -> None:
    if args.out is None:
        raise ValueError("dataset needs --out")
    if args.train < 1 or args.eval < 1:
        raise ValueError("train and eval counts must be >= 1")
    if args.length < 1:
        raise ValueError("length must be >= 1")
    prior = parse_prior(args.prior)
    out = Path(args.out)
    manifest_path = out / "manifest.json"
    if manifest_path.exists() and not args.force:
        raise FileExistsError(f"{manifest_path} exists; pass --force to overwrite")
    files = []
    index = 0
    for split, count in (("train", args.train), ("eval", args.eval)):
        d = out / split
        d.mkdir(parents=True, exist_ok=True)
        for i in range(count):
            seed = args.seed + index
            trace = generate(prior, args.length, seed, checkpoints=[args.length], record_b=False)
            name = f"{split}/{i:05d}.sym"
            (out / name).write_bytes(trace.x.tobytes())
            files.append({"path": name, "split": split, "seed": seed})
            index += 1
    manifest = {
        "prior": describe(prior),
        "alphabet_size": prior.alphabet_size,
        "length": args.length,
        "train_count": args.train,
        "eval_count": args.eval,
        "seed_base": args.seed,
        "files": files,
        "format_version": FORMAT_VERSION,
    }
    _dump(manifest, str(manifest_path), True)
    log.info("wrote %d sequences to %s", len(files), out)


def cmd_theory(args) -> None:
    prior = parse_prior(args.prior)
    laws = {}
    for text in args.law or []:
        law = parse_law(text)
        if law.alphabet_size != prior.alphabet_size:
            raise ValueError(f"law {text!r} has the wrong alphabet size")
        laws[text] = law
    _dump(limits(prior, laws).to_json(), args.out, args.force)


def cmd_stats(args) -> None:
    if args.input is not None:
        rec = SequenceRecord.load(args.input)
        need_trace = bool(args.box or args.event)
        source = rec.regenerate() if need_trace else rec.x
        A = rec.alphabet_size
    else:
        if args.prior is None or args.n is None:
            raise ValueError("stats needs --input or both --prior and --n")
        prior = parse_prior(args.prior)
        source = generate(prior, args.n, args.seed)
        A = prior.alphabet_size
    x = getattr(source, "x", source)
    n = int(np.asarray(x).size)
    ck = [n]
    ps = phrase_stats(source, alphabet_size=A)
    report = {
        "n": n,
        "root_visits": ps.root_visits,
        "tree_size": ps.tree_size,
        "compression_ratio": _json_float(compression_ratio(x, ck, A).final),
        "mean_phrase_length": n / max(1, ps.root_visits),
    }
    for k in args.k or []:
        report[f"mu_{k}"] = mu_k(x, k, ck, A).curve.final
    for text in args.box or []:
        report[f"mn:{text}"] = empirical_measure_B(source, parse_box(text, A), ck).final
    for text in args.event or []:
        report[f"ln:{text}"] = empirical_measure_joint(source, parse_event(text, A), ck).final
    _dump(report, args.out, args.force)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="RNG seed (dataset: seed base)")
    common.add_argument("--workers", type=int, default=1, help="worker processes for curves")
    common.add_argument("--out", default=None, help="output path or directory")
    common.add_argument("--force", action="store_true", help="overwrite existing outputs")
    common.add_argument("-v", "--verbose", action="store_true")

    ap = argparse.ArgumentParser(prog="lz78source",
                                 description="LZ78 probability source: sampling, scoring, limits.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", parents=[common], help="draw one realization")
    p.add_argument("--prior", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--trace-csv", default=None, help="also write t,symbol,node_id,is_phrase_start")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("score", parents=[common], help="normalized log loss of a stored sequence")
    p.add_argument("input", help="sequence record (.sym/.json base path)")
    p.add_argument("--prior", default=None, help="defaults to the record's prior")
    p.add_argument("--per-decade", type=int, default=DEFAULT_PER_DECADE)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("curves", parents=[common], help="run an experiment config")
    p.add_argument("config")
    p.set_defaults(func=cmd_curves)

    p = sub.add_parser("dataset", parents=[common], help="export train/eval sequences")
    p.add_argument("--prior", required=True)
    p.add_argument("--length", type=int, default=2048)
    p.add_argument("--train", type=int, default=100_000)
    p.add_argument("--eval", type=int, default=2048)
    p.set_defaults(func=cmd_dataset)

    p = sub.add_parser("theory", parents=[common], help="theoretical limits as JSON")
    p.add_argument("--prior", required=True)
    p.add_argument("--law", action="append", help="iid(p0,p1,...) or a Markov-law JSON file")
    p.set_defaults(func=cmd_theory)

    p = sub.add_parser("stats", parents=[common], help="phrase statistics and empirical measures")
    p.add_argument("--input", default=None)
    p.add_argument("--prior", default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--k", type=int, action="append", help="mu_k order (repeatable)")
    p.add_argument("--box", action="append", help="M_n test set, e.g. box(1:0:0.5)")
    p.add_argument("--event", action="append", help="L_n event, e.g. event(01;box();box())")
    p.set_defaults(func=cmd_stats)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        args.func(args)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return 0


if __name__ == "__main__":
    sys.exit(main())
