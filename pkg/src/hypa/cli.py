"""``hypa`` command line: scoring, baselines, synthetic data, ground truth, experiments, exports, timing."""
from __future__ import annotations

import argparse
import contextlib
import os
import sys
from typing import Sequence

import numpy as np

from .bench import benchmark, write_timings_csv
from .corpus import ParseError, ValidationError, induce_graph, read_edge_list, read_ngram
from .debruijn import write_dot, write_edges_csv
from .ensemble import ConsistencyError, InfeasibleError, compute_hypa
from .evaluation import (geo_statistics, motif_distribution, read_coordinates, run_synthetic_experiment,
                         write_experiment_csv, write_summary_csv)
from .fbad import fbad_detect
from .groundtruth import ground_truth_labels
from .synth import generate_corpus, synth_model

THREADS_ENV = "HYPA_THREADS"


class UsageError(Exception):
    pass


def _int_list(text: str) -> list[int]:
    out = []
    for part in text.split(","):
        if "-" in part:
            lo, hi = part.split("-")
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return out


def _float_list(text: str) -> list[float]:
    return [float(x) for x in text.split(",")]


def read_config(path: str) -> dict[str, str]:
    """``key = value`` lines; ``#`` starts a comment. Keys use the long option name."""
    cfg = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key = value")
            key, value = (s.strip() for s in line.split("=", 1))
            cfg[key.replace("-", "_")] = value
    return cfg


@contextlib.contextmanager
def _output(path: str | None):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            yield fh


def _threads(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise UsageError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
    return 1


def _score(args):
    corpus = read_ngram(args.input)
    graph = induce_graph(corpus, read_edge_list(args.edges)) if args.edges else None
    return compute_hypa(corpus, args.k, args.tolerance, alpha=args.alpha,
                        max_iterations=args.max_iterations, graph=graph)


def cmd_score(args):
    table = _score(args)
    with _output(args.output) as fh:
        table.write_csv(fh)


def cmd_detect(args):
    table = _score(args)
    keep = [i for i, lab in enumerate(table.labels) if lab in ("over", "under")]
    with _output(args.output) as fh:
        fh.write("source,target,frequency,xi,hypa,label\n")
        rows = list(table.rows())
        for i in keep:
            s, d, f, x, h, lab = rows[i]
            fh.write(f"{s},{d},{f},{x:.12g},{h:.12g},{lab}\n")


def cmd_fbad(args):
    res = fbad_detect(read_ngram(args.input), args.k, args.alpha)
    with _output(args.output) as fh:
        res.write_csv(fh)


def cmd_synth(args):
    model_seed, corpus_seed = np.random.SeedSequence(args.seed).spawn(2)
    model = synth_model(args.n, args.p, args.f, args.l, seed=model_seed)
    corpus = generate_corpus(model, args.walks, args.len, seed=corpus_seed)
    with _output(args.output) as fh:
        fh.write(corpus.to_text())
    manifest = args.manifest or (f"{args.output}.anomalous" if args.output not in (None, "-") else None)
    if manifest:
        model.write_manifest(manifest)


def cmd_groundtruth(args):
    gt = ground_truth_labels(read_ngram(args.input), args.k, args.alpha, args.samples, args.seed, args.method)
    with _output(args.output) as fh:
        gt.write_csv(fh)
    if gt.stats.truncated:
        print(f"{gt.stats.truncated} randomised walks truncated at grams without continuation", file=sys.stderr)


def cmd_eval(args):
    if args.protocol != "fig3":
        raise UsageError(f"unknown protocol {args.protocol!r}")

    def progress(l, rep):
        if args.verbose:
            print(f"l={l} rep={rep} done", file=sys.stderr)

    rows, summary = run_synthetic_experiment(args.n, args.p, args.f, args.l_range, args.k_range, args.reps,
                                             args.walks, args.len, args.seed, args.tolerance, progress,
                                             workers=_threads(args))
    with _output(args.output) as fh:
        write_summary_csv(summary, fh)
    if args.runs:
        with _output(args.runs) as fh:
            write_experiment_csv(rows, fh)


def cmd_export(args):
    table = _score(args)
    wanted = {"over": ("over",), "under": ("under",), "anomalous": ("over", "under")}[args.filter]
    idx = [i for i, lab in enumerate(table.labels) if lab in wanted]
    edges = [(int(table.src[i]), int(table.dst[i]), int(table.freq[i])) for i in idx]
    g = table.graph
    with _output(args.output) as fh:
        if args.format == "dot":
            attrs = {(int(table.src[i]), int(table.dst[i])): {"label": str(table.labels[i]),
                                                               "hypa": f"{table.hypa[i]:.6g}"} for i in idx}
            write_dot(g, fh, edges, attrs)
        else:
            write_edges_csv(g, fh, edges)


def cmd_bench(args):
    timings = benchmark(read_ngram(args.input), args.k, args.fractions, args.reps, args.seed, args.tolerance)
    with _output(args.output) as fh:
        write_timings_csv(timings, fh)


def cmd_motifs(args):
    table = _score(args)
    hist = motif_distribution(table, args.alpha)
    with _output(args.output) as fh:
        fh.write("motif,over,under\n")
        for motif, c in hist.items():
            fh.write(f"{motif},{c['over']},{c['under']}\n")


def cmd_geo(args):
    table = _score(args)
    stats = geo_statistics(table, read_coordinates(args.coords), args.alpha)
    with _output(args.output) as fh:
        stats.write_csv(fh)
    if stats.excluded:
        print(f"{stats.excluded} paths without coordinates excluded", file=sys.stderr)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    common.add_argument("--threads", type=int, default=None,
                        help=f"worker cap; falls back to ${THREADS_ENV}, then 1")
    common.add_argument("--config", help="key = value file supplying defaults for any long option")
    common.add_argument("-o", "--output", default=None, help="output file (default stdout)")

    scoring = argparse.ArgumentParser(add_help=False)
    scoring.add_argument("input", help="n-gram file")
    scoring.add_argument("-k", type=int, required=True, help="path length / De Bruijn order")
    scoring.add_argument("--tolerance", type=float, default=None)
    scoring.add_argument("--max-iterations", type=int, default=5000)
    scoring.add_argument("--edges", default=None, help="optional edge list constraining the first-order graph")

    parser = argparse.ArgumentParser(prog="hypa", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("score", parents=[common, scoring], help="HYPA scores of all possible length-k paths")
    p.add_argument("--alpha", type=float, default=None, help="also label rows at this threshold")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("detect", parents=[common, scoring], help="only over/under-represented paths")
    p.add_argument("--alpha", type=float, default=0.05)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("fbad", parents=[common], help="frequency-based baseline")
    p.add_argument("input")
    p.add_argument("-k", type=int, required=True)
    p.add_argument("--alpha", type=float, default=1.0, help="threshold in standard deviations")
    p.set_defaults(func=cmd_fbad)

    p = sub.add_parser("synth", parents=[common], help="synthetic corpus with injected anomalous paths")
    p.add_argument("-n", type=int, default=50)
    p.add_argument("-p", type=float, default=0.05)
    p.add_argument("-f", type=float, default=0.2, help="fraction of length-l walks marked anomalous")
    p.add_argument("-l", type=int, default=3)
    p.add_argument("--walks", type=int, default=5000)
    p.add_argument("--len", type=int, default=10)
    p.add_argument("--manifest", default=None, help="anomalous path list (default OUTPUT.anomalous)")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("groundtruth", parents=[common], help="simulation-based labels")
    p.add_argument("input")
    p.add_argument("-k", type=int, required=True)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--samples", type=int, default=10)
    p.add_argument("--method", choices=("midpoint", "categorical"), default="midpoint")
    p.set_defaults(func=cmd_groundtruth)

    p = sub.add_parser("eval", parents=[common], help="synthetic ROC/AUC experiment")
    p.add_argument("--protocol", default="fig3")
    p.add_argument("-n", type=int, default=50)
    p.add_argument("-p", type=float, default=0.05)
    p.add_argument("-f", type=float, default=0.2)
    p.add_argument("--l-range", type=_int_list, default=[2, 3, 4, 5])
    p.add_argument("--k-range", type=_int_list, default=[1, 2, 3, 4, 5])
    p.add_argument("--reps", type=int, default=10)
    p.add_argument("--walks", type=int, default=5000)
    p.add_argument("--len", type=int, default=10)
    p.add_argument("--tolerance", type=float, default=None)
    p.add_argument("--runs", default=None, help="also write per-run AUCs here")
    p.add_argument("-v", "--verbose", action="store_true")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("export", parents=[common, scoring], help="k-th order graph filtered by label")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--filter", choices=("over", "under", "anomalous"), default="anomalous")
    p.add_argument("--format", choices=("dot", "csv"), default="dot")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("bench", parents=[common], help="runtime of compute_hypa")
    p.add_argument("input")
    p.add_argument("-k", type=_int_list, default=[2], help="orders, e.g. 1-5 or 2,3")
    p.add_argument("--fractions", type=_float_list, default=[1.0], help="path subsample fractions")
    p.add_argument("--reps", type=int, default=10)
    p.add_argument("--tolerance", type=float, default=None)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("motifs", parents=[common, scoring], help="over/under counts per 3-node motif (k=2)")
    p.add_argument("--alpha", type=float, default=0.05)
    p.set_defaults(func=cmd_motifs)

    p = sub.add_parser("geo", parents=[common, scoring], help="trip distance statistics (k=2)")
    p.add_argument("--coords", required=True, help="node,lat,lon CSV")
    p.add_argument("--alpha", type=float, default=0.05)
    p.set_defaults(func=cmd_geo)
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: Sequence[str]):
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    cfg = read_config(known.config)
    subparsers = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    for sp in subparsers.choices.values():
        by_dest = {a.dest: a for a in sp._actions}
        defaults = {}
        for key, raw in cfg.items():
            action = by_dest.get(key)
            if action is None:
                continue
            if isinstance(action, argparse._StoreTrueAction):
                value = raw.lower() in ("1", "true", "yes", "on")
            else:
                try:
                    value = action.type(raw) if action.type else raw
                except ValueError:
                    raise UsageError(f"config: bad value {raw!r} for {key}") from None
            defaults[key] = value
            # a config value satisfies a required option
            action.required = False
        sp.set_defaults(**defaults)


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        args = parser.parse_args(argv)
        args.func(args)
    except SystemExit as exc:
        return int(exc.code or 0)
    except (UsageError, ParseError, ValidationError, OSError) as exc:
        print(f"hypa: error: {exc}", file=sys.stderr)
        return 2
    except (InfeasibleError, ConsistencyError, ValueError, ArithmeticError) as exc:
        print(f"hypa: computation failed: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
