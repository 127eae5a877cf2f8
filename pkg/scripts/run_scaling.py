"""Runtime of compute_hypa on nested subsamples of one synthetic corpus, with log-log slopes."""
import argparse
import sys

import numpy as np

from hypa.bench import benchmark, write_timings_csv
from hypa.synth import generate_corpus, synth_model


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("-k", type=int, nargs="+", default=[2])
    ap.add_argument("--walks", type=int, default=200_000)
    ap.add_argument("--fractions", type=float, nargs="+", default=[0.125, 0.25, 0.5, 1.0])
    ap.add_argument("--reps", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    ss = np.random.SeedSequence(args.seed).spawn(3)
    corpus = generate_corpus(synth_model(50, 0.05, 0.2, 2, seed=ss[0]), args.walks, 10, seed=ss[1])
    timings = benchmark(corpus, args.k, args.fractions, reps=args.reps, seed=ss[2])
    write_timings_csv(timings, sys.stdout)
    for k in args.k:
        rows = [t for t in timings if t.k == k]
        x = np.log([t.n_traversals for t in rows])
        y = np.log([t.mean_seconds for t in rows])
        slopes = np.diff(y) / np.diff(x)
        print(f"# k={k} slopes between successive sizes: " + ", ".join(f"{s:.2f}" for s in slopes), file=sys.stderr)


if __name__ == "__main__":
    main()
