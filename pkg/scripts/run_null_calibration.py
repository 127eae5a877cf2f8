"""Fraction of edges HYPA labels on corpora with no structure beyond order k-1.

Order-1 nulls are plain weighted walks on an ER graph. Order-2 nulls re-walk a
corpus with planted length-2 anomalies through its empirical second-order
transitions. Under perfect calibration the labelled fraction is 2 * alpha.
"""
import argparse

import numpy as np
from scipy import stats

from hypa import compute_hypa
from hypa.groundtruth import randomize_corpus
from hypa.synth import generate_corpus, synth_model


def null_corpus(k, n, p, walks, length, seed):
    ss = np.random.SeedSequence(seed).spawn(3)
    if k == 2:
        return generate_corpus(synth_model(n, p, 0.0, 2, seed=ss[0]), walks, length, seed=ss[1])
    base = generate_corpus(synth_model(n, p, 0.2, 2, seed=ss[0]), walks, length, seed=ss[1])
    return randomize_corpus(base, k, seed=ss[2])


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--n", type=int, default=50)
    ap.add_argument("--p", type=float, default=0.05)
    ap.add_argument("--walks", type=int, default=5000)
    ap.add_argument("--len", dest="length", type=int, default=10)
    ap.add_argument("--corpora", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    print("k,alpha,edges,labelled,fraction,ci_low,ci_high")
    for k in (2, 3):
        h = []
        for i in range(args.corpora):
            t = compute_hypa(null_corpus(k, args.n, args.p, args.walks, args.length, [args.seed, k, i]), k)
            h.append(t.hypa[t.labels != "unscored"])
        h = np.concatenate(h)
        for alpha in (0.01, 0.05, 0.1):
            hits = int(np.sum((h < alpha) | (h > 1 - alpha)))
            lo, hi = stats.binom.interval(0.99, h.size, 2 * alpha)
            print(f"{k},{alpha},{h.size},{hits},{hits / h.size:.4f},{lo / h.size:.4f},{hi / h.size:.4f}")


if __name__ == "__main__":
    main()
