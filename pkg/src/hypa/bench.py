"""Wall-clock measurements of the scoring pipeline."""
from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Iterable, TextIO

import numpy as np

from .corpus import PathCorpus, subsample_paths
from .ensemble import compute_hypa


@dataclass(frozen=True)
class Timing:
    k: int
    n_paths: int
    n_traversals: int
    mean_seconds: float
    std_seconds: float


def time_hypa(corpus: PathCorpus, k: int, reps: int = 10, tolerance: float | None = None) -> Timing:
    """Mean and standard deviation of ``reps`` end-to-end ``compute_hypa`` runs."""
    if reps < 1:
        raise ValueError("reps must be >= 1")
    times = []
    for _ in range(reps):
        t0 = time.perf_counter()
        compute_hypa(corpus, k, tolerance)
        times.append(time.perf_counter() - t0)
    t = np.asarray(times)
    return Timing(k, corpus.n_paths, corpus.n_traversals, float(t.mean()), float(t.std()))


def benchmark(corpus: PathCorpus, k_values: Iterable[int], fractions: Iterable[float] = (1.0,),
              reps: int = 10, seed=None, tolerance: float | None = None) -> list[Timing]:
    """Time every ``(k, fraction)`` pair; fractions below 1 subsample paths uniformly."""
    rng = np.random.default_rng(seed)
    fractions = list(fractions)
    subsets = []
    for frac in fractions:
        if not 0 < frac <= 1:
            raise ValueError("fractions must lie in (0, 1]")
        n = int(round(frac * corpus.n_paths))
        subsets.append(corpus if n == corpus.n_paths else subsample_paths(corpus, n, rng))
    return [time_hypa(sub, k, reps, tolerance) for k in k_values for sub in subsets]


def write_timings_csv(timings: Iterable[Timing], fh: TextIO):
    fh.write("k,n_paths,N,mean_seconds,std_seconds\n")
    for t in timings:
        fh.write(f"{t.k},{t.n_paths},{t.n_traversals},{t.mean_seconds:.6g},{t.std_seconds:.6g}\n")
