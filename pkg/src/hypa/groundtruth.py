"""Simulation-based ground truth: compare observed path frequencies with randomised corpora."""
from __future__ import annotations

import bisect
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from itertools import accumulate
from typing import TextIO

import numpy as np

from .corpus import PathCorpus, count_subpaths
from .debruijn import KOrderGraph, build_korder, possible_edges


@dataclass
class RandomizeStats:
    truncated: int = 0


def _transition_tables(corpus: PathCorpus, order: int) -> dict[tuple[int, ...], tuple[list[int], list[int]]]:
    """gram -> (next first-order nodes, cumulative weights) of the order-``order`` model."""
    table: dict[tuple[int, ...], dict[int, int]] = defaultdict(dict)
    for p, c in count_subpaths(corpus, order).items():
        table[p[:-1]][p[-1]] = c
    out = {}
    for gram, nxt in table.items():
        targets = sorted(nxt)
        out[gram] = (targets, list(accumulate(nxt[t] for t in targets)))
    return out


def randomize_corpus(corpus: PathCorpus, k: int, seed=None, stats: RandomizeStats | None = None) -> PathCorpus:
    """Replace each path by a (k-1)-order random walk with the same start node and length.

    While fewer than ``k-1`` nodes have been generated the walk uses the highest
    order available for its history. Walks stop early at grams without
    continuation. Paths with fewer than two edges are copied unchanged.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    rng = np.random.default_rng(seed)
    tables = [None] + [_transition_tables(corpus, r) for r in range(1, k)]
    stats = stats if stats is not None else RandomizeStats()
    out: Counter = Counter()
    for seq, mult in corpus.paths:
        length = len(seq) - 1
        if length < 2:
            out[seq] += mult
            continue
        draws = rng.random((mult, length))
        for r in range(mult):
            walk = [seq[0]]
            for step in range(length):
                order = min(len(walk), k - 1)
                entry = tables[order].get(tuple(walk[-order:]))
                if entry is None:
                    stats.truncated += 1
                    break
                targets, cum = entry
                walk.append(targets[bisect.bisect_right(cum, draws[r, step] * cum[-1])])
            out[tuple(walk)] += 1
    return PathCorpus(tuple(out.items()), corpus.labels, corpus.index)


@dataclass
class GroundTruth:
    graph: KOrderGraph
    src: np.ndarray
    dst: np.ndarray
    freq: np.ndarray
    cdf: np.ndarray
    labels: np.ndarray
    samples: np.ndarray = field(repr=False)
    alpha: float = 0.05
    stats: RandomizeStats = field(default_factory=RandomizeStats)

    def __len__(self):
        return len(self.src)

    def path(self, i: int) -> tuple[int, ...]:
        return self.graph.edge_path(int(self.src[i]), int(self.dst[i]))

    def write_csv(self, fh: TextIO):
        g = self.graph
        fh.write("source,target,frequency,cdf,label\n")
        for i in range(len(self)):
            fh.write(f"{g.gram_label(int(self.src[i]))},{g.gram_label(int(self.dst[i]))},"
                     f"{int(self.freq[i])},{self.cdf[i]:.12g},{self.labels[i]}\n")


def empirical_cdf(samples: np.ndarray, observed: np.ndarray, method: str = "midpoint") -> np.ndarray:
    """Per-column CDF of ``observed`` under the sampled frequencies.

    ``midpoint`` counts ties as half; ``categorical`` uses ``Pr(X <= f)`` of the
    empirical distribution of sampled values.
    """
    below = (samples < observed[None, :]).sum(axis=0)
    equal = (samples == observed[None, :]).sum(axis=0)
    n = samples.shape[0]
    if method == "midpoint":
        return (below + 0.5 * equal) / n
    if method == "categorical":
        return (below + equal) / n
    raise ValueError(f"unknown CDF method {method!r}")


def label_cdf(cdf: np.ndarray, alpha: float) -> np.ndarray:
    labels = np.full(cdf.shape, "normal", dtype=object)
    labels[cdf < alpha] = "under"
    labels[cdf >= 1 - alpha] = "over"
    return labels


def ground_truth_labels(corpus: PathCorpus, k: int, alpha: float = 0.05, m_samples: int = 10, seed=None,
                        method: str = "midpoint") -> GroundTruth:
    """Label possible k-th order edges against frequencies in ``m_samples`` randomised corpora."""
    if m_samples < 1:
        raise ValueError("m_samples must be >= 1")
    g = build_korder(corpus, k)
    src, dst = possible_edges(g)
    paths = [g.edge_path(int(s), int(d)) for s, d in zip(src, dst)]
    observed_counts = g.path_counts()
    freq = np.array([observed_counts.get(p, 0) for p in paths], dtype=np.int64)
    seeds = np.random.SeedSequence(seed).spawn(m_samples)
    samples = np.zeros((m_samples, len(paths)), dtype=np.int64)
    stats = RandomizeStats()
    for i, ss in enumerate(seeds):
        counts = count_subpaths(randomize_corpus(corpus, k, ss, stats), k)
        samples[i] = [counts.get(p, 0) for p in paths]
    cdf = empirical_cdf(samples, freq, method)
    return GroundTruth(g, src, dst, freq, cdf, label_cdf(cdf, alpha), samples, alpha, stats)
