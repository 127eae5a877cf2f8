"""Frequency-based anomaly detection (FBAD) baseline."""
from __future__ import annotations

from dataclasses import dataclass
from typing import TextIO

import numpy as np

from .corpus import PathCorpus
from .debruijn import KOrderGraph, build_korder


@dataclass
class FbadResult:
    graph: KOrderGraph
    mu: float
    sigma: float
    zscore: np.ndarray
    labels: np.ndarray
    alpha: float

    def write_csv(self, fh: TextIO):
        g = self.graph
        fh.write("source,target,frequency,xi,zscore,label\n")
        for i in range(g.n_edges):
            s, d = int(g.src[i]), int(g.dst[i])
            fh.write(f"{g.gram_label(s)},{g.gram_label(d)},{int(g.freq[i])},,"
                     f"{self.zscore[i]:.12g},{self.labels[i]}\n")


def fbad_labels(weights, alpha: float) -> tuple[float, float, np.ndarray, np.ndarray]:
    """Label weights above ``mu + alpha*sigma`` over and below ``mu - alpha*sigma`` under.

    ``sigma`` is the population standard deviation. With ``sigma == 0`` every
    z-score is 0 and nothing is labelled.
    """
    w = np.asarray(weights, dtype=float)
    mu = float(w.mean())
    sigma = float(w.std())
    z = (w - mu) / sigma if sigma > 0 else np.zeros_like(w)
    labels = np.full(w.shape, "normal", dtype=object)
    if sigma > 0:
        labels[w > mu + sigma * alpha] = "over"
        labels[w < mu - sigma * alpha] = "under"
    return mu, sigma, z, labels


def fbad_detect(corpus: PathCorpus | KOrderGraph, k: int | None = None, alpha: float = 1.0) -> FbadResult:
    """FBAD over the observed edges of the k-th order graph."""
    g = corpus if isinstance(corpus, KOrderGraph) else build_korder(corpus, k)
    if g.n_edges == 0:
        raise ValueError(f"corpus has no subpaths of length {g.k}")
    mu, sigma, z, labels = fbad_labels(g.freq, alpha)
    return FbadResult(g, mu, sigma, z, labels, alpha)
