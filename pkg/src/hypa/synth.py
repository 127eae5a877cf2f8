"""Synthetic path corpora with injected anomalous paths of a given length."""
from __future__ import annotations

import bisect
import os
from collections import Counter
from dataclasses import dataclass, field
from itertools import accumulate

import numpy as np

from .corpus import PathCorpus

MAX_PATHS = 10 ** 6


@dataclass
class SyntheticModel:
    n: int
    p: float
    f_anom: float
    l: int
    # weights[u] -> {v: integer weight}
    weights: dict[int, dict[int, int]]
    anomalous: list[tuple[int, ...]]
    n_candidates: int = 0
    by_start: dict[int, list[tuple[int, ...]]] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not self.by_start:
            for path in self.anomalous:
                self.by_start.setdefault(path[0], []).append(path)
        self._succ = {}
        for u, nbrs in self.weights.items():
            targets = sorted(nbrs)
            cum = list(accumulate(nbrs[v] for v in targets))
            self._succ[u] = (targets, cum)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(str(i) for i in range(self.n))

    def edges(self):
        for u, nbrs in self.weights.items():
            for v, w in nbrs.items():
                yield u, v, w

    def step(self, u: int, rng: np.random.Generator) -> int | None:
        """One edge-weight proportional step, ``None`` at a sink."""
        entry = self._succ.get(u)
        if not entry:
            return None
        targets, cum = entry
        return targets[bisect.bisect_right(cum, rng.random() * cum[-1])]

    def write_manifest(self, path: str | os.PathLike):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for p in self.anomalous:
                fh.write(",".join(str(v) for v in p) + "\n")


def enumerate_walks(weights: dict[int, dict[int, int]], n: int, l: int, cap: int = MAX_PATHS) -> list[tuple[int, ...]]:
    """All walks with ``l`` edges, in lexicographic order, at most ``cap`` of them."""
    walks: list[tuple[int, ...]] = [(u,) for u in range(n)]
    for _ in range(l):
        nxt = []
        for w in walks:
            for v in sorted(weights.get(w[-1], ())):
                nxt.append(w + (v,))
                if len(nxt) > cap:
                    raise ValueError(f"more than {cap} walks of length {l}; raise the cap or lower n*p")
        walks = nxt
    return walks


def directed_er(n: int, p: float, rng: np.random.Generator) -> dict[int, dict[int, int]]:
    """Directed G(n, p) without self-loops, integer weights uniform on [1, 20]."""
    adj = rng.random((n, n)) < p
    np.fill_diagonal(adj, False)
    w = rng.integers(1, 21, size=(n, n))
    out: dict[int, dict[int, int]] = {}
    for u, v in zip(*np.nonzero(adj)):
        out.setdefault(int(u), {})[int(v)] = int(w[u, v])
    return out


def synth_model(n: int, p: float, f_anom: float, l: int, seed=None, cap: int = MAX_PATHS) -> SyntheticModel:
    """Random weighted digraph plus a Bernoulli(f_anom) subset of its length-l walks."""
    if n < 2:
        raise ValueError("n must be >= 2")
    if not 0 < p < 1:
        raise ValueError("p must lie in (0, 1)")
    if not 0 <= f_anom <= 1:
        raise ValueError("f_anom must lie in [0, 1]")
    if l < 2:
        raise ValueError("l must be >= 2")
    rng = np.random.default_rng(seed)
    weights = directed_er(n, p, rng)
    walks = enumerate_walks(weights, n, l, cap)
    if not walks:
        raise ValueError(f"graph has no walk of length {l}; increase n*p")
    mark = rng.random(len(walks)) < f_anom
    anomalous = [w for w, keep in zip(walks, mark) if keep]
    return SyntheticModel(n, p, f_anom, l, weights, anomalous, len(walks))


def synth_walk(model: SyntheticModel, length: int, seed=None) -> tuple[int, ...]:
    """A walk of ``length`` steps that follows anomalous paths whenever one starts at the current node.

    The walk is cut short at a node without out-edges.
    """
    if length < 1:
        raise ValueError("length must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    u = int(rng.integers(model.n))
    path = [u]
    j = 0
    while j < length:
        options = model.by_start.get(u)
        if options:
            anom = options[int(rng.integers(len(options)))] if len(options) > 1 else options[0]
            for v in anom[1:]:
                if j >= length:
                    break
                path.append(v)
                j += 1
            u = path[-1]
        else:
            v = model.step(u, rng)
            if v is None:
                break
            path.append(v)
            j += 1
            u = v
    return tuple(path)


def generate_corpus(model: SyntheticModel, n_walks: int, length: int, seed=None) -> PathCorpus:
    """``n_walks`` independent walks, identical walks merged into one line with a multiplicity."""
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    children = root.spawn(n_walks) if n_walks else []
    counts: Counter = Counter()
    for child in children:
        counts[synth_walk(model, length, np.random.default_rng(child))] += 1
    labels = model.labels
    paths = tuple((walk, c) for walk, c in counts.items())
    return PathCorpus(paths, labels)
