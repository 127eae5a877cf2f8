"""Path corpora: parsing, subpath counting and the induced first-order graph."""
from __future__ import annotations

import io
import os
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

_SPLIT = re.compile(r"[,\s]+")


class ParseError(ValueError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class ValidationError(ValueError):
    pass


@dataclass(frozen=True)
class PathCorpus:
    """Multiset of node sequences.

    ``paths`` holds ``(node_ids, multiplicity)`` pairs, ``labels[i]`` is the
    label of node id ``i``.
    """

    paths: tuple[tuple[tuple[int, ...], int], ...] = ()
    labels: tuple[str, ...] = ()
    index: dict[str, int] = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if not self.index and self.labels:
            object.__setattr__(self, "index", {lab: i for i, lab in enumerate(self.labels)})
        n = len(self.labels)
        for seq, mult in self.paths:
            if len(seq) < 1:
                raise ValidationError("empty path")
            if mult < 1:
                raise ValidationError(f"multiplicity must be positive, got {mult}")
            if any(v < 0 or v >= n for v in seq):
                raise ValidationError(f"node id out of range in {seq}")

    @classmethod
    def from_sequences(cls, sequences: Iterable[Sequence[str] | tuple[Sequence[str], int]]) -> "PathCorpus":
        """Build a corpus from label sequences, optionally paired with a multiplicity."""
        index: dict[str, int] = {}
        paths = []
        for item in sequences:
            if isinstance(item, tuple) and len(item) == 2 and isinstance(item[1], int):
                seq, mult = item
            else:
                seq, mult = item, 1
            ids = tuple(index.setdefault(str(v), len(index)) for v in seq)
            paths.append((ids, mult))
        return cls(tuple(paths), tuple(index), index)

    def __len__(self):
        return len(self.paths)

    @property
    def n_paths(self) -> int:
        """Number of paths counting multiplicity."""
        return sum(m for _, m in self.paths)

    @property
    def n_traversals(self) -> int:
        return sum(m * len(seq) for seq, m in self.paths)

    def label_path(self, ids: Sequence[int]) -> tuple[str, ...]:
        return tuple(self.labels[i] for i in ids)

    def to_text(self) -> str:
        buf = io.StringIO()
        for seq, mult in self.paths:
            buf.write(",".join(self.labels[v] for v in seq))
            buf.write(f",{mult}\n")
        return buf.getvalue()

    def write(self, path: str | os.PathLike):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.to_text())


def _is_int(token: str) -> bool:
    return bool(re.fullmatch(r"[+-]?\d+", token))


def parse_ngram(source: str | Iterable[str]) -> PathCorpus:
    """Parse n-gram text: one path per line, comma or whitespace separated.

    A trailing integer field is the multiplicity. Because node labels are
    opaque, a line such as ``1,2,3`` reads as path ``1,2`` with multiplicity 3;
    lines made only of integers therefore always need an explicit multiplicity,
    and a last label starting with a digit (``2.5``, ``0x``) is rejected.
    Lines starting with ``#`` and blank lines are skipped.
    """
    lines = source.splitlines() if isinstance(source, str) else source
    index: dict[str, int] = {}
    paths = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.rstrip("\r\n").strip()
        if not line or line.startswith("#"):
            continue
        if "," in line:
            tokens = [t.strip() for t in line.split(",")]
        else:
            tokens = _SPLIT.split(line)
        if any(t == "" for t in tokens):
            raise ParseError(lineno, "empty token")
        mult = 1
        if len(tokens) > 1 and _is_int(tokens[-1]):
            mult = int(tokens[-1])
            tokens = tokens[:-1]
            if mult <= 0:
                raise ParseError(lineno, f"multiplicity must be positive, got {mult}")
        elif len(tokens) > 1 and re.match(r"[+-]?\d", tokens[-1]):
            # numeric-looking but not an integer, e.g. "0x" or "2.5"
            raise ParseError(lineno, f"malformed multiplicity {tokens[-1]!r}")
        ids = tuple(index.setdefault(t, len(index)) for t in tokens)
        paths.append((ids, mult))
    return PathCorpus(tuple(paths), tuple(index), index)


def read_ngram(path: str | os.PathLike) -> PathCorpus:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        return parse_ngram(fh)


def count_subpaths(corpus: PathCorpus, k: int) -> Counter:
    """Count every contiguous window of ``k + 1`` nodes, weighted by multiplicity."""
    if k < 1:
        raise ValueError("k must be >= 1")
    counts: Counter = Counter()
    w = k + 1
    for seq, mult in corpus.paths:
        for i in range(len(seq) - w + 1):
            counts[seq[i:i + w]] += mult
    return counts


def subsample_paths(corpus: PathCorpus, n: int, rng) -> PathCorpus:
    """Draw ``n`` of the corpus's paths uniformly without replacement (multiplicity counts as copies)."""
    mults = np.array([m for _, m in corpus.paths], dtype=np.int64)
    total = int(mults.sum())
    if not 0 <= n <= total:
        raise ValueError(f"cannot draw {n} paths from {total}")
    owner = np.repeat(np.arange(len(mults)), mults)
    picked = np.bincount(owner[rng.choice(total, size=n, replace=False)], minlength=len(mults))
    paths = tuple((seq, int(c)) for (seq, _), c in zip(corpus.paths, picked) if c)
    return PathCorpus(paths, corpus.labels, corpus.index)


@dataclass(frozen=True)
class FirstOrderGraph:
    """Directed graph with integer traversal weights on node ids ``0..n_nodes-1``."""

    n_nodes: int
    edges: dict[tuple[int, int], int]
    labels: tuple[str, ...] = ()

    @property
    def nodes(self) -> range:
        return range(self.n_nodes)

    @property
    def total_weight(self) -> int:
        return sum(self.edges.values())

    def successors(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {}
        for u, v in self.edges:
            out.setdefault(u, []).append(v)
        return out

    def adjacency(self):
        """Binary adjacency as a scipy CSR matrix."""
        import numpy as np
        from scipy import sparse

        if not self.edges:
            return sparse.csr_matrix((self.n_nodes, self.n_nodes), dtype=np.int64)
        src, dst = zip(*self.edges)
        data = np.ones(len(src), dtype=np.int64)
        return sparse.csr_matrix((data, (src, dst)), shape=(self.n_nodes, self.n_nodes))


def induce_graph(corpus: PathCorpus, edges: Iterable[tuple[str, str]] | None = None) -> FirstOrderGraph:
    """First-order graph of a corpus.

    If ``edges`` (label pairs) is given, every transition in the corpus must be
    one of them; those edges are all kept, with weight 0 when untraversed.
    """
    counts = {(s[0], s[1]): c for s, c in count_subpaths(corpus, 1).items()}
    if edges is None:
        return FirstOrderGraph(len(corpus.labels), counts, corpus.labels)

    index = dict(corpus.index)
    labels = list(corpus.labels)
    allowed: dict[tuple[int, int], int] = {}
    for a, b in edges:
        ia = index.setdefault(a, len(index))
        ib = index.setdefault(b, len(index))
        if len(labels) < len(index):
            labels.extend(list(index)[len(labels):])
        allowed[(ia, ib)] = 0
    for e, c in counts.items():
        if e not in allowed:
            raise ValidationError(
                f"transition {corpus.labels[e[0]]}->{corpus.labels[e[1]]} is not an edge of the supplied graph")
        allowed[e] = c
    return FirstOrderGraph(len(labels), allowed, tuple(labels))


def read_edge_list(path: str | os.PathLike) -> list[tuple[str, str]]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            tokens = [t for t in _SPLIT.split(line) if t]
            if len(tokens) < 2:
                raise ParseError(lineno, "edge needs a source and a target")
            out.append((tokens[0], tokens[1]))
    return out
