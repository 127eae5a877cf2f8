"""k-th order De Bruijn graph models of paths."""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, TextIO

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from .corpus import FirstOrderGraph, PathCorpus, count_subpaths, induce_graph

GRAM_SEP = "|"


@dataclass(eq=False)
class KOrderGraph:
    """Weighted k-th order De Bruijn graph.

    Nodes are the observed k-grams (windows of ``k`` first-order nodes), interned
    to dense ids. Observed edges are stored as parallel arrays ``src``, ``dst``,
    ``freq``.
    """

    k: int
    grams: list[tuple[int, ...]]
    src: np.ndarray
    dst: np.ndarray
    freq: np.ndarray
    labels: tuple[str, ...] = ()
    # first-order edge set, only used at k=1 for possible-edge restriction
    base_edges: frozenset | None = None
    gram_index: dict[tuple[int, ...], int] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not self.gram_index:
            self.gram_index = {g: i for i, g in enumerate(self.grams)}
        n = len(self.grams)
        self.f_out = np.bincount(self.src, weights=self.freq, minlength=n).astype(np.int64)
        self.f_in = np.bincount(self.dst, weights=self.freq, minlength=n).astype(np.int64)

    @property
    def n_nodes(self) -> int:
        return len(self.grams)

    @property
    def n_edges(self) -> int:
        return len(self.src)

    @property
    def m(self) -> int:
        return int(self.freq.sum())

    def edge_dict(self) -> dict[tuple[int, int], int]:
        return {(int(s), int(d)): int(f) for s, d, f in zip(self.src, self.dst, self.freq)}

    def edge_path(self, v: int, w: int) -> tuple[int, ...]:
        """First-order node sequence of length k represented by edge (v, w)."""
        return self.grams[v] + self.grams[w][-1:]

    def gram_label(self, v: int) -> str:
        return GRAM_SEP.join(self.labels[i] for i in self.grams[v])

    def path_counts(self) -> dict[tuple[int, ...], int]:
        """Observed edges keyed by their (k+1)-node first-order path."""
        return {self.edge_path(int(s), int(d)): int(f) for s, d, f in zip(self.src, self.dst, self.freq)}


def build_korder(corpus: PathCorpus, k: int, graph: FirstOrderGraph | None = None) -> KOrderGraph:
    """Project the corpus onto its k-th order De Bruijn graph.

    At ``k=1`` an explicit first-order ``graph`` restricts the possible edges
    (and is validated against the corpus by ``induce_graph``).
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    index: dict[tuple[int, ...], int] = {}
    grams: list[tuple[int, ...]] = []
    for seq, _ in corpus.paths:
        for i in range(len(seq) - k + 1):
            g = seq[i:i + k]
            if g not in index:
                index[g] = len(grams)
                grams.append(g)

    counts = count_subpaths(corpus, k)
    n = len(counts)
    src = np.empty(n, dtype=np.int64)
    dst = np.empty(n, dtype=np.int64)
    freq = np.empty(n, dtype=np.int64)
    for i, (p, c) in enumerate(counts.items()):
        src[i] = index[p[:-1]]
        dst[i] = index[p[1:]]
        freq[i] = c

    base = None
    if k == 1:
        if graph is None:
            g1 = induce_graph(corpus)
        else:
            # validates the corpus against the graph; ids follow the corpus dictionary
            g1 = induce_graph(corpus, [(graph.labels[a], graph.labels[b]) for a, b in graph.edges])
        base = frozenset(
            (index[(a,)], index[(b,)]) for a, b in g1.edges if (a,) in index and (b,) in index)
    return KOrderGraph(k, grams, src, dst, freq, corpus.labels, base, index)


def possible_edges(g: KOrderGraph) -> tuple[np.ndarray, np.ndarray]:
    """All ordered node pairs satisfying the De Bruijn overlap condition.

    Returned as sorted ``(src, dst)`` arrays. At k=1 these are the edges of the
    first-order graph.
    """
    if g.k == 1:
        pairs = sorted(g.base_edges if g.base_edges is not None else g.edge_dict())
    else:
        by_prefix: dict[tuple[int, ...], list[int]] = defaultdict(list)
        for i, gram in enumerate(g.grams):
            by_prefix[gram[:-1]].append(i)
        pairs = []
        for i, gram in enumerate(g.grams):
            for j in by_prefix.get(gram[1:], ()):
                pairs.append((i, j))
        pairs.sort()
    if not pairs:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    arr = np.asarray(pairs, dtype=np.int64)
    return arr[:, 0].copy(), arr[:, 1].copy()


def transition_matrix(g: KOrderGraph) -> sparse.csr_matrix:
    """Row-stochastic transition matrix; rows of nodes without out-weight are zero."""
    n = g.n_nodes
    out = g.f_out.astype(float)
    vals = g.freq / np.where(out[g.src] > 0, out[g.src], 1.0)
    return sparse.csr_matrix((vals, (g.src, g.dst)), shape=(n, n))


@dataclass
class Eigen:
    value: float
    converged: bool
    iterations: int


def _power_iteration(a: sparse.csr_matrix, tol: float, max_iter: int) -> Eigen:
    # A + I has the same Perron vector and no rival eigenvalue of equal modulus
    x = np.full(a.shape[0], 1.0 / a.shape[0])
    lam = 0.0
    for it in range(1, max_iter + 1):
        y = a @ x + x
        s = y.sum()
        new = s - 1.0
        y /= s
        if abs(new - lam) <= tol * max(abs(new), 1.0) and np.abs(y - x).max() <= tol:
            return Eigen(max(new, 0.0), True, it)
        x, lam = y, new
    return Eigen(max(lam, 0.0), False, max_iter)


def leading_eigenvalue(graph: FirstOrderGraph, tol: float = 1e-8, max_iter: int = 200) -> Eigen:
    """Perron root of the binary adjacency matrix.

    The spectral radius is the largest one among strongly connected components
    that contain a cycle, so power iteration runs on each such component,
    where it converges (periodic components are handled by a shift by I).
    An acyclic graph gets exactly 0.
    """
    if graph.n_nodes == 0:
        raise ValueError("empty graph")
    a = graph.adjacency().astype(float)
    n_comp, comp = csgraph.connected_components(a, directed=True, connection="strong")
    sizes = np.bincount(comp, minlength=n_comp)
    looped = np.zeros(n_comp, dtype=bool)
    diag = a.diagonal() > 0
    looped[comp[diag]] = True
    best = Eigen(0.0, True, 0)
    for c in np.flatnonzero((sizes > 1) | looped):
        idx = np.flatnonzero(comp == c)
        e = _power_iteration(a[idx][:, idx].tocsr(), tol, max_iter)
        if e.value > best.value or not e.converged:
            best = Eigen(max(e.value, best.value), best.converged and e.converged,
                         max(best.iterations, e.iterations))
    return best


def count_walks(adjacency, k: int, exact: bool = False) -> tuple[int, bool]:
    """Sum of all entries of ``A**k`` (number of length-k walks).

    With ``exact`` the count uses Python integers. Otherwise int64 is used and
    the result saturates at ``2**63 - 1``; the second return value flags that.
    """
    a = sparse.csr_matrix(adjacency)
    n = a.shape[0]
    if exact:
        succ = [a.indices[a.indptr[i]:a.indptr[i + 1]].tolist() for i in range(n)]
        x = [1] * n
        for _ in range(k):
            x = [sum(x[j] for j in succ[i]) for i in range(n)]
        return sum(x), False
    limit = np.iinfo(np.int64).max
    x = np.ones(n, dtype=np.int64)
    a = a.astype(np.int64)
    max_deg = int(np.diff(a.indptr).max()) if n else 0
    for _ in range(k):
        if x.size and int(x.max()) > limit // max(max_deg * n, 1):
            return limit, True
        x = a @ x
    total = int(x.sum())
    return total, False


@dataclass
class BoundCheck:
    walks: int
    bound: float
    holds: bool
    eigenvalue: float
    saturated: bool = False


def path_count_bound_check(graph: FirstOrderGraph, k: int, eps: float = 1e-6) -> BoundCheck:
    """Compare the exact number of length-k paths with ``|V|**2 * lambda1**k``."""
    if k < 1:
        raise ValueError("k must be >= 1")
    lam = leading_eigenvalue(graph).value
    walks, saturated = count_walks(graph.adjacency(), k)
    bound = graph.n_nodes ** 2 * lam ** k
    holds = walks <= bound * (1 + eps) + eps
    return BoundCheck(walks, bound, bool(holds), lam, saturated)


def write_edges_csv(g: KOrderGraph, fh: TextIO, edges: Iterable[tuple[int, int, int]] | None = None):
    fh.write("source,target,frequency\n")
    rows = edges if edges is not None else zip(g.src, g.dst, g.freq)
    for s, d, f in rows:
        fh.write(f"{g.gram_label(int(s))},{g.gram_label(int(d))},{int(f)}\n")


def _dot_quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def write_dot(g: KOrderGraph, fh: TextIO, edges: Iterable[tuple[int, int, int]] | None = None,
              attrs: dict[tuple[int, int], dict[str, str]] | None = None):
    """Write the graph (or a subset of its edges) in Graphviz DOT format."""
    rows = list(edges if edges is not None else zip(g.src, g.dst, g.freq))
    fh.write("digraph G {\n")
    used = sorted({int(v) for s, d, _ in rows for v in (s, d)})
    for v in used:
        fh.write(f"  {_dot_quote(g.gram_label(v))};\n")
    for s, d, f in rows:
        extra = ""
        if attrs and (int(s), int(d)) in attrs:
            extra = "".join(f", {key}={_dot_quote(val)}" for key, val in attrs[(int(s), int(d))].items())
        fh.write(f"  {_dot_quote(g.gram_label(int(s)))} -> {_dot_quote(g.gram_label(int(d)))}"
                 f" [weight={int(f)}{extra}];\n")
    fh.write("}\n")
