"""Hypergeometric ensemble of De Bruijn graphs and HYPA scores."""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import TextIO

import numpy as np
from scipy.special import betaln

from .corpus import FirstOrderGraph, PathCorpus
from .debruijn import KOrderGraph, build_korder, possible_edges

LABELS = ("over", "under", "normal", "unscored")

# relative slack when deciding integer support bounds of real-valued capacities
SLACK = 1e-9
# max number of pmf terms evaluated in one vectorised chunk
_CHUNK_TERMS = 1 << 21
# half-width of the summation window in standard deviations
_WINDOW_SD = 50


class InfeasibleError(ValueError):
    pass


class ConsistencyError(RuntimeError):
    pass


@dataclass
class XiMatrix:
    """Sparse capacities of the multi-edge urn, one entry per possible edge."""

    k: int
    n_nodes: int
    src: np.ndarray
    dst: np.ndarray
    values: np.ndarray
    m: int
    M: float
    f_out: np.ndarray
    f_in: np.ndarray
    iterations: int = 0
    rmse: float = float("nan")
    converged: bool = False
    max_drift: float = 0.0

    @property
    def total(self) -> float:
        return float(self.values.sum())

    def dense(self) -> np.ndarray:
        out = np.zeros((self.n_nodes, self.n_nodes))
        out[self.src, self.dst] = self.values
        return out


def init_xi(g: KOrderGraph) -> XiMatrix:
    """Outer product of weighted degrees, restricted to possible edges."""
    m = g.m
    if m == 0:
        raise ValueError("empty k-order graph")
    src, dst = possible_edges(g)
    values = g.f_out[src].astype(float) * g.f_in[dst].astype(float)
    return XiMatrix(g.k, g.n_nodes, src, dst, values, m, float(m) * float(m),
                    g.f_out.astype(float), g.f_in.astype(float))


def expected_degrees(xi: XiMatrix) -> tuple[np.ndarray, np.ndarray]:
    """Expected out- and in-degrees of a sample of ``m`` edges from the urn."""
    total = xi.values.sum()
    scale = xi.M / (xi.m * total)
    out = np.bincount(xi.src, weights=xi.values, minlength=xi.n_nodes) * scale
    inn = np.bincount(xi.dst, weights=xi.values, minlength=xi.n_nodes) * scale
    return out, inn


def _rmse(a: np.ndarray, b: np.ndarray) -> float:
    if a.size == 0:
        return 0.0
    return float(np.sqrt(np.mean((a - b) ** 2)))


def degree_error(xi: XiMatrix) -> float:
    e_out, e_in = expected_degrees(xi)
    return _rmse(xi.f_out, e_out) + _rmse(xi.f_in, e_in)


def default_tolerance(g: KOrderGraph | XiMatrix) -> float:
    m = g.m
    return 1e-2 * m / max(g.n_nodes, 1)


def _check_feasible(xi: XiMatrix):
    rows = np.bincount(xi.src, weights=xi.values, minlength=xi.n_nodes)
    cols = np.bincount(xi.dst, weights=xi.values, minlength=xi.n_nodes)
    for name, target, have in (("out", xi.f_out, rows), ("in", xi.f_in, cols)):
        bad = np.flatnonzero((target > 0) & (have <= 0))
        if bad.size:
            raise InfeasibleError(
                f"infeasible degree constraints: node {int(bad[0])} needs {name}-degree "
                f"{target[bad[0]]:g} but has no possible {name}-edges")


def _factor(target: np.ndarray, expected: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        f = np.where(expected > 0, target / expected, 1.0)
    return f


def fit_xi(xi: XiMatrix, tolerance: float | None = None, max_iterations: int = 5000) -> XiMatrix:
    """Alternately rescale columns and rows of Xi until expected degrees match.

    Each iteration applies the in-degree correction followed by the out-degree
    correction. Stops once the summed degree RMSE of the current matrix is at
    most ``tolerance``; an already consistent matrix is returned after zero
    iterations.
    """
    if tolerance is None:
        tolerance = default_tolerance(xi)
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    _check_feasible(xi)
    vals = xi.values.copy()
    cur = dataclasses.replace(xi, values=vals)
    err = degree_error(cur)
    it = 0
    drift = 0.0
    while err > tolerance and it < max_iterations:
        before = vals.sum()
        _, e_in = expected_degrees(cur)
        vals *= _factor(xi.f_in, e_in)[xi.dst]
        e_out, _ = expected_degrees(cur)
        vals *= _factor(xi.f_out, e_out)[xi.src]
        drift = max(drift, abs(vals.sum() - before) / before)
        it += 1
        err = degree_error(cur)
    return dataclasses.replace(cur, iterations=it, rmse=err, converged=err <= tolerance, max_drift=drift)


def _lnbinom(a, b):
    """log C(a, b) for real ``a >= b >= 0``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return -np.log1p(a) - betaln(a - b + 1.0, b + 1.0)


def _check_domain(xi_vw, xi_total, m, f):
    if m < 0:
        raise ValueError("m must be non-negative")
    if xi_total <= 0:
        raise ValueError("total capacity must be positive")
    if np.any(np.asarray(xi_vw) < 0):
        raise ValueError("capacity must be non-negative")
    if np.any(np.asarray(xi_vw) > xi_total * (1 + SLACK)):
        raise ValueError("capacity exceeds total")
    if m > xi_total * (1 + SLACK) + SLACK:
        raise ValueError(f"cannot draw m={m} from total capacity {xi_total:g}")
    fa = np.asarray(f)
    if np.any(fa < 0) or np.any(fa > m):
        raise ValueError(f"frequency must lie in [0, m={m}]")


def _support(xi_vw, xi_total, m):
    xi_vw = np.asarray(xi_vw, dtype=float)
    rest = xi_total - xi_vw
    lo = np.maximum(0, np.ceil(m - rest - SLACK * np.maximum(rest, 1.0))).astype(np.int64)
    hi = np.minimum(m, np.floor(xi_vw + SLACK * np.maximum(xi_vw, 1.0))).astype(np.int64)
    return lo, hi


def hypergeom_logpmf(xi_vw, xi_total: float, m: int, f):
    """Log-probability that an edge with capacity ``xi_vw`` gets weight ``f``.

    ``xi_vw`` and ``f`` broadcast against each other; scalar inputs give a float.
    """
    _check_domain(xi_vw, xi_total, m, f)
    scalar = np.ndim(xi_vw) == 0 and np.ndim(f) == 0
    xv, fa = np.broadcast_arrays(np.asarray(xi_vw, dtype=float), np.asarray(f, dtype=np.int64))
    lo, hi = _support(xv, xi_total, m)
    inside = (fa >= lo) & (fa <= hi)
    fi = np.where(inside, fa, 0)
    rest = np.maximum(xi_total - xv, 0.0)
    with np.errstate(invalid="ignore"):
        val = _lnbinom(xv, fi) + _lnbinom(rest, m - fi) - _lnbinom(xi_total, m)
    val = np.where(inside, val, -math.inf)
    return float(val) if scalar else val


def hypa_scores(xi_vw, xi_total: float, m: int, f) -> np.ndarray:
    """Vectorised hypergeometric CDF ``Pr(X <= f)`` for arrays of capacities/frequencies.

    Each CDF sums the pmf upwards to ``f``; consecutive terms come from the
    ratio ``pmf(x+1)/pmf(x)`` accumulated in log space. The pmf is log-concave,
    so terms further than ``_WINDOW_SD`` standard deviations beyond both the
    mean and ``f`` are below double precision relative to the sum and are
    skipped. This keeps the work per edge proportional to the spread, not to m.
    """
    xi_vw = np.atleast_1d(np.asarray(xi_vw, dtype=float))
    f = np.atleast_1d(np.asarray(f, dtype=np.int64))
    xi_vw, f = np.broadcast_arrays(xi_vw, f)
    _check_domain(xi_vw, xi_total, m, f)
    lo, hi = _support(xi_vw, xi_total, m)
    p = xi_vw / xi_total
    mean = m * p
    var = m * p * (1 - p) * max(xi_total - m, 0.0) / max(xi_total - 1, 1.0)
    width = np.ceil(_WINDOW_SD * (np.sqrt(var) + 1)).astype(np.int64)
    centre = np.floor(mean).astype(np.int64)
    lo = np.maximum(lo, np.minimum(f, centre) - width)
    upper = np.minimum(np.minimum(f, hi), centre + width)
    out = np.zeros(xi_vw.shape, dtype=float)
    live = np.flatnonzero(upper >= lo)
    if live.size == 0:
        return out
    cum = np.cumsum((upper - lo + 1)[live])
    start = 0
    while start < live.size:
        base = cum[start - 1] if start else 0
        stop = max(int(np.searchsorted(cum, base + _CHUNK_TERMS, side="right")), start + 1)
        idx = live[start:stop]
        out[idx] = _cdf_chunk(xi_vw[idx], float(xi_total), int(m), lo[idx], upper[idx])
        start = stop
    return np.clip(out, 0.0, 1.0)


def _cdf_chunk(xv, total, m, lo, upper):
    rest = np.maximum(total - xv, 0.0)
    lp0 = _lnbinom(xv, lo) + _lnbinom(rest, m - lo) - _lnbinom(total, m)
    n = upper - lo + 1
    starts = np.concatenate(([0], np.cumsum(n)[:-1]))
    seg = np.repeat(np.arange(len(n)), n)
    x = lo[seg] + (np.arange(n.sum()) - starts[seg])
    # log pmf(x+1)/pmf(x), only the first n-1 terms of each segment are used
    with np.errstate(divide="ignore", invalid="ignore"):
        lr = (np.log(xv[seg] - x) + np.log(m - x)
              - np.log(x + 1.0) - np.log(rest[seg] - m + x + 1.0))
    last = starts + n - 1
    lr[last] = 0.0
    # the last slot cancels its segment so the running sum restarts near 0
    lr[last] = -np.add.reduceat(lr, starts)
    excl = np.cumsum(lr) - lr
    excl -= excl[starts][seg]
    lp = lp0[seg] + excl
    mx = np.maximum.reduceat(lp, starts)
    s = np.add.reduceat(np.exp(lp - mx[seg]), starts)
    return np.exp(mx) * s


def hypa_score(xi_vw: float, xi_total: float, m: int, f: int) -> float:
    """``Pr(X <= f)`` for a single edge."""
    return float(hypa_scores([xi_vw], xi_total, m, [f])[0])


@dataclass
class ScoreTable:
    """Per possible edge: observed frequency, capacity, HYPA score and label."""

    graph: KOrderGraph
    xi: XiMatrix
    src: np.ndarray
    dst: np.ndarray
    freq: np.ndarray
    xi_values: np.ndarray
    hypa: np.ndarray
    labels: np.ndarray
    alpha: float | None = None
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.src)

    @property
    def k(self) -> int:
        return self.graph.k

    @property
    def scored(self) -> np.ndarray:
        return self.labels != "unscored"

    def path(self, i: int) -> tuple[int, ...]:
        return self.graph.edge_path(int(self.src[i]), int(self.dst[i]))

    def paths(self) -> list[tuple[int, ...]]:
        return [self.path(i) for i in range(len(self))]

    def by_path(self) -> dict[tuple[str, ...], float]:
        """HYPA score keyed by the labelled first-order path."""
        lab = self.graph.labels
        return {tuple(lab[v] for v in self.path(i)): float(self.hypa[i]) for i in range(len(self))}

    def rows(self):
        g = self.graph
        for i in range(len(self)):
            yield (g.gram_label(int(self.src[i])), g.gram_label(int(self.dst[i])), int(self.freq[i]),
                   float(self.xi_values[i]), float(self.hypa[i]), str(self.labels[i]))

    def write_csv(self, fh: TextIO):
        fh.write("source,target,frequency,xi,hypa,label\n")
        for s, d, f, x, h, lab in self.rows():
            fh.write(f"{s},{d},{f},{x:.12g},{h:.12g},{lab}\n")


def score_graph(g: KOrderGraph, tolerance: float | None = None, max_iterations: int = 5000) -> ScoreTable:
    """Fit Xi on a built k-order graph and score every possible edge."""
    xi = fit_xi(init_xi(g), tolerance, max_iterations)
    n = g.n_nodes
    keys = xi.src * n + xi.dst
    obs = g.src * n + g.dst
    order = np.argsort(keys)
    pos = order[np.searchsorted(keys, obs, sorter=order)]
    freq = np.zeros(len(keys), dtype=np.int64)
    freq[pos] = g.freq

    vals = xi.values
    zero = vals <= 0
    if np.any(zero & (freq > 0)):
        i = int(np.flatnonzero(zero & (freq > 0))[0])
        raise ConsistencyError(
            f"edge {g.gram_label(int(xi.src[i]))}->{g.gram_label(int(xi.dst[i]))} observed with zero capacity")
    total = float(vals.sum())
    scores = np.full(len(keys), np.nan)
    live = ~zero
    scores[live] = hypa_scores(vals[live], total, xi.m, freq[live])
    labels = np.where(live, "normal", "unscored").astype(object)
    meta = {"iterations": xi.iterations, "rmse": xi.rmse, "converged": xi.converged,
            "tolerance": tolerance if tolerance is not None else default_tolerance(g)}
    return ScoreTable(g, xi, xi.src, xi.dst, freq, vals, scores, labels, None, meta)


def compute_hypa(corpus: PathCorpus, k: int, tolerance: float | None = None, *,
                 alpha: float | None = None, max_iterations: int = 5000,
                 graph: FirstOrderGraph | None = None) -> ScoreTable:
    """HYPA scores of all possible length-k paths of a corpus."""
    g = build_korder(corpus, k, graph)
    if g.m == 0:
        raise ValueError(f"corpus has no subpaths of length {k}")
    table = score_graph(g, tolerance, max_iterations)
    if alpha is not None:
        table = classify(table, alpha)
    return table


def classify(scores: ScoreTable, alpha: float) -> ScoreTable:
    """Label rows under (hypa < alpha), over (hypa > 1 - alpha) or normal.

    Under wins when both apply (alpha > 0.5). Unscored rows keep their label.
    """
    if not (0 < alpha <= 1):
        raise ValueError("alpha must lie in (0, 1]")
    h = scores.hypa
    labels = scores.labels.copy()
    live = labels != "unscored"
    with np.errstate(invalid="ignore"):
        new = np.where(h < alpha, "under", np.where(h > 1 - alpha, "over", "normal"))
    labels[live] = new[live]
    return dataclasses.replace(scores, labels=labels, alpha=alpha)


def sample_ensemble(xi: XiMatrix, m: int | None = None, n_samples: int = 1000, seed=None) -> np.ndarray:
    """Monte Carlo draws of edge weights: ``m`` multi-edges without replacement.

    Returns an ``(n_samples, n_possible_edges)`` integer array. Only defined
    for integer capacities.
    """
    m = xi.m if m is None else m
    counts = np.rint(xi.values)
    if not np.allclose(counts, xi.values, rtol=0, atol=1e-9):
        raise ValueError("Monte Carlo sampling requires integer capacities")
    rng = np.random.default_rng(seed)
    return rng.multivariate_hypergeometric(counts.astype(np.int64), m, size=n_samples, method="marginals")


def empirical_cdf(samples: np.ndarray, f: np.ndarray) -> np.ndarray:
    """Fraction of samples ``<= f`` column by column."""
    return (samples <= np.asarray(f)[None, :]).mean(axis=0)
