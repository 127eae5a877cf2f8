"""ROC/AUC protocol, motif statistics and geographic trip statistics."""
from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence, TextIO

import numpy as np
from scipy.stats import norm, rankdata

from .corpus import PathCorpus
from .debruijn import build_korder
from .ensemble import ScoreTable, classify, score_graph
from .fbad import fbad_labels
from .synth import generate_corpus, synth_model

EARTH_RADIUS_KM = 6371.0
MOTIFS = ("ABC", "ABA", "AAB", "ABB", "AAA")


@dataclass
class EvalResult:
    fpr: np.ndarray
    tpr: np.ndarray
    auc: float
    meta: dict = field(default_factory=dict)

    @property
    def roc(self) -> list[tuple[float, float]]:
        return list(zip(self.fpr.tolist(), self.tpr.tolist()))


def anomaly_strength(score):
    """Two-sided anomaly strength ``2 * |score - 0.5|``."""
    return 2.0 * np.abs(np.asarray(score, dtype=float) - 0.5)


def roc_auc(strengths, truth, **meta) -> EvalResult:
    """ROC curve by sweeping a threshold over the unique strengths, AUC by trapezoid.

    The trapezoid sum is accumulated in integer counts and divided once, so the
    AUC is the correctly rounded value of the tie-corrected pair count.
    """
    s = np.asarray(strengths, dtype=float)
    y = np.asarray(truth, dtype=bool)
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC undefined: truth labels contain a single class")
    order = np.argsort(-s, kind="mergesort")
    s, y = s[order], y[order]
    # last index of each block of tied strengths
    cut = np.flatnonzero(np.diff(s) != 0)
    cut = np.append(cut, s.size - 1)
    tp = np.cumsum(y)[cut]
    fp = (cut + 1) - tp
    tpr = np.concatenate(([0.0], tp / n_pos))
    fpr = np.concatenate(([0.0], fp / n_neg))
    tp0 = np.concatenate(([0], tp))
    fp0 = np.concatenate(([0], fp))
    twice_area = int(np.sum(np.diff(fp0) * (tp0[1:] + tp0[:-1])))
    auc = twice_area / (2 * n_pos * n_neg)
    return EvalResult(fpr, tpr, auc, meta)


def _windows(path: Sequence[int], size: int):
    return (tuple(path[i:i + size]) for i in range(len(path) - size + 1))


def cross_order_truth(anomalous: Iterable[Sequence[int]], k: int, paths: Sequence[Sequence[int]]) -> np.ndarray:
    """Mark each length-k path that contains, or is contained in, an anomalous path."""
    anomalous = [tuple(p) for p in anomalous]
    if not anomalous:
        return np.zeros(len(paths), dtype=bool)
    l = len(anomalous[0]) - 1
    if k <= l:
        pos = {w for p in anomalous for w in _windows(p, k + 1)}
        return np.array([tuple(p) in pos for p in paths], dtype=bool)
    anom = set(anomalous)
    return np.array([any(w in anom for w in _windows(p, l + 1)) for p in paths], dtype=bool)


def _safe_auc(strength, truth) -> float:
    try:
        return roc_auc(strength, truth).auc
    except ValueError:
        return float("nan")


def evaluate_corpus(corpus: PathCorpus, anomalous, k: int, tolerance: float | None = None,
                    observed_only: bool = True) -> dict[str, float]:
    """AUC of HYPA and FBAD strengths against the cross-order ground truth at order ``k``.

    Both methods are evaluated on the observed k-th order edges unless
    ``observed_only`` is False, in which case HYPA also ranks unobserved
    possible edges.
    """
    g = build_korder(corpus, k)
    if g.m == 0:
        return {"hypa": float("nan"), "fbad": float("nan")}
    table = score_graph(g, tolerance)
    keep = table.scored & (table.freq > 0 if observed_only else True)
    idx = np.flatnonzero(keep)
    truth_h = cross_order_truth(anomalous, k, [table.path(i) for i in idx])
    auc_h = _safe_auc(anomaly_strength(table.hypa[idx]), truth_h)

    _, _, z, _ = fbad_labels(g.freq, 1.0)
    truth_f = cross_order_truth(anomalous, k, [g.edge_path(int(s), int(d)) for s, d in zip(g.src, g.dst)])
    auc_f = _safe_auc(np.abs(z), truth_f)
    return {"hypa": auc_h, "fbad": auc_f}


def _experiment_cell(args):
    l, rep, ss, n, p, f_anom, k_range, walks, walk_length, tolerance = args
    model_seed, corpus_seed = ss.spawn(2)
    model = synth_model(n, p, f_anom, l, np.random.default_rng(model_seed))
    corpus = generate_corpus(model, walks, walk_length, corpus_seed)
    rows = []
    for k in k_range:
        res = evaluate_corpus(corpus, model.anomalous, k, tolerance)
        for method in ("hypa", "fbad"):
            rows.append((l, k, rep, method, res[method]))
    return rows


def run_synthetic_experiment(n: int = 50, p: float = 0.05, f_anom: float = 0.2,
                             l_range: Iterable[int] = (2, 3, 4, 5), k_range: Iterable[int] = (1, 2, 3, 4, 5),
                             reps: int = 10, walks: int = 5000, walk_length: int = 10, seed=0,
                             tolerance: float | None = None, progress=None, workers: int = 1):
    """Synthetic detection experiment over anomaly lengths ``l`` and detection orders ``k``.

    Returns ``(rows, summary)``: per-run rows ``(l, k, rep, method, auc)`` and
    summary rows ``(l, k, method, mean_auc, stderr)``. Each ``(l, rep)`` cell has
    its own seed, so results do not depend on ``workers``.
    """
    l_range, k_range = list(l_range), list(k_range)
    seeds = np.random.SeedSequence(seed).spawn(len(l_range) * reps)
    jobs = [(l, rep, seeds[li * reps + rep], n, p, f_anom, k_range, walks, walk_length, tolerance)
            for li, l in enumerate(l_range) for rep in range(reps)]
    rows = []
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for job, cell in zip(jobs, pool.map(_experiment_cell, jobs)):
                rows.extend(cell)
                if progress:
                    progress(job[0], job[1])
    else:
        for job in jobs:
            rows.extend(_experiment_cell(job))
            if progress:
                progress(job[0], job[1])
    return rows, summarize(rows)


def summarize(rows):
    groups: dict[tuple[int, int, str], list[float]] = {}
    for l, k, _, method, auc in rows:
        groups.setdefault((l, k, method), []).append(auc)
    summary = []
    for (l, k, method), vals in sorted(groups.items()):
        v = np.asarray([x for x in vals if not math.isnan(x)])
        mean = float(v.mean()) if v.size else float("nan")
        se = float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else float("nan")
        summary.append((l, k, method, mean, se))
    return summary


def write_experiment_csv(rows, fh: TextIO):
    fh.write("l,k,rep,method,auc\n")
    for l, k, rep, method, auc in rows:
        fh.write(f"{l},{k},{rep},{method},{auc:.12g}\n")


def write_summary_csv(summary, fh: TextIO):
    fh.write("l,k,method,mean_auc,stderr\n")
    for l, k, method, mean, se in summary:
        fh.write(f"{l},{k},{method},{mean:.12g},{se:.12g}\n")


def motif_class(path: Sequence) -> str:
    """Canonical repetition pattern of a 3-node path, e.g. ``(x, y, x) -> "ABA"``."""
    if len(path) != 3:
        raise ValueError("motifs are defined for paths of exactly 3 nodes")
    seen: dict = {}
    return "".join("ABC"[seen.setdefault(v, len(seen))] for v in path)


def motif_distribution(scores: ScoreTable, alpha: float) -> dict[str, dict[str, int]]:
    """Over/under counts per motif for a k=2 score table."""
    hist = {m: {"over": 0, "under": 0} for m in MOTIFS}
    if len(scores) == 0:
        return hist
    if scores.k != 2:
        raise ValueError("motif distribution needs a k=2 score table")
    labelled = classify(scores, alpha)
    for i, lab in enumerate(labelled.labels):
        if lab in ("over", "under"):
            hist[motif_class(labelled.path(i))][lab] += 1
    return hist


def balance(d_ab: float, d_bc: float, with_flag: bool = False):
    """``(d_ab - d_bc) / (d_ab + d_bc)``.

    Both legs empty gives 0; ``with_flag`` also returns whether that happened.
    """
    if d_ab < 0 or d_bc < 0:
        raise ValueError("distances must be non-negative")
    s = d_ab + d_bc
    degenerate = s == 0
    value = 0.0 if degenerate else (d_ab - d_bc) / s
    return (value, degenerate) if with_flag else value


def efficiency(d_ac: float, d_ab: float, d_bc: float, with_flag: bool = False):
    """Straight-line over travelled distance, clamped to [0, 1].

    ``with_flag`` also returns whether the input broke the triangle inequality
    (or had two empty legs) and was clamped.
    """
    if min(d_ac, d_ab, d_bc) < 0:
        raise ValueError("distances must be non-negative")
    s = d_ab + d_bc
    if s == 0:
        value, flagged = 0.0, d_ac > 0
    else:
        raw = d_ac / s
        value, flagged = min(raw, 1.0), raw > 1.0
    return (value, flagged) if with_flag else value


def haversine(lat1: float, lon1: float, lat2: float, lon2: float) -> float:
    """Great-circle distance in km."""
    for lat in (lat1, lat2):
        if not -90 <= lat <= 90:
            raise ValueError(f"latitude out of range: {lat}")
    for lon in (lon1, lon2):
        if not -180 <= lon <= 180:
            raise ValueError(f"longitude out of range: {lon}")
    p1, p2 = math.radians(lat1), math.radians(lat2)
    dp, dl = p2 - p1, math.radians(lon2 - lon1)
    h = math.sin(dp / 2) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dl / 2) ** 2
    return 2 * EARTH_RADIUS_KM * math.asin(min(1.0, math.sqrt(h)))


def mann_whitney_u(a: Sequence[float], b: Sequence[float]) -> float:
    """U statistic of ``a``: pairs with a > b plus half the ties."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    ranks = rankdata(np.concatenate([a, b]))
    return float(ranks[:a.size].sum() - a.size * (a.size + 1) / 2)


def _exact_pvalue_dp(a, b) -> float:
    """Exact one-sided p-value via the rank-sum distribution (midranks doubled to integers)."""
    pooled = np.concatenate([a, b])
    na = len(a)
    r2 = np.rint(2 * rankdata(pooled)).astype(int)
    obs = int(r2[:na].sum())
    # counts[j][s]: number of j-subsets with doubled rank sum s
    smax = int(r2.sum())
    counts = np.zeros((na + 1, smax + 1), dtype=object)
    counts[0][0] = 1
    for r in r2:
        for j in range(na, 0, -1):
            counts[j][r:] = counts[j][r:] + counts[j - 1][:smax + 1 - r]
    dist = counts[na]
    total = sum(dist)
    return float(sum(dist[obs:]) / total)


def mann_whitney_one_sided(a: Sequence[float], b: Sequence[float]) -> float:
    """p-value for "a is stochastically greater than b".

    Exact (tie-aware permutation distribution) when ``len(a) * len(b) <= 400``,
    otherwise the tie-corrected normal approximation with continuity correction.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size == 0 or b.size == 0:
        raise ValueError("both samples must be non-empty")
    na, nb = a.size, b.size
    if np.ptp(np.concatenate([a, b])) == 0:
        # every value tied: no evidence in either direction
        return 0.5
    if na * nb <= 400:
        return _exact_pvalue_dp(a, b)
    u = mann_whitney_u(a, b)
    n = na + nb
    _, counts = np.unique(np.concatenate([a, b]), return_counts=True)
    tie = (counts ** 3 - counts).sum() / (n * (n - 1))
    sigma = math.sqrt(na * nb / 12.0 * ((n + 1) - tie))
    if sigma == 0:
        return 0.5
    z = (u - na * nb / 2.0 - 0.5) / sigma
    return float(norm.sf(z))


def read_coordinates(path: str | os.PathLike) -> dict[str, tuple[float, float]]:
    """Read a ``node,lat,lon`` CSV."""
    out = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            out[row["node"]] = (float(row["lat"]), float(row["lon"]))
    return out


@dataclass
class GeoStats:
    k: int
    under_km: list[float]
    over_km: list[float]
    p_value: float
    excluded: int

    def rows(self):
        med = lambda v: float(np.median(v)) if v else float("nan")
        return [("under", med(self.under_km), self.p_value), ("over", med(self.over_km), self.p_value)]

    def write_csv(self, fh: TextIO):
        fh.write("class,median_km,p_value\n")
        for cls, med, p in self.rows():
            fh.write(f"{cls},{med:.12g},{p:.12g}\n")


def geo_statistics(scores: ScoreTable, coords: dict[str, tuple[float, float]], alpha: float) -> GeoStats:
    """Origin-destination distances of under- and over-represented paths.

    The p-value tests whether over-represented trips are longer.
    """
    labelled = classify(scores, alpha)
    lab = scores.graph.labels
    under, over = [], []
    excluded = 0
    for i, cls in enumerate(labelled.labels):
        if cls not in ("over", "under"):
            continue
        path = labelled.path(i)
        a, c = lab[path[0]], lab[path[-1]]
        if a not in coords or c not in coords:
            excluded += 1
            continue
        d = haversine(*coords[a], *coords[c])
        (over if cls == "over" else under).append(d)
    p = mann_whitney_one_sided(over, under) if over and under else float("nan")
    return GeoStats(scores.k, under, over, p, excluded)
