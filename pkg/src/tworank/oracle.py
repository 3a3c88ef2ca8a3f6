"""Ground truth: power-method PageRank, pairwise correct rate and top-k precision."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .comparator import compare_many
from .google import RankContext

__all__ = ["PageRankVector", "RateReport", "power_method", "pairwise_correct_rate",
           "topk_precision", "truth_topk_set", "oracle_comparator", "sample_pairs"]


@dataclass
class PageRankVector:
    r: np.ndarray
    iterations: int
    residual: float
    converged: bool
    history: list = field(default_factory=list, repr=False)


def power_method(ctx: RankContext, tol: float = 1e-10, max_iter: int = 100_000,
                 keep_history: bool = False) -> PageRankVector:
    """Iterate ``r <- G r`` from the uniform vector until ``||G r - r||_1 < tol``.

    Uses only the implicit product; ``residual`` is that of the returned ``r``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    n = ctx.n
    r = np.full(n, 1.0 / n)
    hist = []
    gr = ctx.matvec(r)
    res = float(np.abs(gr - r).sum())
    it = 0
    while res >= tol and it < max_iter:
        r = gr / gr.sum()
        gr = ctx.matvec(r)
        res = float(np.abs(gr - r).sum())
        it += 1
        if keep_history:
            hist.append(res)
    return PageRankVector(r, it, res, res < tol, hist)


def sample_pairs(n, count, rng):
    """``count`` uniform ordered pairs with ``i != j``."""
    rng = np.random.default_rng(rng)
    i = rng.integers(0, n, size=count)
    j = (i + rng.integers(1, n, size=count)) % n
    return np.column_stack([i, j])


@dataclass
class RateReport:
    rate: float
    pairs_evaluated: int
    pairs_skipped: int
    ties: int
    exceptional: int
    mean_samples: float

    def to_record(self, **meta):
        rec = dict(meta)
        rec.update(rate=self.rate, pairs_evaluated=self.pairs_evaluated,
                   pairs_skipped=self.pairs_skipped, ties=self.ties)
        return rec


def oracle_comparator(r) -> Callable:
    """Perfect batch comparator: sign(r_i - r_j) per pair row."""
    r = np.asarray(r)

    def cmp(pairs):
        pairs = np.asarray(pairs).reshape(-1, 2)
        return np.sign(r[pairs[:, 0]] - r[pairs[:, 1]]).astype(np.int8)

    return cmp


def pairwise_correct_rate(ctx: RankContext, truth: PageRankVector, pairs: int, rng=0,
                          comparator: Optional[Callable] = None, min_gap: float = 1e-12) -> RateReport:
    """Fraction of sampled pairs whose verdict matches ``sign(r_i - r_j)``.

    Pairs with ``|r_i - r_j| < min_gap`` carry no order and are skipped. A
    tie verdict on an ordered pair counts as wrong.
    """
    rng = np.random.default_rng(rng)
    pr = sample_pairs(ctx.n, pairs, rng)
    r = truth.r
    gap = r[pr[:, 0]] - r[pr[:, 1]]
    keep = np.abs(gap) >= min_gap
    pr, gap = pr[keep], gap[keep]
    ties = exc = 0
    mean_samples = 0.0
    if comparator is None:
        out = compare_many(ctx, pr, seed=int(rng.integers(2**63)))
        signs = out.signs
        ties = int((out.codes == 0).sum())
        exc = int((np.abs(out.codes) == 2).sum())
        mean_samples = float(out.samples.mean()) if len(out) else 0.0
    else:
        signs = np.asarray(comparator(pr))
        ties = int((signs == 0).sum())
    correct = int((signs == np.sign(gap)).sum())
    rate = correct / len(pr) if len(pr) else float("nan")
    return RateReport(rate, int(len(pr)), int((~keep).sum()), ties, exc, mean_samples)


def truth_topk_set(r, k):
    """Top-``k`` nodes of ``r``, widened to every node tied with the ``k``-th score."""
    r = np.asarray(r)
    kth = np.partition(r, len(r) - k)[len(r) - k]
    return set(np.flatnonzero(r >= kth).tolist())


def topk_precision(computed, truth_r, k) -> float:
    """``|computed & truth| / k`` with boundary ties counted in the caller's favour."""
    computed = set(int(x) for x in computed)
    if len(computed) != k:
        raise ValueError(f"expected {k} computed nodes, got {len(computed)}")
    hit = len(computed & truth_topk_set(truth_r, k))
    return min(hit, k) / k
