"""
Top-k extraction by repeated subgroup round robins.

Each round shuffles the surviving nodes into subgroups of ``ceil(m1 k)``,
scores every subgroup by all-pairs comparison (SRA: subgroup ranking) and
keeps the best ``ceil(m2 k)`` of each. Once at most ``ceil(m1 k)`` nodes
remain, one last SRA orders them and the first ``k`` are returned.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .comparator import compare_many

__all__ = ["TopKParams", "TopKResult", "sra_rank", "extract_topk", "context_comparator"]


@dataclass(frozen=True)
class TopKParams:
    k: int
    m2: float = 1.15
    m1: Optional[float] = None
    seed: int = 0
    max_rounds: int = 1000

    def __post_init__(self):
        if self.m1 is None:
            object.__setattr__(self, "m1", 2.0 * self.m2)
        if self.k < 1:
            raise ValueError("k must be positive")
        if not 1.0 <= self.m2 < self.m1:
            raise ValueError(f"need 1 <= m2 < m1 (got m2={self.m2}, m1={self.m1})")
        if math.ceil(self.m1 * self.k) < 2:
            raise ValueError("subgroup size ceil(m1 k) must be at least 2")

    @property
    def group_size(self):
        return math.ceil(self.m1 * self.k)

    @property
    def keep(self):
        return math.ceil(self.m2 * self.k)


@dataclass
class TopKResult:
    k: int
    ranked: list
    scores: list
    tie_chunks: list
    comparisons_used: int
    rounds: int
    degenerate: bool = False
    params: dict = field(default_factory=dict)

    def to_record(self, **meta):
        rec = dict(meta)
        rec.update(k=self.k, ranked=self.ranked, scores=self.scores, tie_chunks=self.tie_chunks,
                   comparisons_used=self.comparisons_used, rounds=self.rounds,
                   degenerate=self.degenerate)
        return rec


def context_comparator(ctx, rng) -> Callable:
    """Batch comparator over a rank context; each call draws a fresh kernel seed."""

    def cmp(pairs):
        return compare_many(ctx, pairs, seed=int(rng.integers(2**63))).signs

    return cmp


def _all_pairs(size):
    a, b = np.triu_indices(size, 1)
    return a, b


def _score_groups(groups, cmp):
    # one batched comparator call for every pair of every group
    idx_a, idx_b, offsets = [], [], [0]
    for g in groups:
        a, b = _all_pairs(len(g))
        idx_a.append(g[a])
        idx_b.append(g[b])
        offsets.append(offsets[-1] + len(a))
    if offsets[-1] == 0:
        return [np.zeros(len(g)) for g in groups], 0
    pa, pb = np.concatenate(idx_a), np.concatenate(idx_b)
    signs = np.asarray(cmp(np.column_stack([pa, pb])))
    gain_a = np.where(signs > 0, 1.0, np.where(signs == 0, 0.5, 0.0))
    gain_b = 1.0 - gain_a
    scores = []
    for t, g in enumerate(groups):
        s = np.zeros(len(g))
        lo, hi = offsets[t], offsets[t + 1]
        a, b = _all_pairs(len(g))
        np.add.at(s, a, gain_a[lo:hi])
        np.add.at(s, b, gain_b[lo:hi])
        scores.append(s)
    return scores, offsets[-1]


def _order(nodes, scores):
    # score descending, node id ascending on equal scores
    o = np.lexsort((nodes, -scores))
    return nodes[o], scores[o]


def sra_rank(cmp, nodes, rng=None):
    """Round-robin score of ``nodes``; returns ``(ordered nodes, scores, comparisons)``.

    ``cmp`` maps an ``(m, 2)`` pair array to signs (+1: first wins, -1:
    second wins, 0: tie); ties award half a point to each side.
    """
    nodes = np.asarray(nodes, dtype=np.int64)
    if len(nodes) < 2:
        raise ValueError("SRA needs at least two nodes")
    (scores,), used = _score_groups([nodes], cmp)
    ordered, sc = _order(nodes, scores)
    return ordered, sc, used


def _tie_chunks(nodes, scores):
    chunks = []
    start = 0
    for t in range(1, len(nodes) + 1):
        if t == len(nodes) or scores[t] != scores[start]:
            if t - start > 1:
                chunks.append([int(x) for x in nodes[start:t]])
            start = t
    return chunks


def _survivors(ordered, scores, keep):
    if keep >= len(ordered):
        return ordered
    cut = keep
    # a tie chunk straddling the cutoff is kept whole
    while cut < len(ordered) and scores[cut] == scores[keep - 1]:
        cut += 1
    return ordered[:cut]


def extract_topk(ctx, params: TopKParams, rng=None, comparator: Optional[Callable] = None) -> TopKResult:
    """Approximate top-``k`` PageRank nodes with ``O(k n)`` comparisons.

    ``comparator`` overrides the context-based one (same signature as in
    :func:`sra_rank`). With ``k >= n`` all nodes are ranked by a single SRA
    and the result is flagged ``degenerate``.
    """
    rng = np.random.default_rng(params.seed if rng is None else rng)
    n = ctx.n
    cmp = comparator if comparator is not None else context_comparator(ctx, rng)
    meta = {"k": params.k, "m1": params.m1, "m2": params.m2, "seed": params.seed}
    if params.k >= n:
        ordered, sc, used = sra_rank(cmp, np.arange(n))
        return TopKResult(params.k, ordered.tolist(), sc.tolist(), _tie_chunks(ordered, sc), used, 0, True, meta)
    size, keep = params.group_size, params.keep
    alive = np.arange(n)
    used = 0
    rounds = 0
    while len(alive) > size and rounds < params.max_rounds:
        perm = rng.permutation(alive)
        groups = [perm[a:a + size] for a in range(0, len(perm), size)]
        if len(groups) > 1 and len(groups[-1]) < keep:
            groups[-2] = np.concatenate([groups[-2], groups[-1]])
            groups.pop()
        scores, c = _score_groups(groups, cmp)
        used += c
        nxt = []
        for g, s in zip(groups, scores):
            o, so = _order(g, s)
            nxt.append(_survivors(o, so, keep))
        nxt = np.concatenate(nxt)
        rounds += 1
        if len(nxt) >= len(alive):
            # massive ties stop the shrinking; finish with what is left
            alive = nxt
            break
        alive = nxt
    ordered, sc, c = sra_rank(cmp, alive)
    used += c
    top = ordered[:params.k]
    chunks = [ch for ch in _tie_chunks(ordered, sc) if set(ch) & set(top.tolist())]
    return TopKResult(params.k, top.tolist(), sc[:params.k].tolist(), chunks, used, rounds, False, meta)
