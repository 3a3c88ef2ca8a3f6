import math

import numpy as np
import pytest

from tworank import graph as gr
from tworank.google import build_rank_context
from tworank.oracle import oracle_comparator, power_method, topk_precision, truth_topk_set
from tworank.topk import TopKParams, extract_topk, sra_rank


class Counting:
    def __init__(self, cmp):
        self.cmp, self.calls, self.pairs = cmp, 0, 0

    def __call__(self, pairs):
        self.calls += 1
        self.pairs += len(pairs)
        return self.cmp(pairs)


def test_sra_scores_with_perfect_comparator():
    r = np.random.default_rng(0).permutation(8).astype(float)
    ordered, scores, used = sra_rank(oracle_comparator(r), np.arange(8))
    assert used == 28
    assert list(r[ordered]) == sorted(r, reverse=True)
    # the k-th best wins against everyone below it
    assert list(scores) == [7 - k for k in range(8)]


def test_sra_two_nodes():
    cmp = Counting(oracle_comparator(np.array([0.2, 0.9])))
    ordered, scores, used = sra_rank(cmp, [0, 1])
    assert list(ordered) == [1, 0] and used == 1 and cmp.pairs == 1


def test_sra_ties_split_points():
    r = np.array([1.0, 1.0, 0.5])
    ordered, scores, _ = sra_rank(oracle_comparator(r), [0, 1, 2])
    assert list(ordered) == [0, 1, 2]
    assert list(scores) == [1.5, 1.5, 0.0]


def test_identical_in_structure_forms_tie_chunk():
    # nodes 2 and 3 share their in-neighbours 0 and 1
    g = gr.from_arcs(4, np.array([0, 0, 1, 1, 2, 3]), np.array([2, 3, 2, 3, 0, 1]))
    ctx = build_rank_context(g)
    res = extract_topk(ctx, TopKParams(3))
    assert not res.degenerate
    assert any({2, 3} <= set(ch) for ch in res.tie_chunks)


def test_params():
    p = TopKParams(10)
    assert p.m1 == pytest.approx(2.3)
    assert p.group_size == 23 and p.keep == math.ceil(11.5)
    with pytest.raises(ValueError):
        TopKParams(10, m2=2.0, m1=1.5)
    with pytest.raises(ValueError):
        TopKParams(0)


def test_degenerate_k_at_least_n():
    ctx = build_rank_context(gr.gen_star(6))
    res = extract_topk(ctx, TopKParams(6))
    assert res.degenerate
    assert len(res.ranked) == 6 and res.ranked[0] == 0
    assert res.comparisons_used == 15


@pytest.mark.parametrize("seed", range(5))
def test_exact_with_perfect_comparator(seed):
    g = gr.gen_erdos_renyi(1500, 0.004, seed=seed, directed=True)
    ctx = build_rank_context(g)
    r = power_method(ctx).r
    for m2 in (1.0, 1.15):
        res = extract_topk(ctx, TopKParams(10, m2=m2, seed=seed), comparator=oracle_comparator(r))
        assert set(res.ranked) == truth_topk_set(r, 10)
        assert list(res.ranked) == list(np.argsort(-r, kind="stable")[:10])


def test_comparison_count_near_formula():
    n, k, m2 = 10_000, 20, 1.15
    r = np.random.default_rng(3).random(n)
    ctx = build_rank_context(gr.gen_cycle(n))
    cmp = Counting(oracle_comparator(r))
    res = extract_topk(ctx, TopKParams(k, m2=m2, seed=1), comparator=cmp)
    approx = k * n * (math.sqrt(m2 ** 2 - m2 / k) + m2 - 1 / (2 * k))
    assert res.comparisons_used == cmp.pairs
    assert approx / 1.5 <= res.comparisons_used <= approx * 1.5
    assert res.comparisons_used <= 3 * m2 * k * n
    # one comparator call per round plus the final ranking
    assert cmp.calls == res.rounds + 1


def test_context_comparator_on_pa():
    ctx = build_rank_context(gr.gen_preferential_attachment(3000, 4, seed=2))
    truth = power_method(ctx)
    res = extract_topk(ctx, TopKParams(20, seed=0))
    assert len(res.ranked) == 20 and len(set(res.ranked)) == 20
    assert topk_precision(res.ranked, truth.r, 20) >= 0.9
    again = extract_topk(ctx, TopKParams(20, seed=0))
    assert again.ranked == res.ranked


def test_result_record():
    ctx = build_rank_context(gr.gen_erdos_renyi(200, 0.05, seed=1))
    rec = extract_topk(ctx, TopKParams(5)).to_record(model="er")
    assert rec["model"] == "er" and rec["k"] == 5 and len(rec["ranked"]) == 5
