# %% [markdown]
# Top-k extraction with O(k n) comparisons.

# %%
import time

import numpy as np

from tworank import graph as gr
from tworank.google import GoogleParams, build_rank_context
from tworank.oracle import oracle_comparator, power_method, topk_precision
from tworank.topk import TopKParams, extract_topk

ctx = build_rank_context(gr.gen_preferential_attachment(10_000, 7, seed=0), GoogleParams(0.99))
truth = power_method(ctx)

# %%
for k in (10, 20, 50):
    t0 = time.perf_counter()
    res = extract_topk(ctx, TopKParams(k, seed=k))
    print(f"k={k}: precision {topk_precision(res.ranked, truth.r, k):.2f}, "
          f"{res.comparisons_used} comparisons ({res.comparisons_used / (k * ctx.n):.2f} k n), "
          f"{res.rounds} rounds, {time.perf_counter() - t0:.1f}s")

# %% with a perfect comparator the procedure is exact
res = extract_topk(ctx, TopKParams(20, m2=1.0), comparator=oracle_comparator(truth.r))
print(sorted(res.ranked) == sorted(np.argsort(-truth.r)[:20].tolist()))
