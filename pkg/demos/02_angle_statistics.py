# %% [markdown]
# Why the sign test usually works: the angle between the two coefficient
# vectors built from the spectrum of G - I, and the rate it predicts.

# %%
import math

import numpy as np

from tworank import spectral as sp
from tworank.experiments import make_graph
from tworank.google import build_rank_context
from tworank.oracle import power_method, pairwise_correct_rate

# %% equally spaced real spectrum: the angle tends to arccos(sqrt(15)/4)
for n in (10, 100, 1000, 10000):
    dec = sp.SpectralDecomposition.from_eigenvalues(-np.arange(n) / n)
    print(n, round(sp.theta_report(dec, 2).theta_deg, 4))
print("limit", round(math.degrees(math.acos(math.sqrt(15) / 4)), 4))

# %% random ER graphs: most eigenvalues bunch together, so theta is small
ctx = build_rank_context(make_graph("er", 600, 0.1, seed=0))
dec = sp.spectrum(ctx.dense_A())
print("complex pairs:", dec.s)
for m in (2, 3, 4):
    rep = sp.theta_report(dec, m)
    print(f"m={m}: theta {rep.theta_deg:.2f} deg, predicted rate {rep.pi_estimate:.4f}")

# %% measured rate on the same graph
rate = pairwise_correct_rate(ctx, power_method(ctx), 50_000, rng=0).rate
print(f"measured rate {rate:.4f}")

# %% full decomposition on a small graph: the curve F(t) starts at w and ends on PageRank
small = build_rank_context(make_graph("er", 40, 0.2, seed=3, directed=True))
dec = sp.decompose(small.dense_A())
w = np.random.default_rng(0).random(40)
print(sp.derivative_identities(dec, w))
far = sp.curve_eval(dec, w, 60.0)
r = power_method(small).r
print("angle to PageRank at t=60:", math.acos(min(1, far @ r / np.linalg.norm(far) / np.linalg.norm(r))))
