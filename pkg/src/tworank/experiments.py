"""Reusable experiment drivers for angle statistics, correct rates and top-k runs."""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import graph as gr
from .google import GoogleParams, build_rank_context
from .oracle import pairwise_correct_rate, power_method, topk_precision
from .spectral import pi_estimate, spectrum, theta_report
from .topk import TopKParams, extract_topk

__all__ = ["MODELS", "make_graph", "theta_stats", "ThetaStats", "rate_vs_theta", "topk_run"]

MODELS = ("er", "pa", "sw", "star", "cycle")


def make_graph(model, n, param=None, seed=None, directed=False):
    """Build a synthetic graph.

    ``param`` is the density for ``er``, the out-degree for ``pa`` and the
    shortcut probability for ``sw``; ``star`` and ``cycle`` ignore it.
    """
    if model == "er":
        return gr.gen_erdos_renyi(n, 0.1 if param is None else float(param), seed=seed, directed=directed)
    if model == "pa":
        return gr.gen_preferential_attachment(n, 4 if param is None else int(param), seed=seed)
    if model == "sw":
        return gr.gen_small_world(n, 0.1 if param is None else float(param), seed=seed)
    if model == "star":
        return gr.gen_star(n)
    if model == "cycle":
        return gr.gen_cycle(n)
    raise ValueError(f"unknown model {model!r}; expected one of {', '.join(MODELS)}")


@dataclass
class ThetaStats:
    m: int
    thetas: np.ndarray

    @property
    def mean(self):
        return float(np.mean(self.thetas))

    @property
    def var(self):
        return float(np.var(self.thetas, ddof=1)) if len(self.thetas) > 1 else 0.0

    @property
    def pi(self):
        return pi_estimate(self.mean)


def seed_spectra(model, n, param, seeds, alpha=0.85):
    """Eigenvalue-only spectra of ``G - I`` per seed (the expensive step)."""
    out = []
    for s in seeds:
        ctx = build_rank_context(make_graph(model, n, param, s), GoogleParams(alpha))
        out.append(spectrum(ctx.dense_A()))
    return out


def theta_stats(spectra, ms=(2, 3, 4)):
    """Angle statistics per order over a list of spectra."""
    return {m: ThetaStats(m, np.array([theta_report(d, m).theta_deg for d in spectra])) for m in ms}


def rate_vs_theta(model, n, param, seeds, pairs=100_000, alpha=0.85, m=2):
    """Measured pairwise correct rate next to ``1 - E(theta)/180`` on the same graphs."""
    rows = []
    for s in seeds:
        t0 = time.perf_counter()
        ctx = build_rank_context(make_graph(model, n, param, s), GoogleParams(alpha))
        truth = power_method(ctx)
        rep = pairwise_correct_rate(ctx, truth, pairs, rng=s)
        th = theta_report(spectrum(ctx.dense_A()), m).theta_deg
        rows.append({"model": model, "n": n, "param": param, "seed": s, "alpha": alpha,
                     "rate": rep.rate, "pairs_evaluated": rep.pairs_evaluated, "ties": rep.ties,
                     "theta_deg": th, "pi_estimate": pi_estimate(th),
                     "seconds": time.perf_counter() - t0})
    return rows


def topk_run(model, n, param, k, seed=0, m2=1.15, alpha=0.85):
    t0 = time.perf_counter()
    ctx = build_rank_context(make_graph(model, n, param, seed), GoogleParams(alpha))
    t1 = time.perf_counter()
    res = extract_topk(ctx, TopKParams(k, m2=m2, seed=seed))
    t2 = time.perf_counter()
    truth = power_method(ctx)
    return {"model": model, "n": n, "param": param, "k": k, "seed": seed, "alpha": alpha, "m2": m2,
            "precision": topk_precision(res.ranked, truth.r, k),
            "comparisons_used": res.comparisons_used, "rounds": res.rounds,
            "build_seconds": t1 - t0, "topk_seconds": t2 - t1}
