"""Command-line entry point: ``tworank <subcommand> ...`` (also ``python -m tworank``)."""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .comparator import EPSILON, compare
from .experiments import MODELS, make_graph, rate_vs_theta, seed_spectra, theta_stats, topk_run
from .google import (ContextCapacityError, ContextFileError, GoogleParams, build_rank_context,
                     load_context, save_context)
from .graph import EdgeListParseError, EdgeListValidationError, GraphParameterError, ingest_edge_list, write_edge_list
from .oracle import power_method
from .spectral import MAX_DECOMPOSE_N, spectrum, theta_report

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _default_seed():
    raw = os.environ.get("TWORANK_SEED")
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"TWORANK_SEED must be an integer, got {raw!r}")


def _config(args):
    skip = {"func", "handler"}
    return {k: v for k, v in vars(args).items() if k not in skip}


def _emit_json(args, payload):
    rec = {"tool": "tworank", "version": __version__, "config": _config(args)}
    rec.update(payload)
    text = json.dumps(rec, indent=None if args.compact else 2, default=_json_default)
    _write(args, text + "\n")


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _emit_csv(args, rows):
    buf = io.StringIO()
    cfg = json.dumps(_config(args), default=_json_default)
    fields = list(rows[0].keys()) + ["version", "config"] if rows else ["version", "config"]
    w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({**row, "version": __version__, "config": cfg})
    _write(args, buf.getvalue())


def _write(args, text):
    out = getattr(args, "output", None)
    if out and out != "-":
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load(path):
    return load_context(path)


# -- subcommands ----------------------------------------------------------

def cmd_gen(args):
    if args.model not in MODELS:
        raise UsageError(f"unknown model {args.model!r}; expected one of {', '.join(MODELS)}")
    g = make_graph(args.model, args.n, args.param, args.seed, directed=args.directed)
    header = [f"tworank {__version__} gen model={args.model} n={args.n} param={args.param} "
              f"seed={args.seed} directed={args.directed}"]
    if args.edges and args.edges != "-":
        write_edge_list(g, args.edges, header=header)
    else:
        write_edge_list(g, sys.stdout, header=header)
    return EXIT_OK


def cmd_build(args):
    with open(args.edge_list, "rb") as fh:
        raw = fh.read()
    directed = args.directed
    if directed is None:
        # files written by `gen` record their orientation in the header
        directed = b"directed=False" not in raw[:4096]
    g = ingest_edge_list(raw, index_base=args.index_base, weighted=args.weighted, directed=directed)
    ctx = build_rank_context(g, GoogleParams(args.alpha), nnz_budget=args.nnz_budget)
    save_context(ctx, args.ctx)
    back = load_context(args.ctx)
    payload = {"n": ctx.n, "arcs": g.n_arcs, "directed": directed, "alpha": ctx.alpha, "dangling": ctx.n_dangling,
               "ghat2_nnz": int(ctx.ghat2.nnz), "round_trip": back.equals(ctx)}
    if args.verify:
        if ctx.n > 2000:
            raise UsageError("--verify is limited to n <= 2000")
        A = ctx.dense_A()
        B = A @ A
        payload["verify"] = {
            "rowsum_A_err": float(np.abs(A.sum(axis=1) - ctx.rowsum_A).max()),
            "rowsum_B_err": float(np.abs(B.sum(axis=1) - ctx.rowsum_B).max()),
            "colsum_G_err": float(np.abs(ctx.dense_G().sum(axis=0) - 1).max()),
        }
    _emit_json(args, payload)
    return EXIT_OK


def cmd_compare(args):
    ctx = _load(args.ctx)
    for x in (args.i, args.j):
        if not 0 <= x < ctx.n:
            raise UsageError(f"node {x} out of range 0..{ctx.n - 1}")
    out = compare(ctx, args.i, args.j, np.random.default_rng(args.seed), epsilon=args.epsilon)
    _emit_json(args, {"i": args.i, "j": args.j, "seed": args.seed, **out.to_dict()})
    return EXIT_OK


def cmd_topk(args):
    from .topk import TopKParams, extract_topk

    ctx = _load(args.ctx)
    params = TopKParams(args.k, m2=args.m2, m1=args.m1, seed=args.seed)
    res = extract_topk(ctx, params)
    _emit_json(args, {"seed": args.seed, **res.to_record()})
    return EXIT_OK


def cmd_spectral(args):
    ctx = _load(args.ctx)
    if ctx.n > MAX_DECOMPOSE_N:
        raise UsageError(f"spectral analysis is limited to n <= {MAX_DECOMPOSE_N}")
    dec = spectrum(ctx.dense_A())
    reports = [theta_report(dec, m).to_record(model=args.model, n=ctx.n, seed=args.seed) for m in args.m]
    _emit_json(args, {"r": dec.r, "s": dec.s, "reports": reports})
    return EXIT_OK


def cmd_power(args):
    ctx = _load(args.ctx)
    pr = power_method(ctx, tol=args.tol, max_iter=args.max_iter)
    top = np.argsort(-pr.r, kind="stable")[:args.top]
    payload = {"n": ctx.n, "alpha": ctx.alpha, "iterations": pr.iterations, "residual": pr.residual,
               "converged": pr.converged, "top": [{"node": int(t), "r": float(pr.r[t])} for t in top]}
    if args.vector:
        np.save(args.vector, pr.r)
    _emit_json(args, payload)
    return EXIT_OK if pr.converged else EXIT_RUNTIME


def cmd_bench(args):
    seeds = [args.seed + s for s in range(args.seeds)]
    rows = []
    if args.suite in ("angles", "orders"):
        ms = (2,) if args.suite == "angles" else (2, 3, 4)
        stats = theta_stats(seed_spectra(args.model, args.n, args.param, seeds, args.alpha), ms)
        for m, st in stats.items():
            rows.append({"suite": args.suite, "model": args.model, "n": args.n, "param": args.param,
                         "m": m, "seeds": len(seeds), "theta_mean": st.mean, "theta_var": st.var,
                         "pi_estimate": st.pi})
    elif args.suite == "rates":
        per = rate_vs_theta(args.model, args.n, args.param, seeds, args.pairs, args.alpha)
        for row in per:
            rows.append({"suite": "rates", **row})
        mean_th = float(np.mean([r["theta_deg"] for r in per]))
        rows.append({"suite": "rates", "model": args.model, "n": args.n, "param": args.param, "seed": "mean",
                     "alpha": args.alpha, "rate": float(np.mean([r["rate"] for r in per])),
                     "pairs_evaluated": int(sum(r["pairs_evaluated"] for r in per)),
                     "ties": int(sum(r["ties"] for r in per)), "theta_deg": mean_th,
                     "pi_estimate": 1 - mean_th / 180, "seconds": float(sum(r["seconds"] for r in per))})
    elif args.suite == "topk":
        for k in args.k:
            for s in seeds:
                rows.append({"suite": "topk", **topk_run(args.model, args.n, args.param, k, s, args.m2, args.alpha)})
    else:
        raise UsageError(f"unknown suite {args.suite!r}")
    _emit_csv(args, rows)
    return EXIT_OK


# -- parser ---------------------------------------------------------------

def build_parser():
    seed = _default_seed()
    p = argparse.ArgumentParser(prog="tworank", description="Pairwise PageRank comparison toolkit.")
    p.add_argument("--version", action="version", version=f"tworank {__version__}")
    p.add_argument("--threads", type=int, default=None, help="cap on worker threads")
    p.add_argument("--compact", action="store_true", help="single-line JSON")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a synthetic graph as an edge list")
    g.add_argument("model", help=f"one of {', '.join(MODELS)}")
    g.add_argument("n", type=int)
    g.add_argument("param", nargs="?", type=float, default=None)
    g.add_argument("--seed", type=int, default=seed)
    g.add_argument("--directed", action="store_true")
    g.add_argument("-o", "--edges", default="-")
    g.set_defaults(handler=cmd_gen)

    b = sub.add_parser("build", help="precompute a rank context from an edge list")
    b.add_argument("edge_list")
    b.add_argument("ctx")
    b.add_argument("--alpha", type=float, default=0.85)
    b.add_argument("--index-base", type=int, default=0)
    b.add_argument("--weighted", action="store_true", default=None)
    orient = b.add_mutually_exclusive_group()
    orient.add_argument("--directed", dest="directed", action="store_true", default=None)
    orient.add_argument("--undirected", dest="directed", action="store_false")
    b.add_argument("--nnz-budget", type=int, default=200_000_000)
    b.add_argument("--verify", action="store_true", help="dense checks (n <= 2000)")
    b.add_argument("-o", "--output", default="-")
    b.set_defaults(handler=cmd_build)

    c = sub.add_parser("compare", help="compare the PageRank of two nodes")
    c.add_argument("ctx")
    c.add_argument("i", type=int)
    c.add_argument("j", type=int)
    c.add_argument("--seed", type=int, default=seed)
    c.add_argument("--epsilon", type=float, default=EPSILON)
    c.add_argument("-o", "--output", default="-")
    c.set_defaults(handler=cmd_compare)

    t = sub.add_parser("topk", help="extract the top-k nodes")
    t.add_argument("ctx")
    t.add_argument("k", type=int)
    t.add_argument("--m2", type=float, default=1.15)
    t.add_argument("--m1", type=float, default=None)
    t.add_argument("--seed", type=int, default=seed)
    t.add_argument("-o", "--output", default="-")
    t.set_defaults(handler=cmd_topk)

    s = sub.add_parser("spectral", help="angle report from the spectrum of G - I")
    s.add_argument("ctx")
    s.add_argument("--m", type=int, nargs="+", default=[2])
    s.add_argument("--model", default="file")
    s.add_argument("--seed", type=int, default=seed)
    s.add_argument("-o", "--output", default="-")
    s.set_defaults(handler=cmd_spectral)

    pw = sub.add_parser("power", help="power-method PageRank")
    pw.add_argument("ctx")
    pw.add_argument("--tol", type=float, default=1e-10)
    pw.add_argument("--max-iter", type=int, default=100_000)
    pw.add_argument("--top", type=int, default=10)
    pw.add_argument("--vector", default=None, help="save r as .npy")
    pw.add_argument("-o", "--output", default="-")
    pw.set_defaults(handler=cmd_power)

    be = sub.add_parser("bench", help="benchmark suites written as CSV")
    be.add_argument("suite", choices=["angles", "orders", "rates", "topk"])
    be.add_argument("--model", default="er", choices=list(MODELS))
    be.add_argument("--n", type=int, default=1000)
    be.add_argument("--param", type=float, default=None)
    be.add_argument("--seeds", type=int, default=5)
    be.add_argument("--seed", type=int, default=seed)
    be.add_argument("--pairs", type=int, default=100_000)
    be.add_argument("--alpha", type=float, default=0.85)
    be.add_argument("--k", type=int, nargs="+", default=[20])
    be.add_argument("--m2", type=float, default=1.15)
    be.add_argument("-o", "--output", default="-")
    be.set_defaults(handler=cmd_bench)
    return p


def main(argv=None):
    try:
        parser = build_parser()
    except UsageError as e:
        print(f"tworank: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else EXIT_OK
    if args.threads is not None:
        if args.threads < 1:
            print("tworank: error: --threads must be positive", file=sys.stderr)
            return EXIT_USAGE
        import numba

        numba.set_num_threads(min(args.threads, numba.config.NUMBA_NUM_THREADS))
    try:
        return args.handler(args)
    except (UsageError, GraphParameterError) as e:
        print(f"tworank: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (ContextFileError, ContextCapacityError, EdgeListParseError, EdgeListValidationError,
            OSError, ValueError, ArithmeticError) as e:
        print(f"tworank: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
