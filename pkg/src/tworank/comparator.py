"""
Pairwise PageRank comparison from O(1) entries of ``A = G - I`` and ``B = A^2``.

A nonnegative weight vector ``w`` is chosen with ``w_i = w_j`` and
``(A w)_i = (A w)_j``; then the sign of ``phi = (B w)_i - (B w)_j`` predicts the
order of ``r_i`` and ``r_j``. ``w`` is all ones except on a small index set
``J`` containing ``i`` and ``j`` (weight ``z``) and one auxiliary node ``h``
(weight ``q``), so ``phi`` needs only row sums and a handful of entries.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import nnls

from . import _kernels as K
from .google import RankContext

__all__ = [
    "Verdict",
    "ComparisonOutcome",
    "WeightSpec",
    "NoAdmissibleH",
    "DegeneratePairError",
    "BatchOutcome",
    "HigherOrderWeights",
    "EPSILON",
    "ZERO_TOL",
    "index_set_sum",
    "choose_h",
    "build_weights_m2",
    "phi_m2",
    "compare",
    "compare_many",
    "build_weights_higher",
    "phi_higher",
]

EPSILON = 1e-5
ZERO_TOL = 1e-14
ENLARGE_ATTEMPTS = 8


class Verdict(str, enum.Enum):
    I_HIGHER = "i_higher"
    J_HIGHER = "j_higher"
    TIE = "tie"
    EXCEPTIONAL_I_HIGHER = "exceptional_i_higher"
    EXCEPTIONAL_J_HIGHER = "exceptional_j_higher"

    @property
    def sign(self) -> int:
        """+1 when i is ranked above j, -1 for the reverse, 0 for a tie."""
        return _SIGN[self]

    @classmethod
    def from_code(cls, code):
        return _FROM_CODE[int(code)]


_SIGN = {Verdict.I_HIGHER: 1, Verdict.EXCEPTIONAL_I_HIGHER: 1, Verdict.J_HIGHER: -1,
         Verdict.EXCEPTIONAL_J_HIGHER: -1, Verdict.TIE: 0}
_FROM_CODE = {K.I_HIGHER: Verdict.I_HIGHER, K.J_HIGHER: Verdict.J_HIGHER, K.TIE: Verdict.TIE,
              K.EXC_I: Verdict.EXCEPTIONAL_I_HIGHER, K.EXC_J: Verdict.EXCEPTIONAL_J_HIGHER}


class DegeneratePairError(ValueError):
    """The index-set sum of row differences vanishes; ``J`` must be enlarged."""


@dataclass(frozen=True)
class NoAdmissibleH:
    """No ``h`` has a difference of the required sign.

    ``summary`` is ``"positive"`` when all differences outside ``{i, j}`` are
    nonnegative with at least one positive, ``"negative"`` symmetrically, and
    ``"zero"`` or ``"mixed"`` otherwise.
    """

    summary: str
    samples_used: int = 0


@dataclass(frozen=True)
class WeightSpec:
    """Compressed weight vector: ``z`` on ``index_set``, ``q`` on ``h``, 1 elsewhere."""

    index_set: tuple
    h: int
    z: float
    q: float
    epsilon: float = EPSILON

    def dense(self, n):
        w = np.ones(n)
        w[list(self.index_set)] = self.z
        w[self.h] = self.q
        return w


@dataclass(frozen=True)
class ComparisonOutcome:
    verdict: Verdict
    phi: Optional[float] = None
    h: Optional[int] = None
    z: Optional[float] = None
    q: Optional[float] = None
    samples_used: int = 0
    index_set: tuple = ()

    @property
    def sign(self):
        return self.verdict.sign

    def to_dict(self):
        return {"verdict": self.verdict.value, "phi": self.phi, "h": self.h, "z": self.z,
                "q": self.q, "samples_used": self.samples_used, "index_set": list(self.index_set)}


def _in_pool(ctx, i, j):
    if ctx.uniform:
        return np.concatenate([ctx.in_neighbors(i), ctx.in_neighbors(j)])
    return None


def _pool_size(ctx, pool):
    return ctx.n if pool is None else len(pool)


def _pool_get(pool, r):
    return int(r) if pool is None else int(pool[r])


def index_set_sum(ctx, i, j, index_set):
    return sum(ctx.diff_A(i, j, k) for k in index_set)


def _enlarge(ctx, i, j, rng, pool, tol):
    size = _pool_size(ctx, pool)
    for _ in range(ENLARGE_ATTEMPTS):
        if size == 0:
            break
        k = _pool_get(pool, rng.integers(size))
        if k not in (i, j) and abs(ctx.diff_A(i, j, k)) > tol:
            return k
    cands = sorted({_pool_get(pool, r) for r in range(size)} - {i, j})
    cands = [k for k in cands if abs(ctx.diff_A(i, j, k)) > tol]
    if not cands:
        return None
    return cands[rng.integers(len(cands))]


def _sign_summary(ctx, i, j, pool, tol):
    size = _pool_size(ctx, pool)
    pos = neg = False
    for k in {_pool_get(pool, r) for r in range(size)} - {i, j}:
        d = ctx.diff_A(i, j, k)
        pos |= d > tol
        neg |= d < -tol
    if pos and not neg:
        return "positive"
    if neg and not pos:
        return "negative"
    return "zero" if not (pos or neg) else "mixed"


def choose_h(ctx, i, j, rng, index_set=None, tol=ZERO_TOL):
    """Pick ``h`` outside ``index_set`` whose row difference opposes the index-set sum.

    Draws come from the in-neighbourhoods of ``i`` and ``j`` (all nodes when
    the teleport vectors are not uniform), capped at
    ``4 (deg_in(i) + deg_in(j)) + 64``; after that the pool is scanned.
    Returns ``(h, diff, samples)`` or :class:`NoAdmissibleH`.
    """
    index_set = tuple(index_set) if index_set is not None else (i, j)
    s_sum = index_set_sum(ctx, i, j, index_set)
    if abs(s_sum) <= tol:
        raise DegeneratePairError(f"index-set sum vanishes for ({i}, {j})")
    pool = _in_pool(ctx, i, j)
    size = _pool_size(ctx, pool)
    deg = len(ctx.in_neighbors(i)) + len(ctx.in_neighbors(j))
    cap = 4 * deg + 64
    drawing = hasattr(ctx, "drawing")
    if drawing:
        ctx.drawing = True
    try:
        samples = 0
        while size and samples < cap:
            k = _pool_get(pool, rng.integers(size))
            samples += 1
            if k in index_set:
                continue
            d = ctx.diff_A(i, j, k)
            if d * s_sum < 0 and abs(d) > tol:
                return k, d, samples
        cands = []
        for k in sorted({_pool_get(pool, r) for r in range(size)} - set(index_set)):
            d = ctx.diff_A(i, j, k)
            if d * s_sum < 0 and abs(d) > tol:
                cands.append((k, d))
        if cands:
            k, d = cands[rng.integers(len(cands))]
            return k, d, samples
        return NoAdmissibleH(_sign_summary(ctx, i, j, pool, tol), samples)
    finally:
        if drawing:
            ctx.drawing = False


def build_weights_m2(ctx, i, j, h, index_set=None, epsilon=EPSILON, tol=ZERO_TOL) -> WeightSpec:
    """Weights ``(z, q)`` enforcing ``(A w)_i = (A w)_j``.

    ``q = eps + max(0, zeta / D)`` with ``D = a_ih - a_jh`` and ``z`` solved from
    the constraint itself: ``z = (zeta - q D) / S`` where ``S`` is the index-set
    sum and ``zeta = rowsum_j(A) - rowsum_i(A) + S + D``.
    """
    index_set = tuple(index_set) if index_set is not None else (i, j)
    s_sum = index_set_sum(ctx, i, j, index_set)
    if abs(s_sum) <= tol:
        raise DegeneratePairError(f"index-set sum vanishes for ({i}, {j})")
    d = ctx.diff_A(i, j, h)
    zeta = (ctx.row_sum_A(j) - ctx.row_sum_A(i)) + s_sum + d
    q = epsilon + max(0.0, zeta / d)
    z = (zeta - q * d) / s_sum
    return WeightSpec(index_set, int(h), z, q, epsilon)


def phi_m2(ctx, i, j, spec: WeightSpec) -> float:
    """``(B w)_i - (B w)_j`` for the compressed ``w`` of ``spec``."""
    if i == j:
        return 0.0
    bsum = sum(ctx.diff_B(i, j, k) for k in spec.index_set)
    return (ctx.row_sum_B(i) - ctx.row_sum_B(j) + (spec.z - 1.0) * bsum
            + (spec.q - 1.0) * ctx.diff_B(i, j, spec.h))


def compare(ctx, i, j, rng=None, epsilon=EPSILON, tol=ZERO_TOL) -> ComparisonOutcome:
    """Decide whether node ``i`` or ``j`` has the larger PageRank."""
    n = ctx.n
    if not (0 <= i < n and 0 <= j < n):
        raise IndexError(f"node index out of range for n = {n}")
    if i == j:
        return ComparisonOutcome(Verdict.TIE)
    rng = np.random.default_rng(rng)
    index_set = (i, j)
    if abs(index_set_sum(ctx, i, j, index_set)) <= tol:
        pool = _in_pool(ctx, i, j)
        if hasattr(ctx, "drawing"):
            ctx.drawing = True
        try:
            k = _enlarge(ctx, i, j, rng, pool, tol)
        finally:
            if hasattr(ctx, "drawing"):
                ctx.drawing = False
        if k is None:
            return ComparisonOutcome(Verdict.TIE, index_set=index_set)
        index_set = (i, j, k)
    got = choose_h(ctx, i, j, rng, index_set, tol)
    if isinstance(got, NoAdmissibleH):
        verdict = {"positive": Verdict.EXCEPTIONAL_I_HIGHER,
                   "negative": Verdict.EXCEPTIONAL_J_HIGHER}.get(got.summary, Verdict.TIE)
        return ComparisonOutcome(verdict, samples_used=got.samples_used, index_set=index_set)
    h, _, samples = got
    spec = build_weights_m2(ctx, i, j, h, index_set, epsilon, tol)
    phi = phi_m2(ctx, i, j, spec)
    verdict = Verdict.I_HIGHER if phi > 0 else Verdict.J_HIGHER if phi < 0 else Verdict.TIE
    return ComparisonOutcome(verdict, phi, h, spec.z, spec.q, samples, index_set)


@dataclass
class BatchOutcome:
    """Column-wise results of :func:`compare_many`; ``codes`` use +-1 / +-2 / 0."""

    i: np.ndarray
    j: np.ndarray
    codes: np.ndarray
    phi: np.ndarray
    h: np.ndarray
    extra: np.ndarray
    z: np.ndarray
    q: np.ndarray
    samples: np.ndarray
    reads: np.ndarray
    draw_reads: np.ndarray

    def __len__(self):
        return len(self.codes)

    @property
    def signs(self):
        """+1 when i wins, -1 when j wins, 0 for ties."""
        return np.sign(self.codes).astype(np.int8)

    def index_set(self, t):
        base = (int(self.i[t]), int(self.j[t]))
        return base + ((int(self.extra[t]),) if self.extra[t] >= 0 else ())

    def outcome(self, t) -> ComparisonOutcome:
        v = Verdict.from_code(self.codes[t])
        has_phi = v in (Verdict.I_HIGHER, Verdict.J_HIGHER) or (v is Verdict.TIE and self.h[t] >= 0)
        return ComparisonOutcome(
            v, float(self.phi[t]) if has_phi else None,
            int(self.h[t]) if self.h[t] >= 0 else None,
            float(self.z[t]) if has_phi else None, float(self.q[t]) if has_phi else None,
            int(self.samples[t]), self.index_set(t))


def compare_many(ctx: RankContext, pairs, seed: int = 0, epsilon=EPSILON, tol=ZERO_TOL) -> BatchOutcome:
    """Compiled comparison of many pairs; pair ``t`` draws from its own stream of ``(seed, t)``."""
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    pi, pj = np.ascontiguousarray(pairs[:, 0]), np.ascontiguousarray(pairs[:, 1])
    if pairs.size and (pairs.min() < 0 or pairs.max() >= ctx.n):
        raise IndexError(f"node index out of range for n = {ctx.n}")
    res = K.compare_batch(ctx.kernel_arrays(), ctx.n, pi, pj, np.uint64(seed % 2**64),
                          float(epsilon), float(tol), bool(ctx.uniform))
    return BatchOutcome(pi, pj, *res)


# -- higher order / multi-node weights (O(n) per call) --------------------

@dataclass
class HigherOrderWeights:
    w: Optional[np.ndarray]
    feasible: bool
    attempts: int
    free: Optional[np.ndarray] = None


def _constraint_rows(ctx, nodes, m):
    # rows (e_a - e_0)^T A^k for a in nodes[1:], k = 1..m-1
    n = ctx.n
    rows = []
    e = np.zeros((n, len(nodes)))
    e[nodes, np.arange(len(nodes))] = 1.0
    x = e
    for _ in range(1, m):
        x = ctx.rmatvec(x) - x
        rows.append((x[:, 1:] - x[:, :1]).T)
    return np.vstack(rows)


def build_weights_higher(ctx: RankContext, nodes: Sequence[int], m: int, rng=None, slack: int = 2,
                         max_attempts: int = 32) -> HigherOrderWeights:
    """Dense ``w >= 0`` with equal coordinates on ``nodes`` and equal ``(A^k w)`` there, ``k < m``.

    All coordinates are 1 (so the ``nodes`` block is trivially tied) except
    ``|nodes| (m - 1) + slack`` free coordinates drawn from the support of the
    constraint rows. These are solved by nonnegative least squares; a draw is
    accepted when the constraints hold to rounding, otherwise fresh indices
    are tried.
    This path costs ``O(n)`` mat-vecs per call.
    """
    nodes = np.asarray(list(dict.fromkeys(int(x) for x in nodes)), dtype=np.int64)
    if len(nodes) < 2:
        raise ValueError("need at least two nodes")
    if not 2 <= m <= 4:
        raise ValueError("order m must lie in 2..4")
    if len(nodes) > 2 and (m != 2 or len(nodes) > 32):
        raise ValueError("multi-node weights supported for m = 2 and at most 32 nodes")
    rng = np.random.default_rng(rng)
    n = ctx.n
    Kc = _constraint_rows(ctx, nodes, m)
    rhs = -Kc.sum(axis=1)
    support = np.flatnonzero(np.abs(Kc).max(axis=0) > 0)
    support = np.setdiff1d(support, nodes)
    if len(support) == 0:
        support = np.setdiff1d(np.arange(n), nodes)
    n_free = min(len(nodes) * (m - 1) + slack, len(support))
    for attempt in range(1, max_attempts + 1):
        free = np.sort(rng.choice(support, size=n_free, replace=False))
        M = Kc[:, free]
        # unknowns are the absolute weights on the free set; everything else stays 1
        base = rhs + M.sum(axis=1)
        try:
            sol, _ = nnls(M, base)
        except RuntimeError:
            continue
        # the solver's own residual report is not trusted near its iteration cap
        res = np.abs(M @ sol - base).max()
        if not np.isfinite(res) or res > 1e-12 * max(1.0, np.abs(base).max()):
            continue
        w = np.ones(n)
        w[free] = sol
        return HigherOrderWeights(w, True, attempt, free)
    return HigherOrderWeights(None, False, max_attempts)


def phi_higher(ctx: RankContext, i, j, w, m) -> float:
    """``(A^m w)_i - (A^m w)_j`` by ``m`` implicit mat-vecs."""
    x = np.asarray(w, dtype=np.float64)
    for _ in range(m):
        x = ctx.matvec_A(x)
    return float(x[i] - x[j])
