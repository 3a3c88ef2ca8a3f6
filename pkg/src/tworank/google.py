"""
Implicit Google matrix and the precomputed query context.

With ``M = alpha * Ghat`` and the rank-one teleport part
``R = alpha * u d^T + (1 - alpha) * v 1^T`` the Google matrix is ``G = M + R``
and ``G^2 = M^2 + M R + R M + R^2``. Every entry and row sum of ``A = G - I``
and ``B = A^2 = G^2 - 2G + I`` therefore reduces to one lookup in the sparse
``Ghat`` or ``Ghat^2`` plus a few precomputed vectors, and ``G`` itself is
never materialized.
"""
from __future__ import annotations

import io
import struct
import zlib
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .graph import Graph

__all__ = [
    "GoogleParams",
    "RankContext",
    "CountingContext",
    "ContextCapacityError",
    "ContextFileError",
    "ContextFormatError",
    "ContextVersionError",
    "ContextChecksumError",
    "ContextTruncatedError",
    "column_normalize",
    "build_rank_context",
    "save_context",
    "load_context",
    "DENSE_LIMIT",
]

DENSE_LIMIT = 5000
DEFAULT_NNZ_BUDGET = 200_000_000

MAGIC = b"TWORANK1"
FORMAT_VERSION = 1
_FLAG_U_UNIFORM = 1
_FLAG_V_UNIFORM = 2


class ContextCapacityError(MemoryError):
    """``Ghat^2`` would exceed the configured nonzero budget."""


class ContextFileError(Exception):
    """Base class for context (de)serialization failures."""

    code = 1


class ContextFormatError(ContextFileError):
    code = 2


class ContextVersionError(ContextFileError):
    code = 3


class ContextChecksumError(ContextFileError):
    code = 4


class ContextTruncatedError(ContextFileError):
    code = 5


def _unit_vector(x, n, name):
    if x is None:
        return np.full(n, 1.0 / n), True
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (n,):
        raise ValueError(f"{name} must have length {n}")
    if np.any(x < 0):
        raise ValueError(f"{name} must be nonnegative")
    if abs(x.sum() - 1.0) > 1e-12:
        raise ValueError(f"{name} must have unit 1-norm (got {x.sum()!r})")
    return x, bool(np.all(x == x[0]))


@dataclass(frozen=True, eq=False)
class GoogleParams:
    """Damping factor plus dangling-node (``u``) and personalization (``v``) vectors.

    ``u`` and ``v`` default to the uniform distribution.
    """

    alpha: float = 0.85
    u: Optional[np.ndarray] = None
    v: Optional[np.ndarray] = None

    def __post_init__(self):
        if not (0.0 <= self.alpha < 1.0):
            raise ValueError(f"alpha must lie in [0, 1), got {self.alpha}")

    def resolve(self, n):
        u, u_uni = _unit_vector(self.u, n, "u")
        v, v_uni = _unit_vector(self.v, n, "v")
        return u, v, u_uni, v_uni


def column_normalize(g: Graph):
    """Column-normalized adjacency ``Ghat`` and the dangling indicator ``d``.

    ``Ghat[i, j] = w(j -> i) / outweight(j)``; column ``j`` is zero and
    ``d[j] = 1`` when node ``j`` has no out-arcs.
    """
    outw = g.out_weights()
    dangling = (outw == 0).astype(np.float64)
    scale = np.divide(1.0, outw, out=np.zeros_like(outw), where=outw > 0)
    ghat = g.in_adj.copy()
    ghat.data = ghat.data * scale[ghat.indices]
    return _canonical(ghat), dangling


def _canonical(m):
    m = sp.csr_array(m)
    m.sum_duplicates()
    m.sort_indices()
    m.indptr = m.indptr.astype(np.int64)
    m.indices = m.indices.astype(np.int64)
    m.data = m.data.astype(np.float64)
    return m


def _row_lookup(indptr, indices, data, i, h):
    lo, hi = indptr[i], indptr[i + 1]
    k = lo + np.searchsorted(indices[lo:hi], h)
    if k < hi and indices[k] == h:
        return float(data[k])
    return 0.0


class RankContext:
    """Immutable structure answering entry and row-sum queries on ``A`` and ``B``.

    Built by :func:`build_rank_context` or :func:`load_context`; all arrays are
    flagged read-only.
    """

    _ARRAYS = ("dangling", "u", "v", "gu", "gv", "gtd", "colsum", "rowsum_ghat",
               "rowsum_G", "rowsum_A", "rowsum_B")

    def __init__(self, n, alpha, ghat, ghat2, dangling, u, v, u_uniform, v_uniform,
                 gu, gv, gtd, colsum, rowsum_ghat, rowsum_G, rowsum_A, rowsum_B,
                 dtu, dtv, su, sv):
        self.n = int(n)
        self.alpha = float(alpha)
        self.ghat = ghat
        self.ghat2 = ghat2
        self.dangling = dangling
        self.u, self.v = u, v
        self.u_uniform, self.v_uniform = bool(u_uniform), bool(v_uniform)
        self.gu, self.gv, self.gtd, self.colsum = gu, gv, gtd, colsum
        self.rowsum_ghat = rowsum_ghat
        self.rowsum_G, self.rowsum_A, self.rowsum_B = rowsum_G, rowsum_A, rowsum_B
        self.dtu, self.dtv, self.su, self.sv = float(dtu), float(dtv), float(su), float(sv)
        for name in self._ARRAYS:
            getattr(self, name).flags.writeable = False
        for m in (ghat, ghat2):
            for a in (m.indptr, m.indices, m.data):
                a.flags.writeable = False
        self._frozen = True

    def __setattr__(self, key, value):
        if getattr(self, "_frozen", False):
            raise AttributeError("RankContext is immutable")
        object.__setattr__(self, key, value)

    @property
    def uniform(self) -> bool:
        """True when both teleport vectors are uniform (the fast query path)."""
        return self.u_uniform and self.v_uniform

    @property
    def n_dangling(self) -> int:
        return int(self.dangling.sum())

    def params(self) -> GoogleParams:
        return GoogleParams(self.alpha,
                            None if self.u_uniform else np.array(self.u),
                            None if self.v_uniform else np.array(self.v))

    def in_neighbors(self, i):
        """Nodes with an arc into ``i`` (the nonzero columns of row ``i`` of ``Ghat``)."""
        g = self.ghat
        return g.indices[g.indptr[i]:g.indptr[i + 1]]

    # -- single entries -------------------------------------------------
    def ghat_entry(self, i, h):
        g = self.ghat
        return _row_lookup(g.indptr, g.indices, g.data, i, h)

    def ghat2_entry(self, i, h):
        g = self.ghat2
        return _row_lookup(g.indptr, g.indices, g.data, i, h)

    def entry_G(self, i, h):
        a = self.alpha
        return a * self.ghat_entry(i, h) + a * self.u[i] * self.dangling[h] + (1 - a) * self.v[i]

    def entry_G2(self, i, h):
        a, b = self.alpha, 1.0 - self.alpha
        u, v, dh = self.u[i], self.v[i], self.dangling[h]
        return (a * a * self.ghat2_entry(i, h)
                + a * a * self.gu[i] * dh + a * b * self.gv[i]
                + a * a * u * self.gtd[h] + a * b * v * self.colsum[h]
                + a * a * u * dh * self.dtu + a * b * u * self.dtv
                + a * b * v * dh * self.su + b * b * v * self.sv)

    def entry_A(self, i, h):
        return self.entry_G(i, h) - (1.0 if i == h else 0.0)

    def entry_B(self, i, h):
        return self.entry_G2(i, h) - 2.0 * self.entry_G(i, h) + (1.0 if i == h else 0.0)

    def row_sum_A(self, i):
        return float(self.rowsum_A[i])

    def row_sum_B(self, i):
        return float(self.rowsum_B[i])

    # -- row differences ------------------------------------------------
    def _diff_G(self, i, j, h):
        a = self.alpha
        return (a * (self.ghat_entry(i, h) - self.ghat_entry(j, h))
                + a * (self.u[i] - self.u[j]) * self.dangling[h]
                + (1 - a) * (self.v[i] - self.v[j]))

    def diff_A(self, i, j, h):
        """``a_ih - a_jh`` grouped so that the teleport terms cancel exactly."""
        return self._diff_G(i, j, h) - (float(h == i) - float(h == j))

    def diff_B(self, i, j, h):
        a, b = self.alpha, 1.0 - self.alpha
        du, dv, dh = self.u[i] - self.u[j], self.v[i] - self.v[j], self.dangling[h]
        g2 = (a * a * (self.ghat2_entry(i, h) - self.ghat2_entry(j, h))
              + a * a * (self.gu[i] - self.gu[j]) * dh + a * b * (self.gv[i] - self.gv[j])
              + a * a * du * self.gtd[h] + a * b * dv * self.colsum[h]
              + a * a * du * dh * self.dtu + a * b * du * self.dtv
              + a * b * dv * dh * self.su + b * b * dv * self.sv)
        return g2 - 2.0 * self._diff_G(i, j, h) + (float(h == i) - float(h == j))

    # -- products -------------------------------------------------------
    def matvec(self, x):
        """``G @ x`` without forming ``G``."""
        x = np.asarray(x, dtype=np.float64)
        a = self.alpha
        if x.ndim == 2:
            return (a * (self.ghat @ x) + a * np.outer(self.u, self.dangling @ x)
                    + (1 - a) * np.outer(self.v, x.sum(axis=0)))
        return a * (self.ghat @ x) + a * (self.dangling @ x) * self.u + (1 - a) * x.sum() * self.v

    def rmatvec(self, x):
        """``G^T @ x`` without forming ``G``."""
        x = np.asarray(x, dtype=np.float64)
        a = self.alpha
        if x.ndim == 2:
            return (a * (self.ghat.T @ x) + a * np.outer(self.dangling, self.u @ x)
                    + (1 - a) * np.outer(np.ones(self.n), self.v @ x))
        return a * (self.ghat.T @ x) + a * (self.u @ x) * self.dangling + (1 - a) * (self.v @ x)

    def matvec_A(self, x):
        return self.matvec(x) - np.asarray(x, dtype=np.float64)

    # -- dense materialization (explicit, small n only) -----------------
    def dense_G(self, limit: int = DENSE_LIMIT):
        if self.n > limit:
            raise ContextCapacityError(f"dense mode limited to n <= {limit}, context has n = {self.n}")
        a = self.alpha
        return a * (self.ghat.toarray() + np.outer(self.u, self.dangling)) + (1 - a) * np.outer(self.v, np.ones(self.n))

    def dense_A(self, limit: int = DENSE_LIMIT):
        return self.dense_G(limit) - np.eye(self.n)

    def dense_B(self, limit: int = DENSE_LIMIT):
        a = self.dense_A(limit)
        return a @ a

    def kernel_arrays(self):
        """Flat tuple of arrays consumed by the compiled comparison kernel."""
        scal = np.array([self.alpha, self.dtu, self.dtv, self.su, self.sv])
        return (self.ghat.indptr, self.ghat.indices, self.ghat.data,
                self.ghat2.indptr, self.ghat2.indices, self.ghat2.data,
                self.u, self.v, self.dangling, self.gu, self.gv, self.gtd, self.colsum,
                self.rowsum_A, self.rowsum_B, scal)

    def equals(self, other) -> bool:
        """Field-by-field bitwise equality."""
        if not isinstance(other, RankContext):
            return False
        if (self.n, self.alpha, self.u_uniform, self.v_uniform) != (other.n, other.alpha, other.u_uniform, other.v_uniform):
            return False
        if (self.dtu, self.dtv, self.su, self.sv) != (other.dtu, other.dtv, other.su, other.sv):
            return False
        for name in self._ARRAYS:
            if not np.array_equal(getattr(self, name), getattr(other, name)):
                return False
        for m1, m2 in ((self.ghat, other.ghat), (self.ghat2, other.ghat2)):
            for a1, a2 in ((m1.indptr, m2.indptr), (m1.indices, m2.indices), (m1.data, m2.data)):
                if not np.array_equal(a1, a2):
                    return False
        return True


class CountingContext:
    """Proxy over a :class:`RankContext` that counts entry-level reads.

    Each entry, row sum or scalar-returning accessor counts as one read; a
    row difference counts as two. Reads issued while ``drawing`` is set are
    additionally tallied in ``draw_reads`` (the ``h``-sampling cost).
    """

    def __init__(self, ctx: RankContext):
        self._ctx = ctx
        self.reads = 0
        self.draw_reads = 0
        self.drawing = False

    def reset(self):
        self.reads = self.draw_reads = 0

    def _count(self, k):
        self.reads += k
        if self.drawing:
            self.draw_reads += k

    def __getattr__(self, name):
        return getattr(self._ctx, name)

    def entry_A(self, i, h):
        self._count(1)
        return self._ctx.entry_A(i, h)

    def entry_B(self, i, h):
        self._count(1)
        return self._ctx.entry_B(i, h)

    def row_sum_A(self, i):
        self._count(1)
        return self._ctx.row_sum_A(i)

    def row_sum_B(self, i):
        self._count(1)
        return self._ctx.row_sum_B(i)

    def diff_A(self, i, j, h):
        self._count(2)
        return self._ctx.diff_A(i, j, h)

    def diff_B(self, i, j, h):
        self._count(2)
        return self._ctx.diff_B(i, j, h)


def _ghat2_upper_bound(ghat):
    # nnz(M @ M) <= sum_k nnz(col k) * nnz(row k)
    row_nnz = np.diff(ghat.indptr)
    col_nnz = np.bincount(ghat.indices, minlength=ghat.shape[1])
    return int(np.dot(row_nnz.astype(np.int64), col_nnz.astype(np.int64)))


def build_rank_context(g: Graph, params: Optional[GoogleParams] = None,
                       nnz_budget: int = DEFAULT_NNZ_BUDGET) -> RankContext:
    """Precompute ``Ghat``, ``Ghat^2`` and the correction vectors for ``g``.

    Raises
    ------
    ContextCapacityError
        If the worst-case nonzero count of ``Ghat^2`` exceeds ``nnz_budget``.
    """
    params = params or GoogleParams()
    n = g.n
    u, v, u_uni, v_uni = params.resolve(n)
    ghat, dangling = column_normalize(g)
    bound = _ghat2_upper_bound(ghat)
    if bound > nnz_budget:
        raise ContextCapacityError(
            f"Ghat^2 may hold up to {bound} nonzeros (budget {nnz_budget}); "
            "use dense mode for small graphs or raise the budget")
    ghat2 = _canonical(ghat @ ghat)
    a = params.alpha
    gu = ghat @ u
    gv = ghat @ v
    gtd = ghat.T @ dangling
    colsum = np.asarray(ghat.sum(axis=0)).ravel()
    rowsum_ghat = np.asarray(ghat.sum(axis=1)).ravel()
    n_dangling = dangling.sum()
    dtu, dtv, su, sv = float(dangling @ u), float(dangling @ v), float(u.sum()), float(v.sum())
    rowsum_G = a * rowsum_ghat + a * n_dangling * u + (1 - a) * n * v
    # rowsum(G^2) = G @ rowsum(G)
    rowsum_G2 = a * (ghat @ rowsum_G) + a * (dangling @ rowsum_G) * u + (1 - a) * rowsum_G.sum() * v
    rowsum_A = rowsum_G - 1.0
    rowsum_B = rowsum_G2 - 2.0 * rowsum_G + 1.0
    return RankContext(n, a, ghat, ghat2, dangling, u, v, u_uni, v_uni,
                       gu, gv, gtd, colsum, rowsum_ghat, rowsum_G, rowsum_A, rowsum_B,
                       dtu, dtv, su, sv)


# -- binary context files ------------------------------------------------
# layout: MAGIC | u32 version | u64 n | f64 alpha | u32 flags | arrays | u32 crc32
# array: u8 kind (0 = int64, 1 = float64) | u64 length | raw little-endian data

_ARRAY_ORDER = ("ghat.indptr", "ghat.indices", "ghat.data",
                "ghat2.indptr", "ghat2.indices", "ghat2.data",
                "dangling", "u", "v", "gu", "gv", "gtd", "colsum", "rowsum_ghat",
                "rowsum_G", "rowsum_A", "rowsum_B", "scalars")


def _arrays_of(ctx):
    out = {
        "ghat.indptr": ctx.ghat.indptr, "ghat.indices": ctx.ghat.indices, "ghat.data": ctx.ghat.data,
        "ghat2.indptr": ctx.ghat2.indptr, "ghat2.indices": ctx.ghat2.indices, "ghat2.data": ctx.ghat2.data,
        "scalars": np.array([ctx.dtu, ctx.dtv, ctx.su, ctx.sv]),
    }
    for name in RankContext._ARRAYS:
        out[name] = getattr(ctx, name)
    return out


def save_context(ctx: RankContext, sink, version: int = FORMAT_VERSION):
    """Serialize ``ctx`` to a path or binary stream (bit-exact)."""
    buf = io.BytesIO()
    flags = (_FLAG_U_UNIFORM if ctx.u_uniform else 0) | (_FLAG_V_UNIFORM if ctx.v_uniform else 0)
    buf.write(MAGIC)
    buf.write(struct.pack("<IQdI", version, ctx.n, ctx.alpha, flags))
    arrays = _arrays_of(ctx)
    for name in _ARRAY_ORDER:
        if (name == "u" and ctx.u_uniform) or (name == "v" and ctx.v_uniform):
            continue
        arr = arrays[name]
        kind = 0 if arr.dtype.kind in "iu" else 1
        data = np.ascontiguousarray(arr, dtype="<i8" if kind == 0 else "<f8")
        buf.write(struct.pack("<BQ", kind, data.size))
        buf.write(data.tobytes())
    payload = buf.getvalue()
    blob = payload + struct.pack("<I", zlib.crc32(payload) & 0xFFFFFFFF)
    if isinstance(sink, (str, bytes)) or hasattr(sink, "__fspath__"):
        with open(sink, "wb") as fh:
            fh.write(blob)
    else:
        sink.write(blob)


def load_context(source) -> RankContext:
    """Inverse of :func:`save_context`.

    Raises a :class:`ContextFileError` subclass for bad magic bytes, an
    unsupported version, a checksum mismatch or a truncated file.
    """
    if isinstance(source, str) or hasattr(source, "__fspath__"):
        with open(source, "rb") as fh:
            blob = fh.read()
    elif isinstance(source, bytes):
        blob = source
    else:
        blob = source.read()
    head = len(MAGIC) + struct.calcsize("<IQdI")
    if len(blob) < len(MAGIC) or blob[:len(MAGIC)] != MAGIC[:len(blob)]:
        raise ContextFormatError("not a tworank context file (bad magic)")
    if len(blob) < head + 4:
        raise ContextTruncatedError("context file truncated in header")
    version, n, alpha, flags = struct.unpack_from("<IQdI", blob, len(MAGIC))
    if version != FORMAT_VERSION:
        raise ContextVersionError(f"unsupported context format version {version} (expected {FORMAT_VERSION})")
    payload, (crc,) = blob[:-4], struct.unpack("<I", blob[-4:])
    u_uni, v_uni = bool(flags & _FLAG_U_UNIFORM), bool(flags & _FLAG_V_UNIFORM)
    names = [x for x in _ARRAY_ORDER if not ((x == "u" and u_uni) or (x == "v" and v_uni))]
    arrays = {}
    pos = head
    for name in names:
        if pos + 9 > len(payload):
            raise ContextTruncatedError(f"context file truncated before array {name!r}")
        kind, length = struct.unpack_from("<BQ", payload, pos)
        pos += 9
        if kind not in (0, 1):
            raise ContextFormatError(f"unknown array kind {kind} for {name!r}")
        nbytes = 8 * length
        if pos + nbytes > len(payload):
            raise ContextTruncatedError(f"context file truncated inside array {name!r}")
        arrays[name] = np.frombuffer(payload, dtype="<i8" if kind == 0 else "<f8",
                                     count=length, offset=pos).astype(np.int64 if kind == 0 else np.float64)
        pos += nbytes
    if zlib.crc32(payload) & 0xFFFFFFFF != crc:
        raise ContextChecksumError("context file checksum mismatch")
    if pos != len(payload):
        raise ContextFormatError("trailing bytes after last array")
    uni = np.full(n, 1.0 / n)
    u = uni if u_uni else arrays["u"]
    v = uni.copy() if v_uni else arrays["v"]
    ghat = _csr_from(arrays, "ghat", n)
    ghat2 = _csr_from(arrays, "ghat2", n)
    dtu, dtv, su, sv = arrays["scalars"]
    return RankContext(n, alpha, ghat, ghat2, arrays["dangling"], u, v, u_uni, v_uni,
                       arrays["gu"], arrays["gv"], arrays["gtd"], arrays["colsum"],
                       arrays["rowsum_ghat"], arrays["rowsum_G"], arrays["rowsum_A"],
                       arrays["rowsum_B"], dtu, dtv, su, sv)


def _csr_from(arrays, prefix, n):
    indptr, indices, data = (arrays[f"{prefix}.{k}"] for k in ("indptr", "indices", "data"))
    if indptr.size != n + 1 or indices.size != data.size:
        raise ContextFormatError(f"inconsistent CSR arrays for {prefix}")
    m = sp.csr_array((data, indices, indptr), shape=(n, n))
    m.indptr, m.indices = indptr, indices
    return m
