"""
Directed graph storage, random-graph ensembles and edge-list I/O.

Arcs are stored twice in compressed sparse row form: ``out_adj[src, dst]``
for out-neighbour lookups and ``in_adj[dst, src]`` for in-neighbour lookups,
so both neighbourhoods are answered in time proportional to their size.
Undirected graphs are stored as pairs of opposite arcs.
"""
from __future__ import annotations

import io
import math
import re
from dataclasses import dataclass, field
from typing import IO, Iterable, Optional, Union

import numpy as np
import scipy.sparse as sp

__all__ = [
    "Graph",
    "GraphParameterError",
    "EdgeListParseError",
    "EdgeListValidationError",
    "from_arcs",
    "gen_erdos_renyi",
    "gen_preferential_attachment",
    "gen_small_world",
    "gen_star",
    "gen_cycle",
    "ingest_edge_list",
    "write_edge_list",
]


class GraphParameterError(ValueError):
    """Invalid generator or graph-construction parameter."""


class EdgeListParseError(ValueError):
    """A line of an edge list could not be parsed."""

    def __init__(self, message: str, line_no: int):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class EdgeListValidationError(ValueError):
    """An edge list parsed but violates a graph invariant (e.g. weight <= 0)."""

    def __init__(self, message: str, line_no: int):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


@dataclass(frozen=True, eq=False)
class Graph:
    """Immutable directed, positively weighted graph on nodes ``0..n-1``.

    Attributes
    ----------
    n : int
        Node count.
    out_adj : scipy.sparse.csr_array
        ``out_adj[src, dst]`` holds the arc weight; rows are out-neighbourhoods.
    directed : bool
        False when the graph was built from undirected edges (both arcs stored).
    node_index_base : int
        Indexing used by the source the graph was read from (0 or 1).
    node_ids : ndarray
        Original identifier of every node, used when writing the graph back.
    """

    n: int
    out_adj: sp.csr_array
    directed: bool = True
    node_index_base: int = 0
    node_ids: np.ndarray = field(default=None)  # type: ignore[assignment]
    in_adj: sp.csr_array = field(init=False, repr=False)

    def __post_init__(self):
        if self.node_ids is None:
            object.__setattr__(self, "node_ids", np.arange(self.n, dtype=np.int64) + self.node_index_base)
        object.__setattr__(self, "in_adj", self.out_adj.T.tocsr())
        self.in_adj.sort_indices()

    @property
    def n_arcs(self) -> int:
        return int(self.out_adj.nnz)

    @property
    def n_edges(self) -> int:
        """Arc count for directed graphs, unordered-pair count otherwise."""
        if self.directed:
            return self.n_arcs
        loops = int(np.count_nonzero(self.out_adj.diagonal()))
        return (self.n_arcs - loops) // 2 + loops

    def out_neighbors(self, node: int) -> np.ndarray:
        a = self.out_adj
        return a.indices[a.indptr[node]:a.indptr[node + 1]]

    def in_neighbors(self, node: int) -> np.ndarray:
        a = self.in_adj
        return a.indices[a.indptr[node]:a.indptr[node + 1]]

    def out_weights(self) -> np.ndarray:
        return np.asarray(self.out_adj.sum(axis=1)).ravel()

    def in_degree(self) -> np.ndarray:
        return np.diff(self.in_adj.indptr)

    def out_degree(self) -> np.ndarray:
        return np.diff(self.out_adj.indptr)

    def arcs(self):
        """Return ``(src, dst, weight)`` arrays in row-major order."""
        coo = self.out_adj.tocoo()
        order = np.lexsort((coo.col, coo.row))
        return coo.row[order].astype(np.int64), coo.col[order].astype(np.int64), coo.data[order]

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        a, b = self.out_adj, other.out_adj
        return (
            self.n == other.n
            and self.directed == other.directed
            and self.node_index_base == other.node_index_base
            and np.array_equal(self.node_ids, other.node_ids)
            and np.array_equal(a.indptr, b.indptr)
            and np.array_equal(a.indices, b.indices)
            and np.array_equal(a.data, b.data)
        )

    __hash__ = None  # type: ignore[assignment]


def from_arcs(n, src, dst, weight=None, directed=True, node_index_base=0, node_ids=None) -> Graph:
    """Build a :class:`Graph` from parallel arc arrays.

    Duplicate arcs are merged by summing their weights. For ``directed=False``
    every pair is inserted in both directions.
    """
    src = np.asarray(src, dtype=np.int64)
    dst = np.asarray(dst, dtype=np.int64)
    if weight is None:
        weight = np.ones(src.shape[0])
    weight = np.asarray(weight, dtype=np.float64)
    if src.shape != dst.shape or src.shape != weight.shape:
        raise GraphParameterError("src, dst and weight must have equal length")
    if n < 1:
        raise GraphParameterError("graph needs at least one node")
    if src.size and (src.min() < 0 or dst.min() < 0 or src.max() >= n or dst.max() >= n):
        raise GraphParameterError("arc endpoint out of range")
    if np.any(weight <= 0) or not np.all(np.isfinite(weight)):
        raise GraphParameterError("arc weights must be finite and strictly positive")
    if not directed:
        loop = src == dst
        src, dst, weight = (
            np.concatenate([src, dst[~loop]]),
            np.concatenate([dst, src[~loop]]),
            np.concatenate([weight, weight[~loop]]),
        )
    # coo -> csr sums duplicates
    adj = sp.coo_array((weight, (src, dst)), shape=(n, n)).tocsr()
    adj.sum_duplicates()
    adj.sort_indices()
    adj.indptr = adj.indptr.astype(np.int64)
    adj.indices = adj.indices.astype(np.int64)
    return Graph(n=n, out_adj=adj, directed=directed, node_index_base=node_index_base, node_ids=node_ids)


def _check_probability(name, value):
    if not (0.0 <= value <= 1.0) or math.isnan(value):
        raise GraphParameterError(f"{name} must lie in [0, 1], got {value}")


def _triu_decode(k, n):
    # linear index of the strict upper triangle (row-major) -> (row, col)
    k = np.asarray(k, dtype=np.int64)
    total = n * (n - 1) // 2
    rem = total - 1 - k
    t = np.floor((np.sqrt(8.0 * rem + 1.0) - 1.0) / 2.0).astype(np.int64)
    # guard against float rounding at large n
    t = np.where((t + 1) * (t + 2) // 2 <= rem, t + 1, t)
    t = np.where(t * (t + 1) // 2 > rem, t - 1, t)
    i = n - 2 - t
    j = n - 1 - (rem - t * (t + 1) // 2)
    return i, j


def gen_erdos_renyi(n: int, density: float, seed=None, directed: bool = False) -> Graph:
    """Erdős–Rényi graph: every pair is present independently with ``density``.

    Ordered pairs are used when ``directed`` is True, unordered pairs otherwise.
    The edge count is drawn from the binomial law and the edge set is then a
    uniform subset of that size, which is the same distribution and stays
    cheap for large sparse graphs.
    """
    if n < 2:
        raise GraphParameterError("n must be at least 2")
    _check_probability("density", density)
    rng = np.random.default_rng(seed)
    n_pairs = n * (n - 1) if directed else n * (n - 1) // 2
    m = int(rng.binomial(n_pairs, density))
    picks = np.sort(rng.choice(n_pairs, size=m, replace=False)) if m else np.empty(0, np.int64)
    if directed:
        src = picks // (n - 1)
        off = picks % (n - 1)
        dst = off + (off >= src)
    else:
        src, dst = _triu_decode(picks, n)
    return from_arcs(n, src, dst, directed=directed)


def gen_preferential_attachment(n: int, d: int, seed=None, smoothing: float = 1.0) -> Graph:
    """Directed preferential-attachment graph.

    Nodes ``0..d-1`` are seeds. Each later node ``t`` sends ``d`` arcs to
    distinct existing nodes picked with probability proportional to
    ``in_degree + smoothing``; node ``d`` therefore links to every seed, and
    the graph has exactly ``(n - d) * d`` arcs.
    """
    if d < 1 or n <= d:
        raise GraphParameterError(f"need n > d >= 1, got n={n}, d={d}")
    if smoothing != 1.0:
        return _pa_general(n, d, np.random.default_rng(seed), smoothing)
    rng = np.random.default_rng(seed)
    # urn holds each node once per unit of attractiveness (1 + in-degree)
    urn = np.empty(n + (n - d) * d, dtype=np.int64)
    urn[:d] = np.arange(d)
    size = d
    src = np.empty((n - d) * d, dtype=np.int64)
    dst = np.empty_like(src)
    pos = 0
    for t in range(d, n):
        chosen: list = []
        if t == d:
            chosen = list(range(d))
        else:
            while len(chosen) < d:
                cand = int(urn[rng.integers(size)])
                if cand not in chosen:
                    chosen.append(cand)
        for c in chosen:
            src[pos] = t
            dst[pos] = c
            pos += 1
        urn[size:size + d] = chosen
        size += d
        urn[size] = t
        size += 1
    return from_arcs(n, src, dst, directed=True)


def _pa_general(n, d, rng, smoothing):
    indeg = np.zeros(n)
    src, dst = [], []
    for t in range(d, n):
        if t == d:
            chosen = np.arange(d)
        else:
            p = indeg[:t] + smoothing
            chosen = rng.choice(t, size=d, replace=False, p=p / p.sum())
        src.extend([t] * d)
        dst.extend(chosen.tolist())
        indeg[chosen] += 1
    return from_arcs(n, src, dst, directed=True)


def gen_small_world(n: int, p_shortcut: float, seed=None) -> Graph:
    """Directed ring lattice plus random shortcuts.

    Every node links to its two ring neighbours; additionally, with
    probability ``p_shortcut`` each node gets one arc to a uniformly chosen
    other node. Shortcuts that coincide with ring arcs are merged (weight 2).
    """
    if n < 4:
        raise GraphParameterError("n must be at least 4")
    _check_probability("p_shortcut", p_shortcut)
    rng = np.random.default_rng(seed)
    nodes = np.arange(n)
    src = [nodes, nodes]
    dst = [(nodes + 1) % n, (nodes - 1) % n]
    has_shortcut = rng.random(n) < p_shortcut
    who = nodes[has_shortcut]
    target = rng.integers(0, n - 1, size=who.size)
    target = target + (target >= who)
    src.append(who)
    dst.append(target)
    return from_arcs(n, np.concatenate(src), np.concatenate(dst), directed=True)


def gen_star(n: int) -> Graph:
    """Every leaf ``1..n-1`` points at node 0."""
    leaves = np.arange(1, n)
    return from_arcs(n, leaves, np.zeros_like(leaves), directed=True)


def gen_cycle(n: int) -> Graph:
    nodes = np.arange(n)
    return from_arcs(n, nodes, (nodes + 1) % n, directed=True)


_HEADER = re.compile(r"nodes:\s*(\d+)")


def ingest_edge_list(
    source: Union[str, bytes, IO],
    index_base: int = 0,
    weighted: Optional[bool] = None,
    directed: bool = True,
    comment_prefix: str = "#",
) -> Graph:
    """Read a whitespace-separated ``src dst [weight]`` edge list.

    Parameters
    ----------
    source : str, bytes or file object
        A path, raw bytes, or an open text/binary stream.
    index_base : int
        Indexing of node ids in the file (0 or 1); recorded on the graph.
    weighted : bool or None
        Whether a third column carries weights. ``None`` accepts an optional
        third column; ``False`` ignores any extra columns.
    directed : bool
        When False every line contributes both arcs.
    comment_prefix : str
        Lines starting with this prefix are skipped.

    Node ids are compacted to ``0..n-1`` in ascending order of the original
    id, and the original ids are kept in ``Graph.node_ids``. A comment of the
    form ``<prefix> nodes: N`` (as written by :func:`write_edge_list`) turns
    compaction off so isolated nodes survive a round trip (ids must then be
    consecutive from ``index_base``).
    """
    if index_base not in (0, 1):
        raise GraphParameterError("index_base must be 0 or 1")
    text = _read_text(source)
    declared_n = None
    src, dst, wts = [], [], []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if comment_prefix and line.startswith(comment_prefix):
            m = _HEADER.search(line)
            if m and declared_n is None:
                declared_n = int(m.group(1))
            continue
        tokens = line.split()
        if len(tokens) < 2:
            raise EdgeListParseError(f"expected 'src dst [weight]', got {raw!r}", line_no)
        try:
            s, t = int(tokens[0]), int(tokens[1])
        except ValueError:
            raise EdgeListParseError(f"non-integer node id in {raw!r}", line_no) from None
        w = 1.0
        if weighted is not False and len(tokens) >= 3:
            try:
                w = float(tokens[2])
            except ValueError:
                raise EdgeListParseError(f"non-numeric weight in {raw!r}", line_no) from None
            if not w > 0 or not math.isfinite(w):
                raise EdgeListValidationError(f"weight must be positive, got {tokens[2]}", line_no)
        elif weighted:
            raise EdgeListParseError("missing weight column", line_no)
        if s < index_base or t < index_base:
            raise EdgeListValidationError(f"node id below index base {index_base}", line_no)
        src.append(s)
        dst.append(t)
        wts.append(w)
    src_a = np.asarray(src, dtype=np.int64)
    dst_a = np.asarray(dst, dtype=np.int64)
    if declared_n is not None:
        n = declared_n
        ids = np.arange(n, dtype=np.int64) + index_base
        src_a -= index_base
        dst_a -= index_base
        if src_a.size and max(src_a.max(), dst_a.max()) >= n:
            raise EdgeListValidationError(f"node id exceeds declared node count {n}", 0)
    else:
        ids, inverse = np.unique(np.concatenate([src_a, dst_a]), return_inverse=True)
        n = ids.size
        if n == 0:
            raise EdgeListValidationError("edge list contains no arcs", 0)
        src_a, dst_a = inverse[: src_a.size], inverse[src_a.size:]
    return from_arcs(n, src_a, dst_a, np.asarray(wts), directed=directed,
                     node_index_base=index_base, node_ids=ids)


def _read_text(source) -> str:
    if isinstance(source, bytes):
        return source.decode()
    if isinstance(source, str):
        with open(source, "r") as fh:
            return fh.read()
    data = source.read()
    return data.decode() if isinstance(data, bytes) else data


def write_edge_list(graph: Graph, sink=None, header: Iterable[str] = (), comment_prefix: str = "#"):
    """Write ``graph`` as an edge list readable by :func:`ingest_edge_list`.

    Returns the text when ``sink`` is None, otherwise writes to the path or
    stream given. Undirected graphs emit each pair once.
    """
    out = io.StringIO()
    for line in header:
        out.write(f"{comment_prefix} {line}\n")
    ids = graph.node_ids
    if np.array_equal(ids, np.arange(graph.n) + graph.node_index_base):
        out.write(f"{comment_prefix} nodes: {graph.n}\n")
    src, dst, w = graph.arcs()
    if not graph.directed:
        keep = src <= dst
        src, dst, w = src[keep], dst[keep], w[keep]
    unit = np.all(w == 1.0)
    for s, t, x in zip(ids[src].tolist(), ids[dst].tolist(), w.tolist()):
        out.write(f"{s} {t}\n" if unit else f"{s} {t} {x!r}\n")
    text = out.getvalue()
    if sink is None:
        return text
    if isinstance(sink, str):
        with open(sink, "w") as fh:
            fh.write(text)
    else:
        sink.write(text)
    return None
