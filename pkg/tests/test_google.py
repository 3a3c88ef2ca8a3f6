import io
import itertools

import numpy as np
import pytest

from tworank import graph as gr
from tworank.google import (CountingContext, ContextCapacityError, ContextChecksumError, ContextFormatError,
                            ContextTruncatedError, ContextVersionError, GoogleParams, build_rank_context,
                            column_normalize, load_context, save_context)


def three_node():
    # arcs 1->2, 1->3, 2->3 with 1-based labels
    return gr.ingest_edge_list(b"1 2\n1 3\n2 3\n", index_base=1)


def dense_google(g, alpha=0.85, u=None, v=None):
    """Straight transcription of the Google matrix from the raw adjacency."""
    n = g.n
    adj = np.zeros((n, n))
    src, dst, w = g.arcs()
    np.add.at(adj, (dst, src), w)
    outw = adj.sum(axis=0)
    d = (outw == 0).astype(float)
    ghat = np.where(outw > 0, adj / np.where(outw > 0, outw, 1), 0.0)
    u = np.full(n, 1 / n) if u is None else u
    v = np.full(n, 1 / n) if v is None else v
    return alpha * (ghat + np.outer(u, d)) + (1 - alpha) * np.outer(v, np.ones(n))


def test_column_normalize_examples():
    ghat, d = column_normalize(three_node())
    G = ghat.toarray()
    assert np.allclose(G[:, 0], [0, 0.5, 0.5])
    assert np.allclose(G[:, 2], 0)
    assert list(d) == [0, 0, 1]

    ghat, d = column_normalize(gr.from_arcs(1, np.array([], int), np.array([], int)))
    assert ghat.toarray().tolist() == [[0.0]] and list(d) == [1]

    g = gr.from_arcs(3, np.array([0, 0]), np.array([1, 2]), weight=np.array([3.0, 1.0]))
    ghat, _ = column_normalize(g)
    assert np.allclose(ghat.toarray()[1:, 0], [0.75, 0.25])


def test_three_node_hand_values():
    ctx = build_rank_context(three_node(), GoogleParams(0.85))
    assert ctx.entry_G(1, 0) == pytest.approx(0.475, abs=1e-15)
    # i=2, j=3, h=1 in 1-based labels
    assert ctx.diff_A(1, 2, 0) == pytest.approx(0.0, abs=1e-15)
    assert np.allclose(ctx.dense_G(), dense_google(three_node()), atol=1e-15)


@pytest.mark.parametrize("seed", range(3))
def test_entries_match_dense_oracle(seed):
    g = gr.gen_erdos_renyi(100, 0.05, seed=seed, directed=True)
    ctx = build_rank_context(g, GoogleParams(0.85))
    G = dense_google(g)
    A = G - np.eye(g.n)
    B = A @ A
    assert np.abs(A.sum(axis=0)).max() < 1e-12
    rng = np.random.default_rng(seed)
    for i, h in rng.integers(0, g.n, size=(300, 2)):
        assert ctx.entry_A(i, h) == pytest.approx(A[i, h], abs=1e-12)
        assert ctx.entry_B(i, h) == pytest.approx(B[i, h], abs=1e-12)
    for i, j, h in rng.integers(0, g.n, size=(2000, 3)):
        assert abs(ctx.diff_A(i, j, h) - (A[i, h] - A[j, h])) < 1e-12
        assert abs(ctx.diff_B(i, j, h) - (B[i, h] - B[j, h])) < 1e-12


def test_all_triples_small_graph():
    g = gr.gen_preferential_attachment(25, 2, seed=4)
    ctx = build_rank_context(g)
    A = dense_google(g) - np.eye(g.n)
    B = A @ A
    for i, j, h in itertools.product(range(g.n), repeat=3):
        assert abs(ctx.diff_A(i, j, h) - (A[i, h] - A[j, h])) < 1e-12
        assert abs(ctx.diff_B(i, j, h) - (B[i, h] - B[j, h])) < 1e-12


def test_row_sums_er200():
    g = gr.gen_erdos_renyi(200, 0.05, seed=9)
    ctx = build_rank_context(g)
    A = dense_google(g) - np.eye(g.n)
    assert np.abs(ctx.rowsum_A - A.sum(axis=1)).max() < 1e-10
    assert np.abs(ctx.rowsum_B - (A @ A).sum(axis=1)).max() < 1e-10


def test_nonuniform_teleport_and_dangling():
    rng = np.random.default_rng(3)
    g = gr.gen_preferential_attachment(60, 2, seed=3)  # node 0 dangles
    u = rng.random(60); u /= u.sum()
    v = rng.random(60); v /= v.sum()
    ctx = build_rank_context(g, GoogleParams(0.7, u=u, v=v))
    assert not ctx.uniform
    G = dense_google(g, 0.7, u, v)
    assert np.abs(ctx.dense_G() - G).max() < 1e-14
    assert np.abs(ctx.rowsum_B - ((G - np.eye(60)) @ (G - np.eye(60))).sum(axis=1)).max() < 1e-12
    x = rng.random(60)
    assert np.abs(ctx.matvec(x) - G @ x).max() < 1e-13
    assert np.abs(ctx.rmatvec(x) - G.T @ x).max() < 1e-13


def test_structured_zero_for_unrelated_h():
    g = gr.gen_erdos_renyi(80, 0.05, seed=1, directed=True)
    ctx = build_rank_context(g)
    A = ctx.dense_A()
    i, j = 0, 1
    nbrs = set(g.in_neighbors(i)) | set(g.in_neighbors(j))
    for h in range(g.n):
        if h not in nbrs and h not in (i, j) and ctx.dangling[h] == 0:
            assert ctx.diff_A(i, j, h) == 0.0
            assert abs(A[i, h] - A[j, h]) < 1e-15


def test_context_is_immutable():
    ctx = build_rank_context(three_node())
    with pytest.raises(AttributeError):
        ctx.alpha = 0.5
    with pytest.raises(ValueError):
        ctx.rowsum_A[0] = 1.0


def test_capacity_error():
    g = gr.gen_erdos_renyi(100, 0.2, seed=1)
    with pytest.raises(ContextCapacityError, match="budget"):
        build_rank_context(g, nnz_budget=1000)
    # the hub of a star has no out-arcs, so Ghat^2 is empty and always fits
    assert build_rank_context(gr.gen_star(500), nnz_budget=10).ghat2.nnz == 0


def test_bad_teleport_vectors():
    with pytest.raises(ValueError):
        GoogleParams(0.85, u=np.array([0.5, 0.6])).resolve(2)
    with pytest.raises(ValueError):
        GoogleParams(1.0)


def test_counting_proxy():
    ctx = CountingContext(build_rank_context(three_node()))
    ctx.entry_A(0, 1)
    ctx.diff_B(0, 1, 2)
    assert ctx.reads == 3
    ctx.drawing = True
    ctx.diff_A(0, 1, 2)
    assert ctx.draw_reads == 2 and ctx.reads == 5


# -- serialization --------------------------------------------------------

def blob_of(ctx, **kw):
    buf = io.BytesIO()
    save_context(ctx, buf, **kw)
    return buf.getvalue()


def test_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    v = rng.random(50); v /= v.sum()
    for params in (GoogleParams(), GoogleParams(0.9, v=v)):
        ctx = build_rank_context(gr.gen_erdos_renyi(50, 0.1, seed=2), params)
        p = tmp_path / "ctx.bin"
        save_context(ctx, p)
        back = load_context(p)
        assert back.equals(ctx)
        assert load_context(blob_of(ctx)).equals(ctx)


def test_load_errors_are_distinct():
    ctx = build_rank_context(gr.gen_erdos_renyi(30, 0.2, seed=2))
    good = blob_of(ctx)

    with pytest.raises(ContextFormatError) as e:
        load_context(b"XX" + good[2:])
    codes = {e.value.code}

    with pytest.raises(ContextVersionError) as e:
        load_context(blob_of(ctx, version=99))
    codes.add(e.value.code)

    flipped = bytearray(good)
    flipped[len(good) // 2] ^= 0xFF
    with pytest.raises(ContextChecksumError) as e:
        load_context(bytes(flipped))
    codes.add(e.value.code)

    with pytest.raises(ContextTruncatedError) as e:
        load_context(good[:len(good) - 100])
    codes.add(e.value.code)
    assert len(codes) == 4
