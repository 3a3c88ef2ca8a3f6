"""Compiled batch comparison kernel (same algorithm as :func:`tworank.comparator.compare`)."""
import numpy as np
from numba import njit, prange

# verdict codes
I_HIGHER = 1
J_HIGHER = -1
TIE = 0
EXC_I = 2
EXC_J = -2

_MASK64 = 0xFFFFFFFFFFFFFFFF


@njit(cache=True, inline="always")
def _splitmix(state):
    state = (state + np.uint64(0x9E3779B97F4A7C15)) & np.uint64(_MASK64)
    z = state
    z = ((z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)) & np.uint64(_MASK64)
    z = ((z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)) & np.uint64(_MASK64)
    return state, z ^ (z >> np.uint64(31))


@njit(cache=True, inline="always")
def _randint(state, n):
    state, x = _splitmix(state)
    return state, np.int64(x % np.uint64(n))


@njit(cache=True, inline="always")
def _lookup(indptr, indices, data, i, h):
    lo = indptr[i]
    hi = indptr[i + 1]
    while lo < hi:
        mid = (lo + hi) >> 1
        c = indices[mid]
        if c < h:
            lo = mid + 1
        elif c > h:
            hi = mid
        else:
            return data[mid]
    return 0.0


@njit(cache=True)
def _diff_a(ctx, i, j, h):
    gp, gi, gd = ctx[0], ctx[1], ctx[2]
    u, v, dng = ctx[6], ctx[7], ctx[8]
    a = ctx[15][0]
    val = (a * (_lookup(gp, gi, gd, i, h) - _lookup(gp, gi, gd, j, h))
           + a * (u[i] - u[j]) * dng[h] + (1.0 - a) * (v[i] - v[j]))
    if h == i:
        val -= 1.0
    if h == j:
        val += 1.0
    return val


@njit(cache=True)
def _diff_b(ctx, i, j, h):
    gp, gi, gd = ctx[0], ctx[1], ctx[2]
    g2p, g2i, g2d = ctx[3], ctx[4], ctx[5]
    u, v, dng = ctx[6], ctx[7], ctx[8]
    gu, gv, gtd, colsum = ctx[9], ctx[10], ctx[11], ctx[12]
    sc = ctx[15]
    a = sc[0]
    b = 1.0 - a
    dtu, dtv, su, sv = sc[1], sc[2], sc[3], sc[4]
    du = u[i] - u[j]
    dv = v[i] - v[j]
    dh = dng[h]
    g2 = (a * a * (_lookup(g2p, g2i, g2d, i, h) - _lookup(g2p, g2i, g2d, j, h))
          + a * a * (gu[i] - gu[j]) * dh + a * b * (gv[i] - gv[j])
          + a * a * du * gtd[h] + a * b * dv * colsum[h]
          + a * a * du * dh * dtu + a * b * du * dtv
          + a * b * dv * dh * su + b * b * dv * sv)
    g1 = a * (_lookup(gp, gi, gd, i, h) - _lookup(gp, gi, gd, j, h)) + a * du * dh + b * dv
    val = g2 - 2.0 * g1
    if h == i:
        val += 1.0
    if h == j:
        val -= 1.0
    return val


@njit(cache=True, inline="always")
def _pool_item(ctx, i, j, uniform, r):
    if not uniform:
        return r
    gp, gi = ctx[0], ctx[1]
    di = gp[i + 1] - gp[i]
    if r < di:
        return gi[gp[i] + r]
    return gi[gp[j] + r - di]


@njit(cache=True)
def _compare_pair(ctx, n, i, j, eps, tol, uniform, state):
    """Returns (verdict, phi, h, extra, z, q, samples, reads, draw_reads, state)."""
    nan = np.nan
    if i == j:
        return TIE, 0.0, -1, -1, nan, nan, 0, 0, 0, state
    gp = ctx[0]
    rsA, rsB = ctx[13], ctx[14]
    if uniform:
        pool = (gp[i + 1] - gp[i]) + (gp[j + 1] - gp[j])
    else:
        pool = n
    reads = 4
    draws = 0
    s_sum = _diff_a(ctx, i, j, i) + _diff_a(ctx, i, j, j)
    extra = -1
    if abs(s_sum) <= tol:
        # enlarge the index set by one node with a nonzero difference
        for _ in range(8):
            if pool == 0:
                break
            state, r = _randint(state, pool)
            k = _pool_item(ctx, i, j, uniform, r)
            draws += 2
            if k != i and k != j:
                dk = _diff_a(ctx, i, j, k)
                if abs(dk) > tol:
                    extra = k
                    s_sum = dk
                    break
        if extra < 0:
            cnt = 0
            for r in range(pool):
                k = _pool_item(ctx, i, j, uniform, r)
                draws += 2
                if k != i and k != j and abs(_diff_a(ctx, i, j, k)) > tol:
                    cnt += 1
            if cnt == 0:
                return TIE, 0.0, -1, -1, nan, nan, 0, reads + draws, draws, state
            state, pick = _randint(state, cnt)
            for r in range(pool):
                k = _pool_item(ctx, i, j, uniform, r)
                if k != i and k != j:
                    dk = _diff_a(ctx, i, j, k)
                    if abs(dk) > tol:
                        if pick == 0:
                            extra = k
                            s_sum = dk
                            break
                        pick -= 1
    # choose h outside the index set with a difference of opposite sign
    h = -1
    d_h = 0.0
    samples = 0
    cap = 4 * pool + 64 if uniform else 4 * ((ctx[0][i + 1] - ctx[0][i]) + (ctx[0][j + 1] - ctx[0][j])) + 64
    if pool > 0:
        while samples < cap:
            state, r = _randint(state, pool)
            k = _pool_item(ctx, i, j, uniform, r)
            samples += 1
            draws += 2
            if k == i or k == j or k == extra:
                continue
            dk = _diff_a(ctx, i, j, k)
            if dk * s_sum < 0 and abs(dk) > tol:
                h = k
                d_h = dk
                break
    if h < 0:
        cnt = 0
        for r in range(pool):
            k = _pool_item(ctx, i, j, uniform, r)
            if k == i or k == j or k == extra:
                continue
            dk = _diff_a(ctx, i, j, k)
            draws += 2
            if dk * s_sum < 0 and abs(dk) > tol:
                cnt += 1
        if cnt > 0:
            state, pick = _randint(state, cnt)
            for r in range(pool):
                k = _pool_item(ctx, i, j, uniform, r)
                if k == i or k == j or k == extra:
                    continue
                dk = _diff_a(ctx, i, j, k)
                if dk * s_sum < 0 and abs(dk) > tol:
                    if pick == 0:
                        h = k
                        d_h = dk
                        break
                    pick -= 1
    if h < 0:
        # every difference outside {i, j} shares the sign of s_sum or vanishes
        pos = False
        neg = False
        for r in range(pool):
            k = _pool_item(ctx, i, j, uniform, r)
            if k == i or k == j:
                continue
            dk = _diff_a(ctx, i, j, k)
            draws += 2
            if dk > tol:
                pos = True
            elif dk < -tol:
                neg = True
        if pos and not neg:
            verdict = EXC_I
        elif neg and not pos:
            verdict = EXC_J
        else:
            verdict = TIE
        return verdict, 0.0, -1, extra, nan, nan, samples, reads + draws, draws, state
    reads += 2
    zeta = (rsA[j] - rsA[i]) + s_sum + d_h
    q = eps + max(0.0, zeta / d_h)
    z = (zeta - q * d_h) / s_sum
    bsum = _diff_b(ctx, i, j, i) + _diff_b(ctx, i, j, j)
    reads += 4
    if extra >= 0:
        bsum += _diff_b(ctx, i, j, extra)
        reads += 2
    reads += 2
    phi = rsB[i] - rsB[j] + (z - 1.0) * bsum + (q - 1.0) * _diff_b(ctx, i, j, h)
    reads += 2
    if phi > 0:
        verdict = I_HIGHER
    elif phi < 0:
        verdict = J_HIGHER
    else:
        verdict = TIE
    return verdict, phi, h, extra, z, q, samples, reads + draws, draws, state


@njit(cache=True, parallel=True)
def compare_batch(ctx, n, pi, pj, seed, eps, tol, uniform):
    m = pi.shape[0]
    verdict = np.zeros(m, dtype=np.int8)
    phi = np.zeros(m)
    hh = np.full(m, -1, dtype=np.int64)
    extra = np.full(m, -1, dtype=np.int64)
    zz = np.full(m, np.nan)
    qq = np.full(m, np.nan)
    samples = np.zeros(m, dtype=np.int64)
    reads = np.zeros(m, dtype=np.int64)
    draw_reads = np.zeros(m, dtype=np.int64)
    for t in prange(m):
        state = (np.uint64(seed) * np.uint64(0x9E3779B97F4A7C15) + np.uint64(t)) & np.uint64(_MASK64)
        state, _ = _splitmix(state)
        res = _compare_pair(ctx, n, pi[t], pj[t], eps, tol, uniform, state)
        verdict[t] = res[0]
        phi[t] = res[1]
        hh[t] = res[2]
        extra[t] = res[3]
        zz[t] = res[4]
        qq[t] = res[5]
        samples[t] = res[6]
        reads[t] = res[7]
        draw_reads[t] = res[8]
    return verdict, phi, hh, extra, zz, qq, samples, reads, draw_reads
