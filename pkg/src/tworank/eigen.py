"""
Dense nonsymmetric eigensolver: Householder reduction to upper Hessenberg
form, Francis double-shift QR for the eigenvalues, and inverse iteration on
the Hessenberg matrix for the eigenvectors.
"""
import warnings

import numpy as np
from numba import njit

__all__ = ["hessenberg", "hqr", "hessenberg_inverse_iteration", "eig", "eigvals",
           "EigenConvergenceError", "ConditioningWarning"]


class EigenConvergenceError(ArithmeticError):
    """QR iteration failed to deflate an eigenvalue within the iteration cap."""


class ConditioningWarning(UserWarning):
    """Eigenvalues closer than the cluster tolerance; eigenvectors may be ill-determined."""


@njit(cache=True)
def _hessenberg(a, want_q):
    n = a.shape[0]
    h = a.copy()
    q = np.eye(n) if want_q else np.zeros((1, 1))
    v = np.zeros(n)
    w = np.zeros(n)
    for k in range(n - 2):
        alpha = 0.0
        for i in range(k + 1, n):
            alpha += h[i, k] * h[i, k]
        alpha = np.sqrt(alpha)
        if alpha == 0.0:
            continue
        if h[k + 1, k] > 0:
            alpha = -alpha
        for i in range(k + 1, n):
            v[i] = h[i, k]
        v[k + 1] -= alpha
        vn = 0.0
        for i in range(k + 1, n):
            vn += v[i] * v[i]
        if vn == 0.0:
            continue
        beta = 2.0 / vn
        for j in range(k, n):
            w[j] = 0.0
        for i in range(k + 1, n):
            vi = v[i]
            for j in range(k, n):
                w[j] += vi * h[i, j]
        for i in range(k + 1, n):
            bv = beta * v[i]
            for j in range(k, n):
                h[i, j] -= bv * w[j]
        for i in range(n):
            s = 0.0
            for j in range(k + 1, n):
                s += h[i, j] * v[j]
            s *= beta
            for j in range(k + 1, n):
                h[i, j] -= s * v[j]
        if want_q:
            for i in range(n):
                t = 0.0
                for j in range(k + 1, n):
                    t += q[i, j] * v[j]
                t *= beta
                for j in range(k + 1, n):
                    q[i, j] -= t * v[j]
        for i in range(k + 2, n):
            h[i, k] = 0.0
    return h, q


def hessenberg(a, want_q=True):
    """Return ``(H, Q)`` with ``a = Q H Q^T``; ``Q`` is None unless requested."""
    a = np.ascontiguousarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("square matrix required")
    h, q = _hessenberg(a, want_q)
    return h, (q if want_q else None)


@njit(cache=True)
def _sign(a, b):
    return abs(a) if b >= 0 else -abs(a)


@njit(cache=True)
def _hqr(a, max_its):
    # Francis double-shift QR on an upper Hessenberg matrix (overwritten).
    n = a.shape[0]
    wr = np.zeros(n)
    wi = np.zeros(n)
    anorm = 0.0
    for i in range(n):
        for j in range(max(i - 1, 0), n):
            anorm += abs(a[i, j])
    nn = n - 1
    t = 0.0
    x = y = z = w = p = q = r = s = 0.0
    while nn >= 0:
        its = 0
        while True:
            l = nn
            while l >= 1:
                s = abs(a[l - 1, l - 1]) + abs(a[l, l])
                if s == 0.0:
                    s = anorm
                if abs(a[l, l - 1]) + s == s:
                    a[l, l - 1] = 0.0
                    break
                l -= 1
            x = a[nn, nn]
            if l == nn:
                wr[nn] = x + t
                wi[nn] = 0.0
                nn -= 1
                break
            y = a[nn - 1, nn - 1]
            w = a[nn, nn - 1] * a[nn - 1, nn]
            if l == nn - 1:
                p = 0.5 * (y - x)
                q = p * p + w
                z = np.sqrt(abs(q))
                x += t
                if q >= 0.0:
                    z = p + _sign(z, p)
                    wr[nn - 1] = x + z
                    wr[nn] = x + z
                    if z != 0.0:
                        wr[nn] = x - w / z
                    wi[nn - 1] = 0.0
                    wi[nn] = 0.0
                else:
                    wr[nn - 1] = x + p
                    wr[nn] = x + p
                    wi[nn - 1] = -z
                    wi[nn] = z
                nn -= 2
                break
            if its == max_its:
                return wr, wi, False
            if its == 10 or its == 20:
                # exceptional shift
                t += x
                for i in range(nn + 1):
                    a[i, i] -= x
                s = abs(a[nn, nn - 1]) + abs(a[nn - 1, nn - 2])
                x = 0.75 * s
                y = x
                w = -0.4375 * s * s
            its += 1
            m = nn - 2
            while m >= l:
                z = a[m, m]
                r = x - z
                s = y - z
                p = (r * s - w) / a[m + 1, m] + a[m, m + 1]
                q = a[m + 1, m + 1] - z - r - s
                r = a[m + 2, m + 1]
                s = abs(p) + abs(q) + abs(r)
                p /= s
                q /= s
                r /= s
                if m == l:
                    break
                u = abs(a[m, m - 1]) * (abs(q) + abs(r))
                v = abs(p) * (abs(a[m - 1, m - 1]) + abs(z) + abs(a[m + 1, m + 1]))
                if u + v == v:
                    break
                m -= 1
            for i in range(m + 2, nn + 1):
                a[i, i - 2] = 0.0
                if i != m + 2:
                    a[i, i - 3] = 0.0
            for k in range(m, nn):
                if k != m:
                    p = a[k, k - 1]
                    q = a[k + 1, k - 1]
                    r = 0.0
                    if k != nn - 1:
                        r = a[k + 2, k - 1]
                    x = abs(p) + abs(q) + abs(r)
                    if x != 0.0:
                        p /= x
                        q /= x
                        r /= x
                s = _sign(np.sqrt(p * p + q * q + r * r), p)
                if s != 0.0:
                    if k == m:
                        if l != m:
                            a[k, k - 1] = -a[k, k - 1]
                    else:
                        a[k, k - 1] = -s * x
                    p += s
                    x = p / s
                    y = q / s
                    z = r / s
                    q /= p
                    r /= p
                    for j in range(k, nn + 1):
                        p = a[k, j] + q * a[k + 1, j]
                        if k != nn - 1:
                            p += r * a[k + 2, j]
                            a[k + 2, j] -= p * z
                        a[k + 1, j] -= p * y
                        a[k, j] -= p * x
                    mmin = nn if nn < k + 3 else k + 3
                    for i in range(l, mmin + 1):
                        p = x * a[i, k] + y * a[i, k + 1]
                        if k != nn - 1:
                            p += z * a[i, k + 2]
                            a[i, k + 2] -= p * r
                        a[i, k + 1] -= p * q
                        a[i, k] -= p
    return wr, wi, True


def hqr(h, max_its=60):
    """Eigenvalues ``(wr, wi)`` of an upper Hessenberg matrix.

    Raises :class:`EigenConvergenceError` when some eigenvalue needs more than
    ``max_its`` QR sweeps.
    """
    wr, wi, ok = _hqr(np.array(h, dtype=np.float64, order="C"), max_its)
    if not ok:
        raise EigenConvergenceError(f"QR iteration did not converge within {max_its} sweeps")
    return wr, wi


@njit(cache=True)
def _inverse_iteration(h, mus, n_iter):
    # One right eigenvector of H per shift; Gaussian elimination with partial
    # pivoting specialised to the Hessenberg pattern (only adjacent row swaps).
    n = h.shape[0]
    out = np.zeros((n, mus.shape[0]), dtype=np.complex128)
    lu = np.zeros((n, n), dtype=np.complex128)
    piv = np.zeros(n, dtype=np.bool_)
    mult = np.zeros(n, dtype=np.complex128)
    hnorm = 0.0
    for i in range(n):
        for j in range(n):
            hnorm = max(hnorm, abs(h[i, j]))
    tiny = max(hnorm, 1.0) * 1e-15
    for c in range(mus.shape[0]):
        mu = mus[c]
        for i in range(n):
            for j in range(n):
                lu[i, j] = h[i, j]
            lu[i, i] -= mu
        for k in range(n - 1):
            if abs(lu[k + 1, k]) > abs(lu[k, k]):
                piv[k] = True
                for j in range(k, n):
                    tmp = lu[k, j]
                    lu[k, j] = lu[k + 1, j]
                    lu[k + 1, j] = tmp
            else:
                piv[k] = False
            if lu[k, k] == 0:
                lu[k, k] = tiny
            f = lu[k + 1, k] / lu[k, k]
            mult[k] = f
            if f != 0:
                for j in range(k + 1, n):
                    lu[k + 1, j] -= f * lu[k, j]
            lu[k + 1, k] = 0
        if lu[n - 1, n - 1] == 0:
            lu[n - 1, n - 1] = tiny
        np.random.seed(7919 + c)
        x = np.empty(n, dtype=np.complex128)
        for i in range(n):
            x[i] = 0.5 + np.random.random()
        for it in range(n_iter):
            if it > 0:
                # forward sweep with the stored row swaps and multipliers
                for k in range(n - 1):
                    if piv[k]:
                        tmp = x[k]
                        x[k] = x[k + 1]
                        x[k + 1] = tmp
                    x[k + 1] -= mult[k] * x[k]
            for i in range(n - 1, -1, -1):
                s = x[i]
                for j in range(i + 1, n):
                    s -= lu[i, j] * x[j]
                x[i] = s / lu[i, i]
            nrm = 0.0
            for i in range(n):
                nrm += x[i].real * x[i].real + x[i].imag * x[i].imag
            nrm = np.sqrt(nrm)
            for i in range(n):
                x[i] /= nrm
        for i in range(n):
            out[i, c] = x[i]
    return out


def hessenberg_inverse_iteration(h, mus, n_iter=3):
    """Right eigenvectors of Hessenberg ``h`` for approximate eigenvalues ``mus``."""
    return _inverse_iteration(np.asarray(h, dtype=np.float64), np.asarray(mus, dtype=np.complex128), n_iter)


def eigvals(a, max_its=60):
    """All eigenvalues of a real square matrix as a complex array (unsorted)."""
    h, _ = hessenberg(a, want_q=False)
    wr, wi = hqr(h, max_its)
    return wr + 1j * wi


def eig(a, max_its=60, cluster_tol=1e-8, imag_tol=1e-10):
    """Eigenvalues and right eigenvectors of a real square matrix.

    Only one member of each conjugate pair is solved for; its partner is the
    conjugate vector. Pairs with ``|imag| < imag_tol`` are treated as real.
    Returns ``(lam, X, clustered)`` where ``X[:, k]`` has unit 2-norm and
    ``clustered`` flags eigenvalues within ``cluster_tol`` (relative) of
    another one. A :class:`ConditioningWarning` is issued in that case.
    """
    a = np.asarray(a, dtype=np.float64)
    n = a.shape[0]
    h, q = hessenberg(a, want_q=True)
    wr, wi = hqr(h, max_its)
    wi = np.where(np.abs(wi) < imag_tol, 0.0, wi)
    lam = wr + 1j * wi
    scale = max(np.abs(lam).max(initial=0.0), 1.0)
    gap = np.abs(lam[:, None] - lam[None, :])
    np.fill_diagonal(gap, np.inf)
    clustered = gap.min(axis=1, initial=np.inf) < cluster_tol * scale
    if clustered.any():
        warnings.warn(f"{int(clustered.sum())} eigenvalues lie within {cluster_tol:g} of another; "
                      "eigenvectors for them are not unique", ConditioningWarning, stacklevel=2)
    rep = np.flatnonzero(wi >= 0)
    # nudge shifts off the exact eigenvalue so the factorization stays finite
    shift = lam[rep] + scale * 1e-12 * (1 + 1j * (wi[rep] != 0))
    y = hessenberg_inverse_iteration(h, shift)
    x_rep = q @ y
    x = np.zeros((n, n), dtype=np.complex128)
    x[:, rep] = x_rep
    conj_of = {}
    for k in rep:
        if wi[k] > 0:
            # locate the partner with the conjugate eigenvalue
            cand = np.flatnonzero((wi < 0) & np.isclose(wr, wr[k], rtol=0, atol=1e-12 * scale)
                                  & np.isclose(-wi, wi[k], rtol=0, atol=1e-12 * scale))
            cand = [c for c in cand if c not in conj_of]
            if not cand:
                raise EigenConvergenceError("unpaired complex eigenvalue")
            conj_of[cand[0]] = k
    for c, k in conj_of.items():
        x[:, c] = np.conj(x[:, k])
    # real eigenvalues get real eigenvectors: rotate away the arbitrary phase
    real_idx = np.flatnonzero(wi == 0)
    if real_idx.size:
        cols = x[:, real_idx]
        piv = cols[np.argmax(np.abs(cols), axis=0), np.arange(real_idx.size)]
        cols = (cols * (np.abs(piv) / piv)).real
        cols /= np.linalg.norm(cols, axis=0)
        x[:, real_idx] = cols
    return lam, x, clustered
