"""
Desk-scale spectral analysis of ``A = G - I``.

The real block-diagonal decomposition ``A = P diag(lam_1..lam_r, A_1..A_s) P^-1``
puts real eigenvectors first (eigenvalues descending, so the zero eigenvalue
leads) and then, per complex pair ``lr +- i li`` with ``li > 0``, the columns
``(Re p, Im p)`` with 2x2 block ``[[lr, li], [-li, lr]]``. Pairs are ordered
by real part, descending.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .eigen import ConditioningWarning, eig, eigvals

__all__ = [
    "SpectralDecomposition",
    "SpectralParameterError",
    "UndefinedAngleError",
    "ConstraintViolationError",
    "ThetaReport",
    "decompose",
    "spectrum",
    "curve_eval",
    "derivative_identities",
    "product_identity_vectors",
    "product_identity_check",
    "theta",
    "pi_estimate",
    "theta_report",
    "IMAG_TOL",
    "MAX_DECOMPOSE_N",
]

IMAG_TOL = 1e-10
MAX_DECOMPOSE_N = 2000
MAX_BASIS_COND = 1e6


class SpectralParameterError(ValueError):
    pass


class UndefinedAngleError(ValueError):
    """Angle requested between vectors where one is zero."""


class ConstraintViolationError(ValueError):
    """Weight vector does not satisfy the equal-coordinate / equal-moment constraints."""


@dataclass
class SpectralDecomposition:
    """Real block-diagonal eigendecomposition (``P`` and ``V`` absent in eigenvalue-only mode)."""

    real_eigs: np.ndarray
    complex_eigs: np.ndarray  # shape (s, 2): (real part, imaginary part > 0)
    P: Optional[np.ndarray] = None
    V: Optional[np.ndarray] = None
    warnings: list = field(default_factory=list)
    basis_cond: float = float("nan")

    @property
    def r(self):
        return len(self.real_eigs)

    @property
    def s(self):
        return len(self.complex_eigs)

    @property
    def n(self):
        return self.r + 2 * self.s

    @classmethod
    def from_eigenvalues(cls, lam, imag_tol=IMAG_TOL):
        """Eigenvalue-only decomposition from an arbitrary (complex) spectrum."""
        lam = np.asarray(lam, dtype=np.complex128)
        is_real = np.abs(lam.imag) < imag_tol
        real = np.sort(lam[is_real].real)[::-1]
        upper = lam[~is_real & (lam.imag > 0)]
        order = np.argsort(-upper.real, kind="stable")
        cplx = np.column_stack([upper.real[order], upper.imag[order]]) if upper.size else np.zeros((0, 2))
        if 2 * len(cplx) != int((~is_real).sum()):
            raise SpectralParameterError("complex eigenvalues do not come in conjugate pairs")
        return cls(real, cplx)

    def block_matrix(self):
        """``diag(lam_1..lam_r, A_1..A_s)`` as a dense array."""
        lam = np.zeros((self.n, self.n))
        lam[np.arange(self.r), np.arange(self.r)] = self.real_eigs
        for k, (lr, li) in enumerate(self.complex_eigs):
            a = self.r + 2 * k
            lam[a:a + 2, a:a + 2] = [[lr, li], [-li, lr]]
        return lam

    @property
    def well_conditioned(self):
        """False when the basis is numerically singular (a defective or nearly defective ``A``)."""
        return bool(self.basis_cond < MAX_BASIS_COND)

    def reconstruct(self):
        self._need_basis()
        return self.P @ self.block_matrix() @ self.V

    def _need_basis(self):
        if self.P is None:
            raise SpectralParameterError("decomposition was computed without eigenvectors")


def spectrum(dense_A, imag_tol=IMAG_TOL) -> SpectralDecomposition:
    """Eigenvalues only (no basis); the fast path for angle statistics."""
    return SpectralDecomposition.from_eigenvalues(eigvals(dense_A), imag_tol)


def decompose(dense_A, imag_tol=IMAG_TOL, cluster_tol=1e-8) -> SpectralDecomposition:
    """Full real block-diagonal decomposition with basis ``P`` and ``V = P^-1``.

    The first column is scaled to sum to one so that it is the nonnegative
    stationary direction; every other column has unit 2-norm.
    """
    a = np.asarray(dense_A, dtype=np.float64)
    n = a.shape[0]
    if n > MAX_DECOMPOSE_N:
        raise SpectralParameterError(f"decomposition limited to n <= {MAX_DECOMPOSE_N}")
    notes = []
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ConditioningWarning)
        lam, x, clustered = eig(a, cluster_tol=cluster_tol, imag_tol=imag_tol)
    notes += [str(w.message) for w in caught if issubclass(w.category, ConditioningWarning)]
    is_real = lam.imag == 0
    real_idx = np.flatnonzero(is_real)
    real_idx = real_idx[np.argsort(-lam[real_idx].real, kind="stable")]
    up_idx = np.flatnonzero(lam.imag > 0)
    up_idx = up_idx[np.argsort(-lam[up_idx].real, kind="stable")]
    cols = [x[:, k].real for k in real_idx]
    for k in up_idx:
        v = x[:, k]
        cols += [v.real, v.imag]
    P = np.column_stack(cols)
    if len(real_idx):
        s = P[:, 0].sum()
        if s != 0:
            P[:, 0] /= s
    V = np.linalg.inv(P)
    cond = float(np.linalg.cond(P))
    if not cond < MAX_BASIS_COND:
        notes.append(f"eigenvector basis has condition number {cond:.2g}; A is (nearly) defective and "
                     "the modal form is unreliable")
    cplx = np.column_stack([lam[up_idx].real, lam[up_idx].imag]) if up_idx.size else np.zeros((0, 2))
    if not np.isclose(lam[real_idx[0]].real if len(real_idx) else np.nan, 0.0, atol=1e-8):
        notes.append("leading real eigenvalue is not zero; input is not of the form G - I")
    dec = SpectralDecomposition(lam[real_idx].real.copy(), cplx, P, V, notes, cond)
    return dec


def _modal_exp(dec, t):
    # exp(block_matrix * t) applied coordinatewise
    e = np.zeros((dec.n, dec.n))
    e[np.arange(dec.r), np.arange(dec.r)] = np.exp(dec.real_eigs * t)
    for k, (lr, li) in enumerate(dec.complex_eigs):
        a = dec.r + 2 * k
        c, s = math.cos(li * t), math.sin(li * t)
        e[a:a + 2, a:a + 2] = math.exp(lr * t) * np.array([[c, s], [-s, c]])
    return e


def curve_eval(dec: SpectralDecomposition, w, t) -> np.ndarray:
    """``F(A, w, t) = P exp(Lambda t) V w``.

    Negative ``t`` is accepted so that central differences around zero work.
    """
    dec._need_basis()
    coords = dec.V @ np.asarray(w, dtype=np.float64)
    return dec.P @ (_modal_exp(dec, t) @ coords)


def derivative_identities(dec: SpectralDecomposition, w, h1=1e-5, h2=1e-3):
    """Finite-difference check of ``F'(0) = A w`` and ``F''(0) = A^2 w``.

    First derivative by central difference, second by the 5-point stencil.
    Relative errors use the max-norm of the exact value; when that is zero
    the absolute error is reported instead.
    """
    w = np.asarray(w, dtype=np.float64)
    A = dec.reconstruct()
    aw = A @ w
    a2w = A @ aw
    f = lambda t: curve_eval(dec, w, t)
    d1 = (f(h1) - f(-h1)) / (2 * h1)
    d2 = (-f(2 * h2) + 16 * f(h2) - 30 * f(0.0) + 16 * f(-h2) - f(-2 * h2)) / (12 * h2 * h2)

    def rel(x, ref):
        scale = np.abs(ref).max()
        err = np.abs(x - ref).max()
        return err / scale if scale > 0 else err

    return {
        "f0_error": float(np.abs(f(0.0) - w).max()),
        "d1_rel_error": float(rel(d1, aw)),
        "d2_rel_error": float(rel(d2, a2w)),
    }


def _modes(dec):
    # nonleading spectral modes as coordinate groups
    real = dec.real_eigs[1:]
    return real, dec.complex_eigs


def _coeff_rows(dec, m):
    """Rows ``p = 0..m``: coefficient of each reduced coordinate in ``(A^p w)_i - (A^p w)_j``.

    Reduced coordinates: ``w_k tau_k`` per nonleading real mode, then the
    pair ``(gamma_1, gamma_2)`` per complex mode.
    """
    real, cplx = _modes(dec)
    n_coord = len(real) + 2 * len(cplx)
    C = np.zeros((m + 1, n_coord))
    mu = cplx[:, 0] + 1j * cplx[:, 1]
    for p in range(m + 1):
        C[p, :len(real)] = real ** p
        z = mu ** p
        C[p, len(real)::2] = z.real
        C[p, len(real) + 1::2] = z.imag
    return C


def _eliminated(dec, m):
    r1 = dec.r - 1
    s = dec.s
    if m == 2:
        if s >= 1:
            return [r1], "case1"
        return [0], "case2"
    if r1 >= m - 1 and (s == 0 or dec.real_eigs[m - 1] >= dec.complex_eigs[0, 0]):
        return list(range(m - 1)), "case2"
    # complex coordinates first, then reals
    order = list(range(r1, r1 + 2 * s)) + list(range(r1))
    return sorted(order[:m - 1]), "case1"


def product_identity_vectors(dec: SpectralDecomposition, m: int = 2):
    """``(lambda_bar_1, lambda_bar_2, case_tag)`` for sign-mirror order ``m``.

    Writing the constraints for ``k = 1..m-1`` as linear relations among the
    reduced coordinates and eliminating ``m - 1`` of them leaves
    ``Delta = lambda_bar_1 . beta`` and ``phi = lambda_bar_2 . beta`` over the
    ``n - m`` remaining coordinates ``beta``.
    """
    if m < 2:
        raise SpectralParameterError("order m must be at least 2")
    if dec.n < m + 2:
        raise SpectralParameterError(f"need n >= m + 2 (n = {dec.n}, m = {m})")
    if dec.r < 1:
        raise SpectralParameterError("spectrum has no real eigenvalue")
    C = _coeff_rows(dec, m)
    E, tag = _eliminated(dec, m)
    F = np.setdiff1d(np.arange(C.shape[1]), E)
    cons = C[1:m]
    X = np.linalg.solve(cons[:, E], cons[:, F])
    lb1 = -(C[0, F] - C[0, E] @ X)
    lb2 = C[m, F] - C[m, E] @ X
    return lb1, lb2, tag


def _elim_free(dec, m):
    C = _coeff_rows(dec, m)
    E, _ = _eliminated(dec, m)
    return np.setdiff1d(np.arange(C.shape[1]), E)


def reduced_coordinates(dec: SpectralDecomposition, w, i, j):
    """``w_k tau_k`` for nonleading real modes and ``gamma`` pairs for complex ones,
    plus ``Delta(inf) = w_1 tau_1``."""
    dec._need_basis()
    c = dec.V @ np.asarray(w, dtype=np.float64)
    tau = dec.P[i] - dec.P[j]
    r = dec.r
    y = [c[1:r] * tau[1:r]]
    ca, cb = c[r::2], c[r + 1::2]
    ta, tb = tau[r::2], tau[r + 1::2]
    g = np.empty(2 * dec.s)
    g[0::2] = ca * ta + cb * tb
    g[1::2] = cb * ta - ca * tb
    y.append(g)
    return np.concatenate(y), float(c[0] * tau[0])


def product_identity_check(dec: SpectralDecomposition, w, i, j, m: int = 2, tol=1e-8):
    """Relative residual of ``phi * Delta(inf) = (l1 . beta)(l2 . beta)``.

    ``phi = (A^m w)_i - (A^m w)_j`` is computed from the reconstructed ``A``;
    ``w`` must satisfy ``w_i = w_j`` and ``(A^k w)_i = (A^k w)_j`` for
    ``k < m`` to relative tolerance ``tol``.
    """
    w = np.asarray(w, dtype=np.float64)
    A = dec.reconstruct()
    scale = max(np.abs(w).max(), 1e-300)
    if abs(w[i] - w[j]) > tol * scale:
        raise ConstraintViolationError("w_i != w_j")
    x = w
    for k in range(1, m):
        x = A @ x
        if abs(x[i] - x[j]) > tol * max(np.abs(x).max(), scale):
            raise ConstraintViolationError(f"(A^{k} w)_i != (A^{k} w)_j")
    x = A @ x
    phi = x[i] - x[j]
    y, delta = reduced_coordinates(dec, w, i, j)
    lb1, lb2, _ = product_identity_vectors(dec, m)
    beta = y[_elim_free(dec, m)]
    lhs = phi * delta
    rhs = (lb1 @ beta) * (lb2 @ beta)
    return abs(lhs - rhs) / max(abs(lhs), 1e-300)


def theta(lambda_bar_1, lambda_bar_2) -> float:
    """Angle between the two vectors, in degrees."""
    a = np.asarray(lambda_bar_1, dtype=np.float64)
    b = np.asarray(lambda_bar_2, dtype=np.float64)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise UndefinedAngleError("angle undefined for a zero vector")
    c = float(a @ b) / (na * nb)
    return math.degrees(math.acos(min(1.0, max(-1.0, c))))


def pi_estimate(theta_deg: float) -> float:
    return 1.0 - theta_deg / 180.0


@dataclass
class ThetaReport:
    theta_deg: float
    case_tag: str
    m: int
    pi_estimate: float
    lambda_bar_1: np.ndarray = field(repr=False)
    lambda_bar_2: np.ndarray = field(repr=False)

    def to_record(self, **meta):
        rec = dict(meta)
        rec.update(m=self.m, theta_deg=self.theta_deg, pi_estimate=self.pi_estimate, case_tag=self.case_tag)
        return rec

    def to_json(self, **meta):
        return json.dumps(self.to_record(**meta))


def theta_report(dec: SpectralDecomposition, m: int = 2) -> ThetaReport:
    lb1, lb2, tag = product_identity_vectors(dec, m)
    th = theta(lb1, lb2)
    return ThetaReport(th, tag, m, pi_estimate(th), lb1, lb2)
