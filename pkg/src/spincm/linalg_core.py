"""Dense complex n x n kernels: eigensystems, Gaussian decomposition,
matrix exponential and logarithm, traceless projection, centralizers.

Matrices are plain complex ``numpy`` arrays. All functions are pure.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import (
    BranchCut,
    DecompositionFails,
    NearDegenerateSpectrum,
    NoConvergence,
    Overflow,
)

DEFAULT_SEP = 1e-8
PIVOT_TOL = 1e-12
# eigenvector condition above which mat_exp falls back to scaling-and-squaring
EXP_EIG_COND_MAX = 1e3

PLUS_MINUS_ZERO = "plus_minus_zero"
MINUS_ZERO_PLUS = "minus_zero_plus"
GAUSS_ORDERS = (PLUS_MINUS_ZERO, MINUS_ZERO_PLUS)


def as_square(m):
    """Return ``m`` as a finite complex square array (a copy)."""
    a = np.array(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


def _frozen(a):
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


WEYL_TIE_TOL = 1e-9


def weyl_order(d, tie_tol=WEYL_TIE_TOL):
    """Indices sorting ``d`` lexicographically by (real, imaginary) part.

    Real parts closer than ``tie_tol`` times the spectral scale count as
    equal, so conjugate pairs of a real matrix keep a stable order despite
    round-off in their real parts.
    """
    d = np.asarray(d, dtype=complex)
    order = list(np.argsort(d.real, kind="stable"))
    tol = tie_tol * max(1.0, float(np.max(np.abs(d), initial=0.0)))
    out, start = [], 0
    while start < len(order):
        stop = start + 1
        while stop < len(order) and d.real[order[stop]] - d.real[order[start]] <= tol:
            stop += 1
        group = order[start:stop]
        out.extend(sorted(group, key=lambda i: (d.imag[i], d.real[i])))
        start = stop
    return np.array(out, dtype=int)


def min_gap(d):
    d = np.asarray(d)
    if d.size < 2:
        return np.inf
    diff = np.abs(d[:, None] - d[None, :])
    diff[np.diag_indices(d.size)] = np.inf
    return float(diff.min())


@dataclass(frozen=True)
class EigenSystem:
    """Column eigenvectors ``u`` and Weyl-sorted eigenvalues ``d``."""

    u: np.ndarray
    d: np.ndarray
    condition: float

    def reconstruct(self):
        return self.u @ np.diag(self.d) @ np.linalg.inv(self.u)


def _fix_phase(u):
    # largest-modulus entry of each column made real positive
    idx = np.argmax(np.abs(u), axis=0)
    piv = u[idx, np.arange(u.shape[1])]
    return u * (np.abs(piv) / piv)[None, :]


def eig_decompose(m, sep_threshold=DEFAULT_SEP):
    """Eigen-decomposition with deterministic (Re, Im) ordering.

    Raises NearDegenerateSpectrum when the smallest pairwise gap is below
    ``sep_threshold`` times the spectral radius (floored at 1 for tiny
    spectra, so the zero matrix is rejected too).
    """
    a = as_square(m)
    try:
        d, u = np.linalg.eig(a)
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(str(exc)) from exc
    order = weyl_order(d)
    d, u = d[order], u[:, order]
    radius = max(float(np.max(np.abs(d))), 1.0) if d.size else 1.0
    gap = min_gap(d)
    if gap < sep_threshold * radius:
        raise NearDegenerateSpectrum(
            f"eigenvalue gap {gap:.3e} below {sep_threshold:.1e} x radius {radius:.3e}"
        )
    u = _fix_phase(u)
    resid = np.linalg.norm(a @ u - u * d[None, :])
    if not np.isfinite(resid) or resid > 1e-8 * max(np.linalg.norm(a), 1.0):
        raise NoConvergence(f"eigen residual {resid:.3e}")
    return EigenSystem(_frozen(u), _frozen(d), float(np.linalg.cond(u)))


@dataclass(frozen=True)
class GaussFactors:
    """Unitriangular factors and torus part of a Gaussian decomposition.

    With ``order == "plus_minus_zero"`` the product is
    ``b_plus @ b_minus @ diag(b_zero)``; with ``"minus_zero_plus"`` it is
    ``b_minus @ diag(b_zero) @ b_plus``.
    """

    b_plus: np.ndarray
    b_minus: np.ndarray
    b_zero: np.ndarray
    order: str = PLUS_MINUS_ZERO

    def reconstruct(self):
        d = np.diag(self.b_zero)
        if self.order == PLUS_MINUS_ZERO:
            return self.b_plus @ self.b_minus @ d
        return self.b_minus @ d @ self.b_plus


def _ldu(a, tol):
    """LDU without pivoting: a = L diag(D) U with unit L (lower), U (upper)."""
    n = a.shape[0]
    work = a.copy()
    lower = np.eye(n, dtype=complex)
    upper = np.eye(n, dtype=complex)
    diag = np.zeros(n, dtype=complex)
    scale = max(float(np.max(np.abs(a))), np.finfo(float).tiny)
    for k in range(n):
        piv = work[k, k]
        if abs(piv) < tol * scale:
            raise DecompositionFails(
                f"pivot {k} has modulus {abs(piv):.3e} (scale {scale:.3e})"
            )
        diag[k] = piv
        lower[k + 1:, k] = work[k + 1:, k] / piv
        upper[k, k + 1:] = work[k, k + 1:] / piv
        work[k + 1:, k + 1:] -= np.outer(work[k + 1:, k], work[k, k + 1:]) / piv
    return lower, diag, upper


def gauss_decompose(m, order=PLUS_MINUS_ZERO, tol=PIVOT_TOL):
    """Gaussian decomposition without pivoting.

    ``plus_minus_zero``: m = b_plus b_minus diag(b_zero). This is an UL
    factorization m = b_plus L with L lower triangular; it exists iff the
    trailing principal minors det m[k:, k:], k = 1..n-1, are nonzero (and
    det m != 0 for an invertible torus part). Then
    b_zero[k] = det m[k:, k:] / det m[k+1:, k+1:].

    ``minus_zero_plus``: the standard m = b_minus diag(b_zero) b_plus,
    governed by the leading principal minors instead.
    """
    a = as_square(m)
    if order == MINUS_ZERO_PLUS:
        lower, diag, upper = _ldu(a, tol)
        return GaussFactors(_frozen(upper), _frozen(lower), _frozen(diag), order)
    if order != PLUS_MINUS_ZERO:
        raise ValueError(f"unknown Gauss order {order!r}")
    rev = a[::-1, ::-1]
    lower_r, diag_r, upper_r = _ldu(rev, tol)
    # reversing turns lower into upper: a = U diag(D) L
    b_plus = lower_r[::-1, ::-1]
    diag = diag_r[::-1]
    unit_lower = upper_r[::-1, ::-1]
    # U D L = U (D L D^-1) D
    b_minus = (diag[:, None] * unit_lower) / diag[None, :]
    np.fill_diagonal(b_minus, 1.0)
    return GaussFactors(_frozen(b_plus), _frozen(b_minus), _frozen(diag), order)


def mat_exp(m):
    """Matrix exponential.

    Well-conditioned diagonalizable input goes through its eigensystem;
    everything else through scipy's scaling-and-squaring Pade.
    """
    a = as_square(m)
    out = None
    try:
        es = eig_decompose(a)
    except (NearDegenerateSpectrum, NoConvergence):
        es = None
    if es is not None and es.condition < EXP_EIG_COND_MAX:
        with np.errstate(over="ignore", invalid="ignore"):
            out = (es.u * np.exp(es.d)[None, :]) @ np.linalg.inv(es.u)
    if out is None or not np.all(np.isfinite(out)):
        with np.errstate(over="ignore", invalid="ignore"):
            out = scipy.linalg.expm(a)
    if not np.all(np.isfinite(out)):
        raise Overflow("matrix exponential overflowed")
    return out


def check_branch(d, tol=1e-14):
    d = np.asarray(d, dtype=complex)
    for lam in d:
        mag = abs(lam)
        if mag == 0.0:
            raise BranchCut("zero eigenvalue has no logarithm")
        if lam.real < 0 and abs(lam.imag) <= tol * mag:
            raise BranchCut(f"eigenvalue {lam} lies on the negative real axis")


def mat_log_principal(m, sep_threshold=DEFAULT_SEP):
    """Principal logarithm of a matrix with distinct eigenvalues."""
    es = eig_decompose(m, sep_threshold)
    check_branch(es.d)
    return (es.u * np.log(es.d)[None, :]) @ np.linalg.inv(es.u)


def log_nearest(z, reference):
    """Logarithm of ``z`` on the branch nearest ``reference`` (elementwise)."""
    z = np.asarray(z, dtype=complex)
    base = np.log(z)
    if reference is None:
        return base
    ref = np.asarray(reference, dtype=complex)
    turns = np.round((ref.imag - base.imag) / (2 * np.pi))
    return base + 2j * np.pi * turns


def traceless_project(m):
    a = np.array(m, dtype=complex)
    n = a.shape[0]
    return a - (np.trace(a) / n) * np.eye(n)


def coroot_basis(n):
    """Traceless diagonal matrices E_aa - E_{a+1,a+1}, a = 0..n-2."""
    out = []
    for a in range(n - 1):
        h = np.zeros((n, n), dtype=complex)
        h[a, a], h[a + 1, a + 1] = 1.0, -1.0
        out.append(h)
    return out


def centralizer_basis(m, sep_threshold=DEFAULT_SEP):
    """Basis of the centralizer of a regular ``m`` inside sl_n.

    The coroot matrices in the eigenbasis of ``m``, pushed forward by the
    eigenvector matrix.
    """
    es = eig_decompose(m, sep_threshold)
    uinv = np.linalg.inv(es.u)
    return [es.u @ h @ uinv for h in coroot_basis(len(es.d))]
