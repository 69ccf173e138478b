"""Phase-space data model and the coordinate dictionary between the
unreduced cotangent bundle T*SL_n and the reduced spin Calogero-Moser
chart.

Points of T*G are pairs (x, gamma): a traceless complex matrix (the
left-trivialized momentum, identified with sl_n through the trace form) and
a determinant-one group element. The Calogero-Moser cross-section is the
gauge in which gamma is diagonal; there

    gamma = diag(gamma_i),   gamma_i = exp(s q_i),  s = 1 (ExpQ) or 2 (Exp2Q)
    x_ii  = p_i,             x_ij = mu_ij / (1 - gamma_i / gamma_j)

and mu = x - gamma x gamma^-1 is the moment map of the adjoint action,
with vanishing diagonal.
"""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import SingularDenominator
from .linalg_core import (
    DEFAULT_SEP,
    _frozen,
    as_square,
    check_branch,
    eig_decompose,
    log_nearest,
    weyl_order,
)

# Constants relating the standard Hamiltonian formulas to the trace form, pinned by
# calibrate_normalization (rank1_kks) and asserted in the acceptance suite:
#   * POTENTIAL_SCALE multiplies every root length (alpha, alpha), which is 2
#     in the trace form; the textbook formulas use roots of length 1.
#   * POTENTIAL_SIGN multiplies every product mu_alpha mu_-alpha, read as the
#     matrix product mu_ij mu_ji for alpha = e_i - e_j.
POTENTIAL_SCALE = 0.5
POTENTIAL_SIGN = -1.0
ROOT_LENGTH_SQ = 2.0

SUM_TOL = 1e-9
DIAG_TOL = 1e-8
DENOM_TOL = 1e-12


class Convention(str, Enum):
    """How the torus coordinates q parameterize gamma."""

    EXP_Q = "ExpQ"
    EXP_2Q = "Exp2Q"

    @property
    def scale(self):
        return 1.0 if self is Convention.EXP_Q else 2.0

    @property
    def bracket_constant(self):
        """c in {q_i, p_j} = c (delta_ij - 1/n); measured from the exact flow."""
        return 1.0 / self.scale


class OrbitTag(str, Enum):
    RANK1 = "Rank1"
    GENERAL = "General"


@dataclass(frozen=True)
class CartanData:
    """Type A_{n-1} root data and normalization choices.

    The invariant form is ``nu * tr(XY)``. Chevalley coordinates are taken
    with respect to the trace form: H_i = E_ii - E_{i+1,i+1}, and the root
    e_i - e_j is the index pair (i, j). Every Hamiltonian built from the
    form scales linearly with ``nu``.

    The textbook Calogero-Moser potential agrees with the trace-form Lax
    substitution once each (alpha, alpha) is multiplied by
    ``POTENTIAL_SCALE = 1/2`` and each mu_alpha mu_-alpha by
    ``POTENTIAL_SIGN = -1``.
    """

    n: int
    nu: float = 1.0
    gamma_convention: Convention = Convention.EXP_Q

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be positive")
        if not self.nu > 0:
            raise ValueError("form normalization must be positive")
        object.__setattr__(self, "gamma_convention", Convention(self.gamma_convention))

    @property
    def rank(self):
        return self.n - 1

    @property
    def roots(self):
        return [(i, j) for i in range(self.n) for j in range(self.n) if i != j]

    @property
    def positive_roots(self):
        return [(i, j) for i in range(self.n) for j in range(i + 1, self.n)]

    @property
    def cartan_matrix(self):
        r = self.rank
        a = 2 * np.eye(r, dtype=int)
        for i in range(r - 1):
            a[i, i + 1] = a[i + 1, i] = -1
        return a

    @property
    def scale(self):
        return self.gamma_convention.scale


@dataclass(frozen=True)
class SpinMatrix:
    """Traceless spin matrix mu; rank-1 spins also keep their KKS vectors."""

    mu: np.ndarray
    orbit_tag: OrbitTag = OrbitTag.GENERAL
    phi: np.ndarray = None
    psi: np.ndarray = None

    def __post_init__(self):
        mu = as_square(self.mu)
        scale = 1.0 + np.max(np.abs(mu), initial=0.0)
        if abs(np.trace(mu)) > DIAG_TOL * scale * mu.shape[0]:
            raise ValueError("spin matrix must be traceless")
        object.__setattr__(self, "mu", _frozen(mu))
        object.__setattr__(self, "orbit_tag", OrbitTag(self.orbit_tag))
        if self.phi is not None:
            object.__setattr__(self, "phi", _frozen(self.phi))
            object.__setattr__(self, "psi", _frozen(self.psi))

    @property
    def n(self):
        return self.mu.shape[0]


@dataclass(frozen=True)
class CMPoint:
    """Reduced spin Calogero-Moser point on the diagonal-gamma cross-section."""

    q: np.ndarray
    p_tilde: np.ndarray
    spin: SpinMatrix

    def __post_init__(self):
        q = np.asarray(self.q, dtype=complex).ravel()
        p = np.asarray(self.p_tilde, dtype=complex).ravel()
        spin = self.spin if isinstance(self.spin, SpinMatrix) else SpinMatrix(self.spin)
        n = spin.n
        if q.shape != (n,) or p.shape != (n,):
            raise ValueError("q, p_tilde and spin dimensions disagree")
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(p))):
            raise ValueError("non-finite coordinates")
        if abs(q.sum()) > SUM_TOL * (1 + np.abs(q).sum()):
            raise ValueError("q must sum to zero")
        if abs(p.sum()) > SUM_TOL * (1 + np.abs(p).sum()):
            raise ValueError("p_tilde must sum to zero")
        diag = np.abs(np.diag(spin.mu))
        if diag.size and diag.max() > DIAG_TOL * (1 + np.abs(spin.mu).max()):
            raise ValueError("spin diagonal must vanish on the cross-section")
        object.__setattr__(self, "q", _frozen(q))
        object.__setattr__(self, "p_tilde", _frozen(p))
        object.__setattr__(self, "spin", spin)

    @property
    def n(self):
        return self.q.shape[0]

    @property
    def mu(self):
        return self.spin.mu

    def gamma_diag(self, cartan):
        return np.exp(cartan.scale * self.q)


@dataclass(frozen=True)
class TStarGPoint:
    """Unreduced point (x, gamma) of T*SL_n, left-trivialized."""

    x: np.ndarray
    gamma: np.ndarray

    def __post_init__(self):
        x = as_square(self.x)
        g = as_square(self.gamma)
        if x.shape != g.shape:
            raise ValueError("x and gamma sizes differ")
        if abs(np.trace(x)) > 1e-10 * max(np.linalg.norm(x), 1.0):
            raise ValueError("x must be traceless")
        if abs(np.linalg.det(g) - 1.0) > 1e-10 * max(1.0, np.linalg.norm(g) ** g.shape[0]):
            raise ValueError("gamma must have determinant one")
        object.__setattr__(self, "x", _frozen(x))
        object.__setattr__(self, "gamma", _frozen(g))

    @property
    def n(self):
        return self.x.shape[0]

    @property
    def y(self):
        """gamma x gamma^-1."""
        return self.gamma @ np.linalg.solve(self.gamma.T, self.x.T).T


@dataclass(frozen=True)
class RSPoint:
    """Rational spin Ruijsenaars point in the gauge where x = diag(h)."""

    h: np.ndarray
    g: np.ndarray

    def __post_init__(self):
        h = np.asarray(self.h, dtype=complex).ravel()
        g = as_square(self.g)
        if g.shape[0] != h.shape[0]:
            raise ValueError("h and g sizes differ")
        if abs(h.sum()) > SUM_TOL * (1 + np.abs(h).sum()):
            raise ValueError("h must sum to zero")
        if abs(np.linalg.det(g) - 1.0) > 1e-8 * max(1.0, np.linalg.norm(g) ** g.shape[0]):
            raise ValueError("g must have determinant one")
        object.__setattr__(self, "h", _frozen(h))
        object.__setattr__(self, "g", _frozen(g))

    @classmethod
    def normalized(cls, h, g):
        """Build a point after rescaling ``g`` to unit determinant."""
        g = as_square(g)
        return cls(h, g / np.linalg.det(g) ** (1.0 / g.shape[0]))

    @property
    def n(self):
        return self.h.shape[0]

    def to_tstar(self):
        return TStarGPoint(np.diag(self.h), self.g)


@dataclass(frozen=True)
class RSReducedPoint:
    """Reduced rank-1 Ruijsenaars coordinates: h, the diagonal of g, kappa."""

    h: np.ndarray
    g_diag: np.ndarray
    kappa: complex = field(default=1.0)

    def __post_init__(self):
        h = np.asarray(self.h, dtype=complex).ravel()
        gd = np.asarray(self.g_diag, dtype=complex).ravel()
        if h.shape != gd.shape:
            raise ValueError("h and g_diag sizes differ")
        object.__setattr__(self, "h", _frozen(h))
        object.__setattr__(self, "g_diag", _frozen(gd))
        object.__setattr__(self, "kappa", complex(self.kappa))

    @property
    def n(self):
        return self.h.shape[0]


def root_ratios(q, cartan):
    """Matrix of gamma_i / gamma_j."""
    q = np.asarray(q, dtype=complex)
    return np.exp(cartan.scale * (q[:, None] - q[None, :]))


def _offdiag_mask(n):
    return ~np.eye(n, dtype=bool)


def lax_matrix(cm, cartan, tol=DENOM_TOL):
    """x = diag(p) + sum_{i != j} mu_ij / (1 - gamma_i/gamma_j) E_ij."""
    n = cm.n
    r = root_ratios(cm.q, cartan)
    denom = 1.0 - r
    off = _offdiag_mask(n)
    if n > 1 and np.min(np.abs(denom[off])) < tol:
        raise SingularDenominator("colliding particles: 1 - gamma_i/gamma_j vanishes")
    x = np.diag(cm.p_tilde).astype(complex)
    x[off] = cm.mu[off] / denom[off]
    return x


def moment_map(pt):
    return pt.x - pt.y


def hamiltonian_half_form(pt, cartan=None):
    nu = 1.0 if cartan is None else cartan.nu
    return 0.5 * nu * np.trace(pt.x @ pt.x)


def potential_closed_form(cm, cartan):
    """-sum_{i<j} mu_ij mu_ji / (gamma_ij^1/2 - gamma_ij^-1/2)^2 (trace form)."""
    r = root_ratios(cm.q, cartan)
    mu = cm.mu
    total = 0.0j
    for i, j in cartan.positive_roots:
        total -= mu[i, j] * mu[j, i] / (r[i, j] + 1.0 / r[i, j] - 2.0)
    return total


def kinetic_chevalley(p_tilde, cartan):
    """(p, p)/2 with Chevalley p_i = p~_i - p~_{i+1} and the inverse Cartan matrix."""
    p = np.asarray(p_tilde, dtype=complex)
    if cartan.rank == 0:
        return 0.0j
    pc = p[:-1] - p[1:]
    return 0.5 * pc @ np.linalg.solve(cartan.cartan_matrix.astype(float), pc)


def hamiltonian_cm(cm, cartan, tol=DENOM_TOL):
    """The spin Calogero-Moser Hamiltonian

        H = (p, p)/2 + sum_{alpha > 0} (alpha, alpha) mu_alpha mu_-alpha
                                       / (gamma_{alpha/2} - gamma_{alpha/2}^-1)^2

    with root lengths scaled by POTENTIAL_SCALE, the mu product signed by
    POTENTIAL_SIGN, and everything multiplied by ``nu``.
    """
    r = root_ratios(cm.q, cartan)
    mu = cm.mu
    pot = 0.0j
    for i, j in cartan.positive_roots:
        # (g^1/2 - g^-1/2)^2 = g + 1/g - 2, no square-root branch needed
        denom = r[i, j] + 1.0 / r[i, j] - 2.0
        if abs(denom) < tol:
            raise SingularDenominator(f"collision between particles {i} and {j}")
        prod = POTENTIAL_SIGN * mu[i, j] * mu[j, i]
        pot += POTENTIAL_SCALE * ROOT_LENGTH_SQ * prod / denom
    return cartan.nu * (kinetic_chevalley(cm.p_tilde, cartan) + pot)


def _check_kmax(kmax, n):
    if kmax > n:
        raise ValueError(f"kmax={kmax} exceeds n={n}")


def invariants_x(pt, kmax):
    """(tr x^2 / 2, ..., tr x^kmax / kmax)."""
    _check_kmax(kmax, pt.n)
    out, xk = [], pt.x.copy()
    for k in range(2, kmax + 1):
        xk = xk @ pt.x
        out.append(np.trace(xk) / k)
    return np.array(out, dtype=complex)


def invariants_gamma(pt, kmax):
    """(tr gamma, tr gamma^2 / 2, ..., tr gamma^kmax / kmax)."""
    _check_kmax(kmax, pt.n)
    out, gk = [], np.eye(pt.n, dtype=complex)
    for k in range(1, kmax + 1):
        gk = gk @ pt.gamma
        out.append(np.trace(gk) / k)
    return np.array(out, dtype=complex)


# tr(xy), tr(x^2 y), tr(x y^2)
DEFAULT_WORDS = (((1, 1),), ((2, 1),), ((1, 2),))


def normalize_word(word):
    """Accept a bare (a, b) pair as the one-block word ((a, b),)."""
    if len(word) == 2 and all(isinstance(v, (int, np.integer)) for v in word):
        return (tuple(int(v) for v in word),)
    return tuple((int(a), int(b)) for a, b in word)


def word_letters(word):
    """Expand ((a1, b1), (a2, b2), ...) into a letter string over {x, y}."""
    letters = []
    for a, b in normalize_word(word):
        if a < 0 or b < 0:
            raise ValueError("word exponents must be non-negative")
        letters.extend("x" * a)
        letters.extend("y" * b)
    return letters


def trace_word(x, y, word):
    n = x.shape[0]
    prod = np.eye(n, dtype=complex)
    for a, b in normalize_word(word):
        if a:
            prod = prod @ np.linalg.matrix_power(x, a)
        if b:
            prod = prod @ np.linalg.matrix_power(y, b)
    return np.trace(prod)


def joint_invariants(pt, words=DEFAULT_WORDS):
    """tr(x^a1 y^b1 x^a2 y^b2 ...) with y = gamma x gamma^-1, one per word."""
    x, y = pt.x, pt.y
    return np.array([trace_word(x, y, w) for w in words], dtype=complex)


def lift_to_cotangent(cm, cartan):
    """(lax_matrix(cm), diag(gamma_i)) with gamma normalized to det 1."""
    x = lax_matrix(cm, cartan)
    s = cartan.scale
    gamma = np.diag(np.exp(s * (cm.q - cm.q.mean())))
    return TStarGPoint(x, gamma)


def _canonical_sqrt(z, tol=1e-12):
    # branch with Re > 0, or Im > 0 on the imaginary axis
    w = np.sqrt(complex(z))
    if w.real < -tol * abs(w) or (abs(w.real) <= tol * abs(w) and w.imag < 0):
        w = -w
    return w


def canonicalize_spin(mu, tol=1e-10):
    """Fix the residual torus gauge mu -> D^-1 mu D.

    d_0 = 1; each later index j is tied to the first earlier index i with a
    nonzero entry in row i: when mu_ij mu_ji != 0 both entries become the
    (canonical) square root of that product, otherwise the nonzero entry
    becomes 1. Returns (canonical mu, d).
    """
    mu = np.array(mu, dtype=complex)
    n = mu.shape[0]
    scale = max(np.max(np.abs(mu), initial=0.0), 1.0)
    eps = tol * scale
    d = np.ones(n, dtype=complex)
    for j in range(1, n):
        for i in range(j):
            a, b = mu[i, j], mu[j, i]
            if abs(a) > eps and abs(a * b) > eps * scale:
                d[j] = _canonical_sqrt(a * b) * d[i] / a
                break
            if abs(a) > eps:
                d[j] = d[i] / a
                break
            if abs(b) > eps:
                d[j] = d[i] * b
                break
    out = mu * d[None, :] / d[:, None]
    return out, d


def _match_order(d, ref_vals):
    cost = np.abs(d[:, None] - ref_vals[None, :])
    rows, cols = linear_sum_assignment(cost)
    perm = np.empty(len(d), dtype=int)
    perm[cols] = rows
    return perm


def project_to_cross_section(pt, cartan, sep_threshold=DEFAULT_SEP, q_ref=None):
    """Bring gamma to diagonal form and read off the CM coordinates.

    Returns ``(cm, u)`` where ``u^-1 gamma u`` is diagonal and
    ``u^-1 x u`` is the Lax matrix of ``cm``. Eigenvalues follow the
    (Re, Im) Weyl order; when ``q_ref`` is given they are instead matched to
    that reference and their logarithms continued from it. The centre of
    SL_n is quotiented out by making q sum to zero.
    """
    es = eig_decompose(pt.gamma, sep_threshold)
    u, d = np.array(es.u), np.array(es.d)
    s = cartan.scale
    if q_ref is not None:
        ref = np.asarray(q_ref, dtype=complex)
        perm = _match_order(d, np.exp(s * ref))
        u, d = u[:, perm], d[perm]
        logs = log_nearest(d, s * ref)
    else:
        check_branch(d)
        logs = np.log(d)
    q = logs / s
    q = q - q.mean()
    xr = np.linalg.solve(u, pt.x @ u)
    mu = xr * (1.0 - d[:, None] / d[None, :])
    np.fill_diagonal(mu, 0.0)
    mu_c, dvec = canonicalize_spin(mu)
    xr = xr * dvec[None, :] / dvec[:, None]
    u = u * dvec[None, :]
    cm = CMPoint(q, np.diag(xr).copy(), SpinMatrix(mu_c))
    return cm, u


def canonical_cm(cm):
    """The same reduced point with its spin in canonical torus gauge."""
    mu_c, _ = canonicalize_spin(cm.mu)
    return CMPoint(cm.q, cm.p_tilde, SpinMatrix(mu_c))


def weyl_sorted_cm(cm, cartan):
    """Permute particles into the Weyl order of gamma_i = exp(s q_i)."""
    order = weyl_order(np.exp(cartan.scale * cm.q))
    mu = cm.mu[np.ix_(order, order)]
    return CMPoint(cm.q[order], cm.p_tilde[order], SpinMatrix(mu))
