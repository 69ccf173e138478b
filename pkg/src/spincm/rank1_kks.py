"""The minimal (rank-1) coadjoint orbit of sl_n.

Spins on this orbit are mu = phi psi^T - kappa I with kappa = <phi, psi>/n.
Covers the spinless Calogero-Moser reduction, the explicit reconstruction of
rational spin Ruijsenaars points from (h, diag g, kappa), and the
small-epsilon degeneration of tr(exp(eps)) to the rational CM Hamiltonian.
"""

from dataclasses import dataclass

import numpy as np

from .errors import (
    InconsistentData,
    NoConvergence,
    SingularDenominator,
    SingularShiftedDifference,
    SingularSystem,
)
from .linalg_core import _frozen, mat_exp
from .phase_space import (
    POTENTIAL_SCALE,
    POTENTIAL_SIGN,
    ROOT_LENGTH_SQ,
    CartanData,
    CMPoint,
    Convention,
    OrbitTag,
    RSPoint,
    RSReducedPoint,
    SpinMatrix,
    hamiltonian_half_form,
    kinetic_chevalley,
    lift_to_cotangent,
    root_ratios,
)
from .sampling import random_momenta, spread_positions

DENOM_TOL = 1e-12
CONSTRAINT_TOL = 1e-10
# prefactor of the quadratic term of tr(exp(eps)) in the fundamental
# representation, in units where the spin term carries the A2 constants;
# fixed by the s -> 0 limit of degeneration_scan
DEGENERATION_PREFACTOR = 1.0


@dataclass(frozen=True)
class Rank1Spin:
    """KKS vectors of a rank-1 spin. ``reduced`` marks phi_i psi_i = kappa."""

    phi: np.ndarray
    psi: np.ndarray
    reduced: bool = False

    def __post_init__(self):
        phi = np.asarray(self.phi, dtype=complex).ravel()
        psi = np.asarray(self.psi, dtype=complex).ravel()
        if phi.shape != psi.shape:
            raise ValueError("phi and psi sizes differ")
        if not (np.all(np.isfinite(phi)) and np.all(np.isfinite(psi))):
            raise ValueError("non-finite KKS vectors")
        object.__setattr__(self, "phi", _frozen(phi))
        object.__setattr__(self, "psi", _frozen(psi))
        if self.reduced:
            dev = constraint_deviation(self)
            if dev > CONSTRAINT_TOL * (1 + np.abs(phi * psi).max()):
                raise ValueError(f"phi_i psi_i differ from kappa by {dev:.2e}")

    @property
    def n(self):
        return self.phi.shape[0]

    @property
    def pairing(self):
        return complex(self.phi @ self.psi)

    @property
    def kappa(self):
        return self.pairing / self.n


@dataclass(frozen=True)
class DegenerationPoint:
    epsilon: np.ndarray
    h: np.ndarray
    s: float


def constraint_deviation(r1):
    return float(np.max(np.abs(r1.phi * r1.psi - r1.kappa)))


def kks_spin(r1):
    """mu_ij = phi_i psi_j - delta_ij <phi, psi>/n."""
    mu = np.outer(r1.phi, r1.psi) - r1.kappa * np.eye(r1.n)
    if r1.reduced:
        np.fill_diagonal(mu, 0.0)
    return SpinMatrix(mu, OrbitTag.RANK1, r1.phi, r1.psi)


def casimir_rank1(r1):
    """(direct sum_ij mu_ij mu_ji, closed form (n-1)/n <phi, psi>^2)."""
    mu = np.outer(r1.phi, r1.psi) - r1.kappa * np.eye(r1.n)
    direct = np.sum(mu * mu.T)
    closed = (r1.n - 1) / r1.n * r1.pairing**2
    return complex(direct), complex(closed)


def canonical_rank1(r1):
    """Residual torus gauge phi -> d phi, psi -> psi / d fixed by phi_k = 1
    for the first nonzero component k."""
    nz = np.flatnonzero(np.abs(r1.phi) > 0)
    if nz.size == 0:
        return r1
    d = 1.0 / r1.phi[nz[0]]
    return Rank1Spin(r1.phi * d, r1.psi / d, r1.reduced)


def reduced_rank1(phi, kappa):
    """Reduced KKS data with the given phi: psi_i = kappa / phi_i."""
    phi = np.asarray(phi, dtype=complex)
    if np.any(phi == 0):
        raise ValueError("reduced rank-1 data needs nonzero phi")
    return Rank1Spin(phi, kappa / phi, reduced=True)


def rank1_cm_point(q, p, r1):
    if not r1.reduced:
        raise ValueError("cross-section points need reduced KKS data")
    return CMPoint(q, p, kks_spin(r1))


def random_rank1_cm_point(rng, n, kappa=0.5j, spread=1.0, momentum_scale=1.0):
    """Reduced rank-1 point with real q, p and phi; an imaginary kappa gives
    mu_ij mu_ji = kappa^2 < 0, the repulsive real regime."""
    phi = rng.uniform(0.5, 1.5, size=n) * np.exp(0.3j * rng.normal(size=n))
    r1 = canonical_rank1(reduced_rank1(phi, kappa))
    return rank1_cm_point(
        spread_positions(rng, n, spread), random_momenta(rng, n, momentum_scale), r1
    )


def reduced_cm_hamiltonian(q, p, c, root_length_sq=1.0, sign=1.0):
    """<p, p>/2 + c/(4n(n-1)) sum_{i<j} 1/sinh(q_i - q_j)^2.

    With the defaults this is the textbook reduced formula; ``root_length_sq`` and
    ``sign`` rescale the potential (see calibrate_normalization).
    """
    q = np.asarray(q, dtype=complex)
    p = np.asarray(p, dtype=complex)
    n = q.shape[0]
    kin = 0.5 * np.sum(p * p)
    if n < 2:
        return kin
    pot = 0.0j
    for i in range(n):
        for j in range(i + 1, n):
            sh = np.sinh(q[i] - q[j])
            if abs(sh) < DENOM_TOL:
                raise SingularDenominator(f"collision between particles {i} and {j}")
            pot += 1.0 / sh**2
    return kin + sign * root_length_sq * c / (4 * n * (n - 1)) * pot


def calibrate_normalization(points, cartan):
    """Measure the constants tying the standard Hamiltonian formulas to tr(x^2)/2.

    For each reduced rank-1 point the potential part of tr(x^2)/2 is compared
    with (a) the trace-form root potential sum (alpha, alpha) mu_ij mu_ji /
    (gamma^1/2 - gamma^-1/2)^2 and (b) the reduced sinh potential. Returns
    a dict with the fitted scale (>0), sign (+-1), the reduced-formula ratio
    and the largest spread of the pointwise ratios.
    """
    if cartan.gamma_convention is not Convention.EXP_2Q:
        raise ValueError("the reduced potential uses sinh(q_i - q_j): Exp2Q only")
    root_ratios_, reduced_ratios = [], []
    for cm in points:
        target = hamiltonian_half_form(lift_to_cotangent(cm, cartan)) / cartan.nu
        target -= kinetic_chevalley(cm.p_tilde, cartan)
        r = root_ratios(cm.q, cartan)
        unit = sum(
            ROOT_LENGTH_SQ * cm.mu[i, j] * cm.mu[j, i] / (r[i, j] + 1 / r[i, j] - 2)
            for i, j in cartan.positive_roots
        )
        c = complex(np.sum(cm.mu * cm.mu.T))
        reduced = reduced_cm_hamiltonian(cm.q, cm.p_tilde, c) - 0.5 * np.sum(cm.p_tilde**2)
        root_ratios_.append(target / unit)
        reduced_ratios.append(target / reduced)
    root_ratios_ = np.array(root_ratios_)
    reduced_ratios = np.array(reduced_ratios)
    ratio = complex(np.mean(root_ratios_))
    spread = max(np.ptp(root_ratios_.real), np.ptp(reduced_ratios.real),
                 np.abs(root_ratios_.imag).max(), np.abs(reduced_ratios.imag).max())
    return {
        "scale": abs(ratio.real),
        "sign": float(np.sign(ratio.real)),
        "reduced_ratio": float(np.mean(reduced_ratios).real),
        "spread": float(spread),
    }


def committed_reduced_ratio():
    """Ratio the committed constants predict for the reduced sinh formula."""
    return POTENTIAL_SIGN * POTENTIAL_SCALE * ROOT_LENGTH_SQ


# rational spin Ruijsenaars reconstruction


def _shifted_differences(h, kappa):
    h = np.asarray(h, dtype=complex)
    shifted = h[:, None] - h[None, :] + kappa
    if np.min(np.abs(shifted)) < DENOM_TOL * max(1.0, np.abs(h).max()):
        raise SingularShiftedDifference("some h_i - h_j + kappa vanishes")
    return shifted


def rs_residual(h, r1, g):
    """max_ij |(h_i - h_j) g_ij - (mu g)_ij| for mu = phi psi^T - kappa I."""
    h = np.asarray(h, dtype=complex)
    g = np.asarray(g, dtype=complex)
    mu = np.outer(r1.phi, r1.psi) - r1.kappa * np.eye(r1.n)
    return float(np.max(np.abs((h[:, None] - h[None, :]) * g - mu @ g)))


def rs_consistency(h, r1):
    """sum_i phi_i psi_i / (h_i - h_j + kappa) - 1, one entry per j."""
    shifted = _shifted_differences(h, r1.kappa)
    w = r1.phi * r1.psi
    return (w[:, None] / shifted).sum(axis=0) - 1.0


def solve_rs_products(h, kappa, cond_max=1e12):
    """Solve sum_i w_i / (h_i - h_j + kappa) = 1 (all j) for w_i = phi_i psi_i.

    The system is square; its solutions satisfy sum_i w_i = n kappa.
    """
    shifted = _shifted_differences(h, kappa)
    cauchy = (1.0 / shifted).T  # row j, column i
    cond = np.linalg.cond(cauchy)
    if not np.isfinite(cond) or cond > cond_max:
        raise SingularSystem(f"Cauchy matrix condition {cond:.2e}")
    return np.linalg.solve(cauchy, np.ones(len(shifted), dtype=complex))


def rs_reconstruct_g(h, r1, g_diag, normalize=False, tol=1e-10, check=True):
    """g_ij = phi_i / phi_j * kappa g_jj / (h_i - h_j + kappa).

    With ``check`` the result must satisfy the defining relation, which
    holds exactly when the consistency equations do.
    """
    h = np.asarray(h, dtype=complex)
    gd = np.asarray(g_diag, dtype=complex)
    if np.any(r1.phi == 0):
        raise SingularDenominator("reconstruction needs nonzero phi")
    kappa = r1.kappa
    if abs(kappa) == 0:
        g = np.diag(gd)
    else:
        shifted = _shifted_differences(h, kappa)
        g = (r1.phi[:, None] / r1.phi[None, :]) * kappa * gd[None, :] / shifted
    res = rs_residual(h, r1, g)
    scale = max(1.0, np.abs(g).max()) * max(1.0, np.abs(h).max(), abs(kappa))
    if check and res > tol * scale:
        raise InconsistentData(f"relation residual {res:.2e}; consistency condition fails")
    if normalize:
        g = g / np.linalg.det(g) ** (1.0 / len(h))
    return g


def rs_hamiltonians(h, g_diag, kappa):
    """(tr g, tr g^2) from the reduced coordinates."""
    gd = np.asarray(g_diag, dtype=complex)
    shifted = _shifted_differences(h, kappa)
    tr2 = kappa**2 * np.sum(gd[:, None] * gd[None, :] / (shifted * shifted.T))
    return complex(gd.sum()), complex(tr2)


def rs_point(h, g_diag, kappa, phi=None):
    """Full RS point from reduced data; phi defaults to all ones."""
    h = np.asarray(h, dtype=complex)
    w = solve_rs_products(h, kappa)
    phi = np.ones(len(h), dtype=complex) if phi is None else np.asarray(phi, dtype=complex)
    r1 = Rank1Spin(phi, w / phi)
    return RSPoint.normalized(h, rs_reconstruct_g(h, r1, g_diag)), r1


def random_rs_reduced(rng, n, kappa=0.7, spread=1.0):
    """Reduced RS data with real distinct h and positive diag(g)."""
    h = spread_positions(rng, n, spread, min_gap=0.5)
    gd = rng.uniform(0.5, 2.0, size=n)
    return RSReducedPoint(h, gd, kappa)


# degeneration to rational Calogero-Moser


def _check_regular(h):
    h = np.asarray(h, dtype=complex)
    diff = h[:, None] - h[None, :]
    np.fill_diagonal(diff, 1.0)
    if np.min(np.abs(diff)) < DENOM_TOL:
        raise SingularDenominator("h is not regular")
    return diff


def epsilon_leading(mu, h):
    """eps_ij = mu_ij / (h_i - h_j) off the diagonal, zero on it."""
    mu = np.asarray(mu.mu if isinstance(mu, SpinMatrix) else mu, dtype=complex)
    diff = _check_regular(h)
    eps = mu / diff
    np.fill_diagonal(eps, 0.0)
    return eps


def conjugation_defect(eps, h):
    """h - exp(eps) h exp(-eps)."""
    hd = np.diag(np.asarray(h, dtype=complex))
    e = mat_exp(eps)
    return hd - e @ hd @ np.linalg.inv(e)


def epsilon_exact(mu, h, eps_cartan=None, tol=1e-15, max_iter=200):
    """Solve offdiag(h - exp(eps) h exp(-eps)) = offdiag(mu) with diag(eps) fixed.

    Fixed point on (h_i - h_j) eps_ij = mu_ij - T_ij(eps), where T collects
    the terms of order two and higher in eps.
    """
    mu = np.asarray(mu.mu if isinstance(mu, SpinMatrix) else mu, dtype=complex)
    h = np.asarray(h, dtype=complex)
    diff = _check_regular(h)
    n = len(h)
    cart = np.zeros(n, dtype=complex) if eps_cartan is None else np.asarray(eps_cartan, dtype=complex)
    off = ~np.eye(n, dtype=bool)
    eps = epsilon_leading(mu, h) + np.diag(cart)
    for _ in range(max_iter):
        linear = diff * eps  # [h, eps]
        higher = conjugation_defect(eps, h) - linear
        new = np.diag(cart).astype(complex)
        new[off] = (mu[off] - higher[off]) / diff[off]
        step = np.max(np.abs(new - eps))
        eps = new
        if step <= tol * max(1.0, np.abs(eps).max()):
            return eps
    raise NoConvergence("epsilon fixed point did not converge; reduce the spin scale")


def degeneration_target(mu, h, eps_cartan=None):
    """Q* = (eps_c, eps_c)/2 + K sum_{i<j} (alpha, alpha) mu_ij mu_ji / (h_i - h_j)^2
    with the committed root scale and sign."""
    mu = np.asarray(mu.mu if isinstance(mu, SpinMatrix) else mu, dtype=complex)
    h = np.asarray(h, dtype=complex)
    n = len(h)
    cart = np.zeros(n) if eps_cartan is None else np.asarray(eps_cartan, dtype=complex)
    pot = 0.0j
    for i in range(n):
        for j in range(i + 1, n):
            pot += POTENTIAL_SCALE * ROOT_LENGTH_SQ * POTENTIAL_SIGN * mu[i, j] * mu[j, i] / (h[i] - h[j]) ** 2
    return complex(0.5 * np.sum(cart * cart) + DEGENERATION_PREFACTOR * pot)


def trace_exp_minus_n(eps):
    """tr(exp(eps)) - n without cancellation, through expm1 of the spectrum."""
    lam = np.linalg.eigvals(np.asarray(eps, dtype=complex))
    return complex(np.sum(np.expm1(lam)))


def degeneration_scan(mu, h, s_values, eps_cartan=None):
    """Tabulate Q(s) = (tr exp(eps(s)) - n - tr eps(s)) / s^2 against Q*.

    eps(s) solves the defect equation for s*mu with Cartan part s*eps_cartan.
    Returns a list of rows {s, Q, Q_star, abs_err}.
    """
    mu = np.asarray(mu.mu if isinstance(mu, SpinMatrix) else mu, dtype=complex)
    cart = None if eps_cartan is None else np.asarray(eps_cartan, dtype=complex)
    q_star = degeneration_target(mu, h, cart)
    rows = []
    for s in s_values:
        eps = epsilon_exact(s * mu, h, None if cart is None else s * cart)
        q = (trace_exp_minus_n(eps) - np.trace(eps)) / s**2
        rows.append({"s": float(s), "Q": complex(q), "Q_star": q_star, "abs_err": float(abs(q - q_star))})
    return rows


def loglog_slope(rows):
    s = np.array([r["s"] for r in rows])
    err = np.array([r["abs_err"] for r in rows])
    return float(np.polyfit(np.log(s), np.log(err), 1)[0])


def random_degeneration_data(rng, n, spin_scale=1.0):
    """Generic (mu, h, eps_c): rank-1 spin with zero diagonal, real h."""
    phi = rng.normal(size=n) + 1j * rng.normal(size=n)
    kappa = spin_scale * (rng.normal() + 1j * rng.normal())
    mu = kks_spin(reduced_rank1(phi, kappa)).mu
    h = spread_positions(rng, n, 1.0, min_gap=0.5)
    cart = rng.normal(size=n)
    return mu, h, cart - cart.mean()


def cartan_for(n, convention=Convention.EXP_2Q):
    return CartanData(n, gamma_convention=convention)
