"""Poisson brackets and Hamiltonian vector fields.

Sign convention: dF/dt = {F, H} along the flow of H.

Reduced spin Calogero-Moser chart (q, p~, mu), with c = 1/s the bracket
constant of the gamma convention and P the traceless projection:

    {q_i, p~_j} = c (delta_ij - 1/n)
    {mu_ij, mu_kl} = delta_il mu_kj - delta_jk mu_il
    i.e. {F, G}_spin = tr(mu [grad F, grad G]),  (grad F)_ji = dF/dmu_ij

T*SL_n, left-trivialized, with trace-dual gradients defined by
dF = tr(Gx dx) + tr(GL gamma^-1 dgamma) (both traceless):

    Cotangent:  {F, G} = tr(GL_F Gx_G) - tr(Gx_F GL_G) - tr(x [Gx_F, Gx_G])
    PStructure, on pairs (mu, gamma) with GR = gamma GL gamma^-1:
        {F, G} = -tr(mu [Gmu_F, Gmu_G])
                 - tr(Gmu_F (GL_G - GR_G)) + tr(Gmu_G (GL_F - GR_F))
    The map (x, gamma) -> (x - gamma x gamma^-1, gamma) is Poisson from the
    first to the second, and functions of gamma alone commute.

Reduced rank-1 Ruijsenaars coordinates (h, g_ii), kappa a Casimir:

    {h_i, h_j} = 0,   {h_i, g_jj} = (delta_ij - 1/n) g_jj,
    {g_ii, g_jj} = rho_ij g_ii g_jj,
    rho_ij = 2 kappa^2 / ((h_i - h_j) (kappa^2 - (h_i - h_j)^2))
"""

from dataclasses import dataclass
from enum import Enum
from itertools import product as iproduct
from typing import Callable, Optional

import numpy as np

from .errors import StepTooLarge
from .linalg_core import mat_exp
from .phase_space import (
    CMPoint,
    RSReducedPoint,
    SpinMatrix,
    TStarGPoint,
    hamiltonian_cm,
    lift_to_cotangent,
    normalize_word,
    root_ratios,
    word_letters,
)

CM, TSTAR, PSTRUCT, RS_REDUCED = "cm", "tstar", "pstructure", "rs_reduced"
DOMAINS = (CM, TSTAR, PSTRUCT, RS_REDUCED)

FD_REL_STEP = 1e-5
FD_TOL = 1e-6


class TStarStructure(str, Enum):
    COTANGENT = "Cotangent"
    PSTRUCTURE = "PStructure"


@dataclass(frozen=True)
class CMGradient:
    dq: np.ndarray
    dp: np.ndarray
    dmu: np.ndarray


@dataclass(frozen=True)
class TGGradient:
    gx: np.ndarray
    gl: np.ndarray


@dataclass(frozen=True)
class RSGradient:
    dh: np.ndarray
    dg: np.ndarray


@dataclass(frozen=True)
class CMTangent:
    dq: np.ndarray
    dp: np.ndarray
    dmu: np.ndarray


@dataclass(frozen=True)
class TGTangent:
    """Velocity (dx/dt, gamma^-1 dgamma/dt)."""

    dx: np.ndarray
    xi: np.ndarray


@dataclass(frozen=True)
class RSTangent:
    dh: np.ndarray
    dg: np.ndarray


@dataclass(frozen=True)
class Observable:
    """Scalar function of a phase point with a domain tag and an optional
    analytic gradient. Without ``grad`` the analytic brackets fall back to
    finite differences."""

    fn: Callable
    domain: str
    grad: Optional[Callable] = None
    name: str = ""

    def __post_init__(self):
        if self.domain not in DOMAINS:
            raise ValueError(f"unknown domain {self.domain!r}")

    def __call__(self, pt):
        return complex(self.fn(pt))


def _proj(v):
    v = np.asarray(v, dtype=complex)
    return v - v.mean()


def _tl(m):
    m = np.asarray(m, dtype=complex)
    return m - np.trace(m) / m.shape[0] * np.eye(m.shape[0])


def bracket_constant(cartan):
    return cartan.gamma_convention.bracket_constant


# spin Lie-Poisson algebra


def lie_poisson_bracket_mu(i, j, k, l):
    """{mu_ij, mu_kl} as {(a, b): coefficient} over the entries mu_ab."""
    out = {}
    if i == l:
        out[(k, j)] = out.get((k, j), 0) + 1
    if j == k:
        out[(i, l)] = out.get((i, l), 0) - 1
    return {key: v for key, v in out.items() if v != 0}


def monomial_weight(mono, n):
    """Torus weight sum(e_i - e_j) of a product of entries mu_ij."""
    w = np.zeros(n, dtype=int)
    for i, j in mono:
        w[i] += 1
        w[j] -= 1
    return w


class SpinPolynomial:
    """Polynomial in the entries of mu: {sorted tuple of (i, j): coefficient}."""

    def __init__(self, n, terms=None):
        self.n = n
        self.terms = {}
        for mono, c in (terms or {}).items():
            self._add(tuple(sorted(mono)), c)

    def _add(self, mono, c):
        v = self.terms.get(mono, 0) + c
        if v == 0:
            self.terms.pop(mono, None)
        else:
            self.terms[mono] = v

    @classmethod
    def entry(cls, n, i, j):
        return cls(n, {((i, j),): 1})

    def __mul__(self, other):
        out = SpinPolynomial(self.n)
        for (m1, c1), (m2, c2) in iproduct(self.terms.items(), other.terms.items()):
            out._add(tuple(sorted(m1 + m2)), c1 * c2)
        return out

    def __add__(self, other):
        out = SpinPolynomial(self.n, dict(self.terms))
        for m, c in other.terms.items():
            out._add(m, c)
        return out

    def scale(self, c):
        return SpinPolynomial(self.n, {m: c * v for m, v in self.terms.items()})

    def weights(self):
        return [monomial_weight(m, self.n) for m in self.terms]

    def is_zero_weight(self):
        return all(not w.any() for w in self.weights())

    def bracket(self, other):
        """Lie-Poisson bracket, expanded by the Leibniz rule."""
        out = SpinPolynomial(self.n)
        for (m1, c1), (m2, c2) in iproduct(self.terms.items(), other.terms.items()):
            for a in range(len(m1)):
                rest1 = m1[:a] + m1[a + 1:]
                for b in range(len(m2)):
                    rest2 = m2[:b] + m2[b + 1:]
                    coeffs = lie_poisson_bracket_mu(*m1[a], *m2[b])
                    for entry, c in coeffs.items():
                        out._add(tuple(sorted(rest1 + rest2 + (entry,))), c1 * c2 * c)
        return out

    def evaluate(self, mu):
        mu = np.asarray(mu)
        total = 0.0j
        for mono, c in self.terms.items():
            total += c * np.prod([mu[i, j] for i, j in mono])
        return total

    def gradient(self, mu):
        """Matrix of d/dmu_ij."""
        mu = np.asarray(mu)
        g = np.zeros((self.n, self.n), dtype=complex)
        for mono, c in self.terms.items():
            for a, (i, j) in enumerate(mono):
                rest = mono[:a] + mono[a + 1:]
                g[i, j] += c * np.prod([mu[k, l] for k, l in rest])
        return g


def random_zero_weight_polynomial(rng, n, max_degree=3, terms=3):
    """Sum of random cyclic monomials mu_{i1 i2} mu_{i2 i3} ... mu_{ik i1}."""
    poly = SpinPolynomial(n)
    for _ in range(terms):
        k = int(rng.integers(2, max_degree + 1))
        idx = list(rng.choice(n, size=min(k, n), replace=False))
        cycle = tuple((idx[a], idx[(a + 1) % len(idx)]) for a in range(len(idx)))
        poly = poly + SpinPolynomial(n, {cycle: complex(rng.normal(), rng.normal())})
    return poly


# observable builders, reduced CM chart


def cm_coordinate(kind, i, j=None):
    """q_i, p_i or mu_ij as an observable on the CM chart."""

    def grad(pt):
        n = pt.n
        dq, dp = np.zeros(n, complex), np.zeros(n, complex)
        dmu = np.zeros((n, n), complex)
        if kind == "q":
            dq[i] = 1
        elif kind == "p":
            dp[i] = 1
        else:
            dmu[i, j] = 1
        return CMGradient(dq, dp, dmu)

    if kind == "q":
        fn = lambda pt: pt.q[i]  # noqa: E731
    elif kind == "p":
        fn = lambda pt: pt.p_tilde[i]  # noqa: E731
    elif kind == "mu":
        fn = lambda pt: pt.mu[i, j]  # noqa: E731
    else:
        raise ValueError(f"unknown coordinate {kind!r}")
    return Observable(fn, CM, grad, f"{kind}_{i}" + ("" if j is None else f"{j}"))


def root_exponential(i, j, cartan):
    """gamma_alpha = gamma_i / gamma_j for alpha = e_i - e_j."""
    s = cartan.scale

    def fn(pt):
        return np.exp(s * (pt.q[i] - pt.q[j]))

    def grad(pt):
        n = pt.n
        val = fn(pt)
        dq = np.zeros(n, complex)
        dq[i], dq[j] = s * val, -s * val
        return CMGradient(dq, np.zeros(n, complex), np.zeros((n, n), complex))

    return Observable(fn, CM, grad, f"gamma_{i}{j}")


def spin_polynomial(poly):
    def grad(pt):
        n = pt.n
        return CMGradient(np.zeros(n, complex), np.zeros(n, complex), poly.gradient(pt.mu))

    return Observable(lambda pt: poly.evaluate(pt.mu), CM, grad, "spin_poly")


def _combine_grads(a, b, ca, cb):
    if isinstance(a, CMGradient):
        return CMGradient(ca * a.dq + cb * b.dq, ca * a.dp + cb * b.dp, ca * a.dmu + cb * b.dmu)
    if isinstance(a, TGGradient):
        return TGGradient(ca * a.gx + cb * b.gx, ca * a.gl + cb * b.gl)
    return RSGradient(ca * a.dh + cb * b.dh, ca * a.dg + cb * b.dg)


def product(f, g):
    """Pointwise product with Leibniz gradient (analytic when both are)."""
    if f.domain != g.domain:
        raise ValueError("domains differ")
    grad = None
    if f.grad and g.grad:
        def grad(pt):
            return _combine_grads(f.grad(pt), g.grad(pt), g(pt), f(pt))
    return Observable(lambda pt: f(pt) * g(pt), f.domain, grad, f"({f.name})*({g.name})")


def linear_combination(coeffs, observables):
    obs = list(observables)
    dom = obs[0].domain
    grad = None
    if all(o.grad for o in obs):
        def grad(pt):
            acc = None
            for c, o in zip(coeffs, obs):
                g = o.grad(pt)
                acc = _combine_grads(g, g, c, 0) if acc is None else _combine_grads(acc, g, 1, c)
            return acc
    return Observable(lambda pt: sum(c * o(pt) for c, o in zip(coeffs, obs)), dom, grad, "lincomb")


def pullback_gradient(tg, cm, cartan):
    """Chain rule from a T*G gradient at lift(cm) to the CM chart."""
    s = cartan.scale
    n = cm.n
    r = root_ratios(cm.q, cartan)
    off = ~np.eye(n, dtype=bool)
    gxt = np.asarray(tg.gx).T  # gxt[i, j] = Gx_ji, the coefficient of dx_ij
    dmu = np.zeros((n, n), complex)
    dmu[off] = gxt[off] / (1 - r[off])
    k = np.zeros((n, n), complex)
    k[off] = gxt[off] * cm.mu[off] * s * r[off] / (1 - r[off]) ** 2
    dq = k.sum(axis=1) - k.sum(axis=0) + s * _proj(np.diag(tg.gl))
    dp = np.diag(gxt).copy()
    return CMGradient(dq, dp, dmu)


def pullback_to_cm(obs, cartan):
    """F o lift_to_cotangent for a T*G observable F."""
    if obs.domain != TSTAR:
        raise ValueError("pullback needs a T*G observable")
    grad = None
    if obs.grad:
        def grad(cm):
            return pullback_gradient(obs.grad(lift_to_cotangent(cm, cartan)), cm, cartan)
    return Observable(lambda cm: obs(lift_to_cotangent(cm, cartan)), CM, grad, f"lift*{obs.name}")


# observable builders, T*G


def trace_power_x(k):
    """I_k = tr(x^k)/k."""

    def grad(pt):
        return TGGradient(_tl(np.linalg.matrix_power(pt.x, k - 1)), np.zeros_like(pt.x))

    return Observable(lambda pt: np.trace(np.linalg.matrix_power(pt.x, k)) / k, TSTAR, grad, f"I_{k}")


def trace_power_gamma(k):
    """E_k = tr(gamma^k)/k; its left-trivialized gradient is gamma^k."""

    def grad(pt):
        return TGGradient(np.zeros_like(pt.x), _tl(np.linalg.matrix_power(pt.gamma, k)))

    return Observable(lambda pt: np.trace(np.linalg.matrix_power(pt.gamma, k)) / k, TSTAR, grad, f"E_{k}")


def joint_word(word):
    """tr(x^a1 y^b1 x^a2 ...), y = gamma x gamma^-1, with analytic gradient."""
    word = normalize_word(word)
    letters = word_letters(word)

    def fn(pt):
        x, y = pt.x, pt.y
        m = np.eye(pt.n, dtype=complex)
        for c in letters:
            m = m @ (x if c == "x" else y)
        return np.trace(m)

    def grad(pt):
        x, y, g = pt.x, pt.y, pt.gamma
        ginv = np.linalg.inv(g)
        mats = [x if c == "x" else y for c in letters]
        m = len(mats)
        gx = np.zeros_like(x)
        gl = np.zeros_like(x)
        for pos in range(m):
            rest = np.eye(pt.n, dtype=complex)
            for step in range(1, m):
                rest = rest @ mats[(pos + step) % m]
            if letters[pos] == "x":
                gx += rest
            else:
                conj = ginv @ rest @ g
                gx += conj
                gl += x @ conj - conj @ x
        return TGGradient(_tl(gx), _tl(gl))

    return Observable(fn, TSTAR, grad, f"J{word}")


def linear_g_star(a):
    """tr(a X) on the first factor (x or mu)."""
    a = np.asarray(a, dtype=complex)
    return Observable(
        lambda pt: np.trace(a @ pt.x), PSTRUCT, lambda pt: TGGradient(_tl(a), np.zeros_like(pt.x)), "lin"
    )


def as_domain(obs, domain):
    """Reuse a (x, gamma)-observable on another pair domain."""
    return Observable(obs.fn, domain, obs.grad, obs.name)


def invariant_cm(k, cartan):
    return pullback_to_cm(trace_power_x(k), cartan)


def joint_invariant_cm(word, cartan):
    return pullback_to_cm(joint_word(word), cartan)


def cm_hamiltonian(cartan):
    """H_CM on the chart; its gradient is nu times that of I_2 o lift."""
    base = invariant_cm(2, cartan)

    def grad(cm):
        g = base.grad(cm)
        return CMGradient(cartan.nu * g.dq, cartan.nu * g.dp, cartan.nu * g.dmu)

    return Observable(lambda cm: hamiltonian_cm(cm, cartan), CM, grad, "H_CM")


def spin_casimir():
    """tr(mu^2)."""
    return Observable(
        lambda cm: np.trace(cm.mu @ cm.mu),
        CM,
        lambda cm: CMGradient(np.zeros(cm.n, complex), np.zeros(cm.n, complex), 2 * cm.mu.T),
        "tr_mu2",
    )


# observable builders, reduced RS


def rs_coordinate(kind, i):
    def grad(pt):
        n = pt.n
        dh, dg = np.zeros(n, complex), np.zeros(n, complex)
        (dh if kind == "h" else dg)[i] = 1
        return RSGradient(dh, dg)

    fn = (lambda pt: pt.h[i]) if kind == "h" else (lambda pt: pt.g_diag[i])
    return Observable(fn, RS_REDUCED, grad, f"{kind}_{i}")


def rs_trace_g():
    return Observable(
        lambda pt: np.sum(pt.g_diag),
        RS_REDUCED,
        lambda pt: RSGradient(np.zeros(pt.n, complex), np.ones(pt.n, complex)),
        "tr_g",
    )


def rs_trace_g2():
    """tr(g^2) from the reduced closed form (finite-difference gradient)."""
    from .rank1_kks import rs_hamiltonians

    return Observable(lambda pt: rs_hamiltonians(pt.h, pt.g_diag, pt.kappa)[1], RS_REDUCED, None, "tr_g2")


# analytic brackets


def _cm_bracket_from_grads(a, b, cm, c):
    canon = c * (a.dq @ _proj(b.dp) - a.dp @ _proj(b.dq))
    fa, fb = a.dmu.T, b.dmu.T
    spin = np.trace(cm.mu @ (fa @ fb - fb @ fa))
    return complex(canon + spin)


def _cotangent_from_grads(a, b, pt):
    x = pt.x
    return complex(
        np.trace(a.gl @ b.gx) - np.trace(a.gx @ b.gl) - np.trace(x @ (a.gx @ b.gx - b.gx @ a.gx))
    )


def _pstructure_from_grads(a, b, pt):
    mu, g = pt.x, pt.gamma
    ginv = np.linalg.inv(g)
    gr_a = g @ a.gl @ ginv
    gr_b = g @ b.gl @ ginv
    return complex(
        -np.trace(mu @ (a.gx @ b.gx - b.gx @ a.gx))
        - np.trace(a.gx @ (b.gl - gr_b))
        + np.trace(b.gx @ (a.gl - gr_a))
    )


def rho_matrix(h, kappa):
    h = np.asarray(h, dtype=complex)
    d = h[:, None] - h[None, :]
    np.fill_diagonal(d, 1.0)
    rho = 2 * kappa**2 / (d * (kappa**2 - d**2))
    np.fill_diagonal(rho, 0.0)
    return rho


def _rs_from_grads(a, b, pt):
    g = pt.g_diag
    rho = rho_matrix(pt.h, pt.kappa)
    val = a.dh @ _proj(g * b.dg) - b.dh @ _proj(g * a.dg)
    val += (a.dg * g) @ rho @ (b.dg * g)
    return complex(val)


def gradient(obs, pt, cartan=None, step=FD_REL_STEP, tol=FD_TOL):
    """Analytic gradient when available, else the finite-difference one."""
    if obs.grad is not None:
        return obs.grad(pt)
    return fd_gradient(obs, pt, step, tol)


def canonical_bracket_cm(f, g, at, cartan):
    """Bracket on the reduced CM chart from (analytic) gradients."""
    _check(f, g, CM)
    return _cm_bracket_from_grads(gradient(f, at), gradient(g, at), at, bracket_constant(cartan))


def tg_bracket(f, g, at, structure=TStarStructure.COTANGENT):
    structure = TStarStructure(structure)
    a, b = gradient(f, at), gradient(g, at)
    if structure is TStarStructure.COTANGENT:
        return _cotangent_from_grads(a, b, at)
    return _pstructure_from_grads(a, b, at)


def rs_reduced_bracket(f, g, at):
    _check(f, g, RS_REDUCED)
    return _rs_from_grads(gradient(f, at), gradient(g, at), at)


def _check(f, g, domain):
    if f.domain != domain or g.domain != domain:
        raise ValueError(f"observables must live on {domain!r}")


# finite-difference oracle


def _richardson(fun, h):
    """Central difference at steps h and h/2, extrapolated; also returns the
    disagreement between the extrapolated and the finer estimate."""
    d1 = (fun(h) - fun(-h)) / (2 * h)
    d2 = (fun(h / 2) - fun(-h / 2)) / h
    best = (4 * d2 - d1) / 3
    return best, abs(best - d2)


def _traceless_from_differences(diffs):
    """Recover v with sum(v) = 0 from v_a - v_{a+1}."""
    diffs = np.asarray(diffs, dtype=complex)
    n = len(diffs) + 1
    v = np.concatenate([[0.0], -np.cumsum(diffs)])
    return v - v.mean()


def fd_gradient(obs, pt, step=FD_REL_STEP, tol=FD_TOL):
    """Central-difference gradient along admissible (constraint-preserving)
    directions, Richardson-extrapolated. Raises StepTooLarge when the two
    step sizes disagree beyond ``tol`` (relative to the gradient size)."""
    worst = [0.0]
    vals = []

    def d(fun, scale):
        h = step * max(1.0, scale)
        best, dis = _richardson(fun, h)
        worst[0] = max(worst[0], dis)
        vals.append(abs(best))
        return best

    if obs.domain == CM:
        grad = _fd_cm(obs, pt, d)
    elif obs.domain in (TSTAR, PSTRUCT):
        grad = _fd_pair(obs, pt, d)
    else:
        grad = _fd_rs(obs, pt, d)
    bound = tol * max(1.0, max(vals, default=0.0))
    if worst[0] > bound:
        raise StepTooLarge(f"Richardson disagreement {worst[0]:.2e} exceeds {bound:.2e}")
    return grad


def _fd_cm(obs, cm, d):
    n = cm.n
    q, p, mu = np.array(cm.q), np.array(cm.p_tilde), np.array(cm.mu)
    tag, phi, psi = cm.spin.orbit_tag, None, None

    def at(qq, pp, mm):
        return obs(CMPoint(qq, pp, SpinMatrix(mm, tag, phi, psi)))

    qd, pd = [], []
    for a in range(n - 1):
        e = np.zeros(n)
        e[a], e[a + 1] = 1.0, -1.0
        qd.append(d(lambda t: at(q + t * e, p, mu), np.abs(q).max()))
        pd.append(d(lambda t: at(q, p + t * e, mu), np.abs(p).max()))
    dmu = np.zeros((n, n), complex)
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            e = np.zeros((n, n))
            e[i, j] = 1.0
            dmu[i, j] = d(lambda t: at(q, p, mu + t * e), abs(mu[i, j]))
    return CMGradient(_traceless_from_differences(qd), _traceless_from_differences(pd), dmu)


def _sl_basis(n):
    for i in range(n):
        for j in range(n):
            if i != j:
                e = np.zeros((n, n), complex)
                e[i, j] = 1.0
                yield ("off", i, j), e
    for a in range(n - 1):
        e = np.zeros((n, n), complex)
        e[a, a], e[a + 1, a + 1] = 1.0, -1.0
        yield ("diag", a, a), e


def _fd_pair(obs, pt, d):
    n = pt.n
    x, g = np.array(pt.x), np.array(pt.gamma)
    xscale = np.abs(x).max()
    gx, gl = np.zeros((n, n), complex), np.zeros((n, n), complex)
    dx_diag, dl_diag = [], []
    for (kind, i, j), e in _sl_basis(n):
        vx = d(lambda t: obs(TStarGPoint(x + t * e, g)), xscale)
        vl = d(lambda t: obs(TStarGPoint(x, g @ mat_exp(t * e))), 1.0)
        if kind == "off":
            # tr(G E_ij) = G_ji
            gx[j, i], gl[j, i] = vx, vl
        else:
            dx_diag.append(vx)
            dl_diag.append(vl)
    gx[np.diag_indices(n)] = _traceless_from_differences(dx_diag)
    gl[np.diag_indices(n)] = _traceless_from_differences(dl_diag)
    return TGGradient(gx, gl)


def _fd_rs(obs, pt, d):
    n = pt.n
    h, gd = np.array(pt.h), np.array(pt.g_diag)
    hd = []
    for a in range(n - 1):
        e = np.zeros(n)
        e[a], e[a + 1] = 1.0, -1.0
        hd.append(d(lambda t: obs(RSReducedPoint(h + t * e, gd, pt.kappa)), np.abs(h).max()))
    dg = np.zeros(n, complex)
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        dg[i] = d(lambda t: obs(RSReducedPoint(h, gd + t * e, pt.kappa)), abs(gd[i]))
    return RSGradient(_traceless_from_differences(hd), dg)


def fd_bracket(f, g, at, cartan=None, structure=TStarStructure.COTANGENT, step=FD_REL_STEP, tol=FD_TOL):
    """Bracket assembled from finite-difference gradients and the coordinate
    bivector of the point's domain; ignores any analytic gradients."""
    if f.domain != g.domain:
        raise ValueError("domains differ")
    a = fd_gradient(f, at, step, tol)
    b = fd_gradient(g, at, step, tol)
    if f.domain == CM:
        if cartan is None:
            raise ValueError("CM brackets need CartanData")
        return _cm_bracket_from_grads(a, b, at, bracket_constant(cartan))
    if f.domain == RS_REDUCED:
        return _rs_from_grads(a, b, at)
    if f.domain == PSTRUCT:
        return _pstructure_from_grads(a, b, at)
    if TStarStructure(structure) is TStarStructure.PSTRUCTURE:
        return _pstructure_from_grads(a, b, at)
    return _cotangent_from_grads(a, b, at)


# Hamiltonian vector fields


def hamiltonian_vector_field(h, at, cartan=None, grad=None):
    """Velocity of the flow of ``h`` (dF/dt = {F, h}) on the point's domain."""
    gh = grad if grad is not None else gradient(h, at)
    if h.domain == CM:
        c = bracket_constant(cartan)
        gmat = gh.dmu.T
        dmu = gmat @ at.mu - at.mu @ gmat
        return CMTangent(c * _proj(gh.dp), -c * _proj(gh.dq), dmu)
    if h.domain == TSTAR:
        x = at.x
        return TGTangent(-gh.gl + x @ gh.gx - gh.gx @ x, gh.gx)
    if h.domain == RS_REDUCED:
        g = at.g_diag
        rho = rho_matrix(at.h, at.kappa)
        dh = _proj(g * gh.dg)
        dg = -g * _proj(gh.dh) + g * (rho @ (g * gh.dg))
        return RSTangent(dh, dg)
    raise ValueError(f"no vector field for domain {h.domain!r}")
