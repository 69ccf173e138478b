"""Exact lift-flow-project solvers and a fixed-step RK4 integrator.

Spin CM: the pull-back of I_k = tr(x^k)/k flows T*G as
    (x, gamma) -> (x, exp(t P(x^{k-1})) gamma)
and the trajectory is read off on the diagonal-gamma cross-section.
Rational spin RS: E_k = tr(gamma^k)/k moves (x, gamma) -> (x + t P(gamma^k), gamma)
and is read off in the gauge where x is diagonal. Rational spin CM: the
linear phase space (a, x) with a -> a + t P(x^{k-1}).
"""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import CollisionError, SingularDenominator
from .linalg_core import eig_decompose, mat_exp, traceless_project
from .phase_space import (
    DEFAULT_WORDS,
    POTENTIAL_SCALE,
    POTENTIAL_SIGN,
    ROOT_LENGTH_SQ,
    CMPoint,
    OrbitTag,
    RSPoint,
    RSReducedPoint,
    SpinMatrix,
    TStarGPoint,
    canonicalize_spin,
    hamiltonian_cm,
    invariants_gamma,
    invariants_x,
    joint_invariants,
    lift_to_cotangent,
    project_to_cross_section,
)
from .poisson import (
    bracket_constant,
    cm_hamiltonian,
    hamiltonian_vector_field,
    invariant_cm,
)

COLLISION_THRESHOLD = 1e-6
# joint invariant column names for DEFAULT_WORDS
WORD_NAMES = ("J_xy", "J_x2y", "J_xy2")


class System(str, Enum):
    SPIN_CM = "SpinCM"
    SPIN_RS = "SpinRS"
    RATIONAL_CM = "RationalCM"


@dataclass(frozen=True)
class FlowSpec:
    system: System
    k: int
    t_final: float
    sample_times: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "system", System(self.system))
        lo = 1 if self.system is System.SPIN_RS else 2
        if self.k < lo:
            raise ValueError(f"generator index must be at least {lo}")
        times = tuple(float(t) for t in self.sample_times)
        if list(times) != sorted(times) or any(t < 0 or t > self.t_final for t in times):
            raise ValueError("sample times must be sorted and inside [0, t_final]")
        object.__setattr__(self, "sample_times", times)


@dataclass(frozen=True)
class TrajectoryRecord:
    time: float
    point: object
    invariant_values: dict = field(default_factory=dict)
    gauge_conjugator: np.ndarray = None


def _gauge_words(n):
    return DEFAULT_WORDS if n >= 2 else ()


def record_invariants(cm, cartan):
    """I_2..I_n, H_CM and the default joint invariants at a CM point."""
    pt = lift_to_cotangent(cm, cartan)
    out = {}
    if cm.n >= 2:
        for k, v in zip(range(2, cm.n + 1), invariants_x(pt, cm.n)):
            out[f"I{k}"] = complex(v)
    out["H"] = complex(hamiltonian_cm(cm, cartan))
    for name, v in zip(WORD_NAMES, joint_invariants(pt, _gauge_words(cm.n))):
        out[name] = complex(v)
    return out


# spin Calogero-Moser


def flow_tstar_cm(pt, k, t):
    """(x, exp(t P(x^{k-1})) gamma)."""
    gen = traceless_project(np.linalg.matrix_power(pt.x, k - 1))
    return TStarGPoint(pt.x, mat_exp(t * gen) @ pt.gamma)


def exact_flow_cm(cm, k, t, cartan, q_ref=None, with_frame=False):
    """Flow of I_k for time t through the unreduced phase space."""
    pt = flow_tstar_cm(lift_to_cotangent(cm, cartan), k, t)
    out, u = project_to_cross_section(pt, cartan, q_ref=q_ref)
    return (out, u) if with_frame else out


def exact_trajectory_cm(cm, k, times, cartan):
    """Samples of the exact flow with nearest-branch continuation of q."""
    pt0 = lift_to_cotangent(cm, cartan)
    records, q_ref = [], np.array(cm.q)
    for t in times:
        pt = flow_tstar_cm(pt0, k, t)
        out, u = project_to_cross_section(pt, cartan, q_ref=q_ref)
        q_ref = np.array(out.q)
        records.append(TrajectoryRecord(float(t), out, record_invariants(out, cartan), u))
    return records


def _generator(cartan, k):
    return cm_hamiltonian(cartan) if k is None else invariant_cm(k, cartan)


def eom_cm(cm, cartan, k=None):
    """(dq/dt, dp/dt, dmu/dt) for H_CM (or I_k o lift when k is given)."""
    return hamiltonian_vector_field(_generator(cartan, k), cm, cartan)


def eom_rank1(q, p, phi, psi, cartan, k=None):
    """Equations of motion on (q, p, phi, psi) with canonical {phi_i, psi_j} = delta_ij.

    mu = phi psi^T - kappa I; with G = grad_mu H, phi' = G phi, psi' = -G^T psi,
    which induces mu' = [G, mu].
    """
    cm = _rank1_cm(q, p, phi, psi)
    obs = _generator(cartan, k)
    grad = obs.grad(cm)
    c = bracket_constant(cartan)
    gmat = grad.dmu.T
    dq = c * (grad.dp - grad.dp.mean())
    dp = -c * (grad.dq - grad.dq.mean())
    return dq, dp, gmat @ phi, -gmat.T @ psi


def _rank1_cm(q, p, phi, psi):
    kappa = (phi @ psi) / len(phi)
    mu = np.outer(phi, psi) - kappa * np.eye(len(phi))
    np.fill_diagonal(mu, 0.0)
    return CMPoint(q - q.mean(), p - p.mean(), SpinMatrix(mu, OrbitTag.RANK1))


def _state_cm(state, n, rank1):
    q, p = state[:n], state[n:2 * n]
    if rank1:
        return _rank1_cm(q, p, state[2 * n:3 * n], state[3 * n:])
    mu = state[2 * n:].reshape(n, n).copy()
    np.fill_diagonal(mu, 0.0)
    return CMPoint(q - q.mean(), p - p.mean(), SpinMatrix(mu))


def _min_separation(q):
    q = np.asarray(q)
    if len(q) < 2:
        return np.inf
    d = np.abs(q[:, None] - q[None, :])
    d[np.diag_indices(len(q))] = np.inf
    return float(d.min())


def rk4_integrate(cm, cartan, dt, steps, sample_every=1, k=None, rank1=False,
                  collision_threshold=COLLISION_THRESHOLD):
    """Classical RK4 on the reduced equations of motion.

    ``rank1`` integrates (q, p, phi, psi) instead of (q, p, mu); it needs the
    KKS vectors on ``cm.spin``. Returns records every ``sample_every`` steps
    (plus t = 0). Raises CollisionError, carrying the partial records, when
    two particles come within ``collision_threshold``.
    """
    if dt <= 0 or steps < 0 or sample_every < 1:
        raise ValueError("need dt > 0, steps >= 0, sample_every >= 1")
    n = cm.n
    if rank1:
        if cm.spin.phi is None:
            raise ValueError("rank-1 integration needs KKS vectors")
        state = np.concatenate([cm.q, cm.p_tilde, cm.spin.phi, cm.spin.psi]).astype(complex)
    else:
        state = np.concatenate([cm.q, cm.p_tilde, np.ravel(cm.mu)]).astype(complex)

    def rhs(s):
        if rank1:
            return np.concatenate(eom_rank1(s[:n], s[n:2 * n], s[2 * n:3 * n], s[3 * n:], cartan, k))
        v = eom_cm(_state_cm(s, n, False), cartan, k)
        return np.concatenate([v.dq, v.dp, np.ravel(v.dmu)])

    def record(step, s):
        pt = _state_cm(s, n, rank1)
        inv = record_invariants(pt, cartan)
        if rank1:
            phi, psi = s[2 * n:3 * n], s[3 * n:]
            inv["constraint"] = float(np.max(np.abs(phi * psi - (phi @ psi) / n)))
        return TrajectoryRecord(step * dt, pt, inv, np.eye(n, dtype=complex))

    records = [record(0, state)]
    for step in range(1, steps + 1):
        try:
            k1 = rhs(state)
            k2 = rhs(state + 0.5 * dt * k1)
            k3 = rhs(state + 0.5 * dt * k2)
            k4 = rhs(state + dt * k3)
        except SingularDenominator as exc:
            raise CollisionError(f"collision near t={step * dt:.6g}: {exc}", records) from exc
        state = state + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if _min_separation(state[:n]) < collision_threshold:
            raise CollisionError(f"particles within {collision_threshold} at t={step * dt:.6g}", records)
        if step % sample_every == 0 or step == steps:
            records.append(record(step, state))
    return records


def gauge_invariant_summary(cm, cartan):
    """Observables unchanged by the residual torus and Weyl gauge. The first
    three entries are multisets, compared up to permutation."""
    inv = record_invariants(cm, cartan)
    return {
        "q": np.asarray(cm.q),
        "p": np.asarray(cm.p_tilde),
        "mu_spectrum": np.linalg.eigvals(cm.mu),
        "invariants": np.array([inv[k] for k in sorted(inv)]),
    }


def multiset_distance(a, b):
    """Sup-norm distance between two multisets under the best matching."""
    a, b = np.asarray(a), np.asarray(b)
    if a.size == 0:
        return 0.0
    cost = np.abs(a[:, None] - b[None, :])
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].max())


def gauge_invariant_distance(a, b, cartan):
    """Sup-norm distance of the gauge-invariant summaries, per group."""
    sa, sb = gauge_invariant_summary(a, cartan), gauge_invariant_summary(b, cartan)
    out = {key: multiset_distance(sa[key], sb[key]) for key in ("q", "p", "mu_spectrum")}
    out["invariants"] = float(np.max(np.abs(sa["invariants"] - sb["invariants"]), initial=0.0))
    return out


def compare_flows(cm, cartan, k, t_grid, dt, rank1=False):
    """Exact flow vs RK4 of I_k on a common time grid (multiples of dt)."""
    t_grid = [float(t) for t in t_grid]
    steps = int(round(max(t_grid) / dt))
    stride_steps = {int(round(t / dt)) for t in t_grid}
    rk = rk4_integrate(cm, cartan, dt, steps, 1, k=k, rank1=rank1)
    exact = exact_trajectory_cm(cm, k, t_grid, cartan)
    report = {"q": 0.0, "p": 0.0, "mu_spectrum": 0.0, "invariants": 0.0, "invariant_drift": 0.0}
    inv0 = rk[0].invariant_values
    by_step = {int(round(r.time / dt)): r for r in rk}
    for rec in exact:
        step = int(round(rec.time / dt))
        if step not in stride_steps:
            continue
        dist = gauge_invariant_distance(rec.point, by_step[step].point, cartan)
        for key, v in dist.items():
            report[key] = max(report[key], v)
    for r in rk + exact:
        for key, v in r.invariant_values.items():
            if key in inv0:
                scale = max(1.0, abs(inv0[key]))
                report["invariant_drift"] = max(report["invariant_drift"], abs(v - inv0[key]) / scale)
    return report


def flow_rank(cm, cartan, tol=1e-8):
    """Numeric rank of the span of the vector fields of I_2, ..., I_n."""
    rows = []
    for k in range(2, cm.n + 1):
        v = eom_cm(cm, cartan, k)
        off = ~np.eye(cm.n, dtype=bool)
        rows.append(np.concatenate([v.dq, v.dp, v.dmu[off]]))
    sv = np.linalg.svd(np.array(rows), compute_uv=False)
    return int(np.sum(sv > tol * sv[0])) if sv.size and sv[0] > 0 else 0


# rational spin Ruijsenaars


def canonical_rs(h, g):
    """Residual torus gauge on g (same rule as the spin gauge)."""
    g_c, _ = canonicalize_spin(g)
    return RSPoint(h, g_c)


def exact_flow_rs(rs, k, t, with_frame=False):
    """(x, gamma) -> (x + t P(gamma^k), gamma), re-diagonalized in x."""
    g = np.array(rs.g)
    xt = np.diag(rs.h) + t * traceless_project(np.linalg.matrix_power(g, k))
    es = eig_decompose(xt)
    u = np.array(es.u)
    g_new = np.linalg.solve(u, g @ u)
    h_new = np.array(es.d)
    h_new = h_new - h_new.mean()
    g_c, dvec = canonicalize_spin(g_new)
    out = RSPoint(h_new, g_c)
    return (out, u * dvec[None, :]) if with_frame else out


def exact_trajectory_rs(rs, k, times):
    records = []
    for t in times:
        out, u = exact_flow_rs(rs, k, t, with_frame=True)
        pt = out.to_tstar()
        inv = {f"E{j}": complex(v) for j, v in enumerate(invariants_gamma(pt, out.n), start=1)}
        records.append(TrajectoryRecord(float(t), out, inv, u))
    return records


def rs_reduced_coordinates(rs, kappa):
    return RSReducedPoint(rs.h, np.diag(rs.g).copy(), kappa)


# rational spin Calogero-Moser


def rational_lax(q, p, mu):
    """x_ii = p_i, x_ij = mu_ij / (q_i - q_j), so that [diag(q), x] = mu."""
    q = np.asarray(q, dtype=complex)
    mu = np.asarray(mu, dtype=complex)
    n = len(q)
    diff = q[:, None] - q[None, :]
    off = ~np.eye(n, dtype=bool)
    if n > 1 and np.min(np.abs(diff[off])) < 1e-12:
        raise SingularDenominator("colliding rational particles")
    x = np.diag(np.asarray(p, dtype=complex))
    x[off] = mu[off] / diff[off]
    return x


def rational_cm_hamiltonian(q, p, mu):
    """(p, p)/2 + sum_{i<j} (alpha, alpha) mu_ij mu_ji / (q_i - q_j)^2 with the
    committed root scale and sign; equals tr(x^2)/2 of rational_lax."""
    q = np.asarray(q, dtype=complex)
    mu = np.asarray(mu, dtype=complex)
    n = len(q)
    pot = 0.0j
    for i in range(n):
        for j in range(i + 1, n):
            pot += POTENTIAL_SCALE * ROOT_LENGTH_SQ * POTENTIAL_SIGN * mu[i, j] * mu[j, i] / (q[i] - q[j]) ** 2
    return complex(0.5 * np.sum(np.asarray(p, dtype=complex) ** 2) + pot)


def exact_flow_rational_cm(a, x, k, t):
    """(a, x) -> (a + t P(x^{k-1}), x), returned as (diag(q), u^-1 x u) with
    sorted q and the spin gauge canonicalized."""
    a = np.asarray(a, dtype=complex)
    x = np.asarray(x, dtype=complex)
    at = a + t * traceless_project(np.linalg.matrix_power(x, k - 1))
    es = eig_decompose(at)
    u = np.array(es.u)
    xr = np.linalg.solve(u, x @ u)
    q = np.array(es.d)
    mu = (q[:, None] - q[None, :]) * xr
    _, dvec = canonicalize_spin(mu)
    xr = xr * dvec[None, :] / dvec[:, None]
    return np.diag(q), xr
