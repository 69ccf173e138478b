"""Action and angle variables for spin CM and rational spin RS, and the
checks that each system's angles are the other's actions.

CM side: diagonalize x = u x0 u^-1 (Weyl order), Gauss-decompose
u^-1 gamma u = b+ b- b0 and take the traceless part of log b0. The flow of
I_k multiplies b0 by exp(t P(x0^{k-1})), so these angles move linearly.

RS side: diagonalize gamma = v D v^-1; the traceless diagonal of
v^-1 x v moves by t P(D^k) under the flow of E_k.
"""

from dataclasses import dataclass

import numpy as np

from .dynamics import exact_flow_rs, exact_trajectory_cm, exact_trajectory_rs
from .linalg_core import (
    DEFAULT_SEP,
    PLUS_MINUS_ZERO,
    centralizer_basis,
    eig_decompose,
    gauss_decompose,
    log_nearest,
    mat_exp,
)
from .phase_space import (
    DEFAULT_WORDS,
    TStarGPoint,
    invariants_gamma,
    invariants_x,
    joint_invariants,
    lax_matrix,
    lift_to_cotangent,
)

GAUGE_NOTE_CM = "b0 is unchanged by u -> u d (d diagonal); logs defined modulo 2 pi i"
GAUGE_NOTE_RS = "diagonal of v^-1 x v is unchanged by v -> v d (d diagonal)"


@dataclass(frozen=True)
class ActionAngleData:
    actions: np.ndarray
    angles: np.ndarray
    frame: np.ndarray
    residual_gauge_note: str = ""


def _traceless(v):
    v = np.asarray(v, dtype=complex)
    return v - v.mean()


def power_sums(d, kmax=None):
    d = np.asarray(d, dtype=complex)
    kmax = len(d) if kmax is None else kmax
    return np.array([np.sum(d**k) for k in range(1, kmax + 1)])


def tstar_actions(pt, sep=DEFAULT_SEP):
    return np.array(eig_decompose(pt.x, sep).d)


def cm_actions(cm, cartan, sep=DEFAULT_SEP):
    """Weyl-sorted spectrum of the Lax matrix."""
    return np.array(eig_decompose(lax_matrix(cm, cartan), sep).d)


def tstar_cm_angles(pt, order=PLUS_MINUS_ZERO, angle_ref=None, sep=DEFAULT_SEP):
    es = eig_decompose(pt.x, sep)
    u = np.array(es.u)
    conj = np.linalg.solve(u, pt.gamma @ u)
    b0 = gauss_decompose(conj, order).b_zero
    logs = log_nearest(b0, angle_ref)
    return ActionAngleData(np.array(es.d), _traceless(logs), u, GAUGE_NOTE_CM)


def cm_angles(cm, cartan, order=PLUS_MINUS_ZERO, angle_ref=None, sep=DEFAULT_SEP):
    """Actions and angles at a reduced CM point."""
    return tstar_cm_angles(lift_to_cotangent(cm, cartan), order, angle_ref, sep)


def rs_actions(rs, sep=DEFAULT_SEP):
    """Weyl-sorted spectrum of g."""
    return np.array(eig_decompose(rs.g, sep).d)


def tstar_rs_angles(pt, sep=DEFAULT_SEP):
    es = eig_decompose(pt.gamma, sep)
    v = np.array(es.d), np.array(es.u)
    d, frame = v
    coords = np.diag(np.linalg.solve(frame, pt.x @ frame))
    return ActionAngleData(d, _traceless(coords), frame, GAUGE_NOTE_RS)


def rs_angles(rs, sep=DEFAULT_SEP):
    return tstar_rs_angles(rs.to_tstar(), sep)


def fit_line(times, values):
    """Least-squares line through complex samples (one column per component).

    Returns (slope, intercept, max residual).
    """
    t = np.asarray(times, dtype=float)
    y = np.asarray(values, dtype=complex)
    if y.ndim == 1:
        y = y[:, None]
    design = np.column_stack([np.ones_like(t), t])
    coef, *_ = np.linalg.lstsq(design.astype(complex), y, rcond=None)
    resid = y - design @ coef
    return coef[1], coef[0], float(np.max(np.abs(resid), initial=0.0))


def cm_angle_trajectory(cm, cartan, k, times, order=PLUS_MINUS_ZERO):
    """Angles along the exact flow of I_k, branch-continued sample to sample."""
    recs = exact_trajectory_cm(cm, k, times, cartan)
    angles, ref, actions0 = [], None, None
    for rec in recs:
        data = cm_angles(rec.point, cartan, order, angle_ref=ref)
        # continue log b0 itself, then take the traceless part
        ref = data.angles + _logs_mean(rec.point, cartan, order, ref)
        angles.append(data.angles)
        if actions0 is None:
            actions0 = data.actions
    return np.array(angles), actions0


def _logs_mean(cm, cartan, order, ref):
    pt = lift_to_cotangent(cm, cartan)
    es = eig_decompose(pt.x)
    u = np.array(es.u)
    b0 = gauss_decompose(np.linalg.solve(u, pt.gamma @ u), order).b_zero
    return log_nearest(b0, ref).mean()


def cm_angle_linearity(cm, cartan, k, times, order=PLUS_MINUS_ZERO):
    """Fit angles(t); the predicted slope is P(x0^{k-1}) over the sorted spectrum."""
    angles, actions = cm_angle_trajectory(cm, cartan, k, times, order)
    slope, _, resid = fit_line(times, angles)
    predicted = _traceless(actions ** (k - 1))
    return {
        "linearity_residual": resid,
        "slope_error": float(np.max(np.abs(slope - predicted))),
        "slope": slope,
        "predicted_slope": predicted,
    }


def rs_angle_linearity(rs, k, times):
    recs = exact_trajectory_rs(rs, k, times)
    angles = np.array([rs_angles(r.point).angles for r in recs])
    actions = rs_actions(rs)
    slope, _, resid = fit_line(times, angles)
    predicted = _traceless(actions**k)
    return {
        "linearity_residual": resid,
        "slope_error": float(np.max(np.abs(slope - predicted))),
        "slope": slope,
        "predicted_slope": predicted,
    }


def frequency_check(cm, cartan, times, step=1e-6):
    """Angle rate under H = I_2 against dH/dI from a finite difference of
    H(lambda) = sum(lambda^2)/2 in traceless action directions."""
    measured = cm_angle_linearity(cm, cartan, 2, times)["slope"]
    lam = cm_actions(cm, cartan)
    n = len(lam)

    def ham(v):
        return 0.5 * np.sum(v * v)

    grad = np.zeros(n, dtype=complex)
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        e = e - e.mean()
        # directional derivative along e_i - mean, which is the traceless gradient
        grad[i] = (ham(lam + step * e) - ham(lam - step * e)) / (2 * step)
    return float(np.max(np.abs(measured - grad)))


# duality diagnostics


def invariant_vector(pt, words=DEFAULT_WORDS):
    n = pt.n
    return np.concatenate([invariants_x(pt, n), invariants_gamma(pt, n), joint_invariants(pt, words)])


def _z_element(basis, coeffs):
    return mat_exp(sum(c * b for c, b in zip(coeffs, basis)))


def _numeric_rank(jac, tol=1e-6):
    sv = np.linalg.svd(jac, compute_uv=False)
    if sv.size == 0 or sv[0] == 0:
        return 0
    return int(np.sum(sv > tol * sv[0]))


def _jacobian(fun, dim, h=1e-6):
    cols = []
    for a in range(dim):
        e = np.zeros(dim)
        e[a] = h
        cols.append((fun(e) - fun(-e)) / (2 * h))
    return np.array(cols).T


def duality_diagnostics(pt, rng, samples=3, sep=DEFAULT_SEP):
    """Fiber checks at a point of T*SL_n with regular x and gamma.

    (i) for random z in the centralizer group Z_x (z != e) and c in the
        centralizer C_gamma (c != 0), (x, z gamma) and (x + c, gamma) have
        different invariant vectors, while z = e, c = 0 agree;
    (ii) rank of the Jacobian of c -> power sums of x + c;
    (iii) rank of the Jacobian of z -> power sums of z gamma.
    """
    n = pt.n
    zb = centralizer_basis(pt.x, sep)
    cb = centralizer_basis(pt.gamma, sep)
    x, g = np.array(pt.x), np.array(pt.gamma)

    # z = e and c = 0 go through the same exp / sum paths as the samples
    base_f = invariant_vector(TStarGPoint(x, _z_element(zb, np.zeros(n - 1)) @ g))
    base_ft = invariant_vector(TStarGPoint(x + sum(0.0 * b for b in cb), g))
    agree = float(np.max(np.abs(base_f - base_ft)))
    gaps = []
    for _ in range(samples):
        z = _z_element(zb, 0.3 * rng.normal(size=n - 1))
        c = sum(a * b for a, b in zip(rng.normal(size=n - 1), cb))
        vf = invariant_vector(TStarGPoint(x, z @ g))
        vft = invariant_vector(TStarGPoint(x + c, g))
        gaps.append(float(np.max(np.abs(vf - vft))))
    scale = max(1.0, float(np.max(np.abs(base_f))))
    intersection = agree <= 1e-12 * scale and min(gaps) > 1e-6 * scale

    def ps_shift(coeffs):
        c = sum(a * b for a, b in zip(coeffs, cb))
        return power_sums(np.linalg.eigvals(x + c))[1:]

    def ps_group(coeffs):
        z = _z_element(zb, coeffs)
        return power_sums(np.linalg.eigvals(z @ g))[:n - 1]

    rank_shift = _numeric_rank(_jacobian(ps_shift, n - 1))
    rank_group = _numeric_rank(_jacobian(ps_group, n - 1))
    return {
        "fiber_ranks": [rank_shift, rank_group],
        "intersection_check": bool(intersection),
        "identity_agreement": agree,
        "min_separation": min(gaps),
    }


def cm_rs_duality_drift(cm, cartan, k, times, rs_k=1):
    """Along the CM flow the CM actions stay put while the RS actions move;
    along the RS flow the reverse. Returns the four drift sizes."""
    recs = exact_trajectory_cm(cm, k, times, cartan)
    cm_act = [cm_actions(r.point, cartan) for r in recs]
    rs_act = [np.array(eig_decompose(lift_to_cotangent(r.point, cartan).gamma).d) for r in recs]
    pt = lift_to_cotangent(cm, cartan)
    es = eig_decompose(pt.x)
    u = np.array(es.u)
    from .phase_space import RSPoint

    rs = RSPoint(es.d - es.d.mean(), np.linalg.solve(u, pt.gamma @ u) / np.linalg.det(pt.gamma) ** (1 / pt.n))
    rs_traj = [exact_flow_rs(rs, rs_k, t) for t in times]
    rs_side_rs = [rs_actions(p) for p in rs_traj]
    rs_side_cm = [np.array(eig_decompose(np.diag(p.h)).d) for p in rs_traj]

    def drift(seq):
        return float(max(np.max(np.abs(np.sort_complex(s) - np.sort_complex(seq[0]))) for s in seq))

    return {
        "cm_flow_cm_actions": drift(cm_act),
        "cm_flow_rs_actions": drift(rs_act),
        "rs_flow_rs_actions": drift(rs_side_rs),
        "rs_flow_cm_actions": drift(rs_side_cm),
    }
