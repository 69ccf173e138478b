"""Desk-scale property suites run by ``spincm check <suite>``.

Each suite returns {"suite", "passed", "properties": {name: {...}}} where a
property carries its measured value, its threshold and a pass flag. All
randomness comes from the generator passed in.
"""

import numpy as np

from .action_angle import cm_angle_linearity, duality_diagnostics, rs_angle_linearity
from .dynamics import flow_rank, rk4_integrate
from .phase_space import DEFAULT_WORDS, CartanData
from .poisson import (
    canonical_bracket_cm,
    cm_hamiltonian,
    fd_bracket,
    invariant_cm,
    joint_invariant_cm,
)
from .rank1_kks import (
    degeneration_scan,
    kks_spin,
    loglog_slope,
    random_rank1_cm_point,
    random_rs_reduced,
    reduced_rank1,
    rs_point,
)
from .sampling import random_cm_point, random_tstar_point, spread_positions

SUITES = ("brackets", "integrability", "duality", "degeneration", "angles")
DEGENERATION_S = (1e-1, 3e-2, 1e-2, 3e-3, 1e-3)


def _prop(value, threshold, passed):
    return {"value": float(value), "threshold": threshold, "passed": bool(passed)}


def _report(name, props):
    return {"suite": name, "passed": all(p["passed"] for p in props.values()), "properties": props}


def suite_brackets(rng, n=3, convention="ExpQ", points=10):
    cartan = CartanData(n, gamma_convention=convention)
    inv = [invariant_cm(k, cartan) for k in range(2, n + 1)]
    joints = [joint_invariant_cm(w, cartan) for w in DEFAULT_WORDS]
    comm = center = agree = 0.0
    ranks = []
    for _ in range(points):
        cm = random_cm_point(rng, n)
        for a in range(len(inv)):
            for b in range(a + 1, len(inv)):
                comm = max(comm, abs(fd_bracket(inv[a], inv[b], cm, cartan)))
            for j in joints:
                center = max(center, abs(fd_bracket(inv[a], j, cm, cartan)))
        h = cm_hamiltonian(cartan)
        j = joints[0]
        agree = max(agree, abs(fd_bracket(h, j, cm, cartan) - canonical_bracket_cm(h, j, cm, cartan)))
        ranks.append(flow_rank(cm, cartan))
    return _report("brackets", {
        "invariants_commute": _prop(comm, 1e-6, comm < 1e-6),
        "invariants_central": _prop(center, 1e-6, center < 1e-6),
        "analytic_matches_fd": _prop(agree, 1e-7, agree < 1e-7),
        "flow_rank": _prop(min(ranks), n - 1, all(r == n - 1 for r in ranks)),
    })


def suite_integrability(rng, n=3, dt=1e-3, t_final=10.0, convention="Exp2Q"):
    cartan = CartanData(n, gamma_convention=convention)
    cm = random_rank1_cm_point(rng, n)
    steps = int(round(t_final / dt))
    recs = rk4_integrate(cm, cartan, dt, steps, max(1, steps // 100), rank1=True)
    first = recs[0].invariant_values
    props = {}
    for key in first:
        if key == "constraint":
            continue
        drift = max(abs(r.invariant_values[key] - first[key]) for r in recs) / max(1e-300, abs(first[key]))
        props[f"drift_{key}"] = _prop(drift, 1e-6, drift < 1e-6)
    cons = max(r.invariant_values["constraint"] for r in recs)
    props["kks_constraint"] = _prop(cons, 1e-8, cons < 1e-8)
    return _report("integrability", props)


def suite_duality(rng, n=3, points=20):
    cartan = CartanData(n)
    ok_rank, ok_int, worst = True, True, n - 1
    for _ in range(points):
        rep = duality_diagnostics(random_tstar_point(rng, cartan), rng)
        ok_rank &= rep["fiber_ranks"] == [n - 1, n - 1]
        ok_int &= rep["intersection_check"]
        worst = min(worst, *rep["fiber_ranks"])
    return _report("duality", {
        "fiber_ranks": _prop(worst, n - 1, ok_rank),
        "intersection": _prop(float(ok_int), 1, ok_int),
    })


def degeneration_data(rng, n=3):
    """Real generic data: rank-1 spin with zero diagonal, distinct h, Cartan part."""
    phi = rng.uniform(0.5, 1.5, size=n) * rng.choice([-1.0, 1.0], size=n)
    mu = kks_spin(reduced_rank1(phi, rng.uniform(0.5, 1.0))).mu
    h = spread_positions(rng, n, 1.0, min_gap=0.5)
    cart = rng.normal(size=n)
    return np.array(mu), h, cart - cart.mean()


def suite_degeneration(rng, n=3, s_values=DEGENERATION_S):
    mu, h, cart = degeneration_data(rng, n)
    rows = degeneration_scan(mu, h, s_values, cart)
    slope = loglog_slope(rows)
    return _report("degeneration", {"loglog_slope": _prop(slope, "1 +- 0.2", abs(slope - 1) <= 0.2)}), rows


def suite_angles(rng, n=3, convention="Exp2Q", samples=21, t_final=2.0):
    cartan = CartanData(n, gamma_convention=convention)
    times = np.linspace(0.0, t_final, samples)
    props = {}
    cm = random_rank1_cm_point(rng, n)
    for k in range(2, n + 1):
        rep = cm_angle_linearity(cm, cartan, k, times)
        props[f"cm_k{k}_linearity"] = _prop(rep["linearity_residual"], 1e-8, rep["linearity_residual"] < 1e-8)
        props[f"cm_k{k}_slope"] = _prop(rep["slope_error"], 1e-6, rep["slope_error"] < 1e-6)
    red = random_rs_reduced(rng, n)
    rs, _ = rs_point(red.h, red.g_diag, red.kappa)
    for k in range(1, n + 1):
        rep = rs_angle_linearity(rs, k, times)
        props[f"rs_k{k}_linearity"] = _prop(rep["linearity_residual"], 1e-8, rep["linearity_residual"] < 1e-8)
        props[f"rs_k{k}_slope"] = _prop(rep["slope_error"], 1e-6, rep["slope_error"] < 1e-6)
    return _report("angles", props)


def run_suite(name, rng, n=3, convention=None, dt=None, t_final=None):
    if name == "brackets":
        return suite_brackets(rng, n, convention or "ExpQ")
    if name == "integrability":
        kw = {}
        if dt:
            kw["dt"] = dt
        if t_final:
            kw["t_final"] = t_final
        return suite_integrability(rng, n, convention=convention or "Exp2Q", **kw)
    if name == "duality":
        return suite_duality(rng, n)
    if name == "degeneration":
        return suite_degeneration(rng, n)[0]
    if name == "angles":
        return suite_angles(rng, n, convention or "Exp2Q")
    raise ValueError(f"unknown suite {name!r}")
