"""JSON phase points and CSV tables.

Complex numbers are stored as [re, im] pairs in JSON. CSV numbers use
17-digit scientific notation so that files round-trip exactly and are
byte-identical across runs with the same seed.
"""

import csv
import json

import numpy as np

from .phase_space import CartanData, CMPoint, OrbitTag, RSPoint, SpinMatrix
from .rank1_kks import Rank1Spin, kks_spin

SCHEMA_VERSION = 1


def fmt(v):
    return f"{float(v):.17e}"


def _c(z):
    z = complex(z)
    return [z.real, z.imag]


def _vec(v):
    return [_c(z) for z in np.asarray(v).ravel()]


def _mat(m):
    return [[_c(z) for z in row] for row in np.asarray(m)]


def _from_pairs(data):
    a = np.asarray(data, dtype=float)
    return a[..., 0] + 1j * a[..., 1]


def cm_to_json(cm, cartan):
    out = {
        "version": SCHEMA_VERSION,
        "kind": "cm",
        "n": cm.n,
        "convention": cartan.gamma_convention.value,
        "nu": cartan.nu,
        "q": _vec(cm.q),
        "p": _vec(cm.p_tilde),
    }
    if cm.spin.orbit_tag is OrbitTag.RANK1 and cm.spin.phi is not None:
        out["phi"], out["psi"] = _vec(cm.spin.phi), _vec(cm.spin.psi)
    else:
        out["mu"] = _mat(cm.mu)
    return out


def cm_from_json(data):
    """(CMPoint, CartanData) from a decoded JSON object."""
    if data.get("version") != SCHEMA_VERSION or data.get("kind") != "cm":
        raise ValueError("not a version-1 CM phase point")
    cartan = CartanData(int(data["n"]), float(data.get("nu", 1.0)), data.get("convention", "ExpQ"))
    q, p = _from_pairs(data["q"]), _from_pairs(data["p"])
    if "phi" in data:
        spin = kks_spin(Rank1Spin(_from_pairs(data["phi"]), _from_pairs(data["psi"]), reduced=True))
    else:
        spin = SpinMatrix(_from_pairs(data["mu"]))
    cm = CMPoint(q, p, spin)
    if cm.n != cartan.n:
        raise ValueError("n does not match the point")
    return cm, cartan


def rs_to_json(rs, kappa=None):
    out = {"version": SCHEMA_VERSION, "kind": "rs", "n": rs.n, "h": _vec(rs.h), "g": _mat(rs.g)}
    if kappa is not None:
        out["kappa"] = _c(kappa)
    return out


def rs_from_json(data):
    if data.get("version") != SCHEMA_VERSION or data.get("kind") != "rs":
        raise ValueError("not a version-1 RS phase point")
    return RSPoint(_from_pairs(data["h"]), _from_pairs(data["g"]))


def load_point(path):
    with open(path) as fh:
        return json.load(fh)


def dump_json(obj, path):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(o):
    if isinstance(o, complex):
        return _c(o)
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def trajectory_header(n, rank1, invariant_names):
    cols = ["t"] + [f"q_{i + 1}" for i in range(n)] + [f"p_{i + 1}" for i in range(n)]
    if rank1:
        for name in ("phi", "psi"):
            for i in range(n):
                cols += [f"re_{name}_{i + 1}", f"im_{name}_{i + 1}"]
    else:
        for i in range(n):
            for j in range(n):
                cols += [f"re_mu_{i + 1}{j + 1}", f"im_mu_{i + 1}{j + 1}"]
    return cols + list(invariant_names)


def trajectory_row(rec, rank1, invariant_names):
    pt = rec.point
    row = [fmt(rec.time)] + [fmt(v.real) for v in pt.q] + [fmt(v.real) for v in pt.p_tilde]
    if rank1:
        for vec in (pt.spin.phi, pt.spin.psi):
            for z in vec:
                row += [fmt(z.real), fmt(z.imag)]
    else:
        for z in np.ravel(pt.mu):
            row += [fmt(z.real), fmt(z.imag)]
    return row + [fmt(complex(rec.invariant_values[k]).real) for k in invariant_names]


def max_imag(records, invariant_names):
    worst = 0.0
    for rec in records:
        vals = list(rec.point.q) + list(rec.point.p_tilde)
        vals += [rec.invariant_values[k] for k in invariant_names]
        worst = max(worst, max(abs(complex(v).imag) for v in vals))
    return worst


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def rs_header(n, invariant_names):
    cols = ["t"] + [f"h_{i + 1}" for i in range(n)]
    for i in range(n):
        for j in range(n):
            cols += [f"re_g_{i + 1}{j + 1}", f"im_g_{i + 1}{j + 1}"]
    return cols + list(invariant_names)


def rs_row(rec, invariant_names):
    pt = rec.point
    row = [fmt(rec.time)] + [fmt(v.real) for v in pt.h]
    for z in np.ravel(pt.g):
        row += [fmt(z.real), fmt(z.imag)]
    return row + [fmt(complex(rec.invariant_values[k]).real) for k in invariant_names]


DEGENERATION_HEADER = ["s", "Q", "Q_star", "abs_err"]


def degeneration_rows(rows):
    return [[fmt(r["s"]), fmt(r["Q"].real), fmt(r["Q_star"].real), fmt(r["abs_err"])] for r in rows]
