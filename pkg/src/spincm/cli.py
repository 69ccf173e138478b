"""Command-line front end.

    spincm simulate            RK4 trajectory of H_CM
    spincm exact               exact-flow samples (SpinCM, SpinRS or RationalCM)
    spincm check <suite>       property suite -> JSON report
    spincm scan-degeneration   Q(s) against its s -> 0 limit

Settings come from an INI file (``--config``, section [run]) and are
overridden by flags. The output directory is, in order of precedence,
``--out``, $SPINCM_OUT, the config value, then ``spincm_out``.

Exit codes: 0 ok, 1 property failure, 2 configuration error, 3 numeric
failure (partial output is still written).
"""

import argparse
import configparser
import os
import sys
from dataclasses import dataclass, fields, replace

import numpy as np

from .dynamics import (
    WORD_NAMES,
    exact_flow_rational_cm,
    exact_trajectory_cm,
    exact_trajectory_rs,
    rational_cm_hamiltonian,
    rk4_integrate,
)
from .errors import CollisionError, ConfigError, NumericFailure
from .phase_space import CartanData, Convention, OrbitTag
from .rank1_kks import loglog_slope, random_rank1_cm_point, random_rs_reduced, rs_point
from .sampling import random_cm_point
from .serialization import (
    DEGENERATION_HEADER,
    SCHEMA_VERSION,
    cm_from_json,
    cm_to_json,
    degeneration_rows,
    dump_json,
    fmt,
    load_point,
    max_imag,
    rs_header,
    rs_row,
    trajectory_header,
    trajectory_row,
    write_csv,
)
from .suites import DEGENERATION_S, SUITES, degeneration_data, run_suite

EXIT_OK, EXIT_PROPERTY, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3
DEFAULT_OUT = "spincm_out"


@dataclass(frozen=True)
class RunConfig:
    n: int = 3
    convention: str = "Exp2Q"
    system: str = "SpinCM"
    orbit: str = "Rank1"
    k: int = 2
    t_final: float = 1.0
    dt: float = 1e-2
    sample_every: int = 10
    seed: int = 0
    nu: float = 1.0
    kappa: float = 0.5
    collision_threshold: float = 1e-6
    point: str = ""
    out: str = ""

    def validate(self):
        if self.n < 2:
            raise ConfigError("n must be at least 2")
        try:
            Convention(self.convention)
            OrbitTag(self.orbit)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if self.system not in ("SpinCM", "SpinRS", "RationalCM"):
            raise ConfigError(f"unknown system {self.system!r}")
        if self.dt <= 0 or self.t_final < 0 or self.sample_every < 1 or self.nu <= 0:
            raise ConfigError("dt, nu and sample_every must be positive, t_final non-negative")
        lo = 1 if self.system == "SpinRS" else 2
        if not lo <= self.k <= self.n:
            raise ConfigError(f"k must lie in [{lo}, n]")
        if self.kappa <= 0 or self.collision_threshold <= 0:
            raise ConfigError("kappa and collision_threshold must be positive")
        return self


_TYPES = {f.name: f.type for f in fields(RunConfig)}
_CASTS = {"int": int, "float": float, "str": str, int: int, float: float, str: str}


def load_config(path):
    if not path:
        return {}
    parser = configparser.ConfigParser()
    if not parser.read(path):
        raise ConfigError(f"cannot read config {path}")
    if "run" not in parser:
        raise ConfigError("config needs a [run] section")
    out = {}
    for key, raw in parser["run"].items():
        key = key.replace("-", "_")
        if key not in _TYPES:
            raise ConfigError(f"unknown config key {key!r}")
        try:
            out[key] = _CASTS[_TYPES[key]](raw)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {raw!r}") from exc
    return out


def build_config(args):
    values = load_config(args.config)
    for name in _TYPES:
        v = getattr(args, name, None)
        if v is not None:
            values[name] = v
    cfg = replace(RunConfig(), **values)
    out = getattr(args, "out", None) or os.environ.get("SPINCM_OUT") or cfg.out or DEFAULT_OUT
    return replace(cfg, out=out).validate()


def _cartan(cfg):
    return CartanData(cfg.n, cfg.nu, cfg.convention)


def initial_cm(cfg, rng):
    if cfg.point:
        try:
            cm, cartan = cm_from_json(load_point(cfg.point))
        except (OSError, ValueError, KeyError) as exc:
            raise ConfigError(f"bad point file {cfg.point}: {exc}") from exc
        if cartan.n != cfg.n:
            raise ConfigError("point file n differs from the configured n")
        return cm
    if cfg.orbit == "Rank1":
        return random_rank1_cm_point(rng, cfg.n, kappa=1j * cfg.kappa)
    return random_cm_point(rng, cfg.n)


def _grid(cfg):
    steps = int(round(cfg.t_final / cfg.dt))
    idx = list(range(0, steps + 1, cfg.sample_every))
    if idx[-1] != steps:
        idx.append(steps)
    return steps, [i * cfg.dt for i in idx]


def _invariant_names(n):
    return [f"I{k}" for k in range(2, n + 1)] + ["H"] + list(WORD_NAMES)


def _drifts(records, names):
    first = records[0].invariant_values
    drift = 0.0
    for rec in records:
        for key in names:
            drift = max(drift, abs(rec.invariant_values[key] - first[key]) / max(1.0, abs(first[key])))
    energy = max(abs(r.invariant_values["H"] - first["H"]) for r in records) / max(1e-300, abs(first["H"]))
    return drift, energy


def _write_cm_output(cfg, records, command, halted):
    os.makedirs(cfg.out, exist_ok=True)
    # mu columns for every command so simulate and exact outputs diff directly
    rank1 = False
    names = _invariant_names(cfg.n)
    write_csv(
        os.path.join(cfg.out, "trajectory.csv"),
        trajectory_header(cfg.n, rank1, names),
        [trajectory_row(r, rank1, names) for r in records],
    )
    drift, energy = _drifts(records, names)
    summary = {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "system": cfg.system,
        "n": cfg.n,
        "seed": cfg.seed,
        "records": len(records),
        "max_invariant_drift": drift,
        "energy_drift": energy,
        "max_imag": max_imag(records, names),
        "halted_reason": halted,
    }
    dump_json(summary, os.path.join(cfg.out, "summary.json"))
    return summary


def cmd_simulate(cfg):
    if cfg.system != "SpinCM":
        raise ConfigError("simulate integrates the spin CM system only; use exact for SpinRS/RationalCM")
    rng = np.random.default_rng(cfg.seed)
    cartan = _cartan(cfg)
    cm = initial_cm(cfg, rng)
    dump_json(cm_to_json(cm, cartan), _ensure(cfg.out, "initial_point.json"))
    steps, _ = _grid(cfg)
    rank1 = cm.spin.phi is not None
    gen = None if cfg.k == 2 else cfg.k
    try:
        records = rk4_integrate(cm, cartan, cfg.dt, steps, cfg.sample_every, k=gen, rank1=rank1,
                               collision_threshold=cfg.collision_threshold)
    except CollisionError as exc:
        if exc.records:
            _write_cm_output(cfg, exc.records, "simulate", str(exc))
        raise
    _write_cm_output(cfg, records, "simulate", None)
    return EXIT_OK


def _ensure(out, name):
    os.makedirs(out, exist_ok=True)
    return os.path.join(out, name)


def cmd_exact(cfg):
    rng = np.random.default_rng(cfg.seed)
    _, times = _grid(cfg)
    if cfg.system == "SpinCM":
        cartan = _cartan(cfg)
        cm = initial_cm(cfg, rng)
        dump_json(cm_to_json(cm, cartan), _ensure(cfg.out, "initial_point.json"))
        # H_CM = nu I_2: scale time so k = 2 matches simulate
        scale = cartan.nu if cfg.k == 2 else 1.0
        recs = exact_trajectory_cm(cm, cfg.k, [scale * t for t in times], cartan)
        recs = [type(r)(t, r.point, r.invariant_values, r.gauge_conjugator) for t, r in zip(times, recs)]
        _write_cm_output(cfg, recs, "exact", None)
        return EXIT_OK
    if cfg.system == "SpinRS":
        red = random_rs_reduced(rng, cfg.n, kappa=cfg.kappa)
        rs, _ = rs_point(red.h, red.g_diag, red.kappa)
        recs = exact_trajectory_rs(rs, cfg.k, times)
        names = [f"E{j}" for j in range(1, cfg.n + 1)]
        write_csv(_ensure(cfg.out, "trajectory.csv"), rs_header(cfg.n, names), [rs_row(r, names) for r in recs])
        first = recs[0].invariant_values
        drift = max(abs(r.invariant_values[k] - first[k]) for r in recs for k in names)
        dump_json({"schema_version": SCHEMA_VERSION, "command": "exact", "system": "SpinRS", "n": cfg.n,
                   "seed": cfg.seed, "records": len(recs), "max_invariant_drift": drift,
                   "kappa": cfg.kappa, "halted_reason": None}, _ensure(cfg.out, "summary.json"))
        return EXIT_OK
    return _exact_rational(cfg, rng, times)


def _exact_rational(cfg, rng, times):
    cm = random_cm_point(rng, cfg.n)
    q, p, mu = np.array(cm.q), np.array(cm.p_tilde), np.array(cm.mu)
    diff = q[:, None] - q[None, :]
    np.fill_diagonal(diff, 1.0)
    x = mu / diff
    np.fill_diagonal(x, p)
    a = np.diag(q)
    header = ["t"] + [f"q_{i + 1}" for i in range(cfg.n)] + [f"p_{i + 1}" for i in range(cfg.n)]
    for i in range(cfg.n):
        for j in range(cfg.n):
            header += [f"re_mu_{i + 1}{j + 1}", f"im_mu_{i + 1}{j + 1}"]
    header += ["H"]
    rows, energies = [], []
    for t in times:
        at, xt = exact_flow_rational_cm(a, x, cfg.k, t)
        qt = np.diag(at)
        mut = (qt[:, None] - qt[None, :]) * xt
        h = rational_cm_hamiltonian(qt, np.diag(xt), mut)
        energies.append(h)
        row = [fmt(t)] + [fmt(v.real) for v in qt] + [fmt(v.real) for v in np.diag(xt)]
        for z in np.ravel(mut):
            row += [fmt(z.real), fmt(z.imag)]
        rows.append(row + [fmt(h.real)])
    write_csv(_ensure(cfg.out, "trajectory.csv"), header, rows)
    drift = max(abs(e - energies[0]) for e in energies) / max(1.0, abs(energies[0]))
    dump_json({"schema_version": SCHEMA_VERSION, "command": "exact", "system": "RationalCM", "n": cfg.n,
               "seed": cfg.seed, "records": len(rows), "max_invariant_drift": drift, "halted_reason": None},
              _ensure(cfg.out, "summary.json"))
    return EXIT_OK


def cmd_check(cfg, suite):
    rng = np.random.default_rng(cfg.seed)
    kw = {}
    if suite == "integrability":
        kw = {"dt": cfg.dt, "t_final": cfg.t_final}
    report = run_suite(suite, rng, cfg.n, cfg.convention, **kw)
    report["schema_version"] = SCHEMA_VERSION
    report["seed"] = cfg.seed
    dump_json(report, _ensure(cfg.out, f"check_{suite}.json"))
    for name, prop in report["properties"].items():
        print(f"{suite}.{name}: {'PASS' if prop['passed'] else 'FAIL'} ({prop['value']:.3e})")
    return EXIT_OK if report["passed"] else EXIT_PROPERTY


def cmd_scan(cfg):
    from .rank1_kks import degeneration_scan

    rng = np.random.default_rng(cfg.seed)
    mu, h, cart = degeneration_data(rng, cfg.n)
    rows = degeneration_scan(mu, h, DEGENERATION_S, cart)
    write_csv(_ensure(cfg.out, "degeneration.csv"), DEGENERATION_HEADER, degeneration_rows(rows))
    slope = loglog_slope(rows)
    dump_json({"schema_version": SCHEMA_VERSION, "command": "scan-degeneration", "n": cfg.n,
               "seed": cfg.seed, "loglog_slope": slope,
               "max_imag": max(abs(r["Q"].imag) for r in rows)}, _ensure(cfg.out, "degeneration.json"))
    return EXIT_OK if abs(slope - 1) <= 0.2 else EXIT_PROPERTY


def make_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI file with a [run] section")
    common.add_argument("--n", type=int)
    common.add_argument("--k", type=int, help="flow generator index")
    common.add_argument("--dt", type=float)
    common.add_argument("--t-final", dest="t_final", type=float)
    common.add_argument("--sample-every", dest="sample_every", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--convention", choices=[c.value for c in Convention])
    common.add_argument("--system", choices=["SpinCM", "SpinRS", "RationalCM"])
    common.add_argument("--orbit", choices=[o.value for o in OrbitTag])
    common.add_argument("--nu", type=float)
    common.add_argument("--kappa", type=float, help="spin scale (rank-1 orbit)")
    common.add_argument("--collision-threshold", dest="collision_threshold", type=float)
    common.add_argument("--point", help="JSON phase point to start from")
    common.add_argument("--out", help="output directory")

    parser = argparse.ArgumentParser(prog="spincm", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="RK4 trajectory of H_CM")
    sub.add_parser("exact", parents=[common], help="exact-flow samples")
    check = sub.add_parser("check", parents=[common], help="run a property suite")
    check.add_argument("suite", choices=SUITES)
    sub.add_parser("scan-degeneration", parents=[common], help="RS -> CM degeneration table")
    return parser


def main(argv=None):
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        cfg = build_config(args)
        if args.command == "simulate":
            return cmd_simulate(cfg)
        if args.command == "exact":
            return cmd_exact(cfg)
        if args.command == "check":
            return cmd_check(cfg, args.suite)
        return cmd_scan(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericFailure, np.linalg.LinAlgError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
