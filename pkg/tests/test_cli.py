import csv
import json

import numpy as np
import pytest

from spincm.cli import EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK, EXIT_PROPERTY, RunConfig, main
from spincm.phase_space import CartanData, CMPoint, SpinMatrix
from spincm.serialization import (
    DEGENERATION_HEADER,
    SCHEMA_VERSION,
    cm_from_json,
    cm_to_json,
    dump_json,
    rs_header,
    trajectory_header,
)

INV3 = ["I2", "I3", "H", "J_xy", "J_x2y", "J_xy2"]


def read_csv(path):
    with open(path) as fh:
        rows = list(csv.reader(fh))
    return rows[0], [[float(v) for v in r] for r in rows[1:]]


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def run(args, out):
    return main(args + ["--out", str(out)])


def write_point(path, cm, cartan):
    dump_json(cm_to_json(cm, cartan), path)
    return str(path)


class TestGoldenSchema:
    def test_trajectory_header_n2(self):
        assert trajectory_header(2, False, ["I2", "H"]) == [
            "t", "q_1", "q_2", "p_1", "p_2",
            "re_mu_11", "im_mu_11", "re_mu_12", "im_mu_12",
            "re_mu_21", "im_mu_21", "re_mu_22", "im_mu_22",
            "I2", "H",
        ]

    def test_degeneration_header(self):
        assert DEGENERATION_HEADER == ["s", "Q", "Q_star", "abs_err"]

    def test_simulate_files(self, tmp_path):
        assert run(["simulate", "--n", "3", "--t-final", "0.1", "--seed", "1"], tmp_path) == EXIT_OK
        header, rows = read_csv(tmp_path / "trajectory.csv")
        assert header == trajectory_header(3, False, INV3)
        assert len(rows) == 2
        summary = read_json(tmp_path / "summary.json")
        assert set(summary) == {
            "schema_version", "command", "system", "n", "seed", "records",
            "max_invariant_drift", "energy_drift", "max_imag", "halted_reason",
        }
        assert summary["schema_version"] == SCHEMA_VERSION
        assert summary["halted_reason"] is None

    def test_check_report_keys(self, tmp_path):
        assert run(["check", "duality", "--seed", "2"], tmp_path) == EXIT_OK
        rep = read_json(tmp_path / "check_duality.json")
        assert set(rep) == {"suite", "passed", "properties", "schema_version", "seed"}
        for prop in rep["properties"].values():
            assert set(prop) == {"value", "threshold", "passed"}

    def test_rs_exact_header(self, tmp_path):
        assert run(["exact", "--system", "SpinRS", "--k", "1", "--t-final", "0.2"], tmp_path) == EXIT_OK
        header, _ = read_csv(tmp_path / "trajectory.csv")
        assert header == rs_header(3, ["E1", "E2", "E3"])


class TestDeterminism:
    @pytest.mark.parametrize("cmd", [["simulate"], ["exact"], ["scan-degeneration"], ["check", "angles"]])
    def test_same_seed_identical_bytes(self, tmp_path, cmd):
        a, b = tmp_path / "a", tmp_path / "b"
        args = cmd + ["--seed", "7", "--t-final", "0.2"]
        assert run(args, a) == run(args, b)
        names = sorted(p.name for p in a.iterdir())
        assert names == sorted(p.name for p in b.iterdir())
        for name in names:
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_seed_changes_output(self, tmp_path):
        run(["simulate", "--seed", "1", "--t-final", "0.1"], tmp_path / "a")
        run(["simulate", "--seed", "2", "--t-final", "0.1"], tmp_path / "b")
        assert (tmp_path / "a" / "trajectory.csv").read_bytes() != (tmp_path / "b" / "trajectory.csv").read_bytes()


class TestSimulate:
    def test_zero_spin_roundoff(self, tmp_path):
        rng = np.random.default_rng(0)
        q = np.array([-1.0, 0.1, 0.9])
        p = rng.normal(size=3) * 0.1
        cm = CMPoint(q, p - p.mean(), SpinMatrix(np.zeros((3, 3))))
        point = write_point(tmp_path / "pt.json", cm, CartanData(3))
        assert run(["simulate", "--point", point, "--orbit", "General", "--t-final", "1"], tmp_path / "o") == EXIT_OK
        s = read_json(tmp_path / "o" / "summary.json")
        assert s["max_invariant_drift"] < 1e-13 and s["energy_drift"] < 1e-13

    def test_rank1_default_drift(self, tmp_path):
        assert run(["simulate", "--t-final", "2", "--dt", "1e-3", "--sample-every", "100"], tmp_path) == EXIT_OK
        s = read_json(tmp_path / "summary.json")
        assert s["max_invariant_drift"] < 1e-6 and s["energy_drift"] < 1e-6

    def test_collision_exit_with_partial_output(self, tmp_path):
        cm = CMPoint(np.array([-0.5, 0.5]), np.array([1.0, -1.0]), SpinMatrix(np.zeros((2, 2))))
        point = write_point(tmp_path / "pt.json", cm, CartanData(2, gamma_convention="ExpQ"))
        args = ["simulate", "--n", "2", "--point", point, "--orbit", "General", "--convention", "ExpQ",
                "--dt", "0.01", "--t-final", "1", "--sample-every", "5"]
        assert run(args, tmp_path / "o") == EXIT_NUMERIC
        s = read_json(tmp_path / "o" / "summary.json")
        assert s["halted_reason"] and "collision" in s["halted_reason"]
        _, rows = read_csv(tmp_path / "o" / "trajectory.csv")
        assert 0 < rows[-1][0] < 0.5

    def test_simulate_rejects_other_systems(self, tmp_path):
        assert run(["simulate", "--system", "SpinRS"], tmp_path) == EXIT_CONFIG


class TestExact:
    def test_t0_row_is_input(self, tmp_path):
        assert run(["exact", "--seed", "4", "--t-final", "0.3", "--sample-every", "10"], tmp_path) == EXIT_OK
        cm, _ = cm_from_json(read_json(tmp_path / "initial_point.json"))
        _, rows = read_csv(tmp_path / "trajectory.csv")
        first = rows[0]
        assert first[0] == 0.0
        assert np.allclose(sorted(first[1:4]), sorted(np.array(cm.q).real), atol=1e-12)

    def test_matches_simulate(self, tmp_path):
        args = ["--seed", "5", "--t-final", "0.5", "--dt", "1e-2", "--sample-every", "10"]
        assert run(["simulate"] + args, tmp_path / "s") == EXIT_OK
        assert run(["exact"] + args, tmp_path / "e") == EXIT_OK
        hs, rs = read_csv(tmp_path / "s" / "trajectory.csv")
        he, re_ = read_csv(tmp_path / "e" / "trajectory.csv")
        assert hs == he and len(rs) == len(re_)
        for a, b in zip(rs, re_):
            assert a[0] == b[0]
            # q and p are multisets under the Weyl gauge
            assert np.allclose(sorted(a[1:4]), sorted(b[1:4]), atol=1e-7)
            assert np.allclose(sorted(a[4:7]), sorted(b[4:7]), atol=1e-7)
            assert np.allclose(a[-6:], b[-6:], atol=1e-7)

    def test_two_stage_group_property(self, tmp_path):
        base = ["--seed", "6", "--k", "3", "--sample-every", "1", "--dt", "0.1"]
        assert run(["exact", "--t-final", "0.6"] + base, tmp_path / "full") == EXIT_OK
        assert run(["exact", "--t-final", "0.3"] + base, tmp_path / "a") == EXIT_OK
        header, rows = read_csv(tmp_path / "a" / "trajectory.csv")
        last = dict(zip(header, rows[-1]))
        n = 3
        mu = np.array([[last[f"re_mu_{i}{j}"] + 1j * last[f"im_mu_{i}{j}"] for j in range(1, 4)] for i in range(1, 4)])
        q = np.array([last[f"q_{i}"] for i in range(1, 4)])
        p = np.array([last[f"p_{i}"] for i in range(1, 4)])
        mid = CMPoint(q - q.mean(), p - p.mean(), SpinMatrix(mu))
        point = write_point(tmp_path / "mid.json", mid, CartanData(n))
        assert run(["exact", "--t-final", "0.3", "--point", point] + base, tmp_path / "b") == EXIT_OK
        _, full = read_csv(tmp_path / "full" / "trajectory.csv")
        _, second = read_csv(tmp_path / "b" / "trajectory.csv")
        assert np.allclose(sorted(full[-1][1:4]), sorted(second[-1][1:4]), atol=1e-10)
        assert np.allclose(full[-1][-6:], second[-1][-6:], atol=1e-9)

    def test_rational(self, tmp_path):
        assert run(["exact", "--system", "RationalCM", "--t-final", "0.5"], tmp_path) == EXIT_OK
        assert read_json(tmp_path / "summary.json")["max_invariant_drift"] < 1e-12


class TestCheck:
    @pytest.mark.parametrize("suite", ["brackets", "duality", "degeneration", "angles"])
    def test_suites_pass(self, tmp_path, suite, capsys):
        assert run(["check", suite], tmp_path) == EXIT_OK
        assert read_json(tmp_path / f"check_{suite}.json")["passed"] is True
        assert "PASS" in capsys.readouterr().out

    def test_short_integrability(self, tmp_path):
        assert run(["check", "integrability", "--t-final", "1"], tmp_path) == EXIT_OK

    def test_property_failure_exit(self, tmp_path):
        assert run(["check", "integrability", "--dt", "0.1", "--t-final", "2"], tmp_path) == EXIT_PROPERTY
        assert read_json(tmp_path / "check_integrability.json")["passed"] is False

    def test_scan(self, tmp_path):
        assert run(["scan-degeneration"], tmp_path) == EXIT_OK
        header, rows = read_csv(tmp_path / "degeneration.csv")
        assert header == DEGENERATION_HEADER and len(rows) == 5
        assert abs(read_json(tmp_path / "degeneration.json")["loglog_slope"] - 1) < 0.2


class TestConfig:
    def test_config_file_and_override(self, tmp_path):
        cfg = tmp_path / "run.ini"
        cfg.write_text("[run]\nn = 2\nt_final = 0.1\nseed = 3\nout = %s\n" % (tmp_path / "from_cfg"))
        assert main(["simulate", "--config", str(cfg)]) == EXIT_OK
        assert read_json(tmp_path / "from_cfg" / "summary.json")["n"] == 2
        assert main(["simulate", "--config", str(cfg), "--n", "3", "--out", str(tmp_path / "flag")]) == EXIT_OK
        assert read_json(tmp_path / "flag" / "summary.json")["n"] == 3

    def test_env_beats_config(self, tmp_path, monkeypatch):
        cfg = tmp_path / "run.ini"
        cfg.write_text("[run]\nt_final = 0.1\nout = %s\n" % (tmp_path / "cfg"))
        monkeypatch.setenv("SPINCM_OUT", str(tmp_path / "env"))
        assert main(["simulate", "--config", str(cfg)]) == EXIT_OK
        assert (tmp_path / "env" / "summary.json").exists() and not (tmp_path / "cfg").exists()
        assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "flag")]) == EXIT_OK
        assert (tmp_path / "flag" / "summary.json").exists()

    @pytest.mark.parametrize("args", [
        ["simulate", "--n", "1"],
        ["simulate", "--dt", "-1"],
        ["simulate", "--k", "5"],
        ["exact", "--system", "SpinRS", "--k", "0"],
        ["simulate", "--config", "/nonexistent.ini"],
        ["simulate", "--point", "/nonexistent.json"],
        ["check", "nope"],
        ["frobnicate"],
    ])
    def test_config_errors(self, tmp_path, args):
        assert run(args, tmp_path) == EXIT_CONFIG

    def test_unknown_config_key(self, tmp_path):
        cfg = tmp_path / "run.ini"
        cfg.write_text("[run]\ncolour = blue\n")
        assert run(["simulate", "--config", str(cfg)], tmp_path) == EXIT_CONFIG

    def test_bad_config_value(self, tmp_path):
        cfg = tmp_path / "run.ini"
        cfg.write_text("[run]\nn = three\n")
        assert run(["simulate", "--config", str(cfg)], tmp_path) == EXIT_CONFIG

    def test_defaults_valid(self):
        assert RunConfig().validate().n == 3


class TestSerialization:
    def test_cm_roundtrip(self, tmp_path):
        rng = np.random.default_rng(9)
        from spincm.rank1_kks import random_rank1_cm_point
        from spincm.sampling import random_cm_point

        for cm in (random_cm_point(rng, 3), random_rank1_cm_point(rng, 3)):
            cartan = CartanData(3, 2.0, "ExpQ")
            path = write_point(tmp_path / "p.json", cm, cartan)
            back, cartan2 = cm_from_json(read_json(path))
            assert cartan2 == cartan
            assert np.array_equal(back.q, cm.q) and np.array_equal(back.p_tilde, cm.p_tilde)
            assert np.allclose(back.mu, cm.mu, atol=1e-15)

    def test_rejects_wrong_version(self):
        with pytest.raises(ValueError):
            cm_from_json({"version": 99, "kind": "cm"})
