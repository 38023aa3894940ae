import csv
import io
import json
import math
import subprocess
import sys

import pytest

from qcodebound import cli
from qcodebound import exponent as ex


def run(args, capsys):
    code = cli.main(args)
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


@pytest.fixture
def damping_code_file(tmp_path):
    p = tmp_path / "code.txt"
    p.write_text("# two-qubit code\n0101\nleaders:\n0000\n1000\n")
    return str(p)


class TestSweep:
    def test_parse_and_points(self):
        s = cli.SweepSpec.parse("p:0:0.015:0.0015")
        pts = s.points()
        assert len(pts) == 11 and pts[-1] == 0.015
        assert all(abs(v - 0.0015 * j) < 1e-15 for j, v in enumerate(pts))

    @pytest.mark.parametrize("bad", ["R:0:1", "x:0:1:0.1", "R:1:0:0.1", "R:0:1:0", "R:a:1:0.1"])
    def test_rejects(self, bad):
        with pytest.raises(ValueError):
            cli.SweepSpec.parse(bad)

    def test_fmt_17_digits(self):
        assert cli.fmt(0.1) == "0.10000000000000001"
        assert cli.fmt(-0.0) == "0"


class TestExponent:
    def test_identity(self, capsys):
        code, out, _ = run(["exponent", "--channel", "identity", "--sweep", "R:0:1:0.5", "--jobs", "1"], capsys)
        assert code == 0
        r = rows(out)
        assert list(r[0]) == ["R", "E", "H_of_Qstar", "active_branch"]
        assert [float(x["E"]) for x in r] == pytest.approx([1, 0.5, 0], abs=1e-9)

    def test_depolarizing_at_root(self, capsys):
        p = ex.h1_root()
        code, out, _ = run(["exponent", "--channel", "depolarizing", "--param", repr(p), "--sweep", "R:0:1:0.25"], capsys)
        assert code == 0
        assert all(float(x["E"]) < 1e-6 for x in rows(out))

    def test_surface_grid(self, capsys):
        args = ["exponent", "--channel", "depolarizing", "--sweep", "p:0:0.003:0.0015", "--sweep", "R:0:1:0.5"]
        code, out, _ = run(args + ["--jobs", "1"], capsys)
        assert code == 0
        r = rows(out)
        assert list(r[0])[:2] == ["p", "R"]
        assert sorted({float(x["p"]) for x in r}) == pytest.approx([0, 0.0015, 0.003])
        assert len(r) == 9
        code2, out2, _ = run(args + ["--jobs", "2"], capsys)
        assert out2 == out

    def test_vacuous_flag(self, capsys):
        args = ["exponent", "--channel", "depolarizing", "--param", "0.05", "--sweep", "R:0.1:0.1:0.1", "--n", "10", "--k", "1"]
        code, out, _ = run(args, capsys)
        r = rows(out)[0]
        assert code == 0 and float(r["finite_length_bound"]) < 0 and r["note"] == cli.VACUOUS

    def test_channel_file(self, tmp_path, capsys):
        path = tmp_path / "ad.json"
        assert run(["make-channel", "amplitude_damping", "--param", "0.2", "--out", str(path)], capsys)[0] == 0
        data = json.loads(path.read_text())
        assert data["d"] == 2 and len(data["kraus"]) == 2
        code, out, _ = run(["exponent", "--channel", str(path), "--sweep", "R:0:0:0.1"], capsys)
        assert code == 0 and float(rows(out)[0]["E"]) > 0

    def test_bad_channel_file(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"d": 2, "m": 1, "kraus": [[[[1, 0], [0, 0]], [[0, 0], [2, 0]]]]}))
        code, _, err = run(["exponent", "--channel", str(path)], capsys)
        assert code == 2 and "not trace preserving" in err and "3.000e+00" in err

    def test_usage_errors(self, capsys):
        assert run(["exponent", "--channel", "bogus"], capsys)[0] == 2
        assert run(["exponent", "--channel", "depolarizing"], capsys)[0] == 2
        assert run(["exponent", "--channel", "identity", "--sweep", "gamma:0:1:0.1"], capsys)[0] == 2
        with pytest.raises(SystemExit) as e:
            cli.main(["frobnicate"])
        assert e.value.code == 2


class TestBounds:
    def test_amplitude_damping_sweep(self, capsys):
        code, out, _ = run(["bounds", "--channel", "amplitude_damping", "--sweep", "gamma:0:1:0.25", "--jobs", "1"], capsys)
        assert code == 0
        r = rows(out)
        assert len(r) == 5
        for x in r:
            g = float(x["gamma"])
            assert float(x["capacity_lb"]) >= float(x["rival_lb"]) - 1e-12
            assert float(x["closed_form"]) == pytest.approx(float(x["capacity_lb"]), abs=1e-10)
            assert float(x["p_prime"]) == pytest.approx(1 - (2 - g + 2 * math.sqrt(1 - g)) / 4, abs=1e-6)
            eta = [complex(float(x[f"eta{i}_re"]), float(x[f"eta{i}_im"])) for i in range(4)]
            assert sum(abs(z) ** 2 for z in eta) == pytest.approx(1.0)

    def test_identity(self, capsys):
        r = rows(run(["bounds", "--channel", "identity"], capsys)[1])[0]
        assert [float(r[k]) for k in ("capacity_lb", "rival_lb", "p_prime")] == pytest.approx([1, 1, 0], abs=1e-9)

    def test_depolarizing_coincidence(self, capsys):
        r = rows(run(["bounds", "--channel", "depolarizing", "--param", "0.1"], capsys)[1])[0]
        assert float(r["capacity_lb"]) == pytest.approx(float(r["rival_lb"]), abs=1e-8)
        assert float(r["capacity_lb"]) == pytest.approx(1 - ex.h1(0.1), abs=1e-12)


class TestSimulate:
    def test_damping_code(self, damping_code_file, tmp_path, capsys):
        manifest = tmp_path / "m.json"
        args = ["simulate", "--stabilizer", damping_code_file, "--channel", "amplitude_damping", "--param", "0.3", "--starts", "8"]
        code, out, _ = run(args + ["--manifest", str(manifest)], capsys)
        assert code == 0
        r = rows(out)
        assert len(r) == 2
        for x in r:
            assert float(x["F_min"]) == pytest.approx(0.7, abs=1e-6)
            assert float(x["F_avg"]) == pytest.approx(0.85, abs=1e-6)
            assert float(x["F_e"]) == pytest.approx(0.775, abs=1e-12)
            assert float(x["uncorrectable_prob"]) == pytest.approx(0.225, abs=1e-12)
            assert x["verdict"] == "confirmed"
        m = json.loads(manifest.read_text())
        assert m["command"] == "simulate" and m["seed"] == 0 and len(m["input_digest"]) == 64
        assert run(args, capsys)[1] == out

    def test_out_file(self, damping_code_file, tmp_path, capsys):
        dest = tmp_path / "o.csv"
        args = ["simulate", "--stabilizer", damping_code_file, "--channel", "identity", "--starts", "4", "--out", str(dest)]
        code, out, _ = run(args, capsys)
        assert code == 0 and out == ""
        assert all(float(x["F_e"]) == pytest.approx(1) for x in rows(dest.read_text()))

    def test_bad_stabilizer(self, tmp_path, capsys):
        p = tmp_path / "s.txt"
        p.write_text("1000\n0100\n")
        code, _, err = run(["simulate", "--stabilizer", str(p), "--channel", "identity"], capsys)
        assert code == 2 and "orthogonal" in err

    def test_resource_cap(self, tmp_path, capsys):
        p = tmp_path / "big.txt"
        p.write_text("01" + "00" * 6 + "\n")
        code, _, err = run(["simulate", "--stabilizer", str(p), "--channel", "identity"], capsys)
        assert code == 3 and "cap" in err


class TestVerify:
    def test_gfsym_suite(self, capsys):
        code, out, _ = run(["verify", "--suite", "gfsym", "--seed", "3"], capsys)
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0] == "name,trials,worst_slack,status"
        assert any(line.startswith("gfsym.isotropic_census,") and line.endswith("PASS") for line in lines)
        assert run(["verify", "--suite", "gfsym", "--seed", "3"], capsys)[1] == out

    def test_channel_suite(self, capsys):
        code, out, _ = run(["verify", "--suite", "channel"], capsys)
        assert code == 0 and out.count("PASS") == 4

    def test_failure_exit_code(self, capsys, monkeypatch):
        from qcodebound import batteries

        fail = lambda rng: batteries.CheckResult("x.fails", 1, -1.0, False)  # noqa: E731
        monkeypatch.setitem(batteries.SUITES, "channel", [fail])
        code, out, _ = run(["verify", "--suite", "channel"], capsys)
        assert code == 1 and "x.fails,1,-1.000000e+00,FAIL" in out


class TestMisc:
    def test_gnuplot(self, capsys):
        code, out, _ = run(["gnuplot", "--figure", "bound-comparison", "--data", "bounds.csv"], capsys)
        assert code == 0 and "bounds.csv" in out and "set datafile separator ','" in out

    def test_search(self, capsys):
        code, out, _ = run(["search", "--channel", "depolarizing", "--param", "0.1", "--trials", "50"], capsys)
        r = rows(out)[0]
        assert code == 0 and float(r["best_found"]) >= float(r["standard_basis_value"])

    def test_module_entry_point(self):
        res = subprocess.run(
            [sys.executable, "-m", "qcodebound", "exponent", "--channel", "identity", "--sweep", "R:0:0:1"],
            capture_output=True,
            text=True,
        )
        assert res.returncode == 0 and res.stdout.startswith("R,E,")
