"""Command-line interface: exit codes, report formats, determinism."""

import csv
import io
import json
from pathlib import Path

import pytest

from markovquant import theorem_ratio_series
from markovquant.cli import main
from conftest import FIXTURE_DIR, S1_H1_B, S_R_A

A = str(FIXTURE_DIR / "fixture_a.json")
B = str(FIXTURE_DIR / "fixture_b.json")
C = str(FIXTURE_DIR / "fixture_c.json")


class TestValidate:
    def test_ok_exit_zero(self, capsys):
        assert main(["validate", A]) == 0
        assert "ok" in capsys.readouterr().out

    def test_violation_exit_one(self, tmp_path, capsys):
        cfg = json.loads(Path(A).read_text())
        cfg["edges"][0]["p"] = "0.4"  # row 1 now sums to 0.9
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps(cfg))
        assert main(["validate", str(bad)]) == 1
        assert "row 1 sums to 0.9" in capsys.readouterr().out

    def test_missing_file_exit_two(self, capsys):
        assert main(["validate", "/nonexistent/model.json"]) == 2
        assert "error" in capsys.readouterr().err

    def test_invalid_json_exit_two(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{")
        assert main(["validate", str(bad)]) == 2


class TestAnalyze:
    def test_fixture_a(self, capsys):
        assert main(["analyze", A, "--r", "1"]) == 0
        report = json.loads(capsys.readouterr().out)
        block = report["orders"][0]
        assert block["s_r"] == pytest.approx(S_R_A, abs=1e-9)
        assert block["t_r"] == 1 and block["m_r"] == 1
        assert block["log_exponent"] == 0.0

    def test_fixture_b(self, capsys):
        assert main(["analyze", B, "--r", "1"]) == 0
        block = json.loads(capsys.readouterr().out)["orders"][0]
        assert block["s_r"] == pytest.approx(S1_H1_B, abs=1e-8)
        assert block["m_r"] == 2 and block["t_r"] == 2
        assert block["power_exponent"] == pytest.approx(-2.7234319190018, abs=1e-6)
        assert block["log_exponent"] == pytest.approx(3.7234319190018, abs=1e-6)
        assert block["components"] == [[1, 2], [3, 4], [5], [6, 7]]
        assert block["chains"]["2"] == [[0, 1]]
        assert block["transient_set"] == [5, 6, 7]

    def test_fixture_c(self, capsys):
        assert main(["analyze", C, "--r", "1"]) == 0
        block = json.loads(capsys.readouterr().out)["orders"][0]
        assert block["m_r"] == 2 and block["t_r"] == 1
        assert block["s_r"] == pytest.approx(S_R_A, abs=1e-9)
        assert "2" not in block["chains"]

    def test_multiple_orders(self, capsys):
        assert main(["analyze", A, "--r", "1", "--r", "2"]) == 0
        report = json.loads(capsys.readouterr().out)
        assert [blk["r"] for blk in report["orders"]] == [1.0, 2.0]

    def test_deterministic_bytes(self, capsys, tmp_path):
        assert main(["analyze", B, "--r", "1", "--out", str(tmp_path / "x")]) == 0
        assert main(["analyze", B, "--r", "1", "--out", str(tmp_path / "y")]) == 0
        capsys.readouterr()
        fx = (tmp_path / "x" / "analyze_fixture_b.json").read_bytes()
        fy = (tmp_path / "y" / "analyze_fixture_b.json").read_bytes()
        assert fx == fy


class TestAntichainCommand:
    def test_csv_matches_module(self, capsys, sys_b):
        assert main(["antichain", B, "--r", "1", "--k-min", "4", "--k-max", "6"]) == 0
        out = capsys.readouterr().out
        rows = list(csv.DictReader(io.StringIO(out)))
        expected = theorem_ratio_series(sys_b, 1, range(4, 7))
        assert [int(row["phi"]) for row in rows] == [r.phi for r in expected]
        assert [int(row["k"]) for row in rows] == [4, 5, 6]
        assert "lambda_c0-c1" in rows[0]
        for got, want in zip(rows, expected):
            assert float(got["U_k"]) == pytest.approx(want.uncorrected, rel=1e-12)
            assert float(got["t_k"]) == pytest.approx(want.t_k, rel=1e-9)

    def test_file_output(self, tmp_path, capsys):
        assert main(
            ["antichain", A, "--r", "2", "--k-min", "2", "--k-max", "3",
             "--out", str(tmp_path)]
        ) == 0
        capsys.readouterr()
        path = tmp_path / "antichain_fixture_a_r2.csv"
        assert path.exists()
        rows = list(csv.DictReader(path.open()))
        assert len(rows) == 2


class TestQuantizeCommand:
    def test_csv_columns(self, capsys):
        assert main(
            ["quantize", A, "--r", "1", "--k-min", "3", "--k-max", "5",
             "--depth-offset", "3"]
        ) == 0
        rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
        assert len(rows) == 3
        for row in rows:
            assert float(row["lower"]) <= float(row["upper"])
            assert int(row["n"]) == 2 ** (int(row["k"]) + 2)
            assert row["iterations"] == "0"

    def test_refine_reports_iterations(self, capsys):
        assert main(
            ["quantize", A, "--r", "2", "--k-min", "2", "--k-max", "2",
             "--depth-offset", "4", "--refine"]
        ) == 0
        rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
        assert len(rows) == 1


class TestVerifyCommand:
    def test_fixture_a_passes(self, capsys, tmp_path):
        code = main(
            ["verify", A, "--r", "1", "--k-min", "4", "--k-max", "8",
             "--depth-offset", "3", "--mc-samples", "20000",
             "--out", str(tmp_path)]
        )
        out = capsys.readouterr().out
        assert code == 0, out
        assert "FAIL" not in out
        report = json.loads((tmp_path / "verify_fixture_a.json").read_text())
        suite = report["results"][0]
        assert suite["ok"] is True
        names = {c["name"] for c in suite["checks"]}
        assert {"model_valid", "spectral_root_consistency", "log_correction",
                "quantization_bracket", "lloyd_vs_bruteforce"} <= names
        # fixture A has no transient part: that check must be skipped, not failed
        by_name = {c["name"]: c for c in suite["checks"]}
        assert by_name["transient_decay"]["status"] == "SKIP"

    def test_invalid_model_fails_fast(self, tmp_path, capsys):
        cfg = json.loads(Path(A).read_text())
        cfg["edges"][0]["p"] = "0.4"
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps(cfg))
        code = main(["verify", str(bad), "--r", "1", "--k-min", "3", "--k-max", "4"])
        assert code == 1
        out = capsys.readouterr().out
        assert "[FAIL] model_valid" in out

    def test_infeasible_layout_skips_geometry_runs_symbolic(self, tmp_path, capsys):
        # valid measure model whose rows cannot be realized in 1-D:
        # ratios sum to 1.2 per row, but every c entry is < 1
        cfg = {
            "n": 2,
            "edges": [
                {"from": 1, "to": 1, "p": "1/2", "c": "0.6"},
                {"from": 1, "to": 2, "p": "1/2", "c": "0.6"},
                {"from": 2, "to": 1, "p": "1/2", "c": "0.6"},
                {"from": 2, "to": 2, "p": "1/2", "c": "0.6"},
            ],
            "chi": ["1/2", "1/2"],
        }
        model = tmp_path / "wide.json"
        model.write_text(json.dumps(cfg))
        code = main(
            ["verify", str(model), "--r", "1", "--k-min", "3", "--k-max", "6"]
        )
        out = capsys.readouterr().out
        assert code == 0, out
        assert "[SKIP] quantization_bracket" in out
        assert "ratios sum to" in out
        assert "[PASS] spectral_root_consistency" in out
        assert "[PASS] log_correction" in out


class TestArgErrors:
    def test_nonpositive_order(self, capsys):
        assert main(["analyze", A, "--r", "0"]) == 2

    def test_unparseable_order(self, capsys):
        assert main(["analyze", A, "--r", "abc"]) == 2

    def test_capacity_cap_is_config_error(self, capsys):
        assert main(
            ["antichain", B, "--r", "1", "--k-min", "8", "--k-max", "8", "--cap", "100"]
        ) == 2
        assert "capacity" in capsys.readouterr().err

    def test_verify_report_deterministic(self, tmp_path, capsys):
        args = ["verify", A, "--r", "1", "--k-min", "3", "--k-max", "5",
                "--depth-offset", "2", "--mc-samples", "5000", "--seed", "7"]
        assert main(args + ["--out", str(tmp_path / "x")]) == 0
        assert main(args + ["--out", str(tmp_path / "y")]) == 0
        capsys.readouterr()
        fx = (tmp_path / "x" / "verify_fixture_a.json").read_bytes()
        fy = (tmp_path / "y" / "verify_fixture_a.json").read_bytes()
        assert fx == fy
