"""Command-line contract: flags, files, exit codes, reproducibility."""

import json
import subprocess
import sys

import pytest

from polygin.cli import main


def run_cli(*argv):
    return main(list(argv))


class TestKernelCommand:
    def test_value_at_origin(self, capsys):
        # K(0,0) = n*q whenever n >= q (each level's index-r function is the
        # only one alive at the origin and needs r <= n-1)
        assert run_cli("kernel", "--n", "2", "--q", "2", "--variant", "full",
                       "--z", "0", "--w", "0") == 0
        assert capsys.readouterr().out.strip() == "4"

    def test_value_at_origin_fewer_particles_than_levels(self, capsys):
        # for n < q the top levels contribute nothing at the origin:
        # Pol_{1,2} = span{1, zbar} and K(0,0) = 1
        assert run_cli("kernel", "--n", "1", "--q", "2", "--variant", "full",
                       "--z", "0", "--w", "0") == 0
        assert capsys.readouterr().out.strip() == "1"

    def test_check_passes(self, capsys):
        assert run_cli("kernel", "check", "--n", "30", "--q", "3") == 0
        assert "max cross-path relative difference" in capsys.readouterr().out

    def test_raw_capacity_exit_2(self, capsys):
        code = run_cli("kernel", "--n", "200", "--q", "1", "--z", "0",
                       "--w", "0", "--weighted", "false")
        assert code == 2

    def test_missing_flags_exit_2(self):
        assert run_cli("kernel") == 2


class TestSampleCommand:
    def test_writes_csv_and_sidecar(self, tmp_path, capsys):
        out = tmp_path / "run"
        assert run_cli("sample", "--n", "4", "--q", "2", "--variant", "full",
                       "--seed", "5", "--samples", "2", "--out", str(out)) == 0
        lines = (tmp_path / "run.csv").read_text().strip().splitlines()
        assert lines[0] == "sample_id,point_id,re,im"
        assert len(lines) == 1 + 2 * 8
        meta = json.loads((tmp_path / "run.json").read_text())
        assert meta["n"] == 4 and meta["q"] == 2 and meta["samples"] == 2


class TestStatsCommand:
    def test_circular_law_report(self, tmp_path):
        out = tmp_path / "stats.json"
        assert run_cli("stats", "--n", "64", "--q", "1", "--g", "bump(0.5,0.2)",
                       "--out", str(out)) == 0
        d = json.loads(out.read_text())
        assert {"expected_trace", "per_particle", "disk_integral",
                "relative_gap"} <= set(d)
        assert d["relative_gap"] < 0.1


class TestVarianceCommand:
    def test_report_schema_and_determinism(self, tmp_path):
        a = tmp_path / "a.json"
        b = tmp_path / "b.json"
        args = ["variance", "--n", "30", "--q", "2", "--variant", "pure",
                "--g", "bump(0.5,0.2)*harm(1)"]
        assert run_cli(*args, "--out", str(a)) == 0
        assert run_cli(*args, "--out", str(b)) == 0
        assert a.read_bytes() == b.read_bytes()
        d = json.loads(a.read_text())
        assert d["method"] == "quadrature" and d["k"] == 2
        assert set(d["prediction"]) == {"bulk", "boundary", "total"}
        assert d["config"]["n"] == 30

    def test_tolerance_gate(self, tmp_path):
        # n=30 is far from the asymptotic regime: a 1% gate must fail (exit 1)
        code = run_cli("variance", "--n", "30", "--q", "1", "--variant", "ginibre",
                       "--g", "bump(0.5,0.2)", "--tolerance", "0.01",
                       "--out", str(tmp_path / "v.json"))
        assert code == 1

    def test_bad_expression_exit_2(self):
        assert run_cli("variance", "--n", "8", "--q", "1", "--g", "nope(1)") == 2


class TestCltCommand:
    def test_report_and_traces(self, tmp_path):
        out = tmp_path / "clt.json"
        assert run_cli("clt", "--n", "4", "--q", "1", "--variant", "ginibre",
                       "--g", "rad(0,1)", "--samples", "300", "--seed", "11",
                       "--out", str(out)) == 0
        d = json.loads(out.read_text())
        assert {"cumulants", "normality", "quadrature_c2", "prediction"} <= set(d)
        assert set(d["cumulants"]) == {"2", "3", "4"}
        traces = (tmp_path / "clt.traces.csv").read_text().splitlines()
        assert traces[0] == "sample_id,trace,fluct"
        assert len(traces) == 301


class TestVerifyCommand:
    def test_identities_pass(self, capsys):
        assert run_cli("verify", "--suite", "identities") == 0
        out = capsys.readouterr().out
        assert "[PASS]" in out and "[FAIL]" not in out


class TestConfigFile:
    def test_config_and_flag_override(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({
            "schema": "polygin-config-v1",
            "n": 1, "q": 2, "variant": "full", "z": "0", "w": "0",
        }))
        assert run_cli("kernel", "--config", str(cfg)) == 0
        assert capsys.readouterr().out.strip() == "1"
        # flag overrides the file
        assert run_cli("kernel", "--config", str(cfg), "--n", "2") == 0
        assert capsys.readouterr().out.strip() == "4"

    def test_bad_schema_exit_2(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"schema": "other", "n": 1}))
        assert run_cli("kernel", "--config", str(cfg), "--z", "0", "--w", "0") == 2


class TestEntryPoint:
    def test_console_script_help(self):
        proc = subprocess.run([sys.executable, "-m", "polygin.cli", "--help"],
                              capture_output=True, text=True)
        assert proc.returncode == 0
        assert "polygin" in proc.stdout
