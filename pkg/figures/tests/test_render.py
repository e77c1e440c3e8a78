"""Smoke tests: figures render from real CLI outputs and reject bad files."""

import json
import subprocess
import sys

import pytest

from polygin_figures.render import FigureJob, SchemaError, main, render


def run_polygin(*args):
    proc = subprocess.run([sys.executable, "-m", "polygin.cli", *args],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    return proc


@pytest.fixture(scope="session")
def sample_csv_small(tmp_path_factory):
    out = tmp_path_factory.mktemp("samples") / "small"
    run_polygin("sample", "--n", "24", "--q", "2", "--variant", "full",
                "--seed", "3", "--samples", "2", "--out", str(out))
    return out.with_suffix(".csv")


@pytest.fixture(scope="session")
def clt_report(tmp_path_factory):
    out = tmp_path_factory.mktemp("reports") / "clt.json"
    run_polygin("clt", "--n", "16", "--q", "1", "--variant", "ginibre",
                "--g", "bump(0.5,0.2)*harm(1)", "--samples", "300",
                "--seed", "100", "--out", str(out))
    return out


class TestScatter:
    def test_renders_nonempty(self, sample_csv_small, tmp_path):
        out = tmp_path / "scatter.png"
        assert main(["scatter", str(sample_csv_small), "--out", str(out)]) == 0
        assert out.exists() and out.stat().st_size > 1000

    def test_figure1_style_n500_q4(self, tmp_path):
        # a publication-scale configuration: one draw of 2000 points
        prefix = tmp_path / "big"
        run_polygin("sample", "--n", "500", "--q", "4", "--variant", "full",
                    "--seed", "1", "--samples", "1", "--out", str(prefix))
        out = tmp_path / "figure1b.png"
        assert main(["scatter", str(prefix) + ".csv", "--out", str(out)]) == 0
        assert out.exists() and out.stat().st_size > 5000

    def test_empty_csv_errors(self, tmp_path):
        bad = tmp_path / "empty.csv"
        bad.write_text("sample_id,point_id,re,im\n")
        out = tmp_path / "x.png"
        assert main(["scatter", str(bad), "--out", str(out)]) == 1
        assert not out.exists()

    def test_wrong_header_errors(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("a,b,c\n1,2,3\n")
        assert main(["scatter", str(bad), "--out", str(tmp_path / "x.png")]) == 1


class TestHistogram:
    def test_renders_overlay(self, clt_report, tmp_path):
        out = tmp_path / "hist.png"
        assert main(["histogram", str(clt_report), "--out", str(out)]) == 0
        assert out.exists() and out.stat().st_size > 1000

    def test_missing_keys_error(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"foo": 1}))
        assert main(["histogram", str(bad), "--out", str(tmp_path / "x.png")]) == 1


class TestConvergence:
    def test_renders_from_variance_reports(self, tmp_path):
        reports = []
        for n in (20, 40):
            path = tmp_path / f"var{n}.json"
            run_polygin("variance", "--n", str(n), "--q", "1",
                        "--variant", "ginibre", "--g", "bump(0.5,0.2)",
                        "--out", str(path))
            reports.append(str(path))
        out = tmp_path / "conv.png"
        assert main(["convergence", *reports, "--out", str(out)]) == 0
        assert out.exists() and out.stat().st_size > 1000

    def test_needs_two_reports(self, tmp_path):
        path = tmp_path / "var.json"
        run_polygin("variance", "--n", "20", "--q", "1", "--variant", "ginibre",
                    "--g", "bump(0.5,0.2)", "--out", str(path))
        assert main(["convergence", str(path), "--out", str(tmp_path / "x.png")]) == 1


class TestJobApi:
    def test_kind_validation(self):
        with pytest.raises(SchemaError):
            FigureJob("pie", ("a.csv",), "out.png")

    def test_deterministic_output(self, sample_csv_small, tmp_path):
        a = tmp_path / "a.png"
        b = tmp_path / "b.png"
        render(FigureJob("scatter", (str(sample_csv_small),), str(a)))
        render(FigureJob("scatter", (str(sample_csv_small),), str(b)))
        assert a.read_bytes() == b.read_bytes()
