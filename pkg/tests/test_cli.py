from __future__ import annotations

import json

import pytest

from conftest import DISJOINT_DOC
from cped.bench import activation_disjoint, make_evalset
from cped.cli import main
from cped.hpi import analyze
from cped.space import parse_space, write_trials
from cped.stats import QuantilePair


@pytest.fixture
def files(tmp_path):
    space, trials = tmp_path / "s.json", tmp_path / "t.jsonl"
    space.write_text(json.dumps(DISJOINT_DOC))
    write_trials(trials, make_evalset(activation_disjoint(), 200, 0).trials)
    return str(space), str(trials)


def _analyze_args(files, *extra):
    space, trials = files
    return ["analyze", "--space", space, "--trials", trials, "--gamma", "1.0", "--gamma-prime", "0.1", *extra]


class TestAnalyze:
    def test_prints_report_json(self, files, capsys):
        assert main(_analyze_args(files, "--method", "cped")) == 0
        out = json.loads(capsys.readouterr().out)
        expected = analyze(make_evalset(activation_disjoint(), 200, 0), QuantilePair(1.0, 0.1)).to_dict()
        assert out == json.loads(json.dumps(expected))
        assert sum(out["normalized"].values()) == pytest.approx(1.0)

    def test_ped_on_conditional_space(self, files, capsys):
        assert main(_analyze_args(files, "--method", "ped")) == 3
        err = capsys.readouterr().err.strip()
        assert err.startswith("error: numerical: ")
        assert "extension" in err and "\n" not in err

    def test_ped_with_extension(self, files, capsys):
        assert main(_analyze_args(files, "--method", "ped", "--extension", "filtering")) == 0
        assert json.loads(capsys.readouterr().out)["extension"] == "filtering"

    def test_extension_needs_ped(self, files, capsys):
        assert main(_analyze_args(files, "--extension", "imputation")) == 1
        assert capsys.readouterr().err.startswith("error: usage: ")

    def test_bad_quantiles(self, files, capsys):
        space, trials = files
        code = main(["analyze", "--space", space, "--trials", trials, "--gamma", "0.5", "--gamma-prime", "0.6"])
        assert code == 2
        assert capsys.readouterr().err.startswith("error: data: ")

    def test_missing_file(self, files, capsys):
        space, _ = files
        assert main(["analyze", "--space", space, "--trials", "nope.jsonl", "--gamma-prime", "0.1"]) == 2

    def test_invalid_space(self, tmp_path, files, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text('{"parameters": []}')
        assert main(["analyze", "--space", str(bad), "--trials", files[1], "--gamma-prime", "0.1"]) == 2

    def test_missing_arguments(self, capsys):
        assert main(["analyze"]) == 1
        assert main([]) == 1
        assert main(["frobnicate"]) == 1


class TestBenchAndPlot:
    def test_bench_row_count(self, tmp_path):
        out = tmp_path / "out.csv"
        args = ["bench", "--objective", "activation-disjoint", "--n", "200", "--gamma", "1.0",
                "--seeds", "2", "--method", "cped", "--output-csv", str(out)]
        assert main(args) == 0
        assert len(out.read_text().splitlines()) == 1 + 99 * 3

    def test_bench_then_plot_matches_direct_svg(self, tmp_path):
        csv, direct, replot = tmp_path / "b.csv", tmp_path / "direct.svg", tmp_path / "replot.svg"
        args = ["bench", "--objective", "regime-domains", "--n", "150", "--step", "0.1", "--seeds", "3",
                "--output-csv", str(csv), "--output-svg", str(direct)]
        assert main(args) == 0
        assert main(["plot", "--input-csv", str(csv), "--output-svg", str(replot)]) == 0
        assert direct.read_bytes() == replot.read_bytes()

    def test_jobs_from_environment(self, tmp_path, monkeypatch):
        monkeypatch.setenv("HPI_JOBS", "2")
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        base = ["bench", "--objective", "activation-disjoint", "--n", "150", "--step", "0.2", "--seeds", "3"]
        assert main([*base, "--output-csv", str(a)]) == 0
        assert main([*base, "--jobs", "1", "--output-csv", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_bad_jobs_environment(self, tmp_path, monkeypatch, capsys):
        monkeypatch.setenv("HPI_JOBS", "many")
        args = ["bench", "--objective", "activation-disjoint", "--n", "50", "--step", "0.5", "--seeds", "1",
                "--output-csv", str(tmp_path / "x.csv")]
        assert main(args) == 1

    def test_plot_missing_csv(self, tmp_path):
        assert main(["plot", "--input-csv", str(tmp_path / "none.csv"), "--output-svg", str(tmp_path / "o.svg")]) == 2


class TestSweep:
    def test_fixed_trials_sweep(self, files, tmp_path):
        space, trials = files
        out = tmp_path / "sweep.csv"
        assert main(["sweep", "--space", space, "--trials", trials, "--step", "0.25", "--output", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert len(lines) == 1 + 3 * 3
        assert all(line.endswith(",0,1") for line in lines[1:])
        assert parse_space(DISJOINT_DOC).names == sorted({line.split(",")[1] for line in lines[1:]})
