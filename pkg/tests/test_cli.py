import csv
import json
import subprocess
import sys

import pytest

from plans.cli import main


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    assert run("generate", "--tasks", 12, "--seed", 3, "--out", d / "corpus.jsonl") == 0
    assert run("corrupt", "--in", d / "corpus.jsonl", "--out", d / "noisy.jsonl", "--seed", 1,
               "--action-err", 0.03, "--per-err", 0.03) == 0
    assert run("synth", "--specs", d / "noisy.jsonl", "--out", d / "results.jsonl", "--mode", "dynamic") == 0
    return d


def test_synth_help_lists_defaults():
    out = subprocess.run([sys.executable, "-m", "plans", "synth", "--help"],
                         capture_output=True, text=True, check=True).stdout
    assert "0.98" in out and "0.9" in out
    assert "[1, 0.95, 0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1]" in out


def test_pipeline(workdir, capsys):
    d = workdir
    records = [json.loads(line) for line in (d / "results.jsonl").read_text().splitlines()]
    assert len(records) == 12
    for r in records:
        assert {"task_seed", "outcome", "program", "n_used", "specs_used", "solver_calls", "wall_time_ms"} <= set(r)
    capsys.readouterr()
    assert run("eval", "--tasks", d / "corpus.jsonl", "--results", d / "results.jsonl",
               "--out", d / "report.json") == 0
    report = json.loads((d / "report.json").read_text())
    printed = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert printed["execution_acc"] == report["execution_acc"]["mean"]
    verdicts = (d / "report.verdicts.jsonl").read_text().splitlines()
    assert len(verdicts) == 12


def test_clean_specs_from_corpus(workdir):
    d = workdir
    assert run("synth", "--specs", d / "corpus.jsonl", "--out", d / "clean.jsonl", "--mode", "none",
               "--no-timing") == 0
    first = json.loads((d / "clean.jsonl").read_text().splitlines()[0])
    assert "wall_time_ms" not in first and first["outcome"] == "found"


def test_k_sweep_csv(workdir):
    d = workdir
    assert run("eval", "--tasks", d / "corpus.jsonl", "--specs", d / "corpus.jsonl",
               "--k-sweep", "2,10", "--out", d / "sweep.csv") == 0
    rows = list(csv.DictReader((d / "sweep.csv").open()))
    assert [r["k"] for r in rows] == ["2", "10"]
    assert float(rows[1]["execution_acc"]) >= float(rows[0]["execution_acc"])


def test_bench_and_experiment(workdir, capsys):
    d = workdir
    assert run("bench", "--tasks", d / "corpus.jsonl", "--out", d / "bench.json") == 0
    bench = json.loads((d / "bench.json").read_text())
    assert bench["longest_solver_call_s"] >= 0
    assert "Longest solver call" in capsys.readouterr().out
    assert run("experiment", "--tasks", d / "corpus.jsonl", "--seeds", "0,1", "--out", d / "exp.json") == 0
    exp = json.loads((d / "exp.json").read_text())
    assert set(exp) == {"none", "static", "dynamic"}
    assert run("experiment", "--tasks", d / "corpus.jsonl", "--seeds", "0", "--clean", "--mode", "none") == 0


def test_malformed_corpus_exit_code(tmp_path, caplog):
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"seed": 1}\nnot json\n')
    assert run("synth", "--specs", bad, "--out", tmp_path / "r.jsonl") == 2
    assert "bad.jsonl:1" in caplog.text


def test_missing_file_exit_code(tmp_path):
    assert run("corrupt", "--in", tmp_path / "nope.jsonl", "--out", tmp_path / "x.jsonl") == 2


def test_missing_results_exit_code(workdir, tmp_path):
    d = workdir
    lines = (d / "results.jsonl").read_text().splitlines()
    partial = tmp_path / "partial.jsonl"
    partial.write_text("\n".join(lines[:-1]) + "\n")
    assert run("eval", "--tasks", d / "corpus.jsonl", "--results", partial, "--out", tmp_path / "r.json") == 2


def test_serial_parallel_synth_identical(workdir, tmp_path):
    d = workdir
    for n in (1, 2):
        assert run("synth", "--specs", d / "noisy.jsonl", "--out", tmp_path / f"r{n}.jsonl",
                   "--no-timing", "--parallel", n) == 0
    assert (tmp_path / "r1.jsonl").read_bytes() == (tmp_path / "r2.jsonl").read_bytes()


def test_generation_exhausted_exit_code(tmp_path, caplog):
    # one observed demonstration can never pass the diversity filter
    assert run("generate", "--tasks", 1, "--k", 1, "--out", tmp_path / "c.jsonl") == 2
    assert "no valid task" in caplog.text
