import csv
import json

import pytest

from snfcycles.cli import main
from snfcycles.graphs import read_population


def _run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def snf_data(tmp_path_factory):
    out = tmp_path_factory.mktemp("sim")
    code = _run("simulate", "--model", "snf", "--n", 5, "--count", 8,
                "--centroid", "1-2,2-3,1-3,3-4,4-5", "--gamma", 3.0, "--burnin", 500, "--thin", 50,
                "--seed", 1, "--out", out)
    assert code == 0
    return out / "data.json"


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    out = tmp_path_factory.mktemp("corpus")
    assert _run("simulate", "--model", "er", "--corpus", "er:4", "pa:4", "--n", 8,
                "--seed", 2, "--out", out) == 0
    return out / "data.json"


def test_simulate_writes_data_and_provenance(snf_data):
    pop = read_population(snf_data)
    assert pop.n == 5 and len(pop) == 8
    prov = json.loads(next(snf_data.parent.glob("*provenance.json")).read_text())
    assert prov["seed"] == 1


def test_simulate_is_reproducible(tmp_path, snf_data):
    assert _run("simulate", "--model", "snf", "--n", 5, "--count", 8,
                "--centroid", "1-2,2-3,1-3,3-4,4-5", "--gamma", 3.0, "--burnin", 500,
                "--thin", 50, "--seed", 1, "--out", tmp_path) == 0
    assert (tmp_path / "data.json").read_bytes() == snf_data.read_bytes()


def test_corpus_groups(corpus):
    pop = read_population(corpus)
    assert list(pop.groups) == ["er"] * 4 + ["pa"] * 4


def test_config_errors(tmp_path, snf_data, capsys):
    assert _run("simulate", "--n", 5) == 2
    assert _run("fit", snf_data, "--z-mode", "exact", "--model", "snf", "--is-k", 0,
                "--iters", 0, "--out", tmp_path) == 2
    assert _run("bogus") == 2
    assert _run("analyze", "fr", snf_data, "--perms", 2000, "--out", tmp_path) == 2
    assert "config error" in capsys.readouterr().err


def test_missing_input_is_config_error(tmp_path):
    assert _run("fit", tmp_path / "nope.json", "--model", "cer", "--out", tmp_path) == 2


def _without_wall_clock(path):
    with open(path, newline="") as fh:
        return [{k: v for k, v in row.items() if k != "wall_ms"} for row in csv.DictReader(fh)]


def _fit(data, out, *extra):
    return _run("fit", data, "--model", "snf", "--z-mode", "exact", "--iters", 300,
                "--cer-iters", 300, "--seed", 7, "--out", out, *extra)


def test_fit_outputs(tmp_path, snf_data):
    assert _fit(snf_data, tmp_path) == 0
    for name in ("trace.csv", "centroids.json", "summary.json", "cycle_table.csv", "timing.json"):
        assert (tmp_path / name).exists(), name
    summary = json.loads((tmp_path / "summary.json").read_text())
    lo, hi = summary["gamma"]["interval"]
    assert lo <= summary["gamma"]["mean"] <= hi
    with open(tmp_path / "trace.csv", newline="") as fh:
        assert len(list(csv.DictReader(fh))) == 300
    timing = json.loads((tmp_path / "timing.json").read_text())
    assert timing["iterations"] == 300 and timing["mean_iteration_ms"] > 0


def test_fit_byte_identical_and_thread_independent(tmp_path, snf_data):
    a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    assert _fit(snf_data, a) == 0 and _fit(snf_data, b) == 0
    assert _fit(snf_data, c, "--threads", 4) == 0
    # wall_ms is the only column allowed to differ
    assert _without_wall_clock(a / "trace.csv") == _without_wall_clock(b / "trace.csv") \
        == _without_wall_clock(c / "trace.csv")
    for name in ("centroids.json", "cycle_table.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes() == (c / name).read_bytes()


def test_fit_cer_and_auxvar(tmp_path, snf_data):
    assert _run("fit", snf_data, "--model", "cer", "--iters", 300, "--out", tmp_path / "c") == 0
    assert "alpha" in json.loads((tmp_path / "c" / "summary.json").read_text())
    assert _run("fit", snf_data, "--model", "auxvar", "--iters", 100, "--cer-iters", 300,
                "--out", tmp_path / "x") == 0


def test_config_file_merging(tmp_path, snf_data):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"fit": {"iters": 120, "z-mode": "exact", "cer_iters": 200}}))
    assert _run("fit", snf_data, "--config", cfg, "--out", tmp_path / "o") == 0
    assert json.loads((tmp_path / "o" / "timing.json").read_text())["iterations"] == 120
    # flags win over the file
    assert _run("fit", snf_data, "--config", cfg, "--iters", 50, "--out", tmp_path / "p") == 0
    assert json.loads((tmp_path / "p" / "timing.json").read_text())["iterations"] == 50
    cfg.write_text(json.dumps({"fit": {"nonsense": 1}}))
    assert _run("fit", snf_data, "--config", cfg, "--out", tmp_path / "q") == 2


def test_analyze_commands(tmp_path, corpus, snf_data):
    assert _run("analyze", "distances", corpus, "--metric", "hamming", "--out", tmp_path) == 0
    assert _run("analyze", "mds", corpus, "--out", tmp_path) == 0
    rows = (tmp_path / "mds.csv").read_text().splitlines()
    assert len(rows) == 9 and rows[0].startswith("id,group")
    assert _run("analyze", "fr", corpus, "--metric", "hs", "--lambdas", 0.25, 2,
                "--perms", 1000, "--out", tmp_path) == 0
    assert len((tmp_path / "fr.csv").read_text().splitlines()) == 3
    assert _run("analyze", "fr", corpus, "--perms", 10, "--out", tmp_path) == 2
    assert _run("analyze", "cycles", snf_data, "--out", tmp_path) == 0
    assert len(list(tmp_path.glob("cycles_*.csv"))) == 8
    assert _run("analyze", "eda", "--centroid", "1-2,2-3,1-3", "--n", 4,
                "--gamma-grid", "0.1:2:3", "--draws", 20, "--out", tmp_path) == 0
    assert len((tmp_path / "eda.csv").read_text().splitlines()) == 4


def test_selftest(capsys):
    assert _run("selftest") == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and out.count("PASS") >= 3
