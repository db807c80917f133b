import json

import numpy as np
import pytest

from sketchlogit.cli import main
from sketchlogit.data import make_synthetic, write_csv


@pytest.fixture
def csv_path(tmp_path):
    X, y = make_synthetic(1500, 5, seed=3)
    path = tmp_path / "data.csv"
    write_csv(path, X[:, 1:], y)
    return path


def _kv(text):
    return dict(line.split("\t", 1) for line in text.strip().splitlines())


def test_sample_size(capsys):
    assert main(["sample-size", "--d", "10", "--eps", "0.5", "--delta", "0.1"]) == 0
    assert capsys.readouterr().out.strip() == "3200"


def test_sample_size_bad_range(capsys):
    assert main(["sample-size", "--d", "10", "--eps", "1.5", "--delta", "0.1"]) == 2


def test_fit(csv_path, capsys):
    assert main(["fit", "--data", str(csv_path), "--label-column", "label"]) == 0
    out = _kv(capsys.readouterr().out)
    assert out["converged"] == "True" and out["d"] == "5"
    assert len(out["beta"].split(",")) == 5


def test_sketch_fit(csv_path, capsys, tmp_path):
    probs = tmp_path / "p.txt"
    rc = main(["sketch-fit", "--data", str(csv_path), "--scheme", "l2s", "--s", "300", "--seed", "4",
               "--probs", str(probs)])
    assert rc == 0
    out = _kv(capsys.readouterr().out)
    assert out["scheme"] == "l2s" and float(out["rel_prob_err"]) >= 0
    assert np.loadtxt(probs).shape == (1500,)


def test_parse_error_exit_code(tmp_path, capsys):
    p = tmp_path / "bad.csv"
    p.write_text("a,y\n1,0\nx,1\n")
    assert main(["fit", "--data", str(p)]) == 2
    assert "not numeric" in capsys.readouterr().err


def test_missing_file_exit_code(tmp_path):
    assert main(["fit", "--data", str(tmp_path / "nope.csv")]) == 2


def test_separable_baseline_exit_code(tmp_path):
    p = tmp_path / "sep.csv"
    x = np.linspace(-1, 1, 40)
    write_csv(p, x[:, None], (x > 0).astype(int))
    assert main(["sketch-fit", "--data", str(p), "--s", "20"]) == 3
    assert main(["fit", "--data", str(p)]) == 3


def test_numerical_failure_exit_code(tmp_path):
    p = tmp_path / "dup.csv"
    rng = np.random.default_rng(0)
    a = rng.standard_normal(30)
    write_csv(p, np.column_stack([a, 2 * a]), (rng.random(30) < 0.5).astype(int))
    assert main(["sketch-fit", "--data", str(p), "--s", "20"]) == 4


def test_verify_suites(capsys):
    for suite in ("unbiased", "variance"):
        assert main(["verify", "--suite", suite, "--n", "400", "--d", "3", "--trials", "2000"]) == 0
        assert _kv(capsys.readouterr().out)["pass"] == "True"
    assert main(["verify", "--suite", "conditions", "--n", "2000", "--d", "4", "--trials", "200"]) == 0
    assert _kv(capsys.readouterr().out)["s"] == "640"
    assert main(["verify", "--suite", "theorem1", "--n", "2000", "--d", "4", "--trials", "20"]) == 0


def test_experiment_command(tmp_path, capsys):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text("schemes = uniform, leverage\nsample_sizes = 100, 400\nrepetitions = 3\nseed = 5\n"
                   "synthetic_n = 3000\nsynthetic_d = 6\nformat = json\n")
    out1, out2 = tmp_path / "a.json", tmp_path / "b.json"
    timings = tmp_path / "t.json"
    assert main(["experiment", "--config", str(cfg), "--output", str(out1), "--timings", str(timings)]) == 0
    assert main(["experiment", "--config", str(cfg), "--output", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    data = json.loads(out1.read_text())
    assert set(data["results"]) == {"uniform", "leverage"}
    assert json.loads(timings.read_text())["leverage_computations"] == 1


def test_experiment_without_output(tmp_path):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text("repetitions = 1\n")
    assert main(["experiment", "--config", str(cfg)]) == 2


def test_make_data(tmp_path):
    out = tmp_path / "m.csv"
    assert main(["make-data", "--n", "100", "--d", "4", "--output", str(out)]) == 0
    assert out.read_text().splitlines()[0] == "x1,x2,x3,label"
