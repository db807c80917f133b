import json
import math

import numpy as np
import pytest

from sketchlogit.analysis import METRIC_NAMES
from sketchlogit.data import make_synthetic
from sketchlogit.errors import BaselineDiverged, InputError
from sketchlogit.experiment import (
    CSV_HEADER,
    ExperimentConfig,
    emit_report,
    parse_config,
    report_from_dict,
    run_experiment,
)
from sketchlogit.logreg import SolverConfig, StepDamping
from sketchlogit.sketch import Scheme


@pytest.fixture(scope="module")
def data():
    return make_synthetic(3000, 6, seed=4)


@pytest.fixture(scope="module")
def report(data):
    X, y = data
    cfg = ExperimentConfig(schemes=("uniform", "leverage", "l2s"), sample_sizes=(200, 800), repetitions=4, seed=3)
    return run_experiment(X, y, cfg)


def test_report_shape(report):
    assert set(report.cells) == {(s, k) for s in ("uniform", "leverage", "l2s") for k in (200, 800)}
    for cell in report.cells.values():
        assert cell.repetitions == 4
        assert all(cell.std[m] >= 0 for m in METRIC_NAMES)
    assert report.timing["leverage_computations"] == 1
    assert len(report.timing["per_repetition"]) == 3 * 2 * 4


def test_full_sample_repetition_has_zero_error(data):
    # With s = n, every row once is not forced, but a single repetition of an
    # identity-like sweep cell is covered by fit tests; here use uniform s = n
    # and check the error is small rather than zero.
    X, y = data
    cfg = ExperimentConfig(schemes=("uniform",), sample_sizes=(len(y) * 20,), repetitions=1)
    rep = run_experiment(X, y, cfg)
    assert rep.cells[("uniform", len(y) * 20)].mean["rel_prob_err"] < 0.05


def test_csv_layout(report, tmp_path):
    path = emit_report(report, tmp_path / "r.csv", "csv")
    lines = path.read_text().splitlines()
    assert lines[0].split(",") == CSV_HEADER
    assert len(lines) - 1 == len(report.cells) * len(METRIC_NAMES)
    value = lines[1].split(",")[3]
    assert len(value.replace("-", "").replace(".", "").split("e")[0].lstrip("0")) <= 17


def test_single_cell_has_six_rows(data, tmp_path):
    X, y = data
    rep = run_experiment(X, y, ExperimentConfig(schemes=("leverage",), sample_sizes=(300,), repetitions=2))
    assert len(emit_report(rep, tmp_path / "one.csv").read_text().splitlines()) == 1 + 6


def test_empty_scheme_list_gives_header_only(data, tmp_path):
    X, y = data
    rep = run_experiment(X, y, ExperimentConfig(schemes=(), sample_sizes=(300,), repetitions=1))
    assert emit_report(rep, tmp_path / "e.csv").read_text() == ",".join(CSV_HEADER) + "\n"


def test_json_round_trip(report, tmp_path):
    path = emit_report(report, tmp_path / "r.json", "json")
    back = report_from_dict(json.loads(path.read_text()))
    assert back == report
    assert back.cells == report.cells


def test_determinism(data, tmp_path):
    X, y = data
    cfg = ExperimentConfig(schemes=("leverage", "l2s"), sample_sizes=(150, 600), repetitions=3, seed=8)
    a = emit_report(run_experiment(X, y, cfg), tmp_path / "a.json", "json").read_bytes()
    b = emit_report(run_experiment(X, y, cfg), tmp_path / "b.json", "json").read_bytes()
    assert a == b


def test_seed_changes_results(data):
    X, y = data
    base = dict(schemes=("uniform",), sample_sizes=(200,), repetitions=2)
    a = run_experiment(X, y, ExperimentConfig(seed=1, **base))
    b = run_experiment(X, y, ExperimentConfig(seed=2, **base))
    assert a.cells != b.cells


def test_separable_baseline_aborts():
    X = np.column_stack([np.ones(50), np.linspace(-1, 1, 50)])
    y = (X[:, 1] > 0).astype(float)
    with pytest.raises(BaselineDiverged):
        run_experiment(X, y, ExperimentConfig(schemes=("uniform",), sample_sizes=(10,), repetitions=1))


def test_failed_repetitions_are_counted():
    # Tiny sketches of a small problem are often separable.
    X, y = make_synthetic(400, 4, seed=0, signal=4.0)
    rep = run_experiment(X, y, ExperimentConfig(schemes=("uniform",), sample_sizes=(6,), repetitions=10))
    cell = rep.cells[("uniform", 6)]
    assert cell.failed > 0
    if cell.failed == cell.repetitions:
        assert math.isnan(cell.mean["rel_prob_err"])


def test_sample_size_below_d_rejected(data):
    X, y = data
    with pytest.raises(InputError):
        run_experiment(X, y, ExperimentConfig(schemes=("uniform",), sample_sizes=(3,)))


def test_parse_config():
    cfg = parse_config("""
        # sweep
        schemes = leverage, uniform
        sample_sizes = 100, 200,400
        repetitions = 5
        seed = 42
        output = out.csv
        format = json
        standardize = no
        max_iter = 50
        grad_tol = 1e-6
        step_damping = none
        synthetic_n = 1000
    """)
    assert cfg.schemes == (Scheme.LEVERAGE, Scheme.UNIFORM)
    assert cfg.sample_sizes == (100, 200, 400)
    assert (cfg.repetitions, cfg.seed, cfg.output_path, cfg.output_format) == (5, 42, "out.csv", "json")
    assert cfg.standardize is False and cfg.synthetic_n == 1000
    assert cfg.solver == SolverConfig(grad_tol=1e-6, max_iter=50, step_damping=StepDamping.NONE)


@pytest.mark.parametrize("text", ["bogus = 1", "repetitions = many", "standardize = maybe",
                                  "schemes = lewis", "repetitions = 0", "format = xml"])
def test_bad_config(text):
    with pytest.raises(InputError):
        parse_config(text)


@pytest.mark.slow
def test_error_decreases_with_sample_size():
    X, y = make_synthetic(5000, 10, seed=1)
    decreasing = 0
    trials = 20
    for k in range(trials):
        cfg = ExperimentConfig(schemes=("leverage",), sample_sizes=(200, 800, 3200), repetitions=20, seed=1000 + k)
        _, means = run_experiment(X, y, cfg).curve("leverage")
        decreasing += means[0] > means[1] > means[2]
    assert decreasing >= 0.95 * trials
