"""Sampling-scheme x sample-size sweeps and their CSV/JSON reports."""

from __future__ import annotations

import configparser
import csv
import io
import json
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .analysis import METRIC_NAMES, compute_metrics, misclassification_rate
from .errors import BaselineDiverged, InputError, NumericalError
from .linalg import leverage_scores, orthonormal_basis
from .logreg import SolverConfig, StepDamping, fit_full, fit_subsampled, log_likelihood
from .sketch import Scheme, construct_sketch, derive_seed, make_distribution

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ExperimentConfig:
    schemes: tuple = (Scheme.UNIFORM, Scheme.LEVERAGE, Scheme.L2S)
    sample_sizes: tuple = (500, 1000, 2000)
    repetitions: int = 20
    seed: int = 0
    solver: SolverConfig = field(default_factory=SolverConfig)
    output_path: str | None = None
    output_format: str = "csv"
    # Data source: a CSV file, or a synthetic surrogate when ``data`` is empty.
    data: str | None = None
    label_column: str = "-1"
    positive_label: str | None = None
    standardize: bool = True
    add_intercept: bool = True
    synthetic_n: int = 30_000
    synthetic_d: int = 24
    synthetic_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "schemes", tuple(Scheme.parse(s) for s in self.schemes))
        object.__setattr__(self, "sample_sizes", tuple(int(s) for s in self.sample_sizes))
        if self.repetitions < 1:
            raise InputError("repetitions must be >= 1")
        if any(s < 1 for s in self.sample_sizes):
            raise InputError("sample sizes must be positive")
        if self.output_format not in ("csv", "json"):
            raise InputError(f"unknown output format {self.output_format!r}")


@dataclass
class CellSummary:
    mean: dict
    std: dict
    repetitions: int
    failed: int


@dataclass
class ExperimentReport:
    n: int
    d: int
    repetitions: int
    seed: int
    preprocessing: dict
    baseline: dict
    cells: dict  # (scheme value, s) -> CellSummary
    timing: dict = field(default_factory=dict, compare=False)

    def curve(self, scheme, metric="rel_prob_err"):
        """``(sizes, means)`` for one scheme, sorted by sample size."""
        scheme = Scheme.parse(scheme).value
        pts = sorted((s, c.mean[metric]) for (sch, s), c in self.cells.items() if sch == scheme)
        return [p[0] for p in pts], [p[1] for p in pts]


def _mean_std(values):
    if not values:
        return math.nan, math.nan
    # fsum is exactly rounded, so the mean does not depend on summation order.
    m = math.fsum(values) / len(values)
    if len(values) < 2:
        return m, 0.0
    var = math.fsum((v - m) ** 2 for v in values) / (len(values) - 1)
    return m, math.sqrt(var)


def run_experiment(X, y, cfg: ExperimentConfig, preprocessing: dict | None = None) -> ExperimentReport:
    """Fit the full-data MLE once, then every (scheme, s, repetition) sketch.

    A repetition whose sketched fit fails (non-convergence or a numerical
    error) is counted in ``failed`` and left out of the mean and std.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n, d = X.shape
    if any(s < d for s in cfg.sample_sizes):
        raise InputError(f"every sample size must be at least d={d}")
    timing = {}

    t0 = time.perf_counter()
    full = fit_full(X, y, cfg.solver)
    timing["full_fit"] = time.perf_counter() - t0
    if not full.converged:
        raise BaselineDiverged(
            f"full-data IRLS did not converge after {full.iterations} iterations "
            f"(gradient norm {full.final_grad_norm:.3e}); the data may be separable")

    t0 = time.perf_counter()
    scores = leverage_scores(orthonormal_basis(X))
    timing["leverage"] = time.perf_counter() - t0
    timing["leverage_computations"] = 1
    dists = {sch: make_distribution(sch, scores) for sch in cfg.schemes}

    ll_star = log_likelihood(X, y, full.beta)
    baseline = {
        "log_likelihood": ll_star,
        "misclass_rate": misclassification_rate(y, full.probs),
        "discrepancy": float(np.linalg.norm(y - full.probs)),
        "iterations": full.iterations,
    }

    cells = {}
    rep_times = []
    for sch in cfg.schemes:
        dist = dists[sch]
        for s in cfg.sample_sizes:
            records, failed = [], 0
            for rep in range(cfg.repetitions):
                t0 = time.perf_counter()
                plan = construct_sketch(dist, s, derive_seed(cfg.seed, sch.value, s, rep))
                try:
                    sub = fit_subsampled(X, y, plan, dist, cfg.solver)
                except NumericalError as exc:
                    log.warning("%s s=%d rep=%d: %s", sch.value, s, rep, exc)
                    failed += 1
                    continue
                finally:
                    rep_times.append(time.perf_counter() - t0)
                if not sub.converged:
                    failed += 1
                    continue
                records.append(compute_metrics(X, y, full, sub, plan, dist))
            mean, std = {}, {}
            for name in METRIC_NAMES:
                mean[name], std[name] = _mean_std([getattr(r, name) for r in records])
            cells[(sch.value, s)] = CellSummary(mean=mean, std=std, repetitions=cfg.repetitions, failed=failed)
    timing["per_repetition"] = rep_times
    return ExperimentReport(
        n=n, d=d, repetitions=cfg.repetitions, seed=cfg.seed,
        preprocessing=dict(preprocessing or {}), baseline=baseline, cells=cells, timing=timing,
    )


# -- serialization --------------------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, float):
        if math.isnan(v):
            return "NaN"
        if math.isinf(v):
            return "Infinity" if v > 0 else "-Infinity"
        return f"{v:.17g}"
    return str(v)


def _dump17(obj, indent=0) -> str:
    """JSON text with every float written to 17 significant digits."""
    pad = "  " * (indent + 1)
    end = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_dump17(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_dump17(v, indent + 1) for v in obj) + "]"
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (float, np.floating)):
        return _fmt(float(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    return json.dumps(obj)


def report_to_dict(report: ExperimentReport) -> dict:
    results = {}
    for (sch, s), cell in report.cells.items():
        results.setdefault(sch, {})[str(s)] = {
            "repetitions": cell.repetitions,
            "failed": cell.failed,
            "metrics": {m: {"mean": cell.mean[m], "std": cell.std[m]} for m in METRIC_NAMES},
        }
    return {
        "n": report.n,
        "d": report.d,
        "repetitions": report.repetitions,
        "seed": report.seed,
        "preprocessing": report.preprocessing,
        "baseline": report.baseline,
        "results": results,
    }


def report_from_dict(data: dict) -> ExperimentReport:
    cells = {}
    for sch, by_s in data["results"].items():
        for s, cell in by_s.items():
            metrics = cell["metrics"]
            cells[(sch, int(s))] = CellSummary(
                mean={m: float(metrics[m]["mean"]) for m in METRIC_NAMES},
                std={m: float(metrics[m]["std"]) for m in METRIC_NAMES},
                repetitions=int(cell["repetitions"]),
                failed=int(cell["failed"]),
            )
    return ExperimentReport(n=data["n"], d=data["d"], repetitions=data["repetitions"], seed=data["seed"],
                            preprocessing=data["preprocessing"], baseline=data["baseline"], cells=cells)


CSV_HEADER = ["scheme", "sample_size", "metric", "mean", "std", "repetitions", "failed"]


def report_csv(report: ExperimentReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for (sch, s), cell in report.cells.items():
        for m in METRIC_NAMES:
            w.writerow([sch, s, m, _fmt(cell.mean[m]), _fmt(cell.std[m]), cell.repetitions, cell.failed])
    return buf.getvalue()


def report_json(report: ExperimentReport) -> str:
    return _dump17(report_to_dict(report)) + "\n"


def emit_report(report: ExperimentReport, path, fmt: str = "csv") -> Path:
    """Write the report; timings are deliberately left out so output is reproducible."""
    fmt = fmt.lower()
    if fmt == "csv":
        text = report_csv(report)
    elif fmt == "json":
        text = report_json(report)
    else:
        raise InputError(f"unknown report format {fmt!r}")
    path = Path(path)
    path.write_text(text, encoding="utf-8")
    return path


def emit_timing(report: ExperimentReport, path) -> Path:
    path = Path(path)
    path.write_text(_dump17(report.timing) + "\n", encoding="utf-8")
    return path


# -- config files ---------------------------------------------------------------------

_BOOL = {"1": True, "true": True, "yes": True, "on": True, "0": False, "false": False, "no": False, "off": False}


def _as_bool(key, value):
    try:
        return _BOOL[value.strip().lower()]
    except KeyError:
        raise InputError(f"{key}: expected a boolean, got {value!r}") from None


def _as_list(value):
    return [v.strip() for v in value.replace(";", ",").split(",") if v.strip()]


def parse_config(text: str) -> ExperimentConfig:
    """Parse flat ``key = value`` text (``#`` comments) into an :class:`ExperimentConfig`.

    Keys: schemes, sample_sizes, repetitions, seed, output, format, data,
    label_column, positive_label, standardize, add_intercept, synthetic_n,
    synthetic_d, synthetic_seed, grad_tol, max_iter, weight_floor,
    hessian_ridge, step_damping.
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None)
    try:
        parser.read_string("[experiment]\n" + text)
    except configparser.Error as exc:
        raise InputError(f"bad config file: {exc}") from None
    raw = dict(parser["experiment"])
    kw, solver = {}, {}
    try:
        for key, value in raw.items():
            if key == "schemes":
                kw["schemes"] = tuple(_as_list(value))
            elif key == "sample_sizes":
                kw["sample_sizes"] = tuple(int(v) for v in _as_list(value))
            elif key in ("repetitions", "seed", "synthetic_n", "synthetic_d", "synthetic_seed"):
                kw[key] = int(value)
            elif key == "output":
                kw["output_path"] = value or None
            elif key == "format":
                kw["output_format"] = value.lower()
            elif key in ("data", "positive_label"):
                kw[key] = value or None
            elif key == "label_column":
                kw[key] = value
            elif key in ("standardize", "add_intercept"):
                kw[key] = _as_bool(key, value)
            elif key in ("grad_tol", "weight_floor", "hessian_ridge"):
                solver[key] = float(value)
            elif key == "max_iter":
                solver[key] = int(value)
            elif key == "step_damping":
                solver[key] = StepDamping(value.lower())
            else:
                raise InputError(f"unknown config key {key!r}")
    except ValueError as exc:
        raise InputError(f"bad config value: {exc}") from None
    if solver:
        kw["solver"] = SolverConfig(**solver)
    return ExperimentConfig(**kw)


def load_config(path) -> ExperimentConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))
