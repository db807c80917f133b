"""Command-line entry point.

Exit codes: 0 success, 1 a verification suite ran but did not pass,
2 input or parse error, 3 full-data baseline diverged, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace

import numpy as np

from . import __version__
from .analysis import (
    compute_metrics,
    condition_frequency,
    verify_lemma_unbiased,
    verify_lemma_variance,
    verify_theorem1,
)
from .data import DatasetSpec, load_dataset, make_synthetic, write_csv
from .errors import BaselineDiverged, InputError, NumericalError
from .experiment import emit_report, emit_timing, load_config, run_experiment
from .linalg import leverage_scores, orthonormal_basis
from .logreg import SolverConfig, fit_full, fit_subsampled, log_likelihood
from .sketch import Scheme, construct_sketch, derive_seed, make_distribution, required_sample_size

EXIT_OK, EXIT_FAILED_CHECK, EXIT_INPUT, EXIT_DIVERGED, EXIT_NUMERICAL = 0, 1, 2, 3, 4


def _emit(pairs, out=None):
    out = out or sys.stdout
    for key, value in pairs:
        if isinstance(value, float):
            value = f"{value:.17g}"
        elif isinstance(value, np.ndarray):
            value = ",".join(f"{v:.17g}" for v in value)
        out.write(f"{key}\t{value}\n")


def _add_data_args(p, synthetic=False):
    p.add_argument("--data", help="CSV file with a header row")
    p.add_argument("--label-column", default="-1", help="label column name or index (default: last)")
    p.add_argument("--positive-label", help="label token mapped to 1 (default: '1' for 0/1 labels)")
    p.add_argument("--no-standardize", action="store_true", help="keep features on their original scale")
    p.add_argument("--no-intercept", action="store_true", help="do not prepend a column of ones")
    if synthetic:
        p.add_argument("--n", type=int, default=5000, help="synthetic rows when --data is absent")
        p.add_argument("--d", type=int, default=10, help="synthetic columns incl. intercept")
        p.add_argument("--data-seed", type=int, default=0)


def _add_solver_args(p):
    p.add_argument("--grad-tol", type=float, default=None)
    p.add_argument("--max-iter", type=int, default=100)


def _solver(args) -> SolverConfig:
    return SolverConfig(grad_tol=args.grad_tol, max_iter=args.max_iter)


def _load(args):
    if args.data:
        spec = DatasetSpec(args.data, args.label_column, args.positive_label,
                           standardize=not args.no_standardize, add_intercept=not args.no_intercept)
        return load_dataset(spec)
    if hasattr(args, "n"):
        return make_synthetic(args.n, args.d, seed=args.data_seed)
    raise InputError("--data is required")


def cmd_fit(args):
    X, y = _load(args)
    fit = fit_full(X, y, _solver(args))
    _emit([("n", X.shape[0]), ("d", X.shape[1]), ("converged", fit.converged),
           ("iterations", fit.iterations), ("grad_norm", fit.final_grad_norm),
           ("log_likelihood", log_likelihood(X, y, fit.beta)), ("beta", fit.beta)])
    return EXIT_OK if fit.converged else EXIT_DIVERGED


def cmd_sketch_fit(args):
    X, y = _load(args)
    cfg = _solver(args)
    full = fit_full(X, y, cfg)
    if not full.converged:
        raise BaselineDiverged("full-data IRLS did not converge")
    dist = make_distribution(args.scheme, leverage_scores(orthonormal_basis(X)))
    plan = construct_sketch(dist, args.s, args.seed)
    sub = fit_subsampled(X, y, plan, dist, cfg)
    pairs = [("scheme", dist.scheme.value), ("s", args.s), ("seed", args.seed),
             ("converged", sub.converged), ("iterations", sub.iterations),
             ("grad_norm", sub.final_grad_norm), ("beta", sub.beta)]
    pairs += list(compute_metrics(X, y, full, sub, plan, dist).as_dict().items())
    _emit(pairs)
    if args.probs:
        np.savetxt(args.probs, sub.probs, fmt="%.17g")
    return EXIT_OK if sub.converged else EXIT_NUMERICAL


def cmd_experiment(args):
    cfg = load_config(args.config)
    if args.output:
        cfg = replace(cfg, output_path=args.output)
    if args.format:
        cfg = replace(cfg, output_format=args.format)
    if cfg.output_path is None:
        raise InputError("no output path: set 'output' in the config or pass --output")
    if cfg.data:
        X, y = load_dataset(DatasetSpec(cfg.data, cfg.label_column, cfg.positive_label,
                                        cfg.standardize, cfg.add_intercept))
        prep = {"source": cfg.data, "standardize": cfg.standardize, "add_intercept": cfg.add_intercept}
    else:
        X, y = make_synthetic(cfg.synthetic_n, cfg.synthetic_d, seed=cfg.synthetic_seed)
        prep = {"source": f"synthetic:{cfg.synthetic_n}x{cfg.synthetic_d}:seed={cfg.synthetic_seed}"}
    report = run_experiment(X, y, cfg, preprocessing=prep)
    path = emit_report(report, cfg.output_path, cfg.output_format)
    if args.timings:
        emit_timing(report, args.timings)
    _emit([("output", str(path)), ("cells", len(report.cells)),
           ("failed", sum(c.failed for c in report.cells.values()))], out=sys.stderr)
    return EXIT_OK


def cmd_verify(args):
    X, y = _load(args)
    n, d = X.shape
    suite = args.suite
    if suite in ("unbiased", "variance"):
        basis = orthonormal_basis(X)
        x = np.random.default_rng(derive_seed(args.seed, "x")).standard_normal(n)
        s = args.s or (50 if suite == "unbiased" else 40)
        if suite == "unbiased":
            dist = make_distribution(Scheme.LEVERAGE, leverage_scores(basis))
            res = verify_lemma_unbiased(basis.U, x, dist, s, args.trials, args.seed)
            pairs = [("max_z", res.empirical_mean), ("bound_z", res.bound)]
        else:
            res = verify_lemma_variance(basis.U, x, s, args.trials, args.seed)
            pairs = [("mean_sq_error", res.empirical_mean), ("bound", res.bound),
                     ("standard_error", res.standard_error)]
        _emit([("suite", suite), ("s", s), ("trials", res.trials), *pairs, ("pass", res.passed)])
        return EXIT_OK if res.passed else EXIT_FAILED_CHECK

    cfg = _solver(args)
    if suite == "conditions":
        full = fit_full(X, y, cfg)
        if not full.converged:
            raise BaselineDiverged("full-data IRLS did not converge")
        rep = condition_frequency(orthonormal_basis(X), y, full.probs, args.eps, args.delta,
                                  args.trials, args.seed, s=args.s)
        _emit([("suite", suite), ("s", rep.details["s"]), ("trials", rep.trials),
               ("cond1", rep.details["cond1"]), ("cond2", rep.details["cond2"]),
               ("fraction", rep.fraction), ("threshold", rep.threshold), ("pass", rep.passed)])
        return EXIT_OK if rep.passed else EXIT_FAILED_CHECK

    rep = verify_theorem1(X, y, args.scheme, args.eps, args.delta, args.trials, args.seed, cfg, s=args.s)
    _emit([("suite", suite), ("s", rep.s), ("trials", rep.frequency.trials),
           ("fraction", rep.frequency.fraction), ("threshold", rep.frequency.threshold),
           ("failed_fits", rep.failed_fits), ("corollary_violations", rep.corollary_violations),
           ("pass", rep.passed)])
    return EXIT_OK if rep.passed else EXIT_FAILED_CHECK


def cmd_sample_size(args):
    print(required_sample_size(args.d, args.eps, args.delta))
    return EXIT_OK


def cmd_make_data(args):
    X, y = make_synthetic(args.n, args.d, seed=args.seed)
    write_csv(args.output, X[:, 1:], y)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sketchlogit",
                                     description="Leverage-score subsampled logistic regression.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="full-data MLE on a CSV")
    _add_data_args(p)
    _add_solver_args(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("sketch-fit", help="one subsampled fit, compared with the full-data fit")
    _add_data_args(p)
    _add_solver_args(p)
    p.add_argument("--scheme", default="leverage", choices=[m.value for m in Scheme])
    p.add_argument("--s", type=int, required=True, help="number of sampled rows")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--probs", help="also write p(beta_hat) for every row to this file")
    p.set_defaults(func=cmd_sketch_fit)

    p = sub.add_parser("experiment", help="run a sweep described by a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--output", help="override the config's output path")
    p.add_argument("--format", choices=["csv", "json"])
    p.add_argument("--timings", help="write wall-clock timings (not reproducible) to this JSON file")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("verify", help="Monte Carlo checks of the sketch guarantees")
    _add_data_args(p, synthetic=True)
    _add_solver_args(p)
    p.add_argument("--suite", required=True, choices=["unbiased", "variance", "conditions", "theorem1"])
    p.add_argument("--scheme", default="leverage", choices=[m.value for m in Scheme])
    p.add_argument("--eps", type=float, default=0.5)
    p.add_argument("--delta", type=float, default=0.2)
    p.add_argument("--s", type=int, default=None, help="sample size (default depends on the suite)")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sample-size", help="print ceil(8 d / (delta eps^2))")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.set_defaults(func=cmd_sample_size)

    p = sub.add_parser("make-data", help="write a synthetic logistic dataset as CSV")
    p.add_argument("--n", type=int, default=30_000)
    p.add_argument("--d", type=int, default=24, help="columns incl. the intercept the loader adds back")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_make_data)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except BaselineDiverged as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
