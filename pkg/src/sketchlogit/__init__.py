"""Leverage-score subsampled logistic regression."""

__version__ = "0.1.0"

from .analysis import (
    ConditionReport,
    MetricsRecord,
    MonteCarloSummary,
    check_structural_conditions,
    compute_metrics,
    condition_frequency,
    verify_lemma_unbiased,
    verify_lemma_variance,
    verify_theorem1,
)
from .data import DatasetSpec, load_dataset, make_synthetic
from .experiment import ExperimentConfig, ExperimentReport, emit_report, run_experiment
from .linalg import LeverageScores, OrthonormalBasis, leverage_scores, leverage_scores_of, orthonormal_basis
from .logreg import (
    LogisticFit,
    SolverConfig,
    fit_full,
    fit_subsampled,
    grad_log_likelihood,
    log_likelihood,
    predict_probs,
)
from .sketch import (
    SamplingDistribution,
    Scheme,
    SketchPlan,
    apply_sketch,
    construct_sketch,
    make_distribution,
    required_sample_size,
    sketch_diagonal,
)
