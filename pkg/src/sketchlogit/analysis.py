"""Accuracy metrics, structural-condition checks and Monte Carlo verifiers.

The verifiers compare sampled behaviour of the sketch against the
guarantees it is supposed to satisfy:

* unbiasedness of ``U^T S^T S x`` as an estimator of ``U^T x``;
* the expected squared error bound ``sum_i ||U_i||^2 x_i^2 / (s pi_i)``,
  which is ``(d / s) ||x||^2`` under leverage sampling;
* the frequency with which both structural conditions hold at the
  sample size ``ceil(8 d / (delta eps^2))``;
* end-to-end, ``||p_hat - p*|| <= eps ||y - p*||`` for sketched fits.

Each trial seeds its own generator from ``(seed, tag, trial)`` so results do
not depend on execution order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DimensionMismatch, FullFitDiverged, InputError, ZeroProbabilityConflict
from .linalg import OrthonormalBasis, leverage_scores, orthonormal_basis
from .logreg import (
    LogisticFit,
    SolverConfig,
    fit_full,
    fit_subsampled,
    log_likelihood,
    subsampled_log_likelihood,
)
from .sketch import (
    SamplingDistribution,
    Scheme,
    SketchPlan,
    construct_sketch,
    derive_seed,
    make_distribution,
    required_sample_size,
    sketched_gram_apply,
)

METRIC_NAMES = (
    "rel_prob_err",
    "misclass_rate",
    "rel_nll_full",
    "rel_nll_sub",
    "discrepancy_hat",
    "discrepancy_star",
)

# Slack multiplier turning exact-optimum identities into residual bounds.
SOLVER_SLACK = 10.0


@dataclass(frozen=True)
class MetricsRecord:
    rel_prob_err: float
    misclass_rate: float
    rel_nll_full: float
    rel_nll_sub: float
    discrepancy_hat: float
    discrepancy_star: float

    def as_dict(self) -> dict:
        return {name: getattr(self, name) for name in METRIC_NAMES}


@dataclass(frozen=True)
class ConditionReport:
    eps: float
    cond1_lhs: float
    cond1_rhs: float
    cond2_lhs: float
    cond2_rhs: float
    theorem_lhs: float | None = None
    theorem_rhs: float | None = None

    @property
    def cond1_holds(self) -> bool:
        return self.cond1_lhs <= self.cond1_rhs

    @property
    def cond2_holds(self) -> bool:
        return self.cond2_lhs <= self.cond2_rhs

    @property
    def both_hold(self) -> bool:
        return self.cond1_holds and self.cond2_holds

    @property
    def theorem_holds(self) -> bool | None:
        if self.theorem_lhs is None:
            return None
        return self.theorem_lhs <= self.theorem_rhs


@dataclass(frozen=True)
class MonteCarloSummary:
    """Outcome of an expectation check.

    ``pass_`` is ``empirical_mean <= bound * (1 + 5 * standard_error / max(bound, tiny))``.
    """

    trials: int
    empirical_mean: float
    bound: float
    standard_error: float
    details: dict = field(default_factory=dict, compare=False)

    @property
    def passed(self) -> bool:
        tiny = np.finfo(np.float64).tiny
        return self.empirical_mean <= self.bound * (1.0 + 5.0 * self.standard_error / max(self.bound, tiny))


@dataclass(frozen=True)
class FrequencyReport:
    """Fraction of trials in which an event held, against ``1 - delta - 3 SE``."""

    trials: int
    successes: int
    delta: float
    details: dict = field(default_factory=dict, compare=False)

    @property
    def fraction(self) -> float:
        return self.successes / self.trials

    @property
    def threshold(self) -> float:
        return frequency_threshold(self.delta, self.trials)

    @property
    def passed(self) -> bool:
        return self.fraction >= self.threshold


def frequency_threshold(delta: float, trials: int) -> float:
    return 1.0 - delta - 3.0 * math.sqrt(delta * (1.0 - delta) / trials)


# -- metrics ---------------------------------------------------------------------


def misclassification_rate(y, probs) -> float:
    """Predict class 1 iff ``p >= 0.5``."""
    y = np.asarray(y)
    return float(np.mean((np.asarray(probs) >= 0.5) != (y == 1)))


def compute_metrics(X, y, full: LogisticFit, sub: LogisticFit,
                    plan: SketchPlan, dist: SamplingDistribution) -> MetricsRecord:
    y = np.asarray(y, dtype=np.float64)
    if full.probs.shape != y.shape or sub.probs.shape != y.shape:
        raise DimensionMismatch("fits and labels disagree on n")
    p_star, p_hat = full.probs, sub.probs
    ll_star = log_likelihood(X, y, full.beta)
    ll_hat = log_likelihood(X, y, sub.beta)
    ll_bar = subsampled_log_likelihood(X, y, sub.beta, plan, dist)
    return MetricsRecord(
        rel_prob_err=float(np.linalg.norm(p_hat - p_star) / np.linalg.norm(p_star)),
        misclass_rate=misclassification_rate(y, p_hat),
        rel_nll_full=abs(ll_hat - ll_star) / -ll_star,
        rel_nll_sub=abs(ll_bar - ll_star) / -ll_star,
        discrepancy_hat=float(np.linalg.norm(y - p_hat)),
        discrepancy_star=float(np.linalg.norm(y - p_star)),
    )


# -- structural conditions -----------------------------------------------------------


def _basis_matrix(U) -> np.ndarray:
    return U.U if isinstance(U, OrthonormalBasis) else np.asarray(U, dtype=np.float64)


def check_structural_conditions(U, plan: SketchPlan, dist: SamplingDistribution, x, y, p_star,
                                eps: float, p_hat=None) -> ConditionReport:
    """Evaluate both sides of the two structural conditions for one sketch.

    Condition 1: ``| ||U^T S^T S x|| - ||U^T x|| | <= (eps/2) ||x||``.
    Condition 2: ``||U^T S^T S (y - p*)|| <= (eps/2) ||y - p*||``.
    With ``p_hat`` also fills in the sides of ``||p_hat - p*|| <= eps ||y - p*||``.
    """
    U = _basis_matrix(U)
    n = U.shape[0]
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    p_star = np.asarray(p_star, dtype=np.float64)
    if plan.n != n or dist.n != n or x.shape != (n,) or y.shape != (n,) or p_star.shape != (n,):
        raise DimensionMismatch(f"all operands must have n={n} rows")
    if not 0.0 < eps < 1.0:
        raise InputError(f"eps must lie in (0, 1), got {eps}")
    resid = y - p_star
    cond1_lhs = abs(np.linalg.norm(sketched_gram_apply(plan, U, x)) - np.linalg.norm(U.T @ x))
    cond2_lhs = np.linalg.norm(sketched_gram_apply(plan, U, resid))
    half = 0.5 * eps
    theorem_lhs = theorem_rhs = None
    if p_hat is not None:
        theorem_lhs = float(np.linalg.norm(np.asarray(p_hat) - p_star))
        theorem_rhs = float(eps * np.linalg.norm(resid))
    return ConditionReport(
        eps=eps,
        cond1_lhs=float(cond1_lhs),
        cond1_rhs=float(half * np.linalg.norm(x)),
        cond2_lhs=float(cond2_lhs),
        cond2_rhs=float(half * np.linalg.norm(resid)),
        theorem_lhs=theorem_lhs,
        theorem_rhs=theorem_rhs,
    )


def _sampler(dist, s, seed, tag) -> Callable[[int], SketchPlan]:
    return lambda t: construct_sketch(dist, s, derive_seed(seed, tag, t))


def condition_frequency(U, y, p_star, eps: float, delta: float, trials: int, seed: int,
                        x=None, s: int | None = None) -> FrequencyReport:
    """How often both conditions hold jointly under leverage sampling.

    ``x`` defaults to a Gaussian vector drawn once from ``seed``; it is held
    fixed across trials, matching the per-vector probability statement.
    """
    U = _basis_matrix(U)
    n, d = U.shape
    dist = make_distribution(Scheme.LEVERAGE, leverage_scores(OrthonormalBasis(U, np.ones(d))))
    if s is None:
        s = required_sample_size(d, eps, delta)
    if x is None:
        x = np.random.default_rng(derive_seed(seed, "x")).standard_normal(n)
    draw = _sampler(dist, s, seed, "conditions")
    c1 = c2 = both = 0
    for t in range(trials):
        rep = check_structural_conditions(U, draw(t), dist, x, y, p_star, eps)
        c1 += rep.cond1_holds
        c2 += rep.cond2_holds
        both += rep.both_hold
    return FrequencyReport(trials=trials, successes=both, delta=delta,
                           details={"s": s, "cond1": c1, "cond2": c2})


# -- matrix-multiplication lemmas ------------------------------------------------------


def verify_lemma_unbiased(U, x, dist: SamplingDistribution, s: int, trials: int, seed: int,
                          sampler: Callable[[int], SketchPlan] | None = None) -> MonteCarloSummary:
    """Check ``E[U^T S^T S x] = U^T x`` coordinate-wise.

    The summary's ``empirical_mean`` is the largest coordinate deviation in
    standard-error units and ``bound`` is 4, so ``passed`` is the 4-SE rule.
    A coordinate whose estimator has zero spread must match to roundoff.
    """
    U = _basis_matrix(U)
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (U.shape[0],):
        raise DimensionMismatch("x must have one entry per row of U")
    draw = sampler or _sampler(dist, s, seed, "unbiased")
    est = np.empty((trials, U.shape[1]))
    for t in range(trials):
        est[t] = sketched_gram_apply(draw(t), U, x)
    target = U.T @ x
    mean = est.mean(axis=0)
    se = est.std(axis=0, ddof=1) / math.sqrt(trials) if trials > 1 else np.zeros_like(mean)
    dev = np.abs(mean - target)
    roundoff = 1e-12 * (1.0 + np.abs(target))
    z = np.where(se > roundoff, dev / np.where(se > 0, se, 1.0), np.where(dev <= roundoff, 0.0, np.inf))
    return MonteCarloSummary(trials=trials, empirical_mean=float(z.max()), bound=4.0, standard_error=0.0,
                             details={"mean": mean, "target": target, "se": se, "z": z})


def lemma3_bound(U, x, probs, s: int) -> float:
    """``sum_i ||U_i||^2 x_i^2 / (s pi_i)``; rows with ``||U_i|| x_i = 0`` contribute nothing."""
    U = _basis_matrix(U)
    x = np.asarray(x, dtype=np.float64)
    probs = np.asarray(probs, dtype=np.float64)
    num = np.einsum("ij,ij->i", U, U) * x * x
    active = num > 0
    if np.any(probs[active] <= 0):
        raise ZeroProbabilityConflict("a row with nonzero U_i and x_i has zero sampling probability")
    return float(np.sum(num[active] / probs[active]) / s)


def verify_lemma_variance(U, x, s: int, trials: int, seed: int,
                          dist: SamplingDistribution | None = None,
                          sampler: Callable[[int], SketchPlan] | None = None) -> MonteCarloSummary:
    """Monte Carlo mean of ``||U^T S^T S x - U^T x||^2`` against its bound.

    Without ``dist`` the sketch samples proportionally to leverage and the
    bound is ``(d / s) ||x||^2``; with ``dist`` the general bound
    ``sum_i ||U_i||^2 x_i^2 / (s pi_i)`` is used.
    """
    U = _basis_matrix(U)
    n, d = U.shape
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (n,):
        raise DimensionMismatch("x must have one entry per row of U")
    if dist is None:
        dist = make_distribution(Scheme.LEVERAGE, np.einsum("ij,ij->i", U, U))
        bound = d / s * float(x @ x)
    else:
        bound = lemma3_bound(U, x, dist.probs, s)
    general = lemma3_bound(U, x, dist.probs, s)
    draw = sampler or _sampler(dist, s, seed, "variance")
    target = U.T @ x
    sq = np.empty(trials)
    for t in range(trials):
        diff = sketched_gram_apply(draw(t), U, x) - target
        sq[t] = diff @ diff
    se = float(sq.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return MonteCarloSummary(trials=trials, empirical_mean=float(sq.mean()), bound=bound, standard_error=se,
                             details={"lemma3_bound": general})


# -- end to end ------------------------------------------------------------------------------


@dataclass(frozen=True)
class Theorem1Report:
    frequency: FrequencyReport
    s: int
    eps: float
    corollary_checked: int
    corollary_violations: int
    failed_fits: int
    conditions_both: int
    lemma1_max_residual: float
    lemma1_bound: float
    lemma2_checked: int
    lemma2_violations: int
    details: dict = field(default_factory=dict, compare=False)

    @property
    def passed(self) -> bool:
        return self.frequency.passed and self.corollary_violations == 0


def verify_theorem1(X, y, scheme, eps: float, delta: float, trials: int, seed: int,
                    cfg: SolverConfig | None = None, s: int | None = None) -> Theorem1Report:
    """Repeat sketch-and-fit and count trials with ``||p_hat - p*|| <= eps ||y - p*||``.

    Every success is also checked against the discrepancy bound
    ``| ||y - p_hat|| - ||y - p*|| | <= eps ||y - p*||``. Alongside, each
    trial records the sketch identity ``U^T S^T S (y - p*) = U^T S^T S (p_hat - p*)``
    (up to solver residual) and, where condition 1 holds for ``x = p_hat - p*``,
    whether ``||U^T S^T S (p_hat - p*)|| >= (1 - eps/2) ||p_hat - p*||``.
    A sketched fit that fails to converge counts as a failed trial.
    """
    cfg = cfg or SolverConfig()
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    full = fit_full(X, y, cfg)
    if not full.converged:
        raise FullFitDiverged("full-data MLE did not converge; the baseline does not exist")
    basis = orthonormal_basis(X)
    U = basis.U
    n, d = X.shape
    dist = make_distribution(scheme, leverage_scores(basis))
    if s is None:
        s = required_sample_size(d, eps, delta)
    p_star = full.probs
    resid_star = y - p_star
    disc_star = float(np.linalg.norm(resid_star))
    draw = _sampler(dist, s, seed, "theorem1")

    successes = cor_checked = cor_bad = failed = both = 0
    l2_checked = l2_bad = 0
    l1_max = 0.0
    l1_bound = SOLVER_SLACK * cfg.tolerance(n) / basis.sigma_min
    ratios = []
    for t in range(trials):
        plan = draw(t)
        sub = fit_subsampled(X, y, plan, dist, cfg)
        if not sub.converged:
            failed += 1
            continue
        diff = sub.probs - p_star
        rep = check_structural_conditions(U, plan, dist, diff, y, p_star, eps, p_hat=sub.probs)
        both += rep.both_hold
        if rep.theorem_holds:
            successes += 1
            cor_checked += 1
            lhs = abs(float(np.linalg.norm(y - sub.probs)) - disc_star)
            # Reverse triangle inequality: holds up to roundoff in the norms.
            if lhs > eps * disc_star * (1 + 1e-12) + 1e-12:
                cor_bad += 1
        sketched_diff = sketched_gram_apply(plan, U, diff)
        l1 = float(np.linalg.norm(sketched_gram_apply(plan, U, resid_star) - sketched_diff))
        l1_max = max(l1_max, l1)
        dnorm = float(np.linalg.norm(diff))
        if dnorm > 0:
            ratios.append(float(np.linalg.norm(U.T @ diff)) / dnorm)
        if rep.cond1_holds:
            l2_checked += 1
            if np.linalg.norm(sketched_diff) < (1 - 0.5 * eps) * dnorm - l1_bound:
                l2_bad += 1
    freq = FrequencyReport(trials=trials, successes=successes, delta=delta)
    return Theorem1Report(
        frequency=freq, s=s, eps=eps, corollary_checked=cor_checked, corollary_violations=cor_bad,
        failed_fits=failed, conditions_both=both, lemma1_max_residual=l1_max, lemma1_bound=l1_bound,
        lemma2_checked=l2_checked, lemma2_violations=l2_bad,
        details={"range_fraction": np.array(ratios), "discrepancy_star": disc_star},
    )
