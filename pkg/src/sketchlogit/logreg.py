"""Logistic model evaluation and maximum-likelihood fitting by IRLS.

Both solvers start at ``beta = 0`` and take Newton steps
``(X^T W X + ridge I)^{-1} X^T (y - p)``. The subsampled solver runs the same
iteration on the distinct sampled rows only, each weighted by its entry of
``diag(S^T S)``, so an iteration costs O(s d^2 + d^3) whatever ``n`` is.
"""

from __future__ import annotations

import enum
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, EmptyPlan, InputError, SingularHessian
from .linalg import as_design_matrix
from .sketch import SamplingDistribution, SketchPlan, sketch_diagonal

_P_MAX = np.nextafter(1.0, 0.0)
_P_MIN = np.finfo(np.float64).tiny


class StepDamping(str, enum.Enum):
    NONE = "none"
    HALVING = "halving"


@dataclass(frozen=True)
class SolverConfig:
    """IRLS settings.

    ``grad_tol=None`` resolves to ``1e-8 * sqrt(n)`` at fit time.
    ``hessian_ridge`` is relative: the added diagonal is
    ``hessian_ridge * trace(X^T W X) / d``.
    """

    grad_tol: float | None = None
    max_iter: int = 100
    weight_floor: float = 1e-10
    hessian_ridge: float = 1e-10
    step_damping: StepDamping = StepDamping.HALVING
    step_tol: float = 1e-6
    max_halvings: int = 30

    def __post_init__(self):
        if self.grad_tol is not None and not self.grad_tol > 0:
            raise InputError("grad_tol must be positive")
        if self.max_iter < 1:
            raise InputError("max_iter must be >= 1")
        if self.weight_floor < 0 or self.hessian_ridge < 0:
            raise InputError("weight_floor and hessian_ridge must be non-negative")
        object.__setattr__(self, "step_damping", StepDamping(self.step_damping))

    def tolerance(self, n: int) -> float:
        return self.grad_tol if self.grad_tol is not None else 1e-8 * math.sqrt(n)


@dataclass
class LogisticFit:
    beta: np.ndarray
    probs: np.ndarray
    converged: bool
    iterations: int
    final_grad_norm: float
    weighted: bool
    grad_tol: float
    solve_time: float = 0.0  # seconds spent inside the IRLS loop
    n_floored: int = 0  # rows whose IRLS weight hit the floor at the last iterate
    history: list = field(default_factory=list, repr=False)

    @property
    def time_per_iteration(self) -> float:
        return self.solve_time / max(self.iterations, 1)


# -- model evaluation --------------------------------------------------------


def _sigmoid(t: np.ndarray) -> np.ndarray:
    # Branch on sign so exp() never sees a large positive argument.
    out = np.empty_like(t)
    pos = t >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-t[pos]))
    e = np.exp(t[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def _softplus(t: np.ndarray) -> np.ndarray:
    """log(1 + exp(t)) without overflow."""
    return np.maximum(t, 0.0) + np.log1p(np.exp(-np.abs(t)))


def _linear(X, beta):
    X = np.asarray(X, dtype=np.float64)
    beta = np.asarray(beta, dtype=np.float64)
    if X.ndim != 2 or beta.ndim != 1 or X.shape[1] != beta.shape[0]:
        raise DimensionMismatch(f"X has shape {X.shape}, beta has shape {beta.shape}")
    return X @ beta


def _check_response(X, y) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 1 or y.shape[0] != np.shape(X)[0]:
        raise DimensionMismatch(f"y has shape {y.shape} for X of shape {np.shape(X)}")
    return y


def as_response(y) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 1 or not np.all((y == 0) | (y == 1)):
        raise InputError("response must be a 1-D vector of 0/1 labels")
    return y


def predict_probs(X, beta) -> np.ndarray:
    """``sigma(X beta)``, clipped into the open interval (0, 1)."""
    return np.clip(_sigmoid(_linear(X, beta)), _P_MIN, _P_MAX)


def log_likelihood(X, y, beta) -> float:
    eta = _linear(X, beta)
    y = _check_response(X, y)
    return float(y @ eta - _softplus(eta).sum())


def _residual(eta, y):
    """``y - sigma(eta)``; for 0/1 labels evaluated as ``sigma(-eta)`` or
    ``-sigma(eta)`` so it stays accurate when the probability saturates."""
    if np.all((y == 0) | (y == 1)):
        return np.where(y == 1, _sigmoid(-eta), -_sigmoid(eta))
    return y - _sigmoid(eta)


def grad_log_likelihood(X, y, beta) -> np.ndarray:
    """``X^T (y - p(beta))``."""
    eta = _linear(X, beta)
    y = _check_response(X, y)
    return np.asarray(X, dtype=np.float64).T @ _residual(eta, y)


def subsampled_log_likelihood(X, y, beta, plan: SketchPlan, dist: SamplingDistribution) -> float:
    """``y^T S^T S X beta - 1^T S^T S g(beta)`` over the sampled rows."""
    idx, w = _weighted_rows(plan, dist)
    Xs = np.asarray(X, dtype=np.float64)[idx]
    eta = _linear(Xs, beta)
    ys = _check_response(X, y)[idx]
    return float(w @ (ys * eta - _softplus(eta)))


def subsampled_gradient(X, y, beta, plan: SketchPlan, dist: SamplingDistribution) -> np.ndarray:
    """``X^T S^T S (y - p(beta))``."""
    idx, w = _weighted_rows(plan, dist)
    Xs = np.asarray(X, dtype=np.float64)[idx]
    ys = _check_response(X, y)[idx]
    return Xs.T @ (w * _residual(_linear(Xs, beta), ys))


# -- solvers -------------------------------------------------------------------


def _weighted_rows(plan: SketchPlan, dist: SamplingDistribution):
    diag = sketch_diagonal(plan, dist)
    idx = np.flatnonzero(diag)
    return idx, diag[idx]


def _irls(X, y, w, cfg: SolverConfig, n_full: int):
    """Newton/IRLS on ``sum_i w_i (y_i x_i beta - softplus(x_i beta))``.

    ``w=None`` means unit weights. Returns beta and loop diagnostics; the
    caller computes probabilities over whatever rows it needs.
    """
    n, d = X.shape
    tol = cfg.tolerance(n_full)
    beta = np.zeros(d)

    def objective(b):
        eta = X @ b
        terms = y * eta - _softplus(eta)
        return float(terms.sum() if w is None else w @ terms), eta

    obj, eta = objective(beta)
    converged = False
    it = 0
    gnorm = math.inf
    n_floored = 0
    history = []
    t0 = time.perf_counter()
    while True:
        r = _residual(eta, y)
        g = X.T @ (r if w is None else w * r)
        gnorm = float(np.linalg.norm(g))
        curv = _sigmoid(eta) * _sigmoid(-eta)
        n_floored = int(np.count_nonzero(curv < cfg.weight_floor))
        curv = np.maximum(curv, cfg.weight_floor)
        if w is not None:
            curv = w * curv
        H = (X * curv[:, None]).T @ X
        ridge = cfg.hessian_ridge * np.trace(H) / d
        if ridge > 0:
            H[np.diag_indices(d)] += ridge
        try:
            L = np.linalg.cholesky(H)
        except np.linalg.LinAlgError:
            raise SingularHessian(f"normal matrix is not positive definite at iteration {it}") from None
        step = np.linalg.solve(L.T, np.linalg.solve(L, g))
        if not np.all(np.isfinite(step)):
            raise SingularHessian(f"non-finite Newton step at iteration {it}")
        history.append((obj, gnorm))
        step_small = np.linalg.norm(step) <= cfg.step_tol * (1.0 + np.linalg.norm(beta))
        if gnorm <= tol and step_small:
            converged = True
            break
        if it >= cfg.max_iter:
            break
        t = 1.0
        new_beta = beta + step
        new_obj, new_eta = objective(new_beta)
        if cfg.step_damping is StepDamping.HALVING:
            # Drops within the objective's rounding noise are not overshoot.
            floor = obj - 1e-12 * max(1.0, abs(obj))
            halvings = 0
            while new_obj < floor and halvings < cfg.max_halvings:
                t *= 0.5
                halvings += 1
                new_beta = beta + t * step
                new_obj, new_eta = objective(new_beta)
            if new_obj < floor:
                it += 1
                break
        beta, obj, eta = new_beta, new_obj, new_eta
        it += 1
    elapsed = time.perf_counter() - t0
    return beta, converged, it, gnorm, tol, elapsed, n_floored, history


def fit_full(X, y, cfg: SolverConfig | None = None) -> LogisticFit:
    """Full-data MLE. Non-convergence (e.g. separable data) is reported, not raised."""
    cfg = cfg or SolverConfig()
    X = as_design_matrix(X)
    y = as_response(_check_response(X, y))
    beta, ok, it, gnorm, tol, elapsed, nf, hist = _irls(X, y, None, cfg, X.shape[0])
    return LogisticFit(beta=beta, probs=predict_probs(X, beta), converged=ok, iterations=it,
                       final_grad_norm=gnorm, weighted=False, grad_tol=tol, solve_time=elapsed,
                       n_floored=nf, history=hist)


def fit_subsampled(X, y, plan: SketchPlan, dist: SamplingDistribution,
                   cfg: SolverConfig | None = None) -> LogisticFit:
    """Maximize the sketched log-likelihood; return ``beta_hat`` and ``p(beta_hat)`` on all rows.

    ``final_grad_norm`` is ``||X^T S^T S (y - p(beta_hat))||``.
    """
    cfg = cfg or SolverConfig()
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise DimensionMismatch(f"design matrix must be 2-D, got shape {X.shape}")
    y = as_response(_check_response(X, y))
    if plan.sample_size == 0:
        raise EmptyPlan("sketch has no rows")
    if plan.n != X.shape[0]:
        raise DimensionMismatch(f"plan drawn on n={plan.n}, data has n={X.shape[0]}")
    idx, w = _weighted_rows(plan, dist)
    beta, ok, it, gnorm, tol, elapsed, nf, hist = _irls(
        np.ascontiguousarray(X[idx]), y[idx], w, cfg, X.shape[0])
    return LogisticFit(beta=beta, probs=predict_probs(X, beta), converged=ok, iterations=it,
                       final_grad_norm=gnorm, weighted=True, grad_tol=tol, solve_time=elapsed,
                       n_floored=nf, history=hist)
