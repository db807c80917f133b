"""Sampling distributions and the sampling-and-rescaling sketch ``S``.

A sketch is stored as a :class:`SketchPlan`: for each of its ``s`` rows the
source index ``j_t`` and the scale ``(s * pi_{j_t})**-0.5``. The dense
``s x n`` matrix is never formed except by :func:`materialize` for testing.
"""

from __future__ import annotations

import enum
import hashlib
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    DistributionMismatch,
    EmptyPlan,
    InputError,
    InvalidRange,
    MissingScores,
)
from .linalg import LeverageScores


class Scheme(str, enum.Enum):
    UNIFORM = "uniform"
    LEVERAGE = "leverage"
    L2S = "l2s"

    @classmethod
    def parse(cls, value) -> "Scheme":
        if isinstance(value, Scheme):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            choices = ", ".join(m.value for m in cls)
            raise InputError(f"unknown sampling scheme {value!r} (choose from {choices})") from None


@dataclass(frozen=True)
class SamplingDistribution:
    probs: np.ndarray
    scheme: Scheme

    @property
    def n(self) -> int:
        return len(self.probs)


@dataclass(frozen=True)
class SketchPlan:
    indices: np.ndarray  # 0-based source rows j_t
    scales: np.ndarray
    n: int
    seed: int

    @property
    def sample_size(self) -> int:
        return len(self.indices)

    @property
    def entries(self):
        return list(zip(self.indices.tolist(), self.scales.tolist()))


def derive_seed(*parts) -> int:
    """Stable 64-bit seed from an arbitrary tuple of ints and strings."""
    key = "\x1f".join(str(p) for p in parts).encode("utf-8")
    return int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "little")


def make_distribution(scheme, leverage: LeverageScores | np.ndarray | None = None,
                      n: int | None = None) -> SamplingDistribution:
    """Build the uniform, leverage-proportional or L2S sampling distribution.

    L2S mixes, half and half, a component proportional to the square root of
    the leverage scores with the uniform distribution.
    """
    scheme = Scheme.parse(scheme)
    scores = None
    if leverage is not None:
        scores = np.asarray(getattr(leverage, "scores", leverage), dtype=np.float64)
        if n is None:
            n = len(scores)
        elif len(scores) != n:
            raise DimensionMismatch(f"{len(scores)} leverage scores for n={n}")
    if n is None or n < 1:
        raise InputError("n must be a positive integer")

    if scheme is Scheme.UNIFORM:
        probs = np.full(n, 1.0 / n)
    elif scores is None:
        raise MissingScores(f"scheme {scheme.value!r} needs leverage scores")
    elif scheme is Scheme.LEVERAGE:
        probs = scores / scores.sum()
    else:
        root = np.sqrt(scores)
        probs = 0.5 * root / root.sum() + 0.5 / n
    return SamplingDistribution(probs=probs, scheme=scheme)


def _scales(probs: np.ndarray, indices: np.ndarray, s: int) -> np.ndarray:
    return 1.0 / np.sqrt(s * probs[indices])


def construct_sketch(dist: SamplingDistribution, s: int, seed: int) -> SketchPlan:
    """Draw ``s`` row indices i.i.d. from ``dist`` (with replacement).

    Inverse-CDF sampling over the cumulative probabilities, driven by a
    generator seeded only from ``seed``; zero-probability rows have an empty
    CDF interval and are never drawn.
    """
    s = int(s)
    if s < 1:
        raise EmptyPlan("sample size must be at least 1")
    probs = dist.probs
    cdf = np.cumsum(probs)
    rng = np.random.default_rng(seed)
    u = rng.random(s) * cdf[-1]
    idx = np.searchsorted(cdf, u, side="right")
    # u < cdf[-1] always, but guard the last positive entry against roundoff.
    last = int(np.flatnonzero(probs > 0)[-1])
    np.minimum(idx, last, out=idx)
    return SketchPlan(indices=idx, scales=_scales(probs, idx, s), n=dist.n, seed=int(seed))


def plan_from_indices(dist: SamplingDistribution, indices, seed: int = 0) -> SketchPlan:
    """Plan with a prescribed index multiset, scaled as if drawn from ``dist``."""
    idx = np.asarray(indices, dtype=np.intp)
    if idx.ndim != 1 or len(idx) == 0:
        raise EmptyPlan("plan needs at least one index")
    if idx.min() < 0 or idx.max() >= dist.n:
        raise DimensionMismatch(f"indices out of range for n={dist.n}")
    if np.any(dist.probs[idx] <= 0):
        raise DistributionMismatch("plan references an index with zero probability")
    return SketchPlan(indices=idx, scales=_scales(dist.probs, idx, len(idx)), n=dist.n, seed=int(seed))


def identity_plan(n: int) -> SketchPlan:
    """Every row exactly once under uniform probabilities, so ``S^T S = I``."""
    return plan_from_indices(make_distribution(Scheme.UNIFORM, n=n), np.arange(n))


def multiplicities(plan: SketchPlan) -> np.ndarray:
    return np.bincount(plan.indices, minlength=plan.n)


def sketch_diagonal(plan: SketchPlan, dist: SamplingDistribution) -> np.ndarray:
    """Diagonal of ``S^T S``: multiplicity of each row over ``s * pi``."""
    if plan.n != dist.n:
        raise DimensionMismatch(f"plan is over n={plan.n}, distribution over n={dist.n}")
    counts = multiplicities(plan)
    hit = counts > 0
    if np.any(dist.probs[hit] <= 0):
        raise DistributionMismatch("plan references an index with zero probability")
    diag = np.zeros(plan.n)
    diag[hit] = counts[hit] / (plan.sample_size * dist.probs[hit])
    return diag


def apply_sketch(plan: SketchPlan, M) -> np.ndarray:
    """Compute ``S @ M`` by gathering and rescaling the sampled rows."""
    M = np.asarray(M)
    if M.ndim == 0 or M.shape[0] != plan.n:
        raise DimensionMismatch(f"operand has {M.shape[0] if M.ndim else 0} rows, sketch expects {plan.n}")
    if M.ndim == 1:
        return plan.scales * M[plan.indices]
    return plan.scales[:, None] * M[plan.indices]


def sketched_gram_apply(plan: SketchPlan, U: np.ndarray, x: np.ndarray) -> np.ndarray:
    """``U^T S^T S x`` in O(s d) work."""
    w = plan.scales**2 * x[plan.indices]
    return U[plan.indices].T @ w


def materialize(plan: SketchPlan) -> np.ndarray:
    """Dense ``s x n`` matrix ``S``. Only sensible for small ``n``."""
    S = np.zeros((plan.sample_size, plan.n))
    S[np.arange(plan.sample_size), plan.indices] = plan.scales
    return S


def required_sample_size(d: int, eps: float, delta: float) -> int:
    """Smallest ``s`` with ``s >= 8 d / (delta * eps**2)``."""
    if not (0.0 < eps < 1.0) or not (0.0 < delta < 1.0):
        raise InvalidRange(f"eps and delta must lie in (0, 1), got eps={eps}, delta={delta}")
    if d < 1:
        raise InvalidRange(f"d must be >= 1, got {d}")
    bound = 8.0 * d / (delta * eps * eps)
    # Snap to an integer when roundoff alone separates the bound from it.
    nearest = round(bound)
    if abs(bound - nearest) <= 1e-9 * bound:
        return int(nearest)
    return int(math.ceil(bound))
