"""Orthonormal bases and exact row leverage scores for tall matrices."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InputError, RankDeficient


def as_design_matrix(X) -> np.ndarray:
    """Validate a dense ``n x d`` design matrix and return it as float64.

    Requires ``n >= d >= 1`` and finite entries. Rank is checked later by
    :func:`orthonormal_basis`.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise DimensionMismatch(f"design matrix must be 2-D, got shape {X.shape}")
    n, d = X.shape
    if d < 1 or n < d:
        raise DimensionMismatch(f"need n >= d >= 1, got n={n}, d={d}")
    if not np.all(np.isfinite(X)):
        raise InputError("design matrix has non-finite entries")
    return X


@dataclass(frozen=True)
class OrthonormalBasis:
    """Orthonormal column basis ``U`` of range(X), with the singular values of X."""

    U: np.ndarray
    singular_values: np.ndarray

    @property
    def n(self) -> int:
        return self.U.shape[0]

    @property
    def d(self) -> int:
        return self.U.shape[1]

    @property
    def sigma_min(self) -> float:
        return float(self.singular_values[-1])


@dataclass(frozen=True)
class LeverageScores:
    scores: np.ndarray

    @property
    def d(self) -> float:
        return float(self.scores.sum())

    def __len__(self):
        return len(self.scores)


def orthonormal_basis(X) -> OrthonormalBasis:
    """Householder QR of ``X``; singular values come from the small ``R`` factor.

    Raises :class:`RankDeficient` when ``sigma_d / sigma_1 < max(n, d) * eps``.
    """
    X = as_design_matrix(X)
    n, d = X.shape
    Q, R = np.linalg.qr(X, mode="reduced")
    sv = np.linalg.svd(R, compute_uv=False)
    if sv[0] == 0.0 or sv[-1] / sv[0] < max(n, d) * np.finfo(np.float64).eps:
        raise RankDeficient(
            f"design matrix is numerically rank deficient (sigma_min/sigma_max = "
            f"{sv[-1] / sv[0] if sv[0] else 0.0:.3e})"
        )
    return OrthonormalBasis(U=Q, singular_values=sv)


def leverage_scores(basis: OrthonormalBasis) -> LeverageScores:
    """Squared row norms of ``U``, clamped to [0, 1] against roundoff."""
    U = basis.U
    scores = np.einsum("ij,ij->i", U, U)
    np.clip(scores, 0.0, 1.0, out=scores)
    return LeverageScores(scores=scores)


def leverage_scores_of(X) -> LeverageScores:
    return leverage_scores(orthonormal_basis(X))
