"""CSV ingestion and synthetic surrogate datasets."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConstantColumn, EmptyDataset, LabelError, ParseError

# Shapes (rows x columns incl. intercept) of the public datasets the
# experiments were designed around. Files are not bundled; see README.
REFERENCE_SHAPES = {
    "cardio": (70_000, 12),
    "churn": (10_000, 10),
    "default": (30_000, 24),
}


@dataclass(frozen=True)
class DatasetSpec:
    path: str | Path
    label_column: str | int = -1
    positive_label: str | None = None
    standardize: bool = True
    add_intercept: bool = True


def _label_index(header, label_column) -> int:
    if isinstance(label_column, int) or (isinstance(label_column, str) and label_column.lstrip("-").isdigit()
                                         and label_column not in header):
        idx = int(label_column)
        if not -len(header) <= idx < len(header):
            raise LabelError(f"label column index {idx} out of range for {len(header)} columns")
        return idx % len(header)
    try:
        return header.index(label_column)
    except ValueError:
        raise LabelError(f"label column {label_column!r} not in header {header}") from None


def load_dataset(spec: DatasetSpec):
    """Read a headed CSV into ``(X, y)``.

    Every non-label column must parse as a number. Labels must take exactly
    two distinct values; ``positive_label`` picks the one mapped to 1 and
    may be omitted only when the labels are ``0``/``1``.
    """
    path = Path(spec.path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise EmptyDataset(f"{path} is empty") from None
        li = _label_index(header, spec.label_column)
        feature_cols = [j for j in range(len(header)) if j != li]
        rows, labels = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ParseError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}", row=lineno)
            vals = []
            for j in feature_cols:
                try:
                    vals.append(float(row[j]))
                except ValueError:
                    raise ParseError(f"{path}:{lineno}: column {header[j]!r} is not numeric: {row[j]!r}",
                                     row=lineno, column=header[j]) from None
            rows.append(vals)
            labels.append(row[li].strip())
    if not rows:
        raise EmptyDataset(f"{path} has no data rows")

    tokens = sorted(set(labels))
    if len(tokens) != 2:
        raise LabelError(f"expected exactly two label values, found {len(tokens)}: {tokens[:5]}")
    positive = spec.positive_label
    if positive is None:
        if tokens != ["0", "1"]:
            raise LabelError(f"labels are {tokens}; specify which one is positive")
        positive = "1"
    if positive not in tokens:
        raise LabelError(f"positive label {positive!r} not among {tokens}")

    X = np.array(rows, dtype=np.float64).reshape(len(rows), len(feature_cols))
    y = np.array([lab == positive for lab in labels], dtype=np.float64)
    if not np.all(np.isfinite(X)):
        raise ParseError(f"{path}: non-finite feature values")
    if spec.standardize:
        X = standardize(X, [header[j] for j in feature_cols])
    if spec.add_intercept:
        X = np.column_stack([np.ones(len(X)), X])
    return X, y


def standardize(X: np.ndarray, names=None) -> np.ndarray:
    mu = X.mean(axis=0)
    sd = X.std(axis=0)
    const = sd <= 1e-12 * np.maximum(1.0, np.abs(mu))
    if np.any(const):
        j = int(np.flatnonzero(const)[0])
        label = names[j] if names is not None else j
        raise ConstantColumn(f"column {label!r} is constant and cannot be standardized")
    return (X - mu) / sd


def make_synthetic(n: int, d: int, seed: int = 0, intercept: float = -1.0, signal: float = 1.5):
    """Logistic data with an intercept column and heavy-tailed rows.

    Rows are multivariate-t (4 degrees of freedom) so leverage scores are
    far from uniform. Coefficients are drawn once from the seed and scaled
    so the linear predictor has standard deviation near ``signal``.
    """
    rng = np.random.default_rng(seed)
    Z = rng.standard_normal((n, d - 1))
    scale = np.sqrt(rng.chisquare(4, size=n) / 4.0)
    feats = Z / scale[:, None] / np.sqrt(2.0)  # t_4 has variance 2
    beta = np.empty(d)
    beta[0] = intercept
    beta[1:] = rng.standard_normal(d - 1) * signal / np.sqrt(d - 1) if d > 1 else []
    X = np.column_stack([np.ones(n), feats])
    eta = X @ beta
    y = (rng.random(n) < 1.0 / (1.0 + np.exp(-eta))).astype(np.float64)
    return X, y


def write_csv(path, X, y, names=None, label_name="label"):
    """Write features (without an intercept column) and labels as a headed CSV."""
    names = names or [f"x{j + 1}" for j in range(X.shape[1])]
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow([*names, label_name])
        for row, lab in zip(X, y):
            w.writerow([*(f"{v:.17g}" for v in row), int(lab)])
