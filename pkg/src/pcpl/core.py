"""Shared domain types: feature matrices, datasets, proportions, counts,
assignments and centroids.

Everything here is an immutable value object built on float64/int64 numpy
arrays, validated at construction time. Operations are pure functions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ValidationError",
    "InfeasibleError",
    "FeatureMatrix",
    "LabeledDataset",
    "UnlabeledDataset",
    "ProportionSpec",
    "CountVector",
    "Assignment",
    "Centroids",
    "class_counts",
    "proportions_to_counts",
    "compute_centroids",
]

PROPORTION_SUM_TOL = 1e-6


class ValidationError(ValueError):
    """Raised when an input violates a type or operation precondition."""


class InfeasibleError(RuntimeError):
    """Raised when a constrained assignment instance has no feasible solution."""


def _as_float64_matrix(data, what: str) -> np.ndarray:
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim != 2:
        raise ValidationError(f"{what} must be 2-dimensional, got ndim={arr.ndim}")
    return arr


@dataclass(frozen=True)
class FeatureMatrix:
    """N x D dense feature coordinates; row i is the feature vector of sample i.

    Row order is the sample identity: every per-sample structure elsewhere
    (labels, assignments) indexes into these rows.
    """

    data: np.ndarray

    def __post_init__(self):
        arr = _as_float64_matrix(self.data, "feature matrix")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValidationError(f"feature matrix must be at least 1x1, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValidationError("feature matrix contains non-finite values")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def d(self) -> int:
        return self.data.shape[1]


def _validate_labels(labels, num_classes: int, n_expected: int | None = None) -> np.ndarray:
    arr = np.asarray(labels, dtype=np.int64).reshape(-1)
    if n_expected is not None and arr.shape[0] != n_expected:
        raise ValidationError(
            f"label count {arr.shape[0]} does not match sample count {n_expected}"
        )
    if arr.size and (arr.min() < 0 or arr.max() >= num_classes):
        bad = arr[(arr < 0) | (arr >= num_classes)][0]
        raise ValidationError(f"label {bad} out of range for {num_classes} classes")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class LabeledDataset:
    """Features plus one class id per sample.

    Classes may be empty (degenerate folds are legal); consumers decide how to
    handle them.
    """

    features: FeatureMatrix
    labels: np.ndarray
    num_classes: int

    def __post_init__(self):
        if self.num_classes < 1:
            raise ValidationError("num_classes must be >= 1")
        labels = _validate_labels(self.labels, self.num_classes, self.features.n)
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.features.n


@dataclass(frozen=True)
class UnlabeledDataset:
    """Features without labels, over a known label space of size num_classes."""

    features: FeatureMatrix
    num_classes: int

    def __post_init__(self):
        if self.num_classes < 1:
            raise ValidationError("num_classes must be >= 1")

    @property
    def n(self) -> int:
        return self.features.n


@dataclass(frozen=True)
class ProportionSpec:
    """Per-class fractions p_c, non-negative and summing to 1 within 1e-6."""

    p: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.p, dtype=np.float64).reshape(-1)
        if arr.size < 1:
            raise ValidationError("proportion vector must have at least one class")
        if not np.all(np.isfinite(arr)):
            raise ValidationError("proportion vector contains non-finite values")
        if arr.min() < 0:
            raise ValidationError(f"proportion p[{int(arr.argmin())}]={arr.min()} is negative")
        total = float(arr.sum())
        if abs(total - 1.0) > PROPORTION_SUM_TOL:
            raise ValidationError(f"proportions sum to {total}, expected 1 within {PROPORTION_SUM_TOL}")
        arr.setflags(write=False)
        object.__setattr__(self, "p", arr)

    @property
    def num_classes(self) -> int:
        return self.p.shape[0]


@dataclass(frozen=True)
class CountVector:
    """Per-class non-negative integer counts n_c."""

    n_c: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.n_c, dtype=np.int64).reshape(-1)
        if arr.size < 1:
            raise ValidationError("count vector must have at least one class")
        if arr.size and arr.min() < 0:
            raise ValidationError(f"count n_c[{int(arr.argmin())}]={arr.min()} is negative")
        arr.setflags(write=False)
        object.__setattr__(self, "n_c", arr)

    @property
    def num_classes(self) -> int:
        return self.n_c.shape[0]

    @property
    def total(self) -> int:
        return int(self.n_c.sum())


@dataclass(frozen=True)
class Assignment:
    """One class id per sample, its class counts, and the cost it was solved at.

    Equivalent to a binary C x N matrix with unit column sums and row sums
    equal to ``counts``.
    """

    class_of: np.ndarray
    counts: CountVector
    total_cost: float

    def __post_init__(self):
        arr = _validate_labels(self.class_of, self.counts.num_classes)
        observed = np.bincount(arr, minlength=self.counts.num_classes)
        if not np.array_equal(observed, self.counts.n_c):
            raise ValidationError(
                f"assignment counts {observed.tolist()} do not match declared {self.counts.n_c.tolist()}"
            )
        object.__setattr__(self, "class_of", arr)
        object.__setattr__(self, "total_cost", float(self.total_cost))

    @property
    def n(self) -> int:
        return self.class_of.shape[0]


@dataclass(frozen=True)
class Centroids:
    """Per-class mean feature vectors; ``present[c]`` is False for empty classes.

    An absent class keeps a zero row in ``mu`` so shapes stay rectangular;
    downstream code must consult ``present`` before trusting the row.
    """

    mu: np.ndarray
    present: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        mu = _as_float64_matrix(self.mu, "centroid matrix")
        if not np.all(np.isfinite(mu)):
            raise ValidationError("centroid matrix contains non-finite values")
        if self.present is None:
            present = np.ones(mu.shape[0], dtype=bool)
        else:
            present = np.asarray(self.present, dtype=bool).reshape(-1)
        if present.shape[0] != mu.shape[0]:
            raise ValidationError("present flags do not match centroid count")
        mu.setflags(write=False)
        present.setflags(write=False)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "present", present)

    @property
    def num_classes(self) -> int:
        return self.mu.shape[0]

    @property
    def d(self) -> int:
        return self.mu.shape[1]


def class_counts(labels, num_classes: int) -> CountVector:
    """Count samples per class id.

    Raises ValidationError on labels outside {0..num_classes-1}.
    """
    arr = _validate_labels(labels, num_classes)
    return CountVector(np.bincount(arr, minlength=num_classes))


def proportions_to_counts(p: ProportionSpec, n: int) -> CountVector:
    """Integerize class proportions into counts summing exactly to ``n``.

    Largest-remainder rounding: each class gets floor(p_c * n); the leftover
    units go to the largest fractional remainders, ties broken by ascending
    class index. Guarantees |n_c - p_c*n| < 1 for every class.
    """
    if not isinstance(p, ProportionSpec):
        p = ProportionSpec(np.asarray(p, dtype=np.float64))
    if n < 0:
        raise ValidationError(f"sample count must be >= 0, got {n}")
    quota = p.p * n
    counts = np.floor(quota).astype(np.int64)
    leftover = int(n - counts.sum())
    if leftover > 0:
        remainders = quota - counts
        # stable sort on -remainder keeps ascending class index on ties
        order = np.argsort(-remainders, kind="stable")
        counts[order[:leftover]] += 1
    return CountVector(counts)


def compute_centroids(ds: LabeledDataset) -> Centroids:
    """Arithmetic mean of the feature rows of each class.

    Empty classes are flagged absent and get a zero row instead of raising,
    so degenerate folds do not abort pipelines.
    """
    x = ds.features.data
    mu = np.zeros((ds.num_classes, ds.features.d), dtype=np.float64)
    present = np.zeros(ds.num_classes, dtype=bool)
    for c in range(ds.num_classes):
        rows = x[ds.labels == c]
        if rows.shape[0]:
            mu[c] = rows.mean(axis=0)
            present[c] = True
    return Centroids(mu, present)
