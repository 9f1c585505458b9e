"""Core datatypes: labeled samples, immutable datasets, train/test splits.

Labels live in {-1, +1}.  Parsers may map {0, 1} onto {-1, +1} only when
explicitly asked to (see :mod:`mcid.cli`); nothing in this module remaps
labels silently.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BadSplitSize,
    EmptyDataset,
    MixedCovariateDim,
    NonBinaryLabel,
    NonFiniteValue,
)
from .rng import make_rng


@dataclass(frozen=True)
class LabeledSample:
    """One observation: diagnostic score ``x``, outcome ``y``, covariates ``z``."""

    x: float
    y: int
    z: tuple[float, ...] | None = None


class Dataset:
    """Immutable column store of samples sharing one covariate dimension.

    ``x`` is the score vector, ``y`` the +-1 outcome vector and ``z`` an
    optional (n, p) covariate matrix.  Arrays are copied and frozen, so a
    dataset is safe to share across concurrent readers.
    """

    __slots__ = ("x", "y", "z")

    def __init__(self, x, y, z=None):
        x, y, z = _as_columns(x, y, z)
        report = validate_columns(x, y, z)
        if report.errors:
            raise report.first_error()
        self._bind(x, y, z)

    @classmethod
    def unchecked(cls, x, y, z=None) -> "Dataset":
        """Build without validation (used to inspect suspect data)."""
        ds = object.__new__(cls)
        ds._bind(*_as_columns(x, y, z))
        return ds

    @classmethod
    def from_samples(cls, samples) -> "Dataset":
        samples = list(samples)
        x = [s.x for s in samples]
        y = [s.y for s in samples]
        zs = [s.z for s in samples]
        if any(z is not None for z in zs):
            if any(z is None for z in zs):
                raise MixedCovariateDim("some samples carry covariates, others do not")
            return cls(x, y, zs)
        return cls(x, y, None)

    def _bind(self, x, y, z):
        for arr in (x, y) + ((z,) if z is not None else ()):
            arr.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "z", z)

    def __len__(self) -> int:
        return self.x.shape[0]

    @property
    def covariate_dim(self) -> int:
        return 0 if self.z is None else self.z.shape[1]

    @property
    def samples(self) -> list[LabeledSample]:
        if self.z is None:
            return [LabeledSample(float(a), int(b)) for a, b in zip(self.x, self.y)]
        return [
            LabeledSample(float(a), int(b), tuple(float(v) for v in row))
            for a, b, row in zip(self.x, self.y, self.z)
        ]

    def subset(self, indices) -> "Dataset":
        idx = np.asarray(indices, dtype=int)
        z = None if self.z is None else self.z[idx]
        return Dataset(self.x[idx], self.y[idx], z)

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        same_z = (self.z is None) == (other.z is None) and (
            self.z is None or np.array_equal(self.z, other.z)
        )
        return np.array_equal(self.x, other.x) and np.array_equal(self.y, other.y) and same_z


def _as_columns(x, y, z):
    x = np.asarray(x, dtype=float).copy()
    y = np.asarray(y).copy()
    if y.dtype.kind == "f" and np.all(np.isfinite(y)):
        rounded = np.rint(y)
        if np.array_equal(rounded, y):
            y = rounded
    y = y.astype(int, copy=False) if y.dtype.kind in "iu" else y
    if z is not None:
        z = np.asarray(z, dtype=float)
        if z.ndim == 1:
            z = z.reshape(-1, 1)
        z = z.copy()
    return x, y, z


@dataclass
class ValidationReport:
    """Outcome of checking a dataset: counts plus every problem found."""

    n: int
    label_counts: dict
    covariate_dim: int
    duplicate_x_count: int
    nan_findings: list = field(default_factory=list)
    errors: list = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not self.errors

    def first_error(self) -> Exception:
        kind, msg = self.errors[0]
        return kind(msg)


def validate_columns(x, y, z=None) -> ValidationReport:
    """Check raw columns and report label counts, NaNs and contract breaches.

    Never raises and never mutates its inputs; every problem is listed in
    ``errors`` as an ``(exception class, message)`` pair.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y)
    errors = []
    nan_findings = []
    n = x.shape[0]
    if n == 0:
        errors.append((EmptyDataset, "dataset has no samples"))
    if y.shape[0] != n:
        errors.append((MixedCovariateDim, f"{n} scores but {y.shape[0]} labels"))

    bad_x = ~np.isfinite(x)
    if bad_x.any():
        rows = np.flatnonzero(bad_x)
        nan_findings.extend(("x", int(i)) for i in rows)
        errors.append((NonFiniteValue, f"non-finite x at rows {rows.tolist()}"))

    label_counts = {}
    if y.size:
        if y.dtype.kind == "f":
            bad_y = ~np.isfinite(y)
            if bad_y.any():
                rows = np.flatnonzero(bad_y)
                nan_findings.extend(("y", int(i)) for i in rows)
                errors.append((NonFiniteValue, f"non-finite y at rows {rows.tolist()}"))
        vals, counts = np.unique(y[np.isfinite(y.astype(float))], return_counts=True)
        label_counts = {int(v): int(c) for v, c in zip(vals, counts) if v in (-1, 1)}
        offending = [v for v in vals if v not in (-1, 1)]
        if offending:
            errors.append((NonBinaryLabel, f"labels outside {{-1, +1}}: {offending}"))

    covariate_dim = 0
    if z is not None:
        z = np.asarray(z, dtype=float)
        if z.ndim == 1:
            z = z.reshape(-1, 1)
        if z.shape[0] != n:
            errors.append((MixedCovariateDim, f"{n} scores but {z.shape[0]} covariate rows"))
        covariate_dim = z.shape[1]
        bad_z = ~np.isfinite(z)
        if bad_z.any():
            rows = sorted(set(np.nonzero(bad_z)[0].tolist()))
            nan_findings.extend(("z", int(i)) for i in rows)
            errors.append((NonFiniteValue, f"non-finite covariates at rows {rows}"))

    finite_x = x[np.isfinite(x)]
    duplicate_x = int(finite_x.size - np.unique(finite_x).size)
    return ValidationReport(
        n=n,
        label_counts=label_counts,
        covariate_dim=covariate_dim,
        duplicate_x_count=duplicate_x,
        nan_findings=nan_findings,
        errors=errors,
    )


def validate(dataset: Dataset) -> ValidationReport:
    """Report on a dataset (possibly built via :meth:`Dataset.unchecked`)."""
    return validate_columns(dataset.x, dataset.y, dataset.z)


@dataclass(frozen=True)
class SplitPlan:
    """Disjoint train/test index sets, reproducible from ``seed``."""

    train_indices: tuple[int, ...]
    test_indices: tuple[int, ...]
    seed: int


def split(dataset: Dataset, n_train: int, seed: int) -> SplitPlan:
    """Uniformly random partition into ``n_train`` train and the rest test."""
    n = len(dataset)
    if not 0 < n_train < n:
        raise BadSplitSize(f"n_train={n_train} must satisfy 0 < n_train < {n}")
    perm = make_rng(seed).permutation(n)
    return SplitPlan(
        train_indices=tuple(int(i) for i in perm[:n_train]),
        test_indices=tuple(int(i) for i in perm[n_train:]),
        seed=int(seed),
    )


def apply_split(dataset: Dataset, plan: SplitPlan) -> tuple[Dataset, Dataset]:
    return dataset.subset(plan.train_indices), dataset.subset(plan.test_indices)
