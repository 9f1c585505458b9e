"""Kernel functions, Gram matrices, and the median-heuristic bandwidth."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateCovariates, DimensionMismatch

MEDIAN = "median"


@dataclass(frozen=True)
class KernelSpec:
    """Kernel choice.  For the Gaussian kernel, ``sigma2`` may be the string
    ``"median"`` (resolve from the training covariates, the default) or a
    positive number.  ``squared_median`` switches the heuristic to the median
    of squared distances instead of plain distances."""

    kind: str  # "linear" | "gaussian"
    sigma2: float | str | None = None
    squared_median: bool = False

    def __post_init__(self):
        if self.kind not in ("linear", "gaussian"):
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "gaussian":
            s = self.sigma2 if self.sigma2 is not None else MEDIAN
            object.__setattr__(self, "sigma2", s)
            if s != MEDIAN and not (isinstance(s, (int, float)) and s > 0):
                raise ValueError("sigma2 must be positive or 'median'")
        elif self.sigma2 is not None:
            raise ValueError("linear kernel takes no sigma2")

    @property
    def resolved(self) -> bool:
        return self.kind == "linear" or isinstance(self.sigma2, (int, float))


def linear_kernel() -> KernelSpec:
    return KernelSpec("linear")


def gaussian_kernel(sigma2: float | str = MEDIAN, squared_median: bool = False) -> KernelSpec:
    return KernelSpec("gaussian", sigma2, squared_median)


def resolve_bandwidth(covariates, squared: bool = False) -> float:
    """Median of pairwise Euclidean distances among the rows of ``covariates``
    (squared distances when ``squared``); the result is used as sigma^2."""
    z = np.asarray(covariates, dtype=float)
    if z.ndim == 1:
        z = z.reshape(-1, 1)
    n = z.shape[0]
    if n < 2:
        raise DegenerateCovariates("need at least two covariate vectors")
    sq = _pairwise_sq_dists(z)
    iu = np.triu_indices(n, k=1)
    d = sq[iu]
    if not squared:
        d = np.sqrt(d)
    med = float(np.median(d))
    if med <= 0.0:
        raise DegenerateCovariates("median pairwise distance is zero")
    return med


def resolve(spec: KernelSpec, covariates) -> KernelSpec:
    """Return a spec with any median-heuristic bandwidth made concrete."""
    if spec.kind == "gaussian" and spec.sigma2 == MEDIAN:
        s2 = resolve_bandwidth(covariates, squared=spec.squared_median)
        return KernelSpec("gaussian", s2, spec.squared_median)
    return spec


def _pairwise_sq_dists(z: np.ndarray) -> np.ndarray:
    sq = np.sum(z * z, axis=1)
    d = sq[:, None] + sq[None, :] - 2.0 * (z @ z.T)
    np.maximum(d, 0.0, out=d)
    np.fill_diagonal(d, 0.0)
    return d


def kernel_eval(spec: KernelSpec, z1, z2) -> float:
    """K(z1, z2) for a resolved spec."""
    z1 = np.asarray(z1, dtype=float).ravel()
    z2 = np.asarray(z2, dtype=float).ravel()
    if z1.shape != z2.shape:
        raise DimensionMismatch(f"covariate dims differ: {z1.shape[0]} vs {z2.shape[0]}")
    if spec.kind == "linear":
        return float(z1 @ z2)
    _require_resolved(spec)
    d2 = float(np.sum((z1 - z2) ** 2))
    return float(np.exp(-d2 / (2.0 * spec.sigma2)))


@dataclass(frozen=True)
class KernelMatrix:
    """Symmetric Gram matrix over ``anchors`` under a resolved spec."""

    values: np.ndarray
    anchors: np.ndarray
    spec: KernelSpec

    def __post_init__(self):
        self.values.setflags(write=False)
        self.anchors.setflags(write=False)

    @property
    def n(self) -> int:
        return self.values.shape[0]


def gram(spec: KernelSpec, anchors) -> KernelMatrix:
    """Build the Gram matrix; the upper triangle is computed once and
    mirrored, so the result is exactly symmetric."""
    z = np.asarray(anchors, dtype=float)
    if z.ndim == 1:
        z = z.reshape(-1, 1)
    spec = resolve(spec, z)
    if spec.kind == "linear":
        k = z @ z.T
        k = np.triu(k) + np.triu(k, k=1).T
    else:
        _require_resolved(spec)
        k = np.exp(-_pairwise_sq_dists(z) / (2.0 * spec.sigma2))
        np.fill_diagonal(k, 1.0)
        k = np.triu(k) + np.triu(k, k=1).T
    return KernelMatrix(values=k, anchors=z.copy(), spec=spec)


def cross_gram(spec: KernelSpec, anchors, queries) -> np.ndarray:
    """(m, n) matrix of K(query_j, anchor_i) values."""
    _require_resolved(spec)
    a = np.asarray(anchors, dtype=float)
    q = np.asarray(queries, dtype=float)
    if a.ndim == 1:
        a = a.reshape(-1, 1)
    if q.ndim == 1:
        q = q.reshape(-1, 1)
    if a.shape[1] != q.shape[1]:
        raise DimensionMismatch(f"covariate dims differ: {a.shape[1]} vs {q.shape[1]}")
    if spec.kind == "linear":
        return q @ a.T
    d2 = (
        np.sum(q * q, axis=1)[:, None]
        + np.sum(a * a, axis=1)[None, :]
        - 2.0 * (q @ a.T)
    )
    np.maximum(d2, 0.0, out=d2)
    return np.exp(-d2 / (2.0 * spec.sigma2))


def _require_resolved(spec: KernelSpec) -> None:
    if not spec.resolved:
        raise ValueError("bandwidth not resolved; call resolve() with training covariates")
