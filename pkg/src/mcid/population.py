"""Exact minimization of the empirical 0-1 risk over a scalar threshold.

A threshold ``c`` predicts +1 for every score ``x >= c`` (sign(0) = +1).  The
empirical risk is piecewise constant in ``c`` and only changes when ``c``
crosses a data point, so the exact global minimum is found by scoring each
sorted unique score plus one sentinel above the maximum (which encodes the
predict-all-negative rule).  Risks come from prefix sums over the sorted
order, never from an O(n^2) scan.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data_model import Dataset
from .errors import BadWeight, EmptyDataset, EmptyNegativeClass, RootNotBracketed
from .losses import PopulationSpec

_TIE_TOL = 1e-12


@dataclass(frozen=True)
class ThresholdFit:
    """A fitted scalar threshold with its full candidate diagnostics.

    ``c_hat`` is the largest candidate attaining the minimal risk (the
    conservative convention); ``minimizer_set`` lists every minimizing
    candidate.  ``candidates``/``candidate_risks`` expose the whole search
    path.  ``empirical_risk`` is the mode's own objective recomputed at
    ``c_hat``: plain risk, weighted risk, or the type-II error rate.
    """

    c_hat: float
    empirical_risk: float
    minimizer_set: tuple[float, ...]
    mode: str
    weight_w: float = 0.5
    alpha: float | None = None
    type_i_error: float | None = None
    type_ii_error: float | None = None
    candidates: tuple[float, ...] = field(default=(), repr=False)
    candidate_risks: tuple[float, ...] = field(default=(), repr=False)

    def predict(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.where(x >= self.c_hat, 1, -1)


def _candidate_counts(train: Dataset):
    """Sorted unique candidates plus sentinel, with per-candidate counts of
    misclassified positives (below c) and misclassified negatives (at/above c)."""
    if len(train) == 0:
        raise EmptyDataset("cannot fit a threshold on an empty dataset")
    order = np.argsort(train.x, kind="stable")
    xs = train.x[order]
    ys = train.y[order]
    uniq, first = np.unique(xs, return_index=True)
    n_pos = int(np.sum(ys == 1))
    n_neg = len(train) - n_pos
    pos_prefix = np.concatenate(([0], np.cumsum(ys == 1)))  # positives among first k
    pos_below = pos_prefix[first]  # positives strictly below each candidate
    neg_below = first - pos_below
    neg_at_or_above = n_neg - neg_below
    candidates = np.append(uniq, uniq[-1] + 1.0)
    fn = np.append(pos_below, n_pos).astype(float)  # positives predicted -1
    fp = np.append(neg_at_or_above, 0).astype(float)  # negatives predicted +1
    return candidates, fn, fp, n_pos, n_neg


def _select(candidates, risks):
    best = risks.min()
    ties = risks <= best + _TIE_TOL
    minimizers = candidates[ties]
    return float(minimizers[-1]), minimizers, best


def fit_population(train: Dataset) -> ThresholdFit:
    """Minimize the empirical risk (1/2n) sum(1 - y_i sign(x_i - c)) exactly."""
    candidates, fn, fp, _, _ = _candidate_counts(train)
    n = len(train)
    risks = (fn + fp) / n
    c_hat, minimizers, _ = _select(candidates, risks)
    at = int(np.searchsorted(candidates, c_hat))
    return ThresholdFit(
        c_hat=c_hat,
        empirical_risk=float(risks[at]),
        minimizer_set=tuple(float(v) for v in minimizers),
        mode="unweighted",
        candidates=tuple(float(v) for v in candidates),
        candidate_risks=tuple(float(v) for v in risks),
    )


def fit_weighted(train: Dataset, w: float) -> ThresholdFit:
    """Minimize the weighted risk with cost ``w`` per missed positive and
    ``1 - w`` per false positive; ``w < 1/2`` biases the threshold upward."""
    if not 0.0 < w < 1.0:
        raise BadWeight(f"w={w} must lie strictly inside (0, 1)")
    candidates, fn, fp, _, _ = _candidate_counts(train)
    n = len(train)
    risks = (w * fn + (1.0 - w) * fp) / n
    c_hat, minimizers, _ = _select(candidates, risks)
    at = int(np.searchsorted(candidates, c_hat))
    return ThresholdFit(
        c_hat=c_hat,
        empirical_risk=float(risks[at]),
        minimizer_set=tuple(float(v) for v in minimizers),
        mode="weighted",
        weight_w=float(w),
        candidates=tuple(float(v) for v in candidates),
        candidate_risks=tuple(float(v) for v in risks),
    )


def fit_neyman_pearson(train: Dataset, alpha: float) -> ThresholdFit:
    """Minimize the empirical type-II error subject to type-I error <= alpha.

    The type-I error R0(c) is the fraction of negatives at or above ``c`` and
    is nonincreasing in ``c``, while the type-II error R1(c) is nondecreasing,
    so the smallest feasible candidate is optimal.  Feasibility always holds:
    the sentinel threshold achieves R0 = 0.
    """
    if not 0.0 < alpha < 1.0:
        raise BadWeight(f"alpha={alpha} must lie strictly inside (0, 1)")
    candidates, fn, fp, n_pos, n_neg = _candidate_counts(train)
    if n_neg == 0:
        raise EmptyNegativeClass("type-I error undefined without negative samples")
    r0 = fp / n_neg
    r1 = fn / n_pos if n_pos else np.zeros_like(fn)
    feasible = np.flatnonzero(r0 <= alpha + _TIE_TOL)
    at = int(feasible[0])
    return ThresholdFit(
        c_hat=float(candidates[at]),
        empirical_risk=float(r1[at]),
        minimizer_set=(float(candidates[at]),),
        mode="neyman_pearson",
        alpha=float(alpha),
        type_i_error=float(r0[at]),
        type_ii_error=float(r1[at]),
        candidates=tuple(float(v) for v in candidates),
        candidate_risks=tuple(float(v) for v in r1),
    )


def ideal_mcid(spec: PopulationSpec, w: float = 0.5) -> float:
    """Root of p(c) = 1 - w by bisection to 1e-10 (w = 1/2 gives p(c) = 1/2)."""
    if not 0.0 < w < 1.0:
        raise BadWeight(f"w={w} must lie strictly inside (0, 1)")
    target = 1.0 - w
    lo, hi = spec.a, spec.b
    flo = float(spec.p(lo)) - target
    fhi = float(spec.p(hi)) - target
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo > 0.0 or fhi < 0.0:
        raise RootNotBracketed(f"p(c) = {target} has no root inside [{lo}, {hi}]")
    while hi - lo > 1e-10:
        mid = 0.5 * (lo + hi)
        fmid = float(spec.p(mid)) - target
        if fmid == 0.0:
            return mid
        if fmid < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
