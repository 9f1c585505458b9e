"""Margin losses, their difference-of-convex split, and population risk oracles.

Margins use the convention sign(u) = +1 for u >= 0, so the zero-one loss of a
zero margin is 0.  The ramp loss is the working surrogate for training:

    ramp(delta, u) = min((delta - u)_+ / delta, 1)

a capped linear ramp worth 1 for u <= 0, falling to 0 at u >= delta.  It
admits the exact convex split

    ramp(delta, u) = (delta - u)_+ / delta - (-u)_+ / delta

which is what the trainer's difference-of-convex iterations consume.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NoBracketFound, QuadratureFailure

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class LossKind:
    """A named margin loss; ``delta`` is only meaningful for the ramp."""

    name: str
    delta: float | None = None

    def __post_init__(self):
        if self.name == "ramp":
            if self.delta is None or not self.delta > 0:
                raise ValueError("ramp loss requires delta > 0")
        elif self.delta is not None:
            raise ValueError(f"{self.name} loss takes no delta")


ZERO_ONE = LossKind("zero_one")
HINGE = LossKind("hinge")
LOGISTIC = LossKind("logistic")
CAPPED_HINGE = LossKind("capped_hinge")


def ramp(delta: float) -> LossKind:
    return LossKind("ramp", float(delta))


def loss_value(kind: LossKind, u):
    """Evaluate the loss at margin ``u`` (scalar or array)."""
    u = np.asarray(u, dtype=float)
    if kind.name == "zero_one":
        out = np.where(u >= 0.0, 0.0, 1.0)
    elif kind.name == "hinge":
        out = np.maximum(1.0 - u, 0.0)
    elif kind.name == "logistic":
        # log1p(exp(-u)) computed stably for large |u|
        out = np.logaddexp(0.0, -u)
    elif kind.name == "capped_hinge":
        out = np.minimum(np.maximum(1.0 - u, 0.0), 1.0)
    elif kind.name == "ramp":
        out = np.minimum(np.maximum(kind.delta - u, 0.0) / kind.delta, 1.0)
    else:
        raise ValueError(f"unknown loss {kind.name}")
    return out if out.ndim else float(out)


def loss_subgradient(kind: LossKind, u):
    """A valid subgradient selection; 0 on the capped arm at its kink, the
    one-sided slope at the hinge-arm kink.  Trainers must not rely on values
    exactly at kinks."""
    u = np.asarray(u, dtype=float)
    if kind.name == "zero_one":
        out = np.zeros_like(u)
    elif kind.name == "hinge":
        out = np.where(u <= 1.0, -1.0, 0.0)
    elif kind.name == "logistic":
        out = -np.exp(-np.logaddexp(0.0, u))  # -sigmoid(-u)
    elif kind.name == "capped_hinge":
        out = np.where((u > 0.0) & (u <= 1.0), -1.0, 0.0)
    elif kind.name == "ramp":
        out = np.where((u > 0.0) & (u <= kind.delta), -1.0 / kind.delta, 0.0)
    else:
        raise ValueError(f"unknown loss {kind.name}")
    return out if out.ndim else float(out)


def ramp_dc_parts(delta: float, u):
    """Convex split of the ramp loss: returns ((delta-u)_+/delta, (-u)_+/delta).

    The difference of the two terms equals ``loss_value(ramp(delta), u)`` to
    machine precision for every finite margin.  Broadcasts over arrays.
    """
    delta = np.asarray(delta, dtype=float)
    if np.any(delta <= 0):
        raise ValueError("delta must be positive")
    u = np.asarray(u, dtype=float)
    s1 = np.maximum(delta - u, 0.0) / delta
    s2 = np.maximum(-u, 0.0) / delta
    if s1.ndim:
        return s1, s2
    return float(s1), float(s2)


def _loss_kinks(kind: LossKind) -> tuple[float, ...]:
    if kind.name == "hinge":
        return (1.0,)
    if kind.name == "capped_hinge":
        return (0.0, 1.0)
    if kind.name == "ramp":
        return (0.0, kind.delta)
    return ()


@dataclass(frozen=True)
class PopulationSpec:
    """A score distribution on [a, b] with response curve p(x) = P(Y=1 | X=x).

    ``density`` defaults to the uniform density on [a, b].  ``p`` must be
    nondecreasing and valued in [0, 1]; both are spot-checked on a grid at
    construction time.
    """

    a: float
    b: float
    p: callable
    density: callable = None
    quad_tol: float = 1e-8

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b) and self.a < self.b):
            raise ValueError("need finite a < b")
        grid = np.linspace(self.a, self.b, 101)
        vals = np.array([float(self.p(x)) for x in grid])
        if np.any(vals < -1e-12) or np.any(vals > 1.0 + 1e-12):
            raise ValueError("p(x) must map into [0, 1]")
        if np.any(np.diff(vals) < -1e-12):
            raise ValueError("p(x) must be nondecreasing")

    def pdf(self, x: float) -> float:
        if self.density is None:
            return 1.0 / (self.b - self.a)
        return float(self.density(x))


def _adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, depth):
    m = 0.5 * (a + b)
    lm = 0.5 * (a + m)
    rm = 0.5 * (m + b)
    flm = f(lm)
    frm = f(rm)
    left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
    right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
    err = left + right - whole
    if abs(err) <= 15.0 * tol:
        return left + right + err / 15.0
    if depth <= 0:
        raise QuadratureFailure(f"tolerance {tol:g} unreachable on [{a:g}, {b:g}]")
    half = 0.5 * tol
    return _adaptive_simpson(f, a, m, fa, flm, fm, left, half, depth - 1) + _adaptive_simpson(
        f, m, b, fm, frm, fb, right, half, depth - 1
    )


def integrate(f, a, b, tol, points=(), max_depth=60):
    """Adaptive Simpson integration of ``f`` over [a, b].

    ``points`` are interior kink locations; they become panel boundaries so
    every panel is smooth.  Raises :class:`QuadratureFailure` when the
    requested absolute tolerance cannot be reached.
    """
    if b <= a:
        return 0.0
    cuts = [a] + sorted(p for p in points if a < p < b) + [b]
    total = 0.0
    span = b - a
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        if hi <= lo:
            continue
        ftol = max(tol * (hi - lo) / span, 1e-300)
        flo, fmid, fhi = f(lo), f(0.5 * (lo + hi)), f(hi)
        whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi)
        total += _adaptive_simpson(f, lo, hi, flo, fmid, fhi, whole, ftol, max_depth)
    return total


def population_risk(kind: LossKind, spec: PopulationSpec, c: float) -> float:
    """E[L(Y (X - c))] under ``spec`` via adaptive quadrature.

    The integrand splits as p(x) L(x - c) + (1 - p(x)) L(c - x) weighted by
    the score density; loss kinks (shifted by c) become panel boundaries.
    """
    if not math.isfinite(c):
        raise ValueError("threshold must be finite")
    a, b, tol = spec.a, spec.b, spec.quad_tol
    if kind.name == "zero_one":
        # Jump at x = c: integrate the two smooth branches directly.
        mid = min(max(c, a), b)
        left = integrate(lambda x: spec.p(x) * spec.pdf(x), a, mid, tol)
        right = integrate(lambda x: (1.0 - spec.p(x)) * spec.pdf(x), mid, b, tol)
        return left + right

    def integrand(x):
        pl = spec.p(x)
        return (
            pl * loss_value(kind, x - c) + (1.0 - pl) * loss_value(kind, c - x)
        ) * spec.pdf(x)

    kinks = _loss_kinks(kind)
    pts = [c + k for k in kinks] + [c - k for k in kinks]
    return integrate(integrand, a, b, tol, points=pts)


def surrogate_minimizer(kind: LossKind, spec: PopulationSpec, grid_size: int = 241) -> float:
    """argmin_c of the population risk, located by a coarse grid bracket and
    refined by golden-section search to about 1e-6 in c."""
    grid = np.linspace(spec.a, spec.b, grid_size)
    vals = np.array([population_risk(kind, spec, c) for c in grid])
    i = int(np.argmin(vals))
    if i == 0 or i == grid_size - 1:
        raise NoBracketFound(f"risk minimum for {kind.name} lies at the search boundary")
    lo, hi = grid[i - 1], grid[i + 1]
    x1 = hi - _GOLDEN * (hi - lo)
    x2 = lo + _GOLDEN * (hi - lo)
    f1 = population_risk(kind, spec, x1)
    f2 = population_risk(kind, spec, x2)
    while hi - lo > 1e-6:
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _GOLDEN * (hi - lo)
            f1 = population_risk(kind, spec, x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _GOLDEN * (hi - lo)
            f2 = population_risk(kind, spec, x2)
    return float(0.5 * (lo + hi))


# Fixed demonstration instance: response curve strictly convex below the
# zero-one threshold (steep exponential onset) and linear above it with a
# gentle slope.  On this instance the hinge, logistic and capped-hinge
# population minimizers all sit strictly above the zero-one threshold, while
# the ramp minimizer approaches it as delta shrinks.
_DEMO_KAPPA = 2.0
_DEMO_SLOPE = 1.0 / 6.0


def surrogate_gap_demo_spec() -> PopulationSpec:
    """Uniform scores on [-3, 3]; p(c*) = 1/2 at the threshold c* = 0."""

    def p(x):
        if x < 0.0:
            return 0.5 * math.exp(_DEMO_KAPPA * x)
        return 0.5 + _DEMO_SLOPE * x

    return PopulationSpec(a=-3.0, b=3.0, p=p)


DEMO_THRESHOLD = 0.0
