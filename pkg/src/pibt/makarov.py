"""Makarov bounds on the probability an individual benefits from treatment.

Given marginal CDFs F1, F0 for the two potential outcomes and a threshold
delta, the sharp distribution-free bounds on P(Y(1) - Y(0) > delta) are

    lower = max(-inf_y G(y), 0),   upper = 1 - max(sup_y G(y), 0),

where G(y) = F1(y + delta/2) - F0(y - delta/2). For empirical inputs G is
piecewise constant, so the extrema over the whole real line are attained
exactly on the finite breakpoint set (taking both one-sided limits at
each breakpoint, with G = 0 at +-infinity). For analytic inputs the
extrema are approximated by a dense grid refined with golden-section
search; that path only feeds simulation oracles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np

from .ecdf import EmpiricalCdf
from .errors import InvalidInputError

__all__ = [
    "PibtBoundPair",
    "GEvaluator",
    "GridSpec",
    "pibt_bounds",
    "pibt_bounds_curve",
    "pibt_bounds_ratio",
    "population_bounds",
]

CdfHandle = Union[EmpiricalCdf, Callable[[np.ndarray], np.ndarray]]


@dataclass(frozen=True)
class PibtBoundPair:
    """Lower/upper bound on P(Y(1) - Y(0) > delta) at one threshold."""

    delta: float
    lower: float
    upper: float
    provenance: str  # "estimated" or "population"

    def __post_init__(self):
        if self.provenance not in ("estimated", "population"):
            raise InvalidInputError(f"unknown provenance {self.provenance!r}")
        if not (-1e-12 <= self.lower <= self.upper + 1e-12 <= 1.0 + 2e-12):
            raise InvalidInputError(
                f"bounds ({self.lower}, {self.upper}) violate 0 <= lower <= upper <= 1"
            )


@dataclass(frozen=True)
class GEvaluator:
    """The difference G(y) = F1(y + delta/2) - F0(y - delta/2).

    Works for empirical and analytic CDF handles; values lie in [-1, 1].
    """

    f1: CdfHandle
    f0: CdfHandle
    delta: float

    def _eval(self, handle: CdfHandle, y):
        if isinstance(handle, EmpiricalCdf):
            return handle.eval(y)
        return handle(y)

    def value(self, y):
        h = 0.5 * self.delta
        return np.asarray(self._eval(self.f1, np.asarray(y) + h)) - np.asarray(
            self._eval(self.f0, np.asarray(y) - h)
        )

    def value_left(self, y):
        """Left limit at y; differs from value(y) only for empirical handles."""
        h = 0.5 * self.delta
        y = np.asarray(y)
        lhs = (
            self.f1.left_limit(y + h)
            if isinstance(self.f1, EmpiricalCdf)
            else self._eval(self.f1, y + h)
        )
        rhs = (
            self.f0.left_limit(y - h)
            if isinstance(self.f0, EmpiricalCdf)
            else self._eval(self.f0, y - h)
        )
        return np.asarray(lhs) - np.asarray(rhs)


def _extrema_over_breakpoints(f1: EmpiricalCdf, f0: EmpiricalCdf, delta: float):
    """Exact sup and inf of G over the real line.

    Breakpoints in y are {v - delta/2 : v a jump of f1} and
    {v + delta/2 : v a jump of f0}. At candidates coming from a CDF's own
    jumps that CDF is counted at the jump value itself, avoiding the
    float round trip (v - h) + h != v; the other CDF is counted at the
    shifted point. Both one-sided limits are taken, and the value 0 at
    +-infinity is always a candidate.
    """
    v1, v0 = f1.sorted_values, f0.sorted_values
    n1, n0 = v1.size, v0.size
    h = 0.5 * delta

    # Candidates from jumps of f1: y = v1 - h, so F1 is counted at v1
    # exactly and F0 at (v1 - h) - h.
    own1_right = np.searchsorted(v1, v1, side="right") / n1
    own1_left = np.searchsorted(v1, v1, side="left") / n1
    other0 = (v1 - h) - h
    oth0_right = np.searchsorted(v0, other0, side="right") / n0
    oth0_left = np.searchsorted(v0, other0, side="left") / n0

    # Candidates from jumps of f0: y = v0 + h.
    own0_right = np.searchsorted(v0, v0, side="right") / n0
    own0_left = np.searchsorted(v0, v0, side="left") / n0
    other1 = (v0 + h) + h
    oth1_right = np.searchsorted(v1, other1, side="right") / n1
    oth1_left = np.searchsorted(v1, other1, side="left") / n1

    g = np.concatenate(
        [
            own1_right - oth0_right,
            own1_left - oth0_left,
            oth1_right - own0_right,
            oth1_left - own0_left,
            [0.0],  # G at +-infinity
        ]
    )
    return float(g.max()), float(g.min())


def _pair_from_extrema(sup_g: float, inf_g: float, delta: float, provenance: str) -> PibtBoundPair:
    lower = max(0.0, -min(inf_g, 0.0))
    upper = 1.0 - max(sup_g, 0.0)
    return PibtBoundPair(delta=float(delta), lower=lower, upper=upper, provenance=provenance)


def pibt_bounds(f1: EmpiricalCdf, f0: EmpiricalCdf, delta: float) -> PibtBoundPair:
    """Plug-in Makarov bounds from two empirical CDFs, exact at breakpoints."""
    if not isinstance(f1, EmpiricalCdf) or not isinstance(f0, EmpiricalCdf):
        raise InvalidInputError("pibt_bounds expects empirical CDFs; see population_bounds")
    if f1.n == 0 or f0.n == 0:
        raise InvalidInputError("empirical CDFs must be nonempty")
    if not math.isfinite(delta):
        raise InvalidInputError(f"delta must be finite, got {delta}")
    sup_g, inf_g = _extrema_over_breakpoints(f1, f0, delta)
    return _pair_from_extrema(sup_g, inf_g, delta, "estimated")


def pibt_bounds_curve(
    f1: EmpiricalCdf, f0: EmpiricalCdf, delta_grid: Sequence[float]
) -> list[PibtBoundPair]:
    """Bounds along an ascending threshold grid.

    Both coordinates are nonincreasing in delta because G is pointwise
    nondecreasing in delta.
    """
    grid = np.asarray(delta_grid, dtype=float).ravel()
    if grid.size == 0:
        raise InvalidInputError("delta grid must be nonempty")
    if np.any(np.diff(grid) < 0):
        raise InvalidInputError("delta grid must be sorted ascending")
    return [pibt_bounds(f1, f0, float(d)) for d in grid]


def pibt_bounds_ratio(
    f1_log: EmpiricalCdf, f0_log: EmpiricalCdf, delta_tilde: float
) -> PibtBoundPair:
    """Bounds on P(Y(1)/Y(0) > delta_tilde) for strictly positive outcomes.

    Inputs are empirical CDFs of the logged outcomes; the bound is the
    difference-scale bound at log(delta_tilde).
    """
    if not delta_tilde > 0.0:
        raise InvalidInputError(f"ratio threshold must be positive, got {delta_tilde}")
    return pibt_bounds(f1_log, f0_log, math.log(delta_tilde))


@dataclass(frozen=True)
class GridSpec:
    """Search window and resolution for analytic-CDF extrema."""

    lo: float
    hi: float
    points: int = 4001

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi) and self.lo < self.hi):
            raise InvalidInputError(f"need finite lo < hi, got ({self.lo}, {self.hi})")
        if self.points < 3:
            raise InvalidInputError("grid needs at least 3 points")


def _golden_section(fun, lo: float, hi: float, maximize: bool, iters: int = 80) -> float:
    sign = 1.0 if maximize else -1.0
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = sign * fun(c), sign * fun(d)
    for _ in range(iters):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = sign * fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = sign * fun(d)
        if b - a < 1e-12 * max(1.0, abs(a) + abs(b)):
            break
    x = 0.5 * (a + b)
    return float(sign * max(fc, fd, sign * fun(x)))


def population_bounds(
    f1: Callable[[np.ndarray], np.ndarray],
    f0: Callable[[np.ndarray], np.ndarray],
    delta: float,
    optimizer_grid: GridSpec,
) -> PibtBoundPair:
    """Numerical Makarov bounds for analytic marginal CDFs.

    Extrema of G are located on a dense grid and refined by golden-section
    search near the best cells. Accuracy is grid-dependent; this path is
    meant for oracles and simulation truth, not data inference.
    """
    g = GEvaluator(f1, f0, float(delta))
    ys = np.linspace(optimizer_grid.lo, optimizer_grid.hi, optimizer_grid.points)
    for handle, shift in ((f1, 0.5 * delta), (f0, -0.5 * delta)):
        vals = np.asarray(handle(ys + shift), dtype=float)
        if np.any(np.diff(vals) < -1e-9) or vals.min() < -1e-9 or vals.max() > 1.0 + 1e-9:
            raise InvalidInputError("CDF callable is not monotone into [0, 1] on the grid")
    gv = np.asarray(g.value(ys), dtype=float)
    scalar_g = lambda y: float(g.value(np.asarray([y]))[0])

    k_max = int(np.argmax(gv))
    k_min = int(np.argmin(gv))
    lo_max = ys[max(k_max - 1, 0)]
    hi_max = ys[min(k_max + 1, ys.size - 1)]
    lo_min = ys[max(k_min - 1, 0)]
    hi_min = ys[min(k_min + 1, ys.size - 1)]
    sup_g = max(float(gv.max()), _golden_section(scalar_g, lo_max, hi_max, maximize=True), 0.0)
    inf_g = min(float(gv.min()), _golden_section(scalar_g, lo_min, hi_min, maximize=False), 0.0)
    return _pair_from_extrema(sup_g, inf_g, delta, "population")
