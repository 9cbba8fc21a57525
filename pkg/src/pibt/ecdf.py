"""Empirical CDFs with exact step-function semantics, plus the one-sample
DKW margin.

Values are stored with duplicates so every jump height is an exact
multiple of 1/n; evaluation is pure integer counting via binary search,
never interpolation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError

__all__ = ["EmpiricalCdf", "build_ecdf", "dkw_margin"]


@dataclass(frozen=True)
class EmpiricalCdf:
    """Right-continuous empirical CDF of a finite sample.

    ``sorted_values`` keeps ties, so jump heights are multiples of 1/n.
    Instances are immutable and safe to share across threads.
    """

    sorted_values: np.ndarray

    @property
    def n(self) -> int:
        return int(self.sorted_values.size)

    def eval(self, y):
        """Fraction of the sample <= y (right-continuous)."""
        counts = np.searchsorted(self.sorted_values, y, side="right")
        out = counts / self.n
        return float(out) if np.isscalar(y) else out

    def left_limit(self, y):
        """Fraction of the sample strictly < y."""
        counts = np.searchsorted(self.sorted_values, y, side="left")
        out = counts / self.n
        return float(out) if np.isscalar(y) else out

    def shifted(self, offset: float) -> "EmpiricalCdf":
        """CDF of the sample translated by ``offset``."""
        values = self.sorted_values + float(offset)
        values.flags.writeable = False
        return EmpiricalCdf(values)

    def __call__(self, y):
        return self.eval(y)


def build_ecdf(values) -> EmpiricalCdf:
    """Build an :class:`EmpiricalCdf` from raw outcomes.

    Raises :class:`InvalidInputError` on empty input or non-finite values.
    """
    arr = np.asarray(values, dtype=float).ravel()
    if arr.size == 0:
        raise InvalidInputError("cannot build an empirical CDF from an empty sample")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("sample contains non-finite values")
    arr = np.sort(arr)
    arr.flags.writeable = False
    return EmpiricalCdf(arr)


def dkw_margin(n: int, alpha: float) -> float:
    """One-sample DKW half-width: the t solving 2*exp(-2*n*t^2) = alpha."""
    if n < 1 or int(n) != n:
        raise InvalidInputError(f"sample size must be a positive integer, got {n}")
    if not 0.0 < alpha < 1.0:
        raise InvalidInputError(f"alpha must lie in (0, 1), got {alpha}")
    return math.sqrt(math.log(2.0 / alpha) / (2.0 * n))
