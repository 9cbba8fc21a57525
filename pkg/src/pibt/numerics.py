"""Special functions backing the uniform regression margin.

Only three pieces are needed: the standard normal CDF, chi-squared
quantiles, and the smallest eigenvalue of a symmetric matrix. The first
two are implemented here against explicit tolerances; the eigenvalue
routine delegates to LAPACK via numpy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError

__all__ = [
    "SymmetricMatrix",
    "normal_cdf",
    "regularized_gamma_p",
    "chi2_quantile",
    "min_eigenvalue",
]

_SQRT2 = math.sqrt(2.0)


def normal_cdf(z: float) -> float:
    """Standard normal CDF via the complementary error function.

    Absolute error is below 1e-12 across the real line.
    """
    return 0.5 * math.erfc(-float(z) / _SQRT2)


def _gamma_p_series(a: float, x: float, eps: float = 1e-15, max_iter: int = 600) -> float:
    # Power series for P(a, x); converges fast when x < a + 1.
    term = 1.0 / a
    total = term
    denom = a
    for _ in range(max_iter):
        denom += 1.0
        term *= x / denom
        total += term
        if abs(term) < abs(total) * eps:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))

def _gamma_q_contfrac(a: float, x: float, eps: float = 1e-15, max_iter: int = 600) -> float:
    # Lentz continued fraction for Q(a, x) = 1 - P(a, x); for x >= a + 1.
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, max_iter + 1):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            break
    return h * math.exp(-x + a * math.log(x) - math.lgamma(a))


def regularized_gamma_p(a: float, x: float) -> float:
    """Regularized lower incomplete gamma function P(a, x)."""
    if a <= 0.0:
        raise InvalidInputError(f"shape parameter must be positive, got {a}")
    if x < 0.0:
        raise InvalidInputError(f"argument must be nonnegative, got {x}")
    if x == 0.0:
        return 0.0
    if x < a + 1.0:
        return min(_gamma_p_series(a, x), 1.0)
    return max(1.0 - _gamma_q_contfrac(a, x), 0.0)


def chi2_quantile(d: int, prob: float) -> float:
    """Quantile of the chi-squared distribution with ``d`` degrees of freedom.

    Solves P(d/2, v/2) = prob by bracketing bisection, to relative error
    well below 1e-9.
    """
    if d < 1 or int(d) != d:
        raise InvalidInputError(f"degrees of freedom must be a positive integer, got {d}")
    if not 0.0 < prob < 1.0:
        raise InvalidInputError(f"probability must lie in (0, 1), got {prob}")
    a = d / 2.0
    cdf = lambda v: regularized_gamma_p(a, v / 2.0)
    lo, hi = 0.0, float(d) + 10.0 * math.sqrt(2.0 * d) + 10.0
    while cdf(hi) < prob:
        lo, hi = hi, hi * 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if cdf(mid) < prob:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-13 * max(hi, 1.0):
            break
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class SymmetricMatrix:
    """Symmetric matrix stored as packed upper-triangular entries."""

    order: int
    packed: tuple[float, ...]

    @classmethod
    def from_dense(cls, matrix: np.ndarray) -> "SymmetricMatrix":
        a = np.asarray(matrix, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise InvalidInputError(f"expected a square matrix, got shape {a.shape}")
        scale = float(np.max(np.abs(a))) or 1.0
        if float(np.max(np.abs(a - a.T))) > 1e-8 * scale:
            raise InvalidInputError("matrix is not symmetric")
        d = a.shape[0]
        idx = np.triu_indices(d)
        # Average off-diagonal pairs so symmetry holds by construction.
        sym = 0.5 * (a + a.T)
        return cls(order=d, packed=tuple(float(v) for v in sym[idx]))

    def to_dense(self) -> np.ndarray:
        d = self.order
        out = np.zeros((d, d))
        out[np.triu_indices(d)] = self.packed
        lower = np.tril_indices(d, k=-1)
        out[lower] = out.T[lower]
        return out


def min_eigenvalue(m: "SymmetricMatrix | np.ndarray") -> float:
    """Smallest eigenvalue of a symmetric matrix.

    Negative eigenvalues are returned as-is; callers that need positive
    definiteness enforce it themselves.
    """
    dense = m.to_dense() if isinstance(m, SymmetricMatrix) else SymmetricMatrix.from_dense(m).to_dense()
    return float(np.linalg.eigvalsh(dense)[0])
