"""Polynomial feature maps and per-arm least-squares fits (the two-learner).

The feature map emits every monomial of total degree 1..q in the p inputs,
scaled by 1/sqrt(d) so the feature vector has norm at most 1 whenever the
inputs lie in [0, 1]^p. There is no intercept column; users wanting one
include a constant pseudo-covariate. The monomial order is frozen:
degree-ascending, and within a degree mixed terms come before pure powers
(max exponent ascending, then reverse-lexicographic), so p = q = 2 yields
(x1, x2, x1*x2, x1^2, x2^2)/sqrt(5).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import InvalidInputError, SingularDesignError

__all__ = ["FeatureMap", "RegressionFit", "polynomial_features", "design_matrix", "fit_ols", "predict", "residuals"]

RANK_TOLERANCE = 1e-10  # smallest/largest singular value ratio


def _exponent_rows(p: int, q: int) -> tuple[tuple[int, ...], ...]:
    rows = []
    for degree in range(1, q + 1):
        exps = []
        for combo in itertools.combinations_with_replacement(range(p), degree):
            e = [0] * p
            for j in combo:
                e[j] += 1
            exps.append(tuple(e))
        exps.sort(key=lambda e: (max(e), tuple(-v for v in e)))
        rows.extend(exps)
    return tuple(rows)


@dataclass(frozen=True)
class FeatureMap:
    """Scaled polynomial map of p inputs up to total degree q."""

    input_dim: int
    degree: int
    exponents: tuple[tuple[int, ...], ...] = field(init=False, repr=False)

    def __post_init__(self):
        if self.input_dim < 1 or self.degree < 1:
            raise InvalidInputError("input_dim and degree must be positive integers")
        object.__setattr__(self, "exponents", _exponent_rows(self.input_dim, self.degree))

    @property
    def output_dim(self) -> int:
        return len(self.exponents)

    @property
    def scale(self) -> float:
        return 1.0 / math.sqrt(self.output_dim)


def polynomial_features(x, feature_map: FeatureMap) -> np.ndarray:
    """Evaluate the feature map at a single covariate vector."""
    vec = np.asarray(x, dtype=float).ravel()
    if vec.size != feature_map.input_dim:
        raise InvalidInputError(
            f"expected {feature_map.input_dim} covariates, got {vec.size}"
        )
    exps = np.asarray(feature_map.exponents)
    return feature_map.scale * np.prod(vec[None, :] ** exps, axis=1)


def design_matrix(covariates, feature_map: FeatureMap) -> np.ndarray:
    """Stack feature rows for an (n, p) covariate matrix."""
    X = np.asarray(covariates, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[1] != feature_map.input_dim:
        raise InvalidInputError(
            f"expected {feature_map.input_dim} covariate columns, got {X.shape[1]}"
        )
    exps = np.asarray(feature_map.exponents)
    return feature_map.scale * np.prod(X[:, None, :] ** exps[None, :, :], axis=2)


@dataclass(frozen=True)
class RegressionFit:
    """Least-squares fit for one arm.

    ``design_gram`` stores the exact cross-product of the design, which the
    uniform-margin computation consumes later.
    """

    arm: int
    coefficients: np.ndarray
    design_gram: np.ndarray
    in_sample_count: int
    feature_map: Optional[FeatureMap] = None

    def predict(self, x) -> float:
        """Fitted value at covariate vector x (feature vector if no map)."""
        feats = (
            polynomial_features(x, self.feature_map)
            if self.feature_map is not None
            else np.asarray(x, dtype=float).ravel()
        )
        if feats.size != self.coefficients.size:
            raise InvalidInputError(
                f"expected {self.coefficients.size} features, got {feats.size}"
            )
        return float(feats @ self.coefficients)

    def predict_many(self, covariates) -> np.ndarray:
        rows = (
            design_matrix(covariates, self.feature_map)
            if self.feature_map is not None
            else np.asarray(covariates, dtype=float)
        )
        if rows.shape[1] != self.coefficients.size:
            raise InvalidInputError(
                f"expected {self.coefficients.size} feature columns, got {rows.shape[1]}"
            )
        return rows @ self.coefficients


def fit_ols(
    design_rows,
    outcomes,
    arm: int = -1,
    feature_map: Optional[FeatureMap] = None,
) -> RegressionFit:
    """Least squares via SVD of the design (never the normal equations).

    Raises :class:`SingularDesignError` when the design has fewer rows than
    columns or its smallest singular value falls below RANK_TOLERANCE times
    the largest.
    """
    A = np.asarray(design_rows, dtype=float)
    y = np.asarray(outcomes, dtype=float).ravel()
    if A.ndim != 2:
        raise InvalidInputError("design must be a 2-d array of feature rows")
    if A.shape[0] != y.size:
        raise InvalidInputError("design and outcomes differ in length")
    m, d = A.shape
    if m < d:
        raise SingularDesignError(
            f"design has {m} rows for {d} columns; rank condition fails"
        )
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    if s[0] == 0.0 or s[-1] <= RANK_TOLERANCE * s[0]:
        raise SingularDesignError(
            f"design is rank deficient: smallest singular value {s[-1]:.3e} "
            f"<= {RANK_TOLERANCE:g} * largest {s[0]:.3e}"
        )
    beta = Vt.T @ ((U.T @ y) / s)
    gram = A.T @ A
    return RegressionFit(
        arm=arm,
        coefficients=beta,
        design_gram=gram,
        in_sample_count=m,
        feature_map=feature_map,
    )


def predict(fit: RegressionFit, x) -> float:
    return fit.predict(x)


def residuals(fit: RegressionFit, rows, outcomes) -> np.ndarray:
    """Elementwise outcome minus fitted value."""
    y = np.asarray(outcomes, dtype=float).ravel()
    preds = fit.predict_many(rows)
    if preds.size != y.size:
        raise InvalidInputError("rows and outcomes differ in length")
    return y - preds
