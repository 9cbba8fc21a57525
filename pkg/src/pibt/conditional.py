"""Covariate-conditional PIBT bounds from regression residuals.

The conditional CDF estimator shifts a held-out residual pool by the
fitted regression surface:

    F_w(y | x) ~= (1/n_w) * #{i in arm-w pool : mu_w(x) + r_i <= y},

so for any x the conditional CDF is the arm's residual eCDF translated by
mu_w(x), and the Makarov machinery applies unchanged. The uniform margin
for the linear-Gaussian case combines a chi-squared-calibrated regression
half-width per arm with the two-sample DKW term; it depends on the
realized design only through the Gram matrices, never on outcomes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .ecdf import EmpiricalCdf, build_ecdf
from .errors import (
    DegenerateSplitError,
    InvalidInputError,
    SingleArmError,
    SingularDesignError,
)
from .makarov import PibtBoundPair, pibt_bounds
from .numerics import chi2_quantile, min_eigenvalue, normal_cdf
from .regression import FeatureMap, RegressionFit, design_matrix, fit_ols
from .rct import rct_margin
from .rng import PURPOSE_SPLIT, stream

__all__ = [
    "ObservationalSample",
    "SampleSplit",
    "ConditionalBoundsModel",
    "LinearGaussianMargin",
    "GeneralMargin",
    "ConditionalBand",
    "split_sample",
    "fit_conditional_model",
    "conditional_cdf",
    "conditional_pibt_bounds",
    "gaussian_regression_halfwidth",
    "margin_from_design",
    "linear_gaussian_margin",
    "general_margin",
    "uniform_confidence_band",
]


@dataclass(frozen=True)
class ObservationalSample:
    """Covariates, binary treatments, and observed outcomes."""

    covariates: np.ndarray
    treatments: np.ndarray
    outcomes: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.covariates, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        w = np.asarray(self.treatments).ravel()
        y = np.asarray(self.outcomes, dtype=float).ravel()
        if not (X.shape[0] == w.size == y.size):
            raise InvalidInputError("covariates, treatments, outcomes differ in length")
        if not np.all(np.isin(w, (0, 1))):
            raise InvalidInputError("treatments must be 0 or 1")
        w = w.astype(int)
        if not np.all(np.isfinite(X)) or not np.all(np.isfinite(y)):
            raise InvalidInputError("sample contains non-finite values")
        if w.min() == w.max():
            raise SingleArmError("sample contains units from only one arm")
        for name, arr in (("covariates", X), ("treatments", w), ("outcomes", y)):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def n(self) -> int:
        return int(self.outcomes.size)

    @property
    def p(self) -> int:
        return int(self.covariates.shape[1])


@dataclass(frozen=True)
class SampleSplit:
    """Disjoint fit/residual index sets covering the sample."""

    indices_fit: np.ndarray
    indices_residual: np.ndarray
    seed: int

    def __post_init__(self):
        i1 = np.asarray(self.indices_fit, dtype=int).ravel()
        i2 = np.asarray(self.indices_residual, dtype=int).ravel()
        if np.intersect1d(i1, i2).size:
            raise InvalidInputError("fit and residual index sets overlap")
        for name, arr in (("indices_fit", i1), ("indices_residual", i2)):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)


def split_sample(sample: ObservationalSample, fit_fraction: float, seed: int) -> SampleSplit:
    """Seeded uniform partition with |I1| = floor(fit_fraction * n).

    Reseeds up to 100 times until both arms appear in the residual split;
    raises :class:`DegenerateSplitError` otherwise. Deterministic in seed.
    """
    if not 0.0 < fit_fraction < 1.0:
        raise InvalidInputError(f"fit fraction must lie in (0, 1), got {fit_fraction}")
    n = sample.n
    n_fit = int(math.floor(fit_fraction * n))
    w = sample.treatments
    for attempt in range(100):
        perm = stream(seed, PURPOSE_SPLIT, attempt).permutation(n)
        i1 = np.sort(perm[:n_fit])
        i2 = np.sort(perm[n_fit:])
        arms = w[i2]
        if arms.size and arms.min() == 0 and arms.max() == 1:
            return SampleSplit(indices_fit=i1, indices_residual=i2, seed=int(seed))
    raise DegenerateSplitError(
        "an arm stayed empty in the residual split after 100 reseeded retries"
    )


@dataclass(frozen=True)
class ConditionalBoundsModel:
    """Per-arm fits from the fit split plus held-out residual pools.

    Residual pools come from the residual split only; pools are stored
    sorted. The model is immutable and evaluation is pure.
    """

    fit0: RegressionFit
    fit1: RegressionFit
    residual_pool0: np.ndarray
    residual_pool1: np.ndarray
    feature_map: FeatureMap
    split: SampleSplit

    @property
    def n0(self) -> int:
        return int(self.residual_pool0.size)

    @property
    def n1(self) -> int:
        return int(self.residual_pool1.size)

    def _fit(self, w: int) -> RegressionFit:
        return self.fit1 if w == 1 else self.fit0

    def _pool(self, w: int) -> np.ndarray:
        return self.residual_pool1 if w == 1 else self.residual_pool0


def fit_conditional_model(
    sample: ObservationalSample, split: SampleSplit, feature_map: FeatureMap
) -> ConditionalBoundsModel:
    """Fit each arm on the fit split, pool residuals from the other split."""
    idx1, idx2 = split.indices_fit, split.indices_residual
    if idx1.size + idx2.size != sample.n or (
        idx1.size and (idx1.min() < 0 or idx1.max() >= sample.n)
    ):
        raise InvalidInputError("split does not match the sample")
    fits = {}
    for w in (0, 1):
        rows = idx1[sample.treatments[idx1] == w]
        try:
            fits[w] = fit_ols(
                design_matrix(sample.covariates[rows], feature_map),
                sample.outcomes[rows],
                arm=w,
                feature_map=feature_map,
            )
        except SingularDesignError as exc:
            raise SingularDesignError(f"arm {w}: {exc}") from exc
    pools = {}
    for w in (0, 1):
        rows = idx2[sample.treatments[idx2] == w]
        if rows.size == 0:
            raise DegenerateSplitError(f"arm {w} is empty in the residual split")
        preds = fits[w].predict_many(sample.covariates[rows])
        pool = np.sort(sample.outcomes[rows] - preds)
        pool.flags.writeable = False
        pools[w] = pool
    return ConditionalBoundsModel(
        fit0=fits[0],
        fit1=fits[1],
        residual_pool0=pools[0],
        residual_pool1=pools[1],
        feature_map=feature_map,
        split=split,
    )


def conditional_cdf(model: ConditionalBoundsModel, w: int, y, x) -> float:
    """Estimated P(Y(w) <= y | X = x): the arm-w residual eCDF at y - mu_w(x)."""
    if w not in (0, 1):
        raise InvalidInputError(f"arm must be 0 or 1, got {w}")
    mu = model._fit(w).predict(x)
    pool = model._pool(w)
    counts = np.searchsorted(pool, np.asarray(y) - mu, side="right")
    out = counts / pool.size
    return float(out) if np.isscalar(y) else out


def _shifted_cdfs(model: ConditionalBoundsModel, x) -> tuple[EmpiricalCdf, EmpiricalCdf]:
    mu0 = model.fit0.predict(x)
    mu1 = model.fit1.predict(x)
    return (
        build_ecdf(model.residual_pool1 + mu1),
        build_ecdf(model.residual_pool0 + mu0),
    )


def conditional_pibt_bounds(model: ConditionalBoundsModel, delta: float, x) -> PibtBoundPair:
    """Makarov bounds at stratum x from the two shifted residual eCDFs."""
    f1, f0 = _shifted_cdfs(model, x)
    return pibt_bounds(f1, f0, delta)


@dataclass(frozen=True)
class LinearGaussianMargin:
    """Uniform margin for the linear model with Gaussian residuals.

    regression_term sums, per arm, the central normal probability of a
    band of half-width sqrt(v) * ||(Gram)^{-1/2}||_op, where v is the
    (1 - alpha/2) chi-squared quantile at the feature dimension. The total
    adds the two-sample DKW term on the residual pool sizes, and the
    statement holds uniformly over thresholds and strata with confidence
    1 - 2*alpha. ``conservative_max`` replaces the per-arm sum by twice
    the larger term.
    """

    alpha: float
    dim: int
    chi2_quantile: float
    op_norms: tuple[float, float]
    regression_term: float
    dkw_term: float
    total: float
    confidence: float
    conservative_max: bool = False


@dataclass(frozen=True)
class GeneralMargin:
    """Margin assembled from user-supplied residual band widths.

    ``confidence`` is clipped into [0, 1]; ``clipped`` flags when the raw
    value fell outside, which signals an inappropriate alpha for the
    supplied regression miss probabilities.
    """

    residual_term: float
    dkw_term: float
    total: float
    confidence: float
    clipped: bool


def gaussian_regression_halfwidth(gram: np.ndarray, alpha: float) -> tuple[float, float]:
    """Per-arm (op_norm, band term) for the Gaussian-residual margin."""
    lam_min = min_eigenvalue(gram)
    if lam_min <= 0.0:
        raise SingularDesignError(
            f"Gram matrix is not positive definite (min eigenvalue {lam_min:.3e})"
        )
    d = np.asarray(gram).shape[0]
    v = chi2_quantile(d, 1.0 - alpha / 2.0)
    op_norm = 1.0 / math.sqrt(lam_min)
    z = math.sqrt(v) * op_norm
    return op_norm, normal_cdf(z) - normal_cdf(-z)


def margin_from_design(
    gram0: np.ndarray,
    gram1: np.ndarray,
    n0: int,
    n1: int,
    alpha: float,
    conservative_max: bool = False,
) -> LinearGaussianMargin:
    """Margin from realized Gram matrices and residual-pool sizes."""
    if not 0.0 < alpha < 1.0:
        raise InvalidInputError(f"alpha must lie in (0, 1), got {alpha}")
    d = np.asarray(gram0).shape[0]
    if np.asarray(gram1).shape[0] != d:
        raise InvalidInputError("arms disagree on feature dimension")
    opn0, term0 = gaussian_regression_halfwidth(gram0, alpha)
    opn1, term1 = gaussian_regression_halfwidth(gram1, alpha)
    regression_term = 2.0 * max(term0, term1) if conservative_max else term0 + term1
    dkw_term = rct_margin(n0, n1, alpha)
    return LinearGaussianMargin(
        alpha=float(alpha),
        dim=int(d),
        chi2_quantile=chi2_quantile(d, 1.0 - alpha / 2.0),
        op_norms=(opn0, opn1),
        regression_term=regression_term,
        dkw_term=dkw_term,
        total=regression_term + dkw_term,
        confidence=1.0 - 2.0 * alpha,
        conservative_max=conservative_max,
    )


def linear_gaussian_margin(
    model: ConditionalBoundsModel, alpha: float, conservative_max: bool = False
) -> LinearGaussianMargin:
    """Uniform margin for a fitted model, conditional on its realized design."""
    return margin_from_design(
        model.fit0.design_gram,
        model.fit1.design_gram,
        model.n0,
        model.n1,
        alpha,
        conservative_max=conservative_max,
    )


def general_margin(
    alpha: float,
    n0: int,
    n1: int,
    t0: float,
    t1: float,
    residual_band: Callable[[int, float], float],
    regression_miss: tuple[float, float],
) -> GeneralMargin:
    """Margin for arbitrary residual laws and regression estimators.

    ``residual_band(w, t)`` must return the largest probability the arm-w
    residual assigns to any half-open window of width 2*t, and
    ``regression_miss[w]`` bounds the probability the arm-w regression
    misses uniformly by more than ``t_w``.
    """
    if not 0.0 < alpha < 1.0:
        raise InvalidInputError(f"alpha must lie in (0, 1), got {alpha}")
    if t0 < 0.0 or t1 < 0.0:
        raise InvalidInputError("regression deviation levels must be nonnegative")
    residual_term = float(residual_band(0, t0)) + float(residual_band(1, t1))
    dkw_term = rct_margin(n0, n1, alpha)
    raw = 1.0 - alpha - float(regression_miss[0]) - float(regression_miss[1])
    clipped = raw < 0.0 or raw > 1.0
    return GeneralMargin(
        residual_term=residual_term,
        dkw_term=dkw_term,
        total=residual_term + dkw_term,
        confidence=min(max(raw, 0.0), 1.0),
        clipped=clipped,
    )


@dataclass(frozen=True)
class ConditionalBand:
    """Per-stratum bounds sharing one uniform margin."""

    delta: float
    x_grid: np.ndarray
    lower_curve: np.ndarray
    upper_curve: np.ndarray
    margin: LinearGaussianMargin

    @property
    def lower_clipped(self) -> np.ndarray:
        return np.clip(self.lower_curve - self.margin.total, 0.0, 1.0)

    @property
    def upper_clipped(self) -> np.ndarray:
        return np.clip(self.upper_curve + self.margin.total, 0.0, 1.0)


def uniform_confidence_band(
    model: ConditionalBoundsModel,
    delta: float,
    x_grid: Sequence,
    alpha: float,
    conservative_max: bool = False,
) -> ConditionalBand:
    """Bounds at every query stratum with a single x-free margin.

    The confidence statement is simultaneous over all thresholds and all
    strata, so the same margin applies at every grid point.
    """
    grid = np.asarray(x_grid, dtype=float)
    if grid.ndim == 1:
        grid = grid[:, None]
    if grid.shape[0] == 0:
        raise InvalidInputError("stratum grid must be nonempty")
    pairs = [conditional_pibt_bounds(model, delta, x) for x in grid]
    return ConditionalBand(
        delta=float(delta),
        x_grid=grid,
        lower_curve=np.array([p.lower for p in pairs]),
        upper_curve=np.array([p.upper for p in pairs]),
        margin=linear_gaussian_margin(model, alpha, conservative_max=conservative_max),
    )
