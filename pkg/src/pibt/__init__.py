"""Distribution-free bounds on the probability an individual benefits from
treatment (PIBT), with finite-sample margins of error, power analysis, and
covariate-conditional bounds from regression residuals."""

from .conditional import (
    ConditionalBand,
    ConditionalBoundsModel,
    GeneralMargin,
    LinearGaussianMargin,
    ObservationalSample,
    SampleSplit,
    conditional_cdf,
    conditional_pibt_bounds,
    fit_conditional_model,
    general_margin,
    linear_gaussian_margin,
    margin_from_design,
    split_sample,
    uniform_confidence_band,
)
from .ecdf import EmpiricalCdf, build_ecdf, dkw_margin
from .errors import (
    DegenerateSplitError,
    InvalidInputError,
    SingleArmError,
    SingularDesignError,
)
from .makarov import (
    GEvaluator,
    GridSpec,
    PibtBoundPair,
    pibt_bounds,
    pibt_bounds_curve,
    pibt_bounds_ratio,
    population_bounds,
)
from .numerics import SymmetricMatrix, chi2_quantile, min_eigenvalue, normal_cdf
from .rct import (
    ConfidenceBand,
    PowerAnalysis,
    TwoArmSample,
    confidence_band,
    confidence_for_margin,
    rct_margin,
    required_sample_size,
)
from .regression import (
    FeatureMap,
    RegressionFit,
    design_matrix,
    fit_ols,
    polynomial_features,
    predict,
    residuals,
)
from .simulate import (
    Marginal,
    ObservationalScenario,
    RctScenario,
    coverage_rct,
    generate_observational,
    generate_rct,
    power_curve_conditional,
    power_curve_rct,
    propensity,
    true_pibt,
    true_pibt_exact,
)

__version__ = "0.1.0"
