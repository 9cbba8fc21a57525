"""Seeded synthetic worlds with known ground truth.

Two generator families feed every coverage and power experiment:

* randomized trials whose potential-outcome pair is coupled through a
  Gaussian copula on user-chosen marginals (normal, uniform, point mass,
  lognormal), with the unobserved pair retained in a hidden ledger so the
  true benefit probability is computable;
* observational samples with uniform covariates, polynomial response
  surfaces, Gaussian-copula residuals, and the propensity
  ((x1 + x2 + 0.5)/3)**m, whose exponent m controls arm imbalance.

Scenario files are flat ``key = value`` text; see ``parse_scenario``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources
from typing import Optional, Sequence

import numpy as np

from .conditional import gaussian_regression_halfwidth
from .ecdf import build_ecdf
from .errors import InvalidInputError
from .makarov import pibt_bounds_curve
from .numerics import normal_cdf
from .rct import confidence_for_margin, rct_margin, required_sample_size
from .regression import FeatureMap, design_matrix, fit_ols
from .rng import (
    PURPOSE_ASSIGN,
    PURPOSE_COVARIATES,
    PURPOSE_JOINT,
    PURPOSE_RESIDUALS,
    PURPOSE_SPLIT,
    PURPOSE_TRUTH,
    stream,
)

__all__ = [
    "Marginal",
    "RctScenario",
    "RctDraw",
    "ObservationalScenario",
    "ObservationalDraw",
    "propensity",
    "generate_rct",
    "true_pibt",
    "true_pibt_exact",
    "generate_observational",
    "power_curve_rct",
    "power_curve_conditional",
    "coverage_rct",
    "parse_scenario",
    "load_scenario",
    "run_scenario",
]

_MARGINAL_KINDS = ("normal", "uniform", "point", "lognormal")
_ERFC = np.vectorize(math.erfc)


@dataclass(frozen=True)
class Marginal:
    """One potential outcome's marginal distribution.

    Parameters a, b mean (mean, sd) for normal, (lo, hi) for uniform,
    (value, ignored) for point, and (log-mean, log-sd) for lognormal.
    """

    kind: str
    a: float = 0.0
    b: float = 1.0

    def __post_init__(self):
        if self.kind not in _MARGINAL_KINDS:
            raise InvalidInputError(f"unknown marginal kind {self.kind!r}")
        if self.kind in ("normal", "lognormal") and not self.b > 0.0:
            raise InvalidInputError(f"{self.kind} marginal needs positive scale")
        if self.kind == "uniform" and not self.b > self.a:
            raise InvalidInputError("uniform marginal needs hi > lo")

    def transform(self, z: np.ndarray) -> np.ndarray:
        """Monotone map from a standard normal draw to this marginal."""
        z = np.asarray(z, dtype=float)
        if self.kind == "normal":
            return self.a + self.b * z
        if self.kind == "lognormal":
            return np.exp(self.a + self.b * z)
        if self.kind == "uniform":
            phi = 0.5 * _ERFC(-z / math.sqrt(2.0))
            return self.a + (self.b - self.a) * phi
        return np.full_like(z, self.a)


def _copula_pair(rng: np.random.Generator, n: int, rho: float) -> tuple[np.ndarray, np.ndarray]:
    z = rng.standard_normal((2, n))
    z0 = z[0]
    z1 = rho * z0 + math.sqrt(max(1.0 - rho * rho, 0.0)) * z[1]
    if rho == 1.0:
        z1 = z0
    elif rho == -1.0:
        z1 = -z0
    return z0, z1


@dataclass(frozen=True)
class RctScenario:
    """Randomized trial generator: two marginals coupled by a Gaussian copula."""

    marginal0: Marginal
    marginal1: Marginal
    rho: float
    assign_prob: float
    seed: int

    def __post_init__(self):
        if not -1.0 <= self.rho <= 1.0:
            raise InvalidInputError(f"copula correlation must lie in [-1, 1], got {self.rho}")
        if not 0.0 < self.assign_prob < 1.0:
            raise InvalidInputError(f"assignment probability must lie in (0, 1), got {self.assign_prob}")


@dataclass(frozen=True)
class RctDraw:
    """Observed trial data plus the hidden potential-outcome ledger."""

    treatments: np.ndarray
    observed: np.ndarray
    y0: np.ndarray  # hidden ledger
    y1: np.ndarray

    @property
    def treated_outcomes(self) -> np.ndarray:
        return self.observed[self.treatments == 1]

    @property
    def control_outcomes(self) -> np.ndarray:
        return self.observed[self.treatments == 0]


def generate_rct(scenario: RctScenario, n: int, replicate: int = 0) -> RctDraw:
    """Draw n i.i.d. units; the observed outcome masks the off-arm one."""
    z0, z1 = _copula_pair(stream(scenario.seed, replicate, PURPOSE_JOINT), n, scenario.rho)
    y0 = scenario.marginal0.transform(z0)
    y1 = scenario.marginal1.transform(z1)
    w = (
        stream(scenario.seed, replicate, PURPOSE_ASSIGN).random(n) < scenario.assign_prob
    ).astype(int)
    observed = np.where(w == 1, y1, y0)
    return RctDraw(treatments=w, observed=observed, y0=y0, y1=y1)


def true_pibt(scenario: RctScenario, delta: float, n_mc: int, replicate: int = 0) -> tuple[float, float]:
    """Monte Carlo P(Y(1) - Y(0) > delta) with its binomial standard error."""
    if n_mc < 10_000:
        raise InvalidInputError(f"need at least 1e4 Monte Carlo draws, got {n_mc}")
    z0, z1 = _copula_pair(stream(scenario.seed, replicate, PURPOSE_TRUTH), n_mc, scenario.rho)
    diff = scenario.marginal1.transform(z1) - scenario.marginal0.transform(z0)
    p = float(np.mean(diff > delta))
    return p, math.sqrt(p * (1.0 - p) / n_mc)


def true_pibt_exact(scenario: RctScenario, delta) -> np.ndarray:
    """Closed-form benefit probability for normal/point marginal pairs."""
    specs = (scenario.marginal0, scenario.marginal1)
    if any(m.kind not in ("normal", "point") for m in specs):
        raise InvalidInputError("exact truth needs normal or point marginals")
    mean0, sd0 = (specs[0].a, specs[0].b if specs[0].kind == "normal" else 0.0)
    mean1, sd1 = (specs[1].a, specs[1].b if specs[1].kind == "normal" else 0.0)
    mu = mean1 - mean0
    var = sd0 * sd0 + sd1 * sd1 - 2.0 * scenario.rho * sd0 * sd1
    deltas = np.asarray(delta, dtype=float)
    if var <= 0.0:
        return (deltas < mu).astype(float)
    sd = math.sqrt(var)
    return np.array([1.0 - normal_cdf((d - mu) / sd) for d in np.atleast_1d(deltas)])


def propensity(x: np.ndarray, exponent: float) -> np.ndarray:
    """Treatment probability ((x1 + x2 + 0.5)/3)**m on the unit square."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[1] < 2:
        raise InvalidInputError("propensity needs at least two covariates")
    return ((x[:, 0] + x[:, 1] + 0.5) / 3.0) ** exponent


@dataclass(frozen=True)
class ObservationalScenario:
    """Polynomial response surfaces with Gaussian-copula residuals."""

    p: int
    degree: int
    beta0: tuple[float, ...]
    beta1: tuple[float, ...]
    sigma0: float
    sigma1: float
    rho: float
    propensity_exponent: float
    seed: int

    def __post_init__(self):
        if self.p < 2:
            raise InvalidInputError("need at least two covariates for the propensity")
        d = FeatureMap(self.p, self.degree).output_dim
        for name in ("beta0", "beta1"):
            beta = tuple(float(v) for v in np.ravel(getattr(self, name)))
            if len(beta) != d:
                raise InvalidInputError(f"{name} must have length {d} for p={self.p}, q={self.degree}")
            object.__setattr__(self, name, beta)
        if self.sigma0 < 0.0 or self.sigma1 < 0.0:
            raise InvalidInputError("residual scales must be nonnegative")
        if not -1.0 <= self.rho <= 1.0:
            raise InvalidInputError(f"residual copula correlation must lie in [-1, 1], got {self.rho}")

    @property
    def feature_map(self) -> FeatureMap:
        return FeatureMap(self.p, self.degree)


@dataclass(frozen=True)
class ObservationalDraw:
    """Observed observational data plus the hidden ledger."""

    covariates: np.ndarray
    treatments: np.ndarray
    observed: np.ndarray
    y0: np.ndarray
    y1: np.ndarray


def generate_observational(
    scenario: ObservationalScenario, n: int, replicate: int = 0
) -> ObservationalDraw:
    """Uniform covariates, Bernoulli(propensity) treatment, masked outcomes."""
    X = stream(scenario.seed, replicate, PURPOSE_COVARIATES).random((n, scenario.p))
    pi = propensity(X, scenario.propensity_exponent)
    w = (stream(scenario.seed, replicate, PURPOSE_ASSIGN).random(n) < pi).astype(int)
    z0, z1 = _copula_pair(stream(scenario.seed, replicate, PURPOSE_RESIDUALS), n, scenario.rho)
    features = design_matrix(X, scenario.feature_map)
    y0 = features @ np.asarray(scenario.beta0) + scenario.sigma0 * z0
    y1 = features @ np.asarray(scenario.beta1) + scenario.sigma1 * z1
    observed = np.where(w == 1, y1, y0)
    return ObservationalDraw(covariates=X, treatments=w, observed=observed, y0=y0, y1=y1)


@dataclass(frozen=True)
class RctPowerRow:
    n: int
    confidence: float
    meets_target: bool


@dataclass(frozen=True)
class RctPowerCurve:
    rows: tuple[RctPowerRow, ...]
    threshold_total: int  # from required_sample_size, equal arms


def power_curve_rct(epsilon: float, confidence: float, n_grid: Sequence[int]) -> RctPowerCurve:
    """Achieved confidence at each total size (equal arms) plus the first
    total meeting the target per the nearest-integer solve."""
    grid = [int(n) for n in n_grid]
    if grid != sorted(grid) or not grid:
        raise InvalidInputError("size grid must be nonempty and ascending")
    n0, n1 = required_sample_size(epsilon, confidence, arm_ratio=1.0)
    threshold = n0 + n1
    rows = []
    for n in grid:
        half0 = n // 2
        half1 = n - half0
        conf = confidence_for_margin(max(half0, 1), max(half1, 1), epsilon)
        rows.append(RctPowerRow(n=n, confidence=conf, meets_target=n >= threshold))
    return RctPowerCurve(rows=tuple(rows), threshold_total=threshold)


@dataclass(frozen=True)
class ConditionalPowerRow:
    n: int
    median_total_margin: float
    vacuous_arm_replicates: int


def _replicate_margin_total(
    scenario: ObservationalScenario,
    n: int,
    replicate: int,
    alpha: float,
    split_fraction: float,
) -> tuple[float, bool]:
    """Total uniform margin for one synthetic replicate.

    An arm whose fit-split design is rank deficient (or empty) contributes
    the vacuous regression half-width 1.0, the limit of the band term as
    the smallest Gram eigenvalue goes to 0; an arm with an empty residual
    pool makes the DKW term infinite. This keeps small-sample, heavily
    imbalanced scenarios well defined instead of aborting the sweep.
    """
    draw = generate_observational(scenario, n, replicate)
    w = draw.treatments
    n_fit = int(math.floor(split_fraction * n))
    perm = stream(scenario.seed, replicate, PURPOSE_SPLIT).permutation(n)
    i1, i2 = perm[:n_fit], perm[n_fit:]
    fmap = scenario.feature_map
    vacuous = False
    terms = []
    for arm in (0, 1):
        rows = i1[w[i1] == arm]
        try:
            fit = fit_ols(
                design_matrix(draw.covariates[rows], fmap),
                draw.observed[rows],
                arm=arm,
                feature_map=fmap,
            )
            terms.append(gaussian_regression_halfwidth(fit.design_gram, alpha)[1])
        except Exception:
            terms.append(1.0)
            vacuous = True
    counts = [int(np.sum(w[i2] == arm)) for arm in (0, 1)]
    if min(counts) == 0:
        return math.inf, vacuous
    dkw = rct_margin(counts[0], counts[1], alpha)
    return terms[0] + terms[1] + dkw, vacuous


def power_curve_conditional(
    scenario: ObservationalScenario,
    n_grid: Sequence[int],
    alpha: float,
    n_replicates: int = 30,
    split_fraction: float = 0.5,
) -> list[ConditionalPowerRow]:
    """Median total margin across replicates at each sample size.

    Deterministic given the scenario seed; replicates are independent
    streams, so execution order never changes the medians.
    """
    grid = [int(n) for n in n_grid]
    if grid != sorted(grid) or not grid:
        raise InvalidInputError("size grid must be nonempty and ascending")
    rows = []
    for j, n in enumerate(grid):
        totals = []
        vacuous_count = 0
        for r in range(n_replicates):
            total, vacuous = _replicate_margin_total(
                scenario, n, j * n_replicates + r, alpha, split_fraction
            )
            totals.append(total)
            vacuous_count += int(vacuous)
        rows.append(
            ConditionalPowerRow(
                n=n,
                median_total_margin=float(np.median(totals)),
                vacuous_arm_replicates=vacuous_count,
            )
        )
    return rows


@dataclass(frozen=True)
class CoverageRow:
    replicate: int
    covered_everywhere: bool


def coverage_rct(
    scenario: RctScenario,
    n0: int,
    n1: int,
    alpha: float,
    delta_grid: Sequence[float],
    n_replicates: int,
) -> list[CoverageRow]:
    """Whether the clipped band contains the true benefit probability at
    every grid threshold, per replicate. Truth is exact for normal/point
    marginals and 10^6-draw Monte Carlo otherwise."""
    deltas = np.asarray(delta_grid, dtype=float)
    try:
        truth = true_pibt_exact(scenario, deltas)
    except InvalidInputError:
        truth = np.array(
            [true_pibt(scenario, float(d), 1_000_000)[0] for d in deltas]
        )
    margin = rct_margin(n0, n1, alpha)
    rows = []
    for r in range(n_replicates):
        rng = stream(scenario.seed, r, PURPOSE_JOINT)
        treated = scenario.marginal1.transform(rng.standard_normal(n1))
        control = scenario.marginal0.transform(rng.standard_normal(n0))
        pairs = pibt_bounds_curve(build_ecdf(treated), build_ecdf(control), deltas)
        lo = np.clip(np.array([p.lower for p in pairs]) - margin, 0.0, 1.0)
        hi = np.clip(np.array([p.upper for p in pairs]) + margin, 0.0, 1.0)
        covered = bool(np.all((truth >= lo - 1e-12) & (truth <= hi + 1e-12)))
        rows.append(CoverageRow(replicate=r, covered_everywhere=covered))
    return rows


# ---------------------------------------------------------------------------
# Scenario files: flat "key = value" text, one pair per line, '#' comments.

def _parse_value(raw: str):
    raw = raw.strip()
    if "," in raw:
        return [_parse_value(part) for part in raw.split(",")]
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        return float(raw)
    except ValueError:
        pass
    return raw


def parse_scenario(text: str) -> dict:
    """Parse flat key = value scenario text into a typed dict."""
    out: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise InvalidInputError(f"scenario line {lineno}: expected 'key = value'")
        key, raw = body.split("=", 1)
        key = key.strip().lower()
        if not key:
            raise InvalidInputError(f"scenario line {lineno}: empty key")
        if key in out:
            raise InvalidInputError(f"scenario line {lineno}: duplicate key {key!r}")
        out[key] = _parse_value(raw)
    if "kind" not in out:
        raise InvalidInputError("scenario file is missing the 'kind' key")
    return out


def load_scenario(path_or_name: str) -> dict:
    """Load a scenario file from disk, or a bundled one by bare name."""
    import os

    if os.path.exists(path_or_name):
        with open(path_or_name, "r", encoding="utf-8") as fh:
            return parse_scenario(fh.read())
    name = os.path.basename(path_or_name)
    if not name.endswith(".scn"):
        name += ".scn"
    ref = resources.files("pibt").joinpath("scenarios", name)
    if not ref.is_file():
        raise InvalidInputError(f"scenario {path_or_name!r} is neither a file nor bundled")
    return parse_scenario(ref.read_text(encoding="utf-8"))


def _require(config: dict, key: str):
    if key not in config:
        raise InvalidInputError(f"scenario is missing required key {key!r}")
    return config[key]


def _as_list(value) -> list:
    return value if isinstance(value, list) else [value]


def _marginal_from(config: dict, key: str) -> Marginal:
    spec = _as_list(_require(config, key))
    kind = str(spec[0])
    params = [float(v) for v in spec[1:]] or [0.0, 1.0]
    if len(params) == 1:
        params.append(1.0)
    return Marginal(kind=kind, a=params[0], b=params[1])


def run_scenario(config: dict, seed_override: Optional[int] = None) -> tuple[list[str], list[list]]:
    """Execute a parsed scenario; returns (CSV header, rows)."""
    kind = str(_require(config, "kind"))
    if kind == "power_rct":
        grid = range(
            int(_require(config, "n_min")),
            int(_require(config, "n_max")) + 1,
            int(config.get("n_step", 1)),
        )
        curve = power_curve_rct(
            float(_require(config, "epsilon")), float(_require(config, "confidence")), list(grid)
        )
        header = ["n", "confidence", "meets_target"]
        rows = [[r.n, r.confidence, int(r.meets_target)] for r in curve.rows]
        return header, rows
    if kind == "power_conditional":
        seed = int(seed_override if seed_override is not None else _require(config, "seed"))
        p = int(_require(config, "p"))
        degree = int(_require(config, "degree"))
        d = FeatureMap(p, degree).output_dim
        beta0 = _as_list(config.get("beta0", 1.0))
        beta1 = _as_list(config.get("beta1", 1.0))
        if len(beta0) == 1:
            beta0 = beta0 * d
        if len(beta1) == 1:
            beta1 = beta1 * d
        scenario = ObservationalScenario(
            p=p,
            degree=degree,
            beta0=tuple(float(v) for v in beta0),
            beta1=tuple(float(v) for v in beta1),
            sigma0=float(config.get("sigma0", 1.0)),
            sigma1=float(config.get("sigma1", 1.0)),
            rho=float(config.get("rho", 0.0)),
            propensity_exponent=float(_require(config, "propensity_exponent")),
            seed=seed,
        )
        rows = power_curve_conditional(
            scenario,
            [int(n) for n in _as_list(_require(config, "n_grid"))],
            float(_require(config, "alpha")),
            n_replicates=int(config.get("replicates", 30)),
            split_fraction=float(config.get("split_fraction", 0.5)),
        )
        header = ["n", "median_total_margin", "vacuous_arm_replicates"]
        return header, [[r.n, r.median_total_margin, r.vacuous_arm_replicates] for r in rows]
    if kind == "coverage_rct":
        seed = int(seed_override if seed_override is not None else _require(config, "seed"))
        scenario = RctScenario(
            marginal0=_marginal_from(config, "marginal0"),
            marginal1=_marginal_from(config, "marginal1"),
            rho=float(config.get("rho", 0.0)),
            assign_prob=float(config.get("assign_prob", 0.5)),
            seed=seed,
        )
        deltas = np.linspace(
            float(_require(config, "delta_min")),
            float(_require(config, "delta_max")),
            int(_require(config, "delta_count")),
        )
        rows = coverage_rct(
            scenario,
            int(_require(config, "n0")),
            int(_require(config, "n1")),
            float(_require(config, "alpha")),
            deltas,
            int(_require(config, "replicates")),
        )
        header = ["replicate", "covered_everywhere"]
        return header, [[r.replicate, int(r.covered_everywhere)] for r in rows]
    raise InvalidInputError(f"unknown scenario kind {kind!r}")
