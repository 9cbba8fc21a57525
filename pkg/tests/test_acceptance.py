"""Acceptance suite: one test per exit criterion, each printing a
pass/fail line (run with ``pytest -s tests/test_acceptance.py -v``).
Tolerances and runtime budgets are pinned here, not configurable.
"""

import math
import os
import time

import numpy as np
import pytest

from pibt import (
    GridSpec,
    Marginal,
    ObservationalSample,
    RctScenario,
    build_ecdf,
    chi2_quantile,
    conditional_pibt_bounds,
    coverage_rct,
    fit_conditional_model,
    generate_observational,
    min_eigenvalue,
    normal_cdf,
    pibt_bounds,
    population_bounds,
    power_curve_rct,
    required_sample_size,
    split_sample,
    true_pibt,
)
from pibt.cli import main
from pibt.makarov import _extrema_over_breakpoints
from pibt.regression import FeatureMap, design_matrix
from pibt.simulate import ObservationalScenario, load_scenario, run_scenario

from oracles import (
    chi2_quantile_bisect,
    gaussian_g_extrema_points,
    gaussian_pair_g,
    grid_pibt_bounds,
    min_eig_inverse_iteration,
    sup_abs_step_vs_smooth,
    true_gaussian_bounds,
)


def _report(name: str):
    class _Reporter:
        def __enter__(self):
            self.t0 = time.perf_counter()
            return self

        @property
        def elapsed(self):
            return time.perf_counter() - self.t0

        def __exit__(self, exc_type, exc, tb):
            verdict = "PASS" if exc_type is None else "FAIL"
            print(f"[ACCEPTANCE] {name}: {verdict} ({self.elapsed:.1f}s)")
            return False

    return _Reporter()


def test_fig2_reproduction():
    with _report("fig2-sample-size") as rep:
        n0, n1 = required_sample_size(0.05, 0.90, arm_ratio=1.0)
        assert n0 + n1 == 5902
        curve = power_curve_rct(0.05, 0.90, list(range(100, 10001)))
        confs = [r.confidence for r in curve.rows]
        assert all(a <= b + 1e-15 for a, b in zip(confs, confs[1:]))
        assert curve.threshold_total == 5902
        by_n = {r.n: r.confidence for r in curve.rows}
        # The continuous solve crosses 0.90 inside [5902, 5903); the
        # nearest-integer convention lands the threshold at 5902, where
        # the raw confidence sits within 5e-5 of the target.
        assert abs(by_n[5902] - 0.90) <= 5e-5
        assert by_n[5901] < 0.90
        assert by_n[5903] > 0.90
        assert rep.elapsed < 1.0


def test_brute_force_equivalence():
    with _report("brute-force-equivalence") as rep:
        # Samples and thresholds live on the quarter-integer lattice so
        # every half-shift is exactly representable and the 1e-12
        # comparison against the dense grid is meaningful.
        rng = np.random.default_rng(20240514)
        for _ in range(200):
            v1 = rng.integers(-12, 13, size=int(rng.integers(1, 51))) * 0.25
            v0 = rng.integers(-12, 13, size=int(rng.integers(1, 51))) * 0.25
            delta = float(rng.integers(-12, 13) * 0.25)
            f1, f0 = build_ecdf(v1), build_ecdf(v0)
            pair = pibt_bounds(f1, f0, delta)
            sup_bp, inf_bp = _extrema_over_breakpoints(f1, f0, delta)
            lo_g, up_g, sup_g, inf_g = grid_pibt_bounds(v1, v0, delta, step=1e-4, pad=1.0)
            assert abs(pair.lower - lo_g) <= 1e-12
            assert abs(pair.upper - up_g) <= 1e-12
            assert sup_bp >= sup_g - 1e-12  # candidate set dominates the grid
            assert inf_bp <= inf_g + 1e-12
        assert rep.elapsed < 30.0


def test_population_validity():
    with _report("population-validity") as rep:
        mu1, sd0 = 0.3, 1.0
        deltas = np.linspace(-3.0, 3.0, 21)
        grid = GridSpec(-16.0, 16.0, 4001)
        phi = np.vectorize(normal_cdf)
        for rho in (-0.9, 0.0, 0.9):
            for ratio in (0.5, 1.0, 2.0):
                sd1 = math.sqrt(ratio)
                scenario = RctScenario(
                    marginal0=Marginal("normal", 0.0, sd0),
                    marginal1=Marginal("normal", mu1, sd1),
                    rho=rho,
                    assign_prob=0.5,
                    seed=20240515,
                )
                f1 = lambda y: phi((np.asarray(y) - mu1) / sd1)
                f0 = lambda y: phi(np.asarray(y) / sd0)
                for delta in deltas:
                    pair = population_bounds(f1, f0, float(delta), grid)
                    p_hat, se = true_pibt(scenario, float(delta), 1_000_000)
                    # 1e-9 absorbs optimizer precision in degenerate tails.
                    assert pair.lower <= p_hat + 4.0 * se + 1e-9
                    assert pair.upper >= p_hat - 4.0 * se - 1e-9
        assert rep.elapsed < 300.0


def test_rct_band_coverage():
    with _report("rct-coverage") as rep:
        scenario = RctScenario(
            marginal0=Marginal("normal", 0.0, 1.0),
            marginal1=Marginal("normal", 0.3, 1.0),
            rho=0.3,
            assign_prob=0.5,
            seed=20240502,
        )
        rows = coverage_rct(scenario, 500, 500, 0.10, np.linspace(-3.5, 3.5, 41), 500)
        fraction = float(np.mean([r.covered_everywhere for r in rows]))
        assert fraction >= 0.90
        assert rep.elapsed < 180.0


def test_key_lemma_inequality():
    with _report("key-lemma") as rep:
        rng = np.random.default_rng(20240516)
        fmap = FeatureMap(2, 1)
        for _ in range(100):
            beta0 = tuple(rng.uniform(-1.0, 1.0, size=2))
            beta1 = tuple(rng.uniform(-1.0, 1.0, size=2))
            sigma0 = float(rng.uniform(0.4, 1.3))
            sigma1 = float(rng.uniform(0.4, 1.3))
            scenario = ObservationalScenario(
                p=2, degree=1, beta0=beta0, beta1=beta1,
                sigma0=sigma0, sigma1=sigma1, rho=0.0,
                propensity_exponent=1, seed=int(rng.integers(1, 2**31)),
            )
            draw = generate_observational(scenario, 240)
            sample = ObservationalSample(
                covariates=draw.covariates, treatments=draw.treatments, outcomes=draw.observed
            )
            model = fit_conditional_model(
                sample, split_sample(sample, 0.5, seed=1), fmap
            )
            xs = rng.random((2, 2))
            feats = design_matrix(xs, fmap)
            for delta in (-0.5, 0.0, 0.75):
                for x, f in zip(xs, feats):
                    mu1_true = float(f @ np.asarray(beta1))
                    mu0_true = float(f @ np.asarray(beta0))
                    true_lo, true_hi = true_gaussian_bounds(
                        mu1_true, sigma1, mu0_true, sigma0, delta
                    )
                    pair = conditional_pibt_bounds(model, delta, x)
                    lhs = max(abs(pair.lower - true_lo), abs(pair.upper - true_hi))
                    m1s, m0s = mu1_true - 0.5 * delta, mu0_true + 0.5 * delta
                    smooth = lambda y: gaussian_pair_g(y, m1s, sigma1, m0s, sigma0)
                    rhs = sup_abs_step_vs_smooth(
                        model.residual_pool1 + model.fit1.predict(x),
                        model.residual_pool0 + model.fit0.predict(x),
                        delta,
                        smooth,
                        gaussian_g_extrema_points(m1s, sigma1, m0s, sigma0),
                    )
                    assert lhs <= rhs + 1e-12
        assert rep.elapsed < 120.0


def test_fig3_property_reproduction():
    with _report("fig3-properties") as rep:
        results = {}
        for name in ("fig3-deg1-m1", "fig3-deg2-m1", "fig3-deg2-m6"):
            _, rows = run_scenario(load_scenario(name))
            results[name] = [row[1] for row in rows]
            assert [row[0] for row in rows] == [2**k for k in range(8, 14)]
        for name, medians in results.items():
            assert all(
                a >= b - 1e-12 for a, b in zip(medians, medians[1:])
            ), f"medians not nonincreasing for {name}"
        for q1, q2 in zip(results["fig3-deg1-m1"], results["fig3-deg2-m1"]):
            assert q2 >= q1 - 1e-12
        for m1, m6 in zip(results["fig3-deg2-m1"], results["fig3-deg2-m6"]):
            assert m6 >= m1 - 1e-12
        assert rep.elapsed < 600.0


def test_numerics_oracles():
    with _report("numerics-oracles") as rep:
        for d in range(1, 11):
            for p in (0.5, 0.9, 0.95, 0.975, 0.995):
                assert abs(chi2_quantile(d, p) - chi2_quantile_bisect(d, p)) <= 1e-5
        assert abs(normal_cdf(1.959964) - 0.975) <= 1e-6
        rng = np.random.default_rng(20240517)
        for _ in range(50):
            d = int(rng.integers(2, 7))
            a = rng.normal(size=(d, d))
            m = a + a.T
            assert abs(min_eigenvalue(m) - min_eig_inverse_iteration(m)) <= 1e-8
        assert rep.elapsed < 10.0


def test_cli_golden_files(tmp_path):
    with _report("cli-golden-files"):
        here = os.path.dirname(__file__)
        fixture = os.path.join(here, "fixtures", "rct_small.csv")
        with open(os.path.join(here, "golden", "band.csv"), "rb") as fh:
            golden_band = fh.read()
        with open(os.path.join(here, "golden", "power.json"), "rb") as fh:
            golden_power = fh.read()
        band_runs, power_runs = [], []
        for k in (1, 2):
            band_out = tmp_path / f"band{k}.csv"
            power_out = tmp_path / f"power{k}.json"
            assert main([
                "band", "--input", fixture, "--delta-grid=-2:2:9",
                "--alpha", "0.1", "--output", str(band_out),
            ]) == 0
            assert main([
                "power", "--epsilon", "0.05", "--confidence", "0.9",
                "--output", str(power_out),
            ]) == 0
            band_runs.append(band_out.read_bytes())
            power_runs.append(power_out.read_bytes())
        assert band_runs[0] == band_runs[1] == golden_band
        assert power_runs[0] == power_runs[1] == golden_power
