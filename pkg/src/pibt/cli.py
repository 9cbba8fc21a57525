"""Command-line front end.

Subcommands: bounds, band, power, cond-band, simulate. Data goes to the
output path (or stdout); diagnostics go to stderr. Exit codes: 0 ok,
2 input error, 3 degenerate data, 4 singular design. CSV output is
comma-separated UTF-8 with a header, '.' decimals, and LF line endings;
floats are written with shortest round-trip formatting so emitted files
re-ingest byte-identically.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from typing import Optional

import numpy as np

from .conditional import (
    ObservationalSample,
    fit_conditional_model,
    split_sample,
    uniform_confidence_band,
)
from .ecdf import build_ecdf
from .errors import (
    DegenerateSplitError,
    InvalidInputError,
    SingleArmError,
    SingularDesignError,
)
from .makarov import pibt_bounds_curve
from .rct import TwoArmSample, confidence_band, required_sample_size
from .regression import FeatureMap
from .simulate import load_scenario, run_scenario

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_DEGENERATE = 3
EXIT_SINGULAR = 4


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (np.floating,)):
        return repr(float(value))
    return str(value)


def _write_csv(path: Optional[str], header: list[str], rows) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    text = buf.getvalue()
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _write_json(path: Optional[str], payload: dict) -> None:
    text = json.dumps(payload, indent=2) + "\n"
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _read_table(path: str) -> tuple[list[str], list[list[str]]]:
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            table = list(reader)
    except OSError as exc:
        raise InvalidInputError(f"{path}: {exc}") from exc
    if not table:
        raise InvalidInputError(f"{path}: file is empty")
    return [c.strip() for c in table[0]], table[1:]


def _covariate_columns(header: list[str]) -> list[int]:
    cols = []
    k = 1
    while f"x{k}" in header:
        cols.append(header.index(f"x{k}"))
        k += 1
    return cols


def _parse_float(path: str, lineno: int, name: str, raw: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise InvalidInputError(f"{path}:{lineno}: bad {name} value {raw!r}") from None


def _read_outcome_file(path: str, want_covariates: bool):
    header, body = _read_table(path)
    for required in ("outcome", "treatment"):
        if required not in header:
            raise InvalidInputError(f"{path}:1: missing required column {required!r}")
    y_col = header.index("outcome")
    w_col = header.index("treatment")
    x_cols = _covariate_columns(header)
    if want_covariates and not x_cols:
        raise InvalidInputError(f"{path}:1: need covariate columns x1..xp")
    outcomes, treatments, covariates = [], [], []
    for lineno, row in enumerate(body, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise InvalidInputError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
        outcomes.append(_parse_float(path, lineno, "outcome", row[y_col]))
        w_raw = row[w_col].strip()
        if w_raw not in ("0", "1"):
            raise InvalidInputError(f"{path}:{lineno}: treatment must be 0 or 1, got {w_raw!r}")
        treatments.append(int(w_raw))
        if x_cols:
            covariates.append([_parse_float(path, lineno, "covariate", row[c]) for c in x_cols])
    if not outcomes:
        raise InvalidInputError(f"{path}: no data rows")
    X = np.asarray(covariates) if x_cols else None
    return np.asarray(outcomes), np.asarray(treatments), X


def _read_query_grid(path: str, p: int) -> np.ndarray:
    header, body = _read_table(path)
    x_cols = _covariate_columns(header)
    if len(x_cols) != p:
        raise InvalidInputError(f"{path}:1: query grid must carry columns x1..x{p}")
    rows = []
    for lineno, row in enumerate(body, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        rows.append([_parse_float(path, lineno, "covariate", row[c]) for c in x_cols])
    if not rows:
        raise InvalidInputError(f"{path}: no query rows")
    return np.asarray(rows)


def _delta_grid_from_args(args) -> np.ndarray:
    if args.delta_grid is not None:
        parts = args.delta_grid.split(":")
        if len(parts) != 3:
            raise InvalidInputError("--delta-grid expects min:max:count")
        try:
            lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError:
            raise InvalidInputError(f"bad --delta-grid {args.delta_grid!r}") from None
        if count < 1:
            raise InvalidInputError("--delta-grid count must be at least 1")
        if count == 1:
            return np.array([lo])
        if hi < lo:
            raise InvalidInputError("--delta-grid needs max >= min")
        return np.linspace(lo, hi, count)
    if args.delta is not None:
        return np.array([float(args.delta)])
    raise InvalidInputError("provide --delta or --delta-grid")


def cmd_bounds(args) -> int:
    outcomes, treatments, _ = _read_outcome_file(args.input, want_covariates=False)
    sample = TwoArmSample.from_observations(outcomes, treatments)
    grid = _delta_grid_from_args(args)
    pairs = pibt_bounds_curve(
        build_ecdf(sample.treated_outcomes), build_ecdf(sample.control_outcomes), grid
    )
    _write_csv(args.output, ["delta", "lower", "upper"], [[p.delta, p.lower, p.upper] for p in pairs])
    return EXIT_OK


def cmd_band(args) -> int:
    outcomes, treatments, _ = _read_outcome_file(args.input, want_covariates=False)
    sample = TwoArmSample.from_observations(outcomes, treatments)
    grid = _delta_grid_from_args(args)
    band = confidence_band(sample, grid, alpha=args.alpha)
    rows = [
        [float(d), float(lo), float(hi), band.margin, band.confidence_level]
        for d, lo, hi in zip(band.delta_grid, band.lower_clipped, band.upper_clipped)
    ]
    _write_csv(
        args.output,
        ["delta", "lower_clipped", "upper_clipped", "margin", "confidence"],
        rows,
    )
    return EXIT_OK


def cmd_power(args) -> int:
    n0, n1 = required_sample_size(args.epsilon, args.confidence, args.arm_ratio)
    _write_json(
        args.output,
        {
            "epsilon": args.epsilon,
            "confidence": args.confidence,
            "n0": n0,
            "n1": n1,
            "total": n0 + n1,
        },
    )
    return EXIT_OK


def cmd_cond_band(args) -> int:
    outcomes, treatments, X = _read_outcome_file(args.input, want_covariates=True)
    sample = ObservationalSample(covariates=X, treatments=treatments, outcomes=outcomes)
    fmap = FeatureMap(sample.p, args.degree)
    query = _read_query_grid(args.query_grid, sample.p)
    split = split_sample(sample, args.split_fraction, args.seed)
    model = fit_conditional_model(sample, split, fmap)
    band = uniform_confidence_band(
        model, args.delta, query, args.alpha, conservative_max=args.conservative_max
    )
    rows = [
        [i, band.delta, float(lo), float(hi)]
        for i, (lo, hi) in enumerate(zip(band.lower_clipped, band.upper_clipped))
    ]
    _write_csv(args.output, ["x_row_id", "delta", "lower_clipped", "upper_clipped"], rows)
    m = band.margin
    _write_json(
        None,
        {
            "alpha": m.alpha,
            "dim": m.dim,
            "chi2_quantile": m.chi2_quantile,
            "op_norm_control": m.op_norms[0],
            "op_norm_treated": m.op_norms[1],
            "regression_term": m.regression_term,
            "dkw_term": m.dkw_term,
            "total": m.total,
            "confidence": m.confidence,
            "conservative_max": m.conservative_max,
        },
    )
    return EXIT_OK


def cmd_simulate(args) -> int:
    config = load_scenario(args.scenario)
    header, rows = run_scenario(config, seed_override=args.seed)
    _write_csv(args.output, header, rows)
    return EXIT_OK


def _add_io_flags(parser, with_delta=True, with_alpha=False):
    parser.add_argument("--input", required=True, help="CSV with outcome,treatment[,x1..xp]")
    parser.add_argument("--output", default=None, help="output path (default stdout)")
    if with_delta:
        parser.add_argument("--delta", type=float, default=None, help="single threshold")
        parser.add_argument("--delta-grid", default=None, help="min:max:count threshold grid")
    if with_alpha:
        parser.add_argument("--alpha", type=float, default=0.10, help="significance level")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pibt",
        description="Distribution-free bounds on the probability an individual benefits from treatment.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_bounds = sub.add_parser("bounds", help="plug-in bound curve from a two-arm CSV")
    _add_io_flags(p_bounds)
    p_bounds.set_defaults(func=cmd_bounds)

    p_band = sub.add_parser("band", help="bound curve with the simultaneous margin")
    _add_io_flags(p_band, with_alpha=True)
    p_band.set_defaults(func=cmd_band)

    p_power = sub.add_parser("power", help="sample sizes for a target margin and confidence")
    p_power.add_argument("--epsilon", type=float, required=True, help="target margin of error")
    p_power.add_argument("--confidence", type=float, required=True, help="target confidence level")
    p_power.add_argument("--arm-ratio", type=float, default=1.0, help="n1/n0")
    p_power.add_argument("--output", default=None)
    p_power.set_defaults(func=cmd_power)

    p_cond = sub.add_parser("cond-band", help="covariate-conditional bounds with a uniform margin")
    _add_io_flags(p_cond, with_delta=False, with_alpha=True)
    p_cond.add_argument("--delta", type=float, required=True, help="benefit threshold")
    p_cond.add_argument("--query-grid", required=True, help="CSV of query strata (columns x1..xp)")
    p_cond.add_argument("--degree", type=int, default=1, help="polynomial degree of the feature map")
    p_cond.add_argument("--split-fraction", type=float, default=0.5, help="share of rows used for fitting")
    p_cond.add_argument("--seed", type=int, default=0, help="split seed")
    p_cond.add_argument(
        "--conservative-max",
        action="store_true",
        help="use twice the larger per-arm regression term",
    )
    p_cond.set_defaults(func=cmd_cond_band)

    p_sim = sub.add_parser("simulate", help="run a scenario file (power curve or coverage table)")
    p_sim.add_argument("--scenario", required=True, help="scenario file path or bundled name")
    p_sim.add_argument("--output", default=None)
    p_sim.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    p_sim.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InvalidInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (SingleArmError, DegenerateSplitError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except SingularDesignError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SINGULAR
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
