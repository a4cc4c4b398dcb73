"""Command-line interface.

Subcommands
-----------
ci        one-sided upper confidence bound for P2 from (r2, n, k, alpha)
test      non-inferiority p-value from (r2, n, k, delta)
fit       run both on a CSV dataset (first column outcome, rest covariates)
simulate  rejection-rate study over a scenario grid, written as CSV
plot      per-K SVG panels of rejection-rate curves from a simulate CSV

Exit codes: 0 success, 2 validation failure, 3 convergence failure,
4 excessive Monte Carlo skips.  ``R2MARGIN_THREADS`` sets the simulate
worker count (0 = one per CPU).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from .errors import (
    ConvergenceError,
    DegenerateInputError,
    DimensionMismatchError,
    DomainError,
    ExcessiveSkipsError,
    NotPositiveDefiniteError,
    RankDeficiencyError,
)
from .figures import REQUIRED_COLUMNS, render_rejection_figure
from .inference import TestInput, noninferiority_pvalue, upper_ci_p2
from .montecarlo import (
    Scenario,
    default_delta_grid,
    exchangeable_covariance,
    paper_grid,
    run_scenario,
)
from .regression import Dataset, fit_ols

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_CONVERGENCE = 3
EXIT_SKIPS = 4

RESULT_COLUMNS = (
    "scenario_id",
    "n",
    "k",
    "sigma2",
    "true_p2",
    "delta",
    "alpha",
    "n_sims",
    "rejections",
    "rejection_rate",
    "skipped",
    "master_seed",
)

_VALIDATION_ERRORS = (
    DomainError,
    DegenerateInputError,
    DimensionMismatchError,
    RankDeficiencyError,
    NotPositiveDefiniteError,
)

# Upper bound for the observed R2 handed to the inference layer; a perfect
# fit rounds to exactly 1.0 in floats, which sits outside the parameter
# space, so it is nudged to the largest admissible value (p-value ~ 1).
_R2_CEILING = 1.0 - 1e-12


def _fmt(value: float, precision: int) -> str:
    return format(float(value), f".{precision}g")


def _print_report(meta: str, lines: list[tuple[str, str]]) -> None:
    print(meta)
    width = max(len(name) for name, _ in lines)
    for name, text in lines:
        print(f"{name:<{width}}  {text}")


def _cmd_ci(args) -> int:
    observed = TestInput(r2=args.r2, n=args.n, k=args.k)
    bound = upper_ci_p2(observed, args.alpha, tol=args.tol, halve_alpha=not args.full_alpha)
    meta = (
        f"# r2margin ci --r2 {args.r2!r} --n {args.n} --k {args.k} "
        f"--alpha {args.alpha!r} --tol {args.tol!r}"
        + (" --full-alpha" if args.full_alpha else "")
    )
    _print_report(
        meta,
        [
            ("upper", _fmt(bound.upper, args.precision)),
            ("level", _fmt(bound.level, args.precision)),
            ("alpha", _fmt(bound.alpha_param, args.precision)),
            ("v_final", _fmt(bound.v_final, args.precision)),
            ("iterations", str(bound.iterations)),
            ("clamped", "yes" if bound.clamped else "no"),
        ],
    )
    return EXIT_OK


def _cmd_test(args) -> int:
    observed = TestInput(r2=args.r2, n=args.n, k=args.k)
    result = noninferiority_pvalue(observed, args.delta, tol=args.tol)
    meta = (
        f"# r2margin test --r2 {args.r2!r} --n {args.n} --k {args.k} "
        f"--delta {args.delta!r} --tol {args.tol!r}"
    )
    _print_report(
        meta,
        [
            ("p_value", _fmt(result.p_value, args.precision)),
            ("f_stat", _fmt(result.f_stat, args.precision)),
            ("v_final", _fmt(result.v_final, args.precision)),
            ("delta", _fmt(result.delta, args.precision)),
            ("iterations", str(result.iterations)),
        ],
    )
    return EXIT_OK


def _read_dataset_csv(path: str) -> Dataset:
    try:
        with open(path, newline="", encoding="utf-8") as handle:
            rows = [row for row in csv.reader(handle) if row]
    except OSError as exc:
        raise DomainError(f"cannot read {path!r}: {exc}") from None
    if len(rows) < 2:
        raise DomainError("CSV must contain a header row followed by data rows")
    header = rows[0]
    if len(header) < 2:
        raise DomainError("CSV needs an outcome column plus at least one covariate column")
    width = len(header)
    outcome = []
    covariates = []
    for line_number, row in enumerate(rows[1:], start=2):
        if len(row) != width:
            raise DomainError(f"line {line_number} has {len(row)} fields, expected {width}")
        try:
            values = [float(cell) for cell in row]
        except ValueError:
            raise DomainError(f"line {line_number} contains a non-numeric cell") from None
        if not all(math.isfinite(v) for v in values):
            raise DomainError(f"line {line_number} contains a non-finite value")
        outcome.append(values[0])
        covariates.append(values[1:])
    return Dataset(y=np.array(outcome), x=np.array(covariates))


def _cmd_fit(args) -> int:
    data = _read_dataset_csv(args.data)
    fit = fit_ols(data)
    r2 = min(max(fit.r2, 0.0), _R2_CEILING)
    observed = TestInput(r2=r2, n=data.n_obs, k=data.n_covariates)
    bound = upper_ci_p2(observed, args.alpha)
    result = noninferiority_pvalue(observed, args.delta)
    if result.p_value < args.alpha:
        decision = f"reject H0: P2 >= {args.delta:g} (model explains less than the margin)"
    else:
        decision = f"fail to reject H0: P2 >= {args.delta:g}"
    meta = (
        f"# r2margin fit --data {args.data} --delta {args.delta!r} --alpha {args.alpha!r}"
    )
    _print_report(
        meta,
        [
            ("n", str(data.n_obs)),
            ("k", str(data.n_covariates)),
            ("r2", _fmt(r2, args.precision)),
            ("ci_upper", _fmt(bound.upper, args.precision)),
            ("ci_level", _fmt(bound.level, args.precision)),
            ("p_value", _fmt(result.p_value, args.precision)),
            ("decision", decision),
        ],
    )
    return EXIT_OK


def _load_config(path: str) -> tuple[list[Scenario], list[float]]:
    try:
        with open(path, encoding="utf-8") as handle:
            config = json.load(handle)
    except OSError as exc:
        raise DomainError(f"cannot read {path!r}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise DomainError(f"config is not valid JSON: {exc}") from None
    if not isinstance(config, dict):
        raise DomainError("config must be a JSON object")
    unknown = set(config) - {"scenarios", "deltas"}
    if unknown:
        raise DomainError(f"config has unknown top-level keys: {sorted(unknown)}")
    raw_scenarios = config.get("scenarios")
    raw_deltas = config.get("deltas")
    if not isinstance(raw_scenarios, list) or not raw_scenarios:
        raise DomainError("config key 'scenarios' must be a non-empty list")
    if not isinstance(raw_deltas, list) or not raw_deltas:
        raise DomainError("config key 'deltas' must be a non-empty list")

    required = {"id", "n", "k", "beta", "sigma2", "sigma_offdiag"}
    scenarios = []
    for index, entry in enumerate(raw_scenarios):
        if not isinstance(entry, dict):
            raise DomainError(f"scenario {index} must be a JSON object")
        missing = required - set(entry)
        if missing:
            raise DomainError(f"scenario {index} is missing keys: {sorted(missing)}")
        unknown = set(entry) - required - {"beta0"}
        if unknown:
            raise DomainError(f"scenario {index} has unknown keys: {sorted(unknown)}")
        if not isinstance(entry["id"], str):
            raise DomainError(f"scenario {index}: 'id' must be a string")
        if not isinstance(entry["n"], int) or isinstance(entry["n"], bool):
            raise DomainError(f"scenario {index}: 'n' must be an integer")
        if not isinstance(entry["k"], int) or isinstance(entry["k"], bool):
            raise DomainError(f"scenario {index}: 'k' must be an integer")
        if not isinstance(entry["beta"], list):
            raise DomainError(f"scenario {index}: 'beta' must be a list of numbers")
        scenarios.append(
            Scenario(
                id=entry["id"],
                n=entry["n"],
                k=entry["k"],
                beta=np.asarray(entry["beta"], dtype=float),
                sigma2=float(entry["sigma2"]),
                sigma_matrix=exchangeable_covariance(entry["k"], float(entry["sigma_offdiag"])),
                beta0=float(entry.get("beta0", 0.0)),
            )
        )
    identifiers = [s.id for s in scenarios]
    if len(set(identifiers)) != len(identifiers):
        raise DomainError("scenario ids must be unique")
    deltas = [float(d) for d in raw_deltas]
    return scenarios, deltas


def _cmd_simulate(args) -> int:
    if args.sims < 1:
        raise DomainError(f"--sims must be a positive integer, got {args.sims}")
    if args.paper_grid:
        scenarios = paper_grid()
        deltas = default_delta_grid()
        source = "--paper-grid"
    else:
        scenarios, deltas = _load_config(args.config)
        source = f"--config {args.config}"

    records = []
    for scenario in scenarios:
        records.extend(run_scenario(scenario, deltas, args.sims, args.alpha, args.seed))
    records.sort(key=lambda record: (record.scenario_id, record.delta))

    by_id = {scenario.id: scenario for scenario in scenarios}
    # The metadata comment carries the semantic flag set only: neither the
    # output path nor the worker count may influence the bytes written.
    meta = f"# r2margin simulate {source} --sims {args.sims} --alpha {args.alpha!r} --seed {args.seed}"
    with open(args.out, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(meta + "\n")
        handle.write(",".join(RESULT_COLUMNS) + "\n")
        for record in records:
            scenario = by_id[record.scenario_id]
            handle.write(
                ",".join(
                    [
                        record.scenario_id,
                        str(scenario.n),
                        str(scenario.k),
                        str(scenario.sigma2),
                        str(record.true_p2),
                        str(record.delta),
                        str(record.alpha),
                        str(record.n_sims),
                        str(record.rejections),
                        str(record.rejection_rate),
                        str(record.skipped),
                        str(record.master_seed),
                    ]
                )
                + "\n"
            )
    print(f"wrote {len(records)} rows ({len(scenarios)} scenarios) to {args.out}")
    return EXIT_OK


def _read_results_csv(path: str) -> list[dict]:
    try:
        with open(path, encoding="utf-8") as handle:
            content = [line for line in handle if not line.startswith("#")]
    except OSError as exc:
        raise DomainError(f"cannot read {path!r}: {exc}") from None
    reader = csv.DictReader(io.StringIO("".join(content)))
    if reader.fieldnames is None:
        raise DomainError("results CSV is empty")
    missing = set(REQUIRED_COLUMNS) - set(reader.fieldnames)
    if missing:
        raise DomainError(f"results CSV is missing columns: {sorted(missing)}")
    rows = list(reader)
    if not rows:
        raise DomainError("results CSV has no data rows")
    return rows


def _cmd_plot(args) -> int:
    rows = _read_results_csv(args.results)
    svg = render_rejection_figure(rows, restricted_axis=args.restricted_axis)
    with open(args.out, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(svg)
    print(f"wrote figure with {len(rows)} source rows to {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="r2margin",
        description=(
            "Non-inferiority testing and one-sided confidence bounds for the "
            "population share of variance explained by a linear model with "
            "random regressors."
        ),
    )
    subparsers = parser.add_subparsers(dest="subcommand", required=True)

    ci = subparsers.add_parser("ci", help="one-sided upper confidence bound for P2")
    ci.add_argument("--r2", type=float, required=True, help="observed R-squared in [0, 1)")
    ci.add_argument("--n", type=int, required=True, help="number of observations")
    ci.add_argument("--k", type=int, required=True, help="number of covariates")
    ci.add_argument("--alpha", type=float, required=True, help="one minus the confidence level")
    ci.add_argument("--tol", type=float, default=1e-12, help="fixed-point tolerance")
    ci.add_argument(
        "--full-alpha",
        action="store_true",
        help="take the F quantile at alpha instead of the default alpha/2",
    )
    ci.add_argument("--precision", type=int, default=7, help="significant digits to print")
    ci.set_defaults(handler=_cmd_ci)

    test = subparsers.add_parser("test", help="non-inferiority p-value for P2 >= delta")
    test.add_argument("--r2", type=float, required=True, help="observed R-squared in [0, 1)")
    test.add_argument("--n", type=int, required=True, help="number of observations")
    test.add_argument("--k", type=int, required=True, help="number of covariates")
    test.add_argument("--delta", type=float, required=True, help="non-inferiority margin in (0, 1)")
    test.add_argument("--tol", type=float, default=1e-12, help="fixed-point tolerance")
    test.add_argument("--precision", type=int, default=7, help="significant digits to print")
    test.set_defaults(handler=_cmd_test)

    fit = subparsers.add_parser("fit", help="fit a CSV dataset and test it")
    fit.add_argument(
        "--data",
        required=True,
        help="CSV path: header row, column 1 = outcome, remaining columns = covariates",
    )
    fit.add_argument("--delta", type=float, required=True, help="non-inferiority margin in (0, 1)")
    fit.add_argument("--alpha", type=float, default=0.05, help="test level (default 0.05)")
    fit.add_argument("--precision", type=int, default=7, help="significant digits to print")
    fit.set_defaults(handler=_cmd_fit)

    simulate = subparsers.add_parser("simulate", help="rejection-rate study to CSV")
    grid = simulate.add_mutually_exclusive_group(required=True)
    grid.add_argument(
        "--paper-grid",
        action="store_true",
        help="use the built-in 30-scenario grid with the default margin grid",
    )
    grid.add_argument("--config", help="JSON scenario configuration path")
    simulate.add_argument("--sims", type=int, required=True, help="replicates per scenario")
    simulate.add_argument("--alpha", type=float, default=0.05, help="test level (default 0.05)")
    simulate.add_argument("--seed", type=int, required=True, help="master seed")
    simulate.add_argument("--out", required=True, help="output CSV path")
    simulate.set_defaults(handler=_cmd_simulate)

    plot = subparsers.add_parser("plot", help="render a simulate CSV to SVG")
    plot.add_argument("--results", required=True, help="CSV produced by the simulate subcommand")
    plot.add_argument("--out", required=True, help="output SVG path")
    plot.add_argument(
        "--restricted-axis",
        action="store_true",
        help="cap the vertical axis at 0.2 to magnify behaviour near the test level",
    )
    plot.set_defaults(handler=_cmd_plot)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except _VALIDATION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except ExcessiveSkipsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SKIPS


def entrypoint() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entrypoint()
