# ---
# jupyter:
#   jupytext:
#     formats: ipynb,py:percent
#     text_representation:
#       extension: .py
#       format_name: percent
#       format_version: '1.3'
#       jupytext_version: 1.19.1
#   kernelspec:
#     display_name: Python (miniforge)
#     language: python
#     name: miniforge-base
# ---

# %%
# cli.py

# %%
# Dev setup
# %load_ext autoreload
# %autoreload 2

# %%
import argparse
import json
import logging
import sys
from fractions import Fraction
from typing import List, Optional

from laplace_knn.core.errors import ConfigurationError, LaplaceKnnError
from laplace_knn.core.estimator import choose_truncation, estimate_single_detailed, estimate_two_detailed
from laplace_knn.core.experiment import fit_by_variant, run_mse_sweep
from laplace_knn.core.functionals import parse_functional, tail_envelope
from laplace_knn.core.rates import theoretical_exponent_single, theoretical_exponent_two
from laplace_knn.core.serialization import emit_results, load_experiment_config, read_points
from laplace_knn.core.validation import SUITES, run_suite


# %%
def _exact_number(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise ConfigurationError(f"not a number: {text!r}")


def cmd_estimate(args: argparse.Namespace) -> int:
    spec = parse_functional(args.functional)
    sample_x = read_points(args.input)
    sample_y = read_points(args.input2) if args.input2 else None
    if spec.arity == 2 and (sample_y is None or args.l is None):
        raise ConfigurationError(f"{spec.name} needs --input2 and --l")
    if spec.arity == 1 and sample_y is not None:
        raise ConfigurationError(f"{spec.name} takes a single --input")

    windows = None
    if not args.no_truncation:
        first, second = choose_truncation(
            spec, sample_x.m, args.k, sample_x.d,
            sigma=args.sigma, l=args.l,
            n=sample_y.m if sample_y is not None else None,
            tau=args.tau,
        )
        windows = first if spec.arity == 1 else (first, second)

    if spec.arity == 1:
        result = estimate_single_detailed(sample_x, spec, args.k, windows)
    else:
        result = estimate_two_detailed(sample_x, sample_y, spec, args.k, args.l, windows)

    if args.json:
        doc = {"functional": spec.name, "k": args.k, "l": args.l, **result.to_json()}
        print(json.dumps(doc, sort_keys=True))
    else:
        print(repr(result.value))
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    config = load_experiment_config(args.config)
    out = args.out or config.out
    if not out:
        raise ConfigurationError("sweep needs --out or an 'out' entry in the config")
    table = run_mse_sweep(config)
    emit_results(table, "csv", out)
    fits = fit_by_variant(table) if len(config.sizes) >= 3 else {}
    if args.json_out:
        emit_results(table, "json", args.json_out, config=config, fits=fits)
    for variant, fit in fits.items():
        print(f"{variant}: slope={fit.slope:.4f} r2={fit.r_squared:.4f}")
    return 0


def cmd_rates(args: argparse.Namespace) -> int:
    spec = parse_functional(args.functional)
    sigma = _exact_number(args.sigma)
    if spec.arity == 2 and args.l is None:
        raise ConfigurationError(f"{spec.name} needs --l")
    env = tail_envelope(spec, args.k, args.l)
    if spec.arity == 1:
        rates = theoretical_exponent_single(sigma, env.a, args.k, args.d)
    else:
        tau = _exact_number(args.tau) if args.tau is not None else sigma
        rates = theoretical_exponent_two(sigma, env.a, args.k, tau, env.a_tilde, args.l, args.d)
    print(f"lambda: {float(rates.lam):.6g}")
    print(f"mse_exponent: {float(rates.mse_exponent):.6g}")
    print(f"variance_exponent: {float(rates.variance_exponent):.6g}")
    print(f"cell: {rates.cell}")
    print(f"guaranteed: {str(rates.guaranteed).lower()}")
    print(f"suboptimal: {str(rates.suboptimal).lower()}")
    for note in rates.notes:
        print(f"note: {note}")
    return 0


def cmd_validate(args: argparse.Namespace) -> int:
    report = run_suite(args.suite)
    print(report.summary())
    return 0 if report.ok else 1


# %%
def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="laplace-knn",
        description="Inverse-Laplace k-NN estimators of entropies and divergences.",
    )
    parser.add_argument("--verbose", action="store_true", help="log at DEBUG level")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="estimate a functional from point CSV files")
    p.add_argument("--input", required=True)
    p.add_argument("--input2")
    p.add_argument("--functional", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--l", type=int)
    p.add_argument("--no-truncation", action="store_true")
    p.add_argument("--sigma", type=float)
    p.add_argument("--tau", type=float)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("sweep", help="Monte Carlo MSE sweep from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.add_argument("--json-out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("rates", help="theoretical bias and MSE exponents")
    p.add_argument("--functional", required=True)
    p.add_argument("--sigma", required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--tau")
    p.add_argument("--l", type=int)
    p.set_defaults(func=cmd_rates)

    p = sub.add_parser("validate", help="run a self-check suite")
    p.add_argument("--suite", required=True, choices=sorted(SUITES))
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except LaplaceKnnError as e:
        print(f"laplace-knn: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

# %%
