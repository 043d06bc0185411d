"""Command-line frontend: estimate, test, simulate, power.

Sample files are headerless CSV, one observation per row; the model is a
JSON record {link, alpha?, features, p} (optionally with a nested "solver"
record {tol, max_iter, fd_step}).  Results are emitted one key=value per
line.  Exit codes: 0 success, 1 usage/input error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from .divergences import make_divergence
from .errors import (
    MalformedCsv,
    NotConverged,
    RatiotestError,
    RejectionSamplingStall,
    SingularCovariance,
    SingularJacobian,
    UsageError,
)
from .estimation import Dataset, SolverOptions, fit, optimal_eta, solver_options_from_config
from .htest import df_test, empirical_likelihood_test, hotelling_t2_test, power_from_noncentrality
from .models import model_from_config
from .simlab import emit_table, load_sim_config, run

__all__ = ["parse_and_dispatch", "main", "read_samples"]

_NUMERICAL_ERRORS = (
    NotConverged,
    SingularJacobian,
    SingularCovariance,
    RejectionSamplingStall,
    np.linalg.LinAlgError,
)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{message}\n{self.format_usage()}")


def _build_parser() -> _Parser:
    parser = _Parser(prog="ratiotest", description=__doc__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    est = sub.add_parser("estimate", help="fit the density-ratio parameter")
    est.add_argument("--num", required=True, help="numerator sample CSV")
    est.add_argument("--den", required=True, help="denominator sample CSV")
    est.add_argument("--model", required=True, help="model config JSON")

    tst = sub.add_parser("test", help="run a two-sample homogeneity test")
    tst.add_argument("--family", required=True, choices=["df", "el", "t2"])
    tst.add_argument("--divergence", default="kl",
                     help="kl | mi | power[:alpha] | linear-kl (df family)")
    tst.add_argument("--decomposition", default="optimal",
                     choices=["optimal", "conjugate", "example"])
    tst.add_argument("--alpha", required=True, type=float, help="significance level")
    tst.add_argument("--num", required=True)
    tst.add_argument("--den", required=True)
    tst.add_argument("--model", help="model config JSON (df and el families)")

    sim = sub.add_parser("simulate", help="run a Monte Carlo experiment")
    sim.add_argument("--config", required=True, help="simulation config TOML")
    sim.add_argument("--out", required=True, help="output CSV path")
    sim.add_argument("--seed", type=int, help="override the config master seed")

    pwr = sub.add_parser("power", help="asymptotic local-alternative power")
    pwr.add_argument("--dof", required=True, type=int)
    pwr.add_argument("--ncp", required=True, type=float)
    pwr.add_argument("--alpha", required=True, type=float)

    return parser


def read_samples(path) -> np.ndarray:
    """Read a headerless CSV of numeric rows; report malformed cells."""
    rows = []
    width = None
    try:
        fh = open(path, newline="")
    except FileNotFoundError:
        raise
    with fh:
        for i, rec in enumerate(csv.reader(fh), start=1):
            if not rec or all(tok.strip() == "" for tok in rec):
                continue
            vals = []
            for j, tok in enumerate(rec, start=1):
                try:
                    vals.append(float(tok))
                except ValueError:
                    raise MalformedCsv(
                        f"{path}: row {i}, column {j}: not a number: {tok.strip()!r}",
                        row=i,
                        column=j,
                    ) from None
            if width is None:
                width = len(vals)
            elif len(vals) != width:
                raise MalformedCsv(
                    f"{path}: row {i}: expected {width} columns, got {len(vals)}", row=i
                )
            rows.append(vals)
    if not rows:
        raise MalformedCsv(f"{path}: no data rows", row=0)
    return np.asarray(rows, dtype=float)


def _load_model(path):
    with open(path) as fh:
        config = json.load(fh)
    model = model_from_config(config)
    options = (
        solver_options_from_config(config["solver"]) if "solver" in config else SolverOptions()
    )
    return model, options


def _load_dataset(num_path, den_path, model=None) -> Dataset:
    num = read_samples(num_path)
    den = read_samples(den_path)
    data = Dataset(num, den)
    if model is not None and data.p != model.input_dim:
        raise ValueError(
            f"sample width {data.p} does not match model dimension p={model.input_dim}"
        )
    return data


def _parse_divergence_flag(flag: str, rho: float, decomposition: str):
    name, _, suffix = flag.partition(":")
    name = name.lower()
    alpha = float(suffix) if suffix else (1.0 if name == "power" else None)
    return make_divergence(name, rho, alpha=alpha, decomposition=decomposition)


def _emit(record: dict) -> str:
    lines = []
    for key, value in record.items():
        if isinstance(value, bool):
            value = "true" if value else "false"
        elif isinstance(value, float):
            value = repr(value)
        lines.append(f"{key}={value}")
    return "\n".join(lines) + "\n"


def _cmd_estimate(args) -> str:
    model, options = _load_model(args.model)
    data = _load_dataset(args.num, args.den, model)
    result = fit(data, model, optimal_eta(), options)
    record = {
        "converged": result.converged,
        "iterations": result.iterations,
        "residual": float(result.final_residual),
        "jacobian_condition": float(result.jacobian_condition),
    }
    for k, value in enumerate(result.theta_hat, start=1):
        record[f"theta_{k}"] = float(value)
    return _emit(record)


def _cmd_test(args) -> str:
    if args.family == "t2":
        data = _load_dataset(args.num, args.den)
        outcome = hotelling_t2_test(data, args.alpha)
    else:
        if not args.model:
            raise UsageError(f"--model is required for the {args.family} family")
        model, options = _load_model(args.model)
        data = _load_dataset(args.num, args.den, model)
        if args.family == "el":
            outcome = empirical_likelihood_test(data, model, args.alpha, options=options)
        else:
            div = _parse_divergence_flag(args.divergence, data.rho, args.decomposition)
            outcome = df_test(data, model, div, args.alpha, options=options)
    return _emit(
        {
            "family": outcome.family,
            "statistic": outcome.statistic,
            "dof": outcome.dof,
            "threshold": outcome.threshold,
            "p_value": outcome.p_value,
            "reject": outcome.reject,
        }
    )


def _cmd_simulate(args) -> str:
    cfg = load_sim_config(args.config)
    if args.seed is not None:
        from dataclasses import replace

        cfg = replace(cfg, master_seed=args.seed)
    report = run(cfg)
    text = emit_table(report, format="csv")
    with open(args.out, "w", newline="") as fh:
        fh.write(text)
    return _emit({"out": args.out, "rows": len(report.rows), "config_hash": report.config_hash})


def _cmd_power(args) -> str:
    power = power_from_noncentrality(args.ncp, args.dof, args.alpha)
    return _emit(
        {"noncentrality": float(args.ncp), "dof": args.dof, "alpha": args.alpha, "power": power}
    )


_COMMANDS = {
    "estimate": _cmd_estimate,
    "test": _cmd_test,
    "simulate": _cmd_simulate,
    "power": _cmd_power,
}


def parse_and_dispatch(argv) -> int:
    """Parse argv (without the program name) and run one subcommand."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        sys.stdout.write(_COMMANDS[args.subcommand](args))
        return 0
    except UsageError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    except _NUMERICAL_ERRORS as exc:
        sys.stderr.write(f"numerical failure: {exc}\n")
        return 2
    except (MalformedCsv, FileNotFoundError, RatiotestError, ValueError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1


def main() -> None:
    sys.exit(parse_and_dispatch(sys.argv[1:]))
