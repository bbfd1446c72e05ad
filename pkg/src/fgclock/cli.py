"""Command-line front end: simulate, estimate, sweep, compare-oracle.

Every subcommand is deterministic given its flags, config file and seed.
File-writing subcommands drop a JSON manifest next to their outputs so a
run can be reproduced bit-for-bit. Exit codes: 0 success, 2 usage,
3 validation, 4 convergence, 5 I/O.
"""

import argparse
import csv
import dataclasses
import json
import sys

import numpy as np

from . import __version__
from .errors import ConvergenceError, FgclockError, ParameterError
from .estimators import (
    VARIANT_ML,
    VARIANT_PAPER,
    VARIANT_RECURSIVE,
    backtrack_estimate,
    closed_form_estimate_paper,
    fge_offset,
    ml_offset,
)
from .experiments import (
    AXIS_ROUNDS,
    AXIS_SIGMA,
    ALL_ESTIMATORS,
    SweepConfig,
    mse_vs_rounds,
    mse_vs_sigma,
)
from .model import ClockModelParams, simulate_observations, simulate_paths
from .oracle import MAX_ENUM_ROUNDS, exact_map_active_set

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_VALIDATION = 3
EXIT_CONVERGENCE = 4
EXIT_IO = 5

_MODEL_DEFAULTS = {
    "lambda_xi": 10.0,
    "lambda_psi": 10.0,
    "sigma": 1e-2,
    "d0": 1.0,
    "theta0": 0.5,
    "rounds": 25,
}

_MODEL_KEYS = tuple(_MODEL_DEFAULTS)
_SWEEP_KEYS = ("axis", "values", "trials", "seed", "estimators")


def _load_config(path):
    if path is None:
        return {}
    with open(path) as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise ParameterError("config file must hold a JSON object")
    unknown = set(cfg) - set(_MODEL_KEYS) - set(_SWEEP_KEYS)
    if unknown:
        raise ParameterError(f"unknown config keys: {sorted(unknown)}")
    return cfg


def _resolve_model(cfg, args):
    """Model parameters: defaults, then config file, then flag overrides."""
    merged = dict(_MODEL_DEFAULTS)
    merged.update({k: cfg[k] for k in _MODEL_KEYS if k in cfg})
    for key in _MODEL_KEYS:
        flag = getattr(args, key, None)
        if flag is not None:
            merged[key] = flag
    merged["rounds"] = int(merged["rounds"])
    return ClockModelParams(**merged)


def _write_manifest(path, subcommand, config, seed, outputs):
    manifest = {
        "subcommand": subcommand,
        "config": config,
        "seed": seed,
        "artifact_version": __version__,
        "outputs": outputs,
    }
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _add_model_flags(parser, with_rounds=True):
    parser.add_argument("--lambda-xi", dest="lambda_xi", type=float, default=None)
    parser.add_argument("--lambda-psi", dest="lambda_psi", type=float, default=None)
    parser.add_argument("--sigma", type=float, default=None)
    parser.add_argument("--d0", type=float, default=None)
    parser.add_argument("--theta0", type=float, default=None)
    if with_rounds:
        parser.add_argument("--rounds", type=int, default=None)


def cmd_simulate(args):
    cfg = _load_config(args.config)
    params = _resolve_model(cfg, args)
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    path = simulate_paths(params, seed=[seed, 0])
    obs = simulate_observations(path, params, seed=[seed, 1])

    obs_file = f"{args.out}_observations.csv"
    latent_file = f"{args.out}_latent.csv"
    manifest_file = f"{args.out}_manifest.json"
    with open(obs_file, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["k", "U", "V"])
        for k in range(params.rounds):
            writer.writerow([k + 1, repr(float(obs.U[k])), repr(float(obs.V[k]))])
    with open(latent_file, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["k", "xi", "psi", "theta", "d"])
        theta, d = path.theta, path.d
        for k in range(params.rounds + 1):
            writer.writerow(
                [k, repr(float(path.xi[k])), repr(float(path.psi[k])),
                 repr(float(theta[k])), repr(float(d[k]))]
            )
    _write_manifest(
        manifest_file,
        "simulate",
        dataclasses.asdict(params),
        seed,
        [obs_file, latent_file],
    )
    if path.negative_d_count:
        print(
            f"warning: {path.negative_d_count} latent delay values drifted negative",
            file=sys.stderr,
        )
    print(f"wrote {obs_file}, {latent_file}, {manifest_file}")
    return EXIT_OK


def _read_observations(path):
    U, V = [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:3]] != ["k", "U", "V"]:
            raise ParameterError(f"{path}: expected header 'k,U,V', got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                U.append(float(row[1]))
                V.append(float(row[2]))
            except (IndexError, ValueError):
                raise ParameterError(f"{path}: malformed CSV at row {lineno}: {row}")
    if not U:
        raise ParameterError(f"{path}: no observation rows")
    return np.array(U), np.array(V)


def cmd_estimate(args):
    U, V = _read_observations(args.input)
    params = _resolve_model({}, args)
    variants = (
        [VARIANT_RECURSIVE, VARIANT_PAPER, VARIANT_ML]
        if args.variant == "all"
        else [args.variant]
    )
    out = {}
    for variant in variants:
        if variant == VARIANT_ML:
            est = ml_offset(U, V)
        else:
            est = fge_offset(
                U, V, params.lambda_xi, params.lambda_psi, params.sigma, variant
            )
        out[variant] = {
            "xi_hat_N": est.xi_hat_N,
            "psi_hat_N": est.psi_hat_N,
            "theta_hat_N": est.theta_hat_N,
        }
    print(json.dumps({"rounds": len(U), "estimates": out}, indent=2))
    return EXIT_OK


def cmd_sweep(args):
    cfg = _load_config(args.config)
    params = _resolve_model(cfg, args)
    axis = args.axis or cfg.get("axis")
    if axis not in (AXIS_ROUNDS, AXIS_SIGMA):
        raise ParameterError(f"axis must be 'rounds' or 'sigma', got {axis!r}")
    values = cfg.get("values")
    if args.values is not None:
        values = [float(v) for v in args.values.split(",")]
    if values is None:
        raise ParameterError("no sweep values given (config 'values' or --values)")
    if axis == AXIS_ROUNDS:
        values = [int(v) for v in values]
    trials = args.trials if args.trials is not None else int(cfg.get("trials", 10_000))
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    estimators = tuple(cfg.get("estimators", ALL_ESTIMATORS))
    config = SweepConfig(
        params=params,
        axis=axis,
        values=tuple(values),
        trials=trials,
        seed=seed,
        estimators=estimators,
    )
    table = mse_vs_rounds(config) if axis == AXIS_ROUNDS else mse_vs_sigma(config)

    csv_file = args.out
    json_file = f"{args.out}.json"
    manifest_file = f"{args.out}.manifest.json"
    with open(csv_file, "w", newline="") as fh:
        fh.write(table.to_csv())
    with open(json_file, "w") as fh:
        json.dump(table.to_json_dict(), fh, indent=2)
        fh.write("\n")
    resolved = dict(dataclasses.asdict(params))
    resolved.update(
        axis=axis, values=list(values), trials=trials, seed=seed,
        estimators=list(estimators),
    )
    _write_manifest(manifest_file, "sweep", resolved, seed, [csv_file, json_file])
    print(f"wrote {csv_file}, {json_file}, {manifest_file}")
    return EXIT_OK


def cmd_compare_oracle(args):
    if args.rounds > MAX_ENUM_ROUNDS:
        print(
            f"error: compare-oracle needs --rounds <= {MAX_ENUM_ROUNDS}",
            file=sys.stderr,
        )
        return EXIT_USAGE
    params = _resolve_model({}, args)
    params = dataclasses.replace(params, rounds=args.rounds)
    worst_bt = (-1.0, None)
    worst_pf = (-1.0, None)
    for i in range(args.instances):
        path = simulate_paths(params, seed=[args.seed, i, 0])
        obs = simulate_observations(path, params, seed=[args.seed, i, 1])
        exact = exact_map_active_set(obs.U, params.lambda_xi, params.sigma)
        bt = backtrack_estimate(obs.U, params.lambda_xi, params.sigma).xi_hat[-1]
        pf = closed_form_estimate_paper(obs.U, params.lambda_xi, params.sigma)
        dev_bt = abs(bt - exact.path[-1])
        dev_pf = abs(pf - exact.path[-1])
        if dev_bt > worst_bt[0]:
            worst_bt = (dev_bt, i)
        if dev_pf > worst_pf[0]:
            worst_pf = (dev_pf, i)
    report = {
        "rounds": args.rounds,
        "instances": args.instances,
        "seed": args.seed,
        "max_abs_dev_backtrack": {
            "value": worst_bt[0],
            "at": {"seed": args.seed, "index": worst_bt[1]},
        },
        "max_abs_dev_paper_closed_form": {
            "value": worst_pf[0],
            "at": {"seed": args.seed, "index": worst_pf[1]},
        },
    }
    print(json.dumps(report, indent=2))
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="fgclock",
        description="Clock-offset estimation for two-way timing exchange",
    )
    parser.add_argument("--version", action="version", version=f"fgclock {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="sample latent paths and observations")
    p.add_argument("--config", default=None, help="JSON config file")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True, help="output file prefix")
    _add_model_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", help="estimate the offset from a k,U,V CSV")
    p.add_argument("--input", required=True, help="observation CSV with k,U,V columns")
    p.add_argument(
        "--variant",
        choices=[VARIANT_RECURSIVE, VARIANT_PAPER, VARIANT_ML, "all"],
        default="all",
    )
    _add_model_flags(p, with_rounds=False)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("sweep", help="Monte Carlo MSE sweep over rounds or sigma")
    p.add_argument("--config", default=None, help="JSON config file")
    p.add_argument("--axis", choices=[AXIS_ROUNDS, AXIS_SIGMA], default=None)
    p.add_argument("--values", default=None, help="comma-separated sweep values")
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True, help="output CSV path")
    _add_model_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser(
        "compare-oracle", help="deviation of both FGE variants from the exact MAP"
    )
    p.add_argument("--rounds", type=int, default=8)
    p.add_argument("--instances", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    _add_model_flags(p, with_rounds=False)
    p.set_defaults(func=cmd_compare_oracle)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except FgclockError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
