"""Command-line entry point.

Three subcommands share a flat JSON config file plus repeatable
--override KEY=VALUE flags:

    solve   sample one scenario and run the full relaxation pipeline
    sweep   Monte Carlo sweep over bandwidth or edge CPU, written as CSV
    verify  cross-module invariant suite on fresh instances

Exit codes: 0 success, 1 runtime or solver failure, 2 configuration error.
The effective configuration is echoed before any computation so every run
is self-describing.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .errors import ConfigurationError, RisOffloadError
from .exact import BRUTE_FORCE_GUARD, brute_force
from .harness import (STRATEGIES, ExperimentConfig, run_sweep, solve_instance)
from .model import ScenarioConfig, sample_scenario
from .rounding import RoundingPolicy
from .verify import run_property_suite

DEFAULT_CONFIG = {
    "users": 8,
    "good_links": 5,
    "local_cpu_hz": 5e8,
    "edge_cpu_hz": 5e9,
    "cycles_per_byte": 1900.0,
    "bandwidth_hz": 1.5e7,
    "eta_good": 3.5,
    "eta_shadow_no_ris": 0.1,
    "eta_shadow_ris": 3.0,
    "ris": True,
    "task_mb_min": 0.1,
    "task_mb_max": 0.9,
    "rounding_samples": 10,
    "probability_rule": "joint_conditional",
    "runs": 1000,
    "seed": 0,
    "sweep": "bandwidth",
    "grid": [5e6, 7.5e6, 1e7, 1.25e7, 1.5e7, 1.75e7, 2e7, 2.25e7, 2.5e7],
    "strategies": list(STRATEGIES),
}


def load_config(path: str, overrides) -> dict:
    config = dict(DEFAULT_CONFIG)
    try:
        with open(path) as fh:
            user_cfg = json.load(fh)
    except FileNotFoundError:
        raise ConfigurationError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config file {path} is not valid JSON: {exc}")
    if not isinstance(user_cfg, dict):
        raise ConfigurationError("config file must hold a flat JSON object")
    for key, value in user_cfg.items():
        if key not in DEFAULT_CONFIG:
            raise ConfigurationError(f"unknown config key {key!r}")
        config[key] = value
    for item in overrides or []:
        if "=" not in item:
            raise ConfigurationError(f"override {item!r} is not KEY=VALUE")
        key, raw = item.split("=", 1)
        if key not in DEFAULT_CONFIG:
            raise ConfigurationError(f"unknown override key {key!r}")
        try:
            config[key] = json.loads(raw)
        except json.JSONDecodeError:
            config[key] = raw
    return config


def scenario_config(config: dict) -> ScenarioConfig:
    return ScenarioConfig(
        num_users=int(config["users"]),
        num_good=int(config["good_links"]),
        local_cpu_hz=float(config["local_cpu_hz"]),
        edge_total_cpu_hz=float(config["edge_cpu_hz"]),
        cycles_per_byte=float(config["cycles_per_byte"]),
        total_bandwidth_hz=float(config["bandwidth_hz"]),
        eta_good=float(config["eta_good"]),
        eta_shadow_no_ris=float(config["eta_shadow_no_ris"]),
        eta_shadow_ris=float(config["eta_shadow_ris"]),
        ris_enabled=bool(config["ris"]),
        task_size_mb=(float(config["task_mb_min"]), float(config["task_mb_max"])),
    )


def experiment_config(config: dict) -> ExperimentConfig:
    return ExperimentConfig(
        scenario=scenario_config(config),
        sweep=str(config["sweep"]),
        grid=tuple(float(v) for v in config["grid"]),
        strategies=tuple(config["strategies"]),
        runs=int(config["runs"]),
        seed=int(config["seed"]),
        rounding_samples=int(config["rounding_samples"]),
        probability_rule=str(config["probability_rule"]),
    )


def echo_config(config: dict) -> None:
    print("effective configuration:")
    print(json.dumps(config, indent=2, sort_keys=True))


def cmd_solve(config: dict, args) -> int:
    echo_config(config)
    scenario_cfg = scenario_config(config)
    rng = np.random.default_rng(int(config["seed"]))
    scenario = sample_scenario(rng, scenario_cfg)
    policy = RoundingPolicy(num_samples=int(config["rounding_samples"]),
                            rng_seed=int(config["seed"]),
                            probability_rule=str(config["probability_rule"]))
    report = solve_instance(scenario, policy)
    shadowed = scenario.num_users - scenario.num_good
    print(f"\nscenario: {scenario.num_users} users, {shadowed} shadowed, "
          f"ris={'on' if scenario.ris_enabled else 'off'}")
    print(f"task sizes [Mb]: {[round(u.data_size_bits / 1e6, 4) for u in scenario.users]}")
    print(f"offload decisions: {list(report.decisions.offload)}")
    print(f"bandwidth fractions: {[round(v, 6) for v in report.allocation.beta]}")
    print(f"worst-case delay [s]: {report.allocation.worst_delay:.6f}")
    print(f"relaxation lower bound [s]: {report.lower_bound:.6f}")
    print(f"rank-1 ratio: {report.rank1_ratio:.3f}")
    if scenario.num_users <= BRUTE_FORCE_GUARD:
        _, optimum = brute_force(scenario)
        print(f"exhaustive optimum [s]: {optimum.worst_delay:.6f}")
        ratio = report.allocation.worst_delay / optimum.worst_delay
        print(f"rounded/optimal ratio: {ratio:.4f}")
    return 0


def cmd_sweep(config: dict, args) -> int:
    echo_config(config)
    exp = experiment_config(config)
    if args.seed is not None:
        exp = experiment_config({**config, "seed": args.seed})
    result = run_sweep(exp, workers=args.workers, log=print,
                       keep_trials=args.raw_output is not None)
    output = args.output or "sweep.csv"
    with open(output, "w") as fh:
        result.to_csv(fh)
    print(f"wrote {len(result.rows)} rows to {output}")
    if args.raw_output:
        with open(args.raw_output, "w") as fh:
            result.raw_to_csv(fh)
        print(f"wrote {len(result.trials)} trial records to {args.raw_output}")
    return 0


def cmd_verify(config: dict, args) -> int:
    echo_config(config)
    results = run_property_suite(scenario_config(config), seed=int(config["seed"]),
                                 fault=args.inject_fault)
    failed = 0
    for res in results:
        tag = "PASS" if res.passed else "FAIL"
        failed += not res.passed
        print(f"{tag} {res.name}: {res.detail}")
    print(f"{len(results) - failed}/{len(results)} properties passed")
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ris-offload",
        description="Min-max offloading delay via two-stage semidefinite relaxation",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in (("solve", cmd_solve), ("sweep", cmd_sweep), ("verify", cmd_verify)):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="flat JSON config file")
        p.add_argument("--output", default=None, help="output path (sweep CSV)")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--workers", type=int, default=None,
                       help="worker processes (default: machine parallelism)")
        p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config key (repeatable)")
        p.add_argument("--raw-output", default=None, help="per-trial CSV (sweep only)")
        p.add_argument("--inject-fault", default=None, help=argparse.SUPPRESS)
        p.set_defaults(handler=fn)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config, args.override)
        if args.seed is not None:
            config["seed"] = args.seed
        return args.handler(config, args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except RisOffloadError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
