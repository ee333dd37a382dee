"""Monte Carlo experiment driver for the bandwidth and edge-CPU sweeps.

Pairing contract: at a given run index every strategy and every grid point
sees the same drawn task sizes, so curves are directly comparable and the
local-only mean is exactly flat across a bandwidth sweep. The surface
on/off variants of a scenario differ only in the shadowed users' spectral
efficiency. Failed relaxation solves are excluded from the mean and
reported in a failure count instead of aborting the sweep.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from multiprocessing import Pool

import numpy as np
from threadpoolctl import threadpool_limits

from . import sdp
from .errors import ConfigurationError, SdpError
from .exact import BisectionConfig, allocate_bandwidth, brute_force
from .lift import build_stage1
from .model import (Allocation, DecisionVector, Scenario, ScenarioConfig,
                    BITS_PER_MB, build_scenario, local_delay)
from .rounding import (PROBABILITY_RULES, RoundingPolicy, posterior_probabilities,
                       sample_decisions, select_best)

STRATEGIES = ("local_only", "standalone_edge", "sdr_no_ris", "sdr_with_ris",
              "oracle_no_ris", "oracle_with_ris")

CSV_HEADER = "sweep_param,sweep_value,strategy,mean_worst_delay_s,std_error_s,runs,failures"
RAW_CSV_HEADER = "sweep_param,sweep_value,run_index,strategy,worst_delay_s"

SWEEP_PARAMS = ("bandwidth", "edge_cpu")


@dataclass(frozen=True)
class SdrReport:
    """Everything the relaxation pipeline produced for one scenario."""

    decisions: DecisionVector
    allocation: Allocation
    lower_bound: float        # stage-1 relaxation objective
    rank1_ratio: float
    local_probabilities: np.ndarray


def solve_instance(scenario: Scenario, policy: RoundingPolicy,
                   tolerances: sdp.SolverTolerances | None = None,
                   bisection: BisectionConfig | None = None) -> SdrReport:
    """Full pipeline: lift, relax, extract, round, score, keep the best."""
    lift = build_stage1(scenario)
    solution = sdp.solve(sdp.stage1_sdp_problem(lift), tolerances)
    point = sdp.extract_vector(solution, lift.layout.hom_index)
    m = scenario.num_users
    p_local = np.clip(point[0:m], 0.0, 1.0)
    p_edge = np.clip(point[m:2 * m], 0.0, 1.0)
    prob_local, _ = posterior_probabilities(p_local, p_edge, policy.probability_rule)
    rng = np.random.default_rng(policy.rng_seed)
    samples = sample_decisions(np.atleast_1d(prob_local), policy, rng)
    decisions, allocation = select_best(scenario, samples, bisection)
    return SdrReport(decisions=decisions, allocation=allocation,
                     lower_bound=solution.objective_value,
                     rank1_ratio=solution.rank1_ratio,
                     local_probabilities=np.atleast_1d(prob_local))


def run_trial(scenario: Scenario, strategy: str, rounding_policy: RoundingPolicy,
              tolerances: sdp.SolverTolerances | None = None,
              bisection: BisectionConfig | None = None) -> float:
    """Worst-case delay achieved by one strategy on one scenario."""
    if strategy not in STRATEGIES:
        raise ConfigurationError(f"unknown strategy {strategy!r}")
    wants_ris = strategy.endswith("with_ris")
    if strategy.endswith("_ris") and scenario.ris_enabled != wants_ris:
        raise ConfigurationError(
            f"strategy {strategy} needs ris_enabled={wants_ris}, "
            f"scenario has {scenario.ris_enabled}"
        )
    if strategy == "local_only":
        return max(local_delay(scenario, m) for m in range(scenario.num_users))
    if strategy == "standalone_edge":
        all_off = DecisionVector.all_offload(scenario.num_users)
        return allocate_bandwidth(scenario, all_off, bisection).worst_delay
    if strategy.startswith("sdr_"):
        return solve_instance(scenario, rounding_policy, tolerances, bisection).allocation.worst_delay
    _, allocation = brute_force(scenario, bisection)
    return allocation.worst_delay


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    sweep: str = "bandwidth"
    grid: tuple[float, ...] = (5e6, 7.5e6, 1e7, 1.25e7, 1.5e7, 1.75e7, 2e7, 2.25e7, 2.5e7)
    strategies: tuple[str, ...] = STRATEGIES
    runs: int = 1000
    seed: int = 0
    rounding_samples: int = 10
    probability_rule: str = "joint_conditional"

    def __post_init__(self):
        if self.sweep not in SWEEP_PARAMS:
            raise ConfigurationError(f"unknown sweep {self.sweep!r}; expected one of {SWEEP_PARAMS}")
        if not self.grid:
            raise ConfigurationError("sweep grid is empty")
        if any(v <= 0 for v in self.grid) or any(
                b <= a for a, b in zip(self.grid, self.grid[1:])):
            raise ConfigurationError("grid values must be positive and strictly ascending")
        if self.runs < 1:
            raise ConfigurationError("runs must be >= 1")
        if self.rounding_samples < 1:
            raise ConfigurationError("rounding_samples must be >= 1")
        if self.probability_rule not in PROBABILITY_RULES:
            raise ConfigurationError(f"unknown probability_rule {self.probability_rule!r}")
        for name in self.strategies:
            if name not in STRATEGIES:
                raise ConfigurationError(
                    f"unknown strategy {name!r}; expected a subset of {STRATEGIES}"
                )

    def scenario_at(self, sweep_value: float) -> ScenarioConfig:
        if self.sweep == "bandwidth":
            return replace(self.scenario, total_bandwidth_hz=sweep_value)
        return replace(self.scenario, edge_total_cpu_hz=sweep_value)


@dataclass(frozen=True)
class SweepRow:
    sweep_param: str
    sweep_value: float
    strategy: str
    mean_worst_delay_s: float
    std_error_s: float
    runs: int
    failures: int


@dataclass(frozen=True)
class TrialRecord:
    sweep_value: float
    run_index: int
    strategy: str
    worst_delay_s: float | None   # None marks an excluded failed solve


@dataclass(frozen=True)
class SweepResult:
    sweep_param: str
    rows: list[SweepRow]
    trials: list[TrialRecord] = field(default_factory=list)

    def to_csv(self, stream) -> None:
        stream.write(CSV_HEADER + "\n")
        for r in self.rows:
            stream.write(
                f"{r.sweep_param},{r.sweep_value:.12g},{r.strategy},"
                f"{r.mean_worst_delay_s:.12g},{r.std_error_s:.12g},{r.runs},{r.failures}\n"
            )

    def raw_to_csv(self, stream) -> None:
        stream.write(RAW_CSV_HEADER + "\n")
        for t in self.trials:
            value = "" if t.worst_delay_s is None else f"{t.worst_delay_s:.12g}"
            stream.write(
                f"{self.sweep_param},{t.sweep_value:.12g},{t.run_index},{t.strategy},{value}\n"
            )

    def row(self, sweep_value: float, strategy: str) -> SweepRow:
        for r in self.rows:
            if r.strategy == strategy and np.isclose(r.sweep_value, sweep_value):
                return r
        raise KeyError((sweep_value, strategy))


def _task_sizes_bits(config: ExperimentConfig, run_index: int) -> np.ndarray:
    """Per-run draw, independent of the grid so curves stay paired."""
    rng = np.random.default_rng(np.random.SeedSequence((config.seed, run_index)))
    lo, hi = config.scenario.task_size_mb
    return rng.uniform(lo, hi, config.scenario.num_users) * BITS_PER_MB


def _rounding_policy(config: ExperimentConfig, run_index: int, strategy: str) -> RoundingPolicy:
    seed_seq = np.random.SeedSequence((config.seed, run_index, STRATEGIES.index(strategy)))
    return RoundingPolicy(num_samples=config.rounding_samples,
                          rng_seed=int(seed_seq.generate_state(1)[0]),
                          probability_rule=config.probability_rule)


def _run_cell(args) -> list[tuple[int, int, str, float | None]]:
    """All strategies for one (grid point, run) pair. Top level for pickling."""
    config, grid_index, run_index = args
    sweep_value = config.grid[grid_index]
    scenario_config = config.scenario_at(sweep_value)
    sizes = _task_sizes_bits(config, run_index)
    scenarios = {
        True: build_scenario(scenario_config, sizes, ris_enabled=True),
        False: build_scenario(scenario_config, sizes, ris_enabled=False),
    }
    out = []
    for strategy in config.strategies:
        # strategies without a ris suffix follow the surface-assisted network
        use_ris = not strategy.endswith("no_ris")
        policy = _rounding_policy(config, run_index, strategy)
        try:
            value = run_trial(scenarios[use_ris], strategy, policy)
        except SdpError:
            value = None
        out.append((grid_index, run_index, strategy, value))
    return out


_worker_thread_cap = None


def _single_threaded_blas():
    # the dense kernels are ~30x30; threaded BLAS only adds contention
    global _worker_thread_cap
    _worker_thread_cap = threadpool_limits(limits=1)


def run_sweep(config: ExperimentConfig, workers: int | None = None,
              log=None, keep_trials: bool = False) -> SweepResult:
    """Evaluate every strategy over the grid, averaging over paired runs."""
    cells = [(config, g, r) for g in range(len(config.grid)) for r in range(config.runs)]
    n_workers = workers if workers is not None else (os.cpu_count() or 1)
    if n_workers > 1 and len(cells) > 1:
        with Pool(processes=n_workers, initializer=_single_threaded_blas) as pool:
            chunk = max(1, len(cells) // (8 * n_workers))
            results = pool.map(_run_cell, cells, chunksize=chunk)
    else:
        with threadpool_limits(limits=1):
            results = [_run_cell(c) for c in cells]

    values: dict[tuple[int, str], list[float]] = {}
    failures: dict[tuple[int, str], int] = {}
    trials: list[TrialRecord] = []
    for cell in results:
        for grid_index, run_index, strategy, value in cell:
            key = (grid_index, strategy)
            if value is None:
                failures[key] = failures.get(key, 0) + 1
            else:
                values.setdefault(key, []).append(value)
            if keep_trials:
                trials.append(TrialRecord(config.grid[grid_index], run_index, strategy, value))

    rows = []
    for grid_index, sweep_value in enumerate(config.grid):
        for strategy in config.strategies:
            vals = np.array(values.get((grid_index, strategy), []), dtype=float)
            failed = failures.get((grid_index, strategy), 0)
            if vals.size == 0:
                mean, err = float("nan"), float("nan")
            elif vals.size == 1:
                mean, err = float(vals[0]), 0.0
            else:
                mean = float(vals.mean())
                err = float(vals.std(ddof=1) / np.sqrt(vals.size))
            rows.append(SweepRow(config.sweep, sweep_value, strategy, mean, err,
                                 int(vals.size), failed))
        if log is not None:
            log(f"[{config.sweep}] grid point {grid_index + 1}/{len(config.grid)} "
                f"({sweep_value:.6g}) done, {config.runs} runs")

    return SweepResult(sweep_param=config.sweep, rows=rows, trials=trials)
