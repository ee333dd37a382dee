"""Cross-module invariant suite behind the `verify` CLI subcommand.

Each property draws fresh instances, checks one structural relationship
between modules, and reports pass/fail with a short detail string. The
fault argument is a test hook: "flip_sign" negates one lifted matrix so the
scalar-matrix equivalence check must fail (negative control).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import sdp
from .exact import DEFAULT_BISECTION, allocate_bandwidth, brute_force
from .lift import build_stage1, build_stage2, eval_quadratic
from .model import (DecisionVector, ScenarioConfig, delay_coefficients,
                    fixed_decision_coefficients, sample_scenario)
from .rounding import RoundingPolicy, posterior_probabilities
from .harness import solve_instance

FAULT_MODES = (None, "flip_sign")


@dataclass(frozen=True)
class PropertyResult:
    name: str
    passed: bool
    detail: str


def _random_decisions(rng: np.random.Generator, m: int) -> DecisionVector:
    return DecisionVector.from_offload_mask((rng.random(m) < 0.5).astype(int))


def check_scalar_matrix_equivalence(config: ScenarioConfig, rng: np.random.Generator,
                                    points: int = 200, fault: str | None = None) -> PropertyResult:
    """Lifted quadratic forms reproduce the scalar formulas at random points."""
    scenario = sample_scenario(rng, config)
    m = scenario.num_users
    k_local, k_edge, k_upload = delay_coefficients(scenario)
    lift1 = build_stage1(scenario)
    decisions = _random_decisions(rng, m)
    lift2 = build_stage2(scenario, decisions)
    k_fixed, k_band = fixed_decision_coefficients(scenario, decisions)
    y_bits = np.array(decisions.offload, dtype=float)

    if fault == "flip_sign":
        lift1.ineq_constraints[1] = (-lift1.ineq_constraints[1][0],
                                     lift1.ineq_constraints[1][1])
    elif fault is not None:
        raise ValueError(f"unknown fault mode {fault!r}")

    worst = 0.0
    for _ in range(points):
        x = rng.random(m)
        y = rng.random(m)
        beta = rng.random(m)
        t = rng.uniform(0.0, 10.0)
        z = lift1.layout.pack(x, y, beta, t)
        got = eval_quadratic(lift1, z)
        # per-user build order is x-binary, y-binary, pair-sum
        want_eq = np.stack([x * x - x, y * y - y, x + y - 1.0], axis=1).reshape(-1)
        want_ineq = np.concatenate([
            [beta.sum() - 1.0],
            k_local * x * beta + k_edge * y * beta + k_upload * y - beta * t,
        ])
        scale = np.maximum(1.0, np.abs(want_ineq).max())
        worst = max(worst,
                    float(np.abs(got.eq_residuals - want_eq).max(initial=0.0)),
                    float(np.abs(got.ineq_residuals - want_ineq).max()) / scale,
                    abs(got.objective - t) / max(1.0, abs(t)))

        theta = rng.uniform(0.0, 10.0)
        s = lift2.layout.pack(beta, theta)
        got2 = eval_quadratic(lift2, s)
        want2 = np.concatenate([
            [(y_bits * beta).sum() - 1.0],
            k_fixed * beta + k_band - beta * theta,
        ])
        scale2 = np.maximum(1.0, np.abs(want2).max())
        worst = max(worst, float(np.abs(got2.ineq_residuals - want2).max()) / scale2,
                    abs(got2.objective - theta) / max(1.0, abs(theta)))

    return PropertyResult("scalar_matrix_equivalence", worst <= 1e-12,
                          f"max relative deviation {worst:.3e} over {points} points")


def check_stage2_agreement(config: ScenarioConfig, rng: np.random.Generator,
                           pairs: int = 20) -> PropertyResult:
    """Bisection root and stage-2 SDP objective agree to 1e-3 relative."""
    worst = 0.0
    for _ in range(pairs):
        scenario = sample_scenario(rng, config)
        decisions = _random_decisions(rng, scenario.num_users)
        if decisions.num_offloaders == 0:
            decisions = DecisionVector.all_offload(scenario.num_users)
        allocation = allocate_bandwidth(scenario, decisions)
        k_fixed, k_band = fixed_decision_coefficients(scenario, decisions)
        off = k_band > 0
        theta_bis = float((k_fixed[off] + k_band[off] / np.array(allocation.beta)[off]).max())
        stage2 = sdp.stage2_sdp_problem(build_stage2(scenario, decisions))
        solution = sdp.solve(stage2.problem)
        worst = max(worst, abs(solution.objective_value - theta_bis) / theta_bis)
    return PropertyResult("stage2_bisection_sdp_agreement", worst <= 1e-3,
                          f"max relative gap {worst:.3e} over {pairs} pairs")


def check_oracle_dominance(config: ScenarioConfig, rng: np.random.Generator,
                           instances: int = 10) -> PropertyResult:
    """Rounded solutions never beat the exhaustive optimum."""
    small = min(config.num_users, 8)
    cfg = ScenarioConfig(
        num_users=small, num_good=min(config.num_good, small),
        local_cpu_hz=config.local_cpu_hz, edge_total_cpu_hz=config.edge_total_cpu_hz,
        cycles_per_byte=config.cycles_per_byte, total_bandwidth_hz=config.total_bandwidth_hz,
        eta_good=config.eta_good, eta_shadow_no_ris=config.eta_shadow_no_ris,
        eta_shadow_ris=config.eta_shadow_ris, ris_enabled=config.ris_enabled,
        task_size_mb=config.task_size_mb,
    )
    slack = 10 * DEFAULT_BISECTION.abs_tol
    worst_violation = -np.inf
    for k in range(instances):
        scenario = sample_scenario(rng, cfg)
        policy = RoundingPolicy(num_samples=10, rng_seed=int(rng.integers(2 ** 31)))
        rounded = solve_instance(scenario, policy).allocation.worst_delay
        _, optimum = brute_force(scenario)
        worst_violation = max(worst_violation, optimum.worst_delay - rounded)
    return PropertyResult("oracle_dominance", worst_violation <= slack,
                          f"max (oracle - rounded) = {worst_violation:.3e} over {instances} instances")


def check_extraction_roundtrip(rng: np.random.Generator, trials: int = 50,
                               dim: int = 6) -> PropertyResult:
    """Column extraction of a rank-one outer product reproduces the vector."""
    worst = 0.0
    for _ in range(trials):
        z = rng.uniform(-2.0, 2.0, dim)
        h = int(rng.integers(dim))
        z[h] = 1.0
        solution = sdp.SdpSolution(Y=np.outer(z, z), objective_value=0.0,
                                   max_eq_residual=0.0, max_ineq_violation=0.0,
                                   min_eigenvalue=0.0, rank1_ratio=float("inf"))
        got = sdp.extract_vector(solution, h)
        worst = max(worst, float(np.abs(got - np.delete(z, h)).max()))
    return PropertyResult("rank_one_extraction", worst <= 1e-10,
                          f"max deviation {worst:.3e} over {trials} vectors")


def check_posterior_normalization(rng: np.random.Generator, grid: int = 40) -> PropertyResult:
    """Conditioned rounding probabilities form a distribution everywhere."""
    p = np.linspace(0.0, 1.0, grid)
    pl, pe = np.meshgrid(p, p)
    local, edge = posterior_probabilities(pl.ravel(), pe.ravel(), "joint_conditional")
    total_err = float(np.abs(local + edge - 1.0).max())
    in_range = bool(np.all((local >= -1e-15) & (local <= 1 + 1e-15)))
    return PropertyResult("posterior_normalization",
                          total_err <= 1e-12 and in_range,
                          f"max |P_local + P_edge - 1| = {total_err:.3e} on {grid}x{grid} grid")


def run_property_suite(config: ScenarioConfig, seed: int = 0,
                       fault: str | None = None) -> list[PropertyResult]:
    rng = np.random.default_rng(seed)
    return [
        check_scalar_matrix_equivalence(config, rng, fault=fault),
        check_stage2_agreement(config, rng),
        check_oracle_dominance(config, rng),
        check_extraction_roundtrip(rng),
        check_posterior_normalization(rng),
    ]
