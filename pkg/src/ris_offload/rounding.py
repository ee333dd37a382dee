"""Randomized rounding of the fractional stage-1 solution.

The relaxation delivers per-user fractions (p_local, p_edge) in [0, 1].
These are turned into a proper distribution, N i.i.d. binary decision
vectors are drawn from it, each sample is scored with the exact bandwidth
allocator, and the best-scoring sample wins.

Two probability rules are available. The printed randomization formula
divides p_local by p_local(1-p_edge) + (1-p_local)p_edge, which exceeds one
whenever the two fractions agree too well (0.7/0.42 = 1.667 at
p_local = p_edge = 0.7), so it is offered as "paper_literal" with clamping.
The default "joint_conditional" rule conditions the independent pair on the
consistent outcomes, P_local = p_l(1-p_e)/Z with Z = p_l(1-p_e)+(1-p_l)p_e,
which always yields a distribution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .exact import BisectionConfig, allocate_bandwidth
from .model import Allocation, DecisionVector, Scenario

PROBABILITY_RULES = ("joint_conditional", "paper_literal")


@dataclass(frozen=True)
class RoundingPolicy:
    num_samples: int = 10
    rng_seed: int = 0
    probability_rule: str = "joint_conditional"

    def __post_init__(self):
        if self.num_samples < 1:
            raise ConfigurationError("num_samples must be >= 1")
        if self.probability_rule not in PROBABILITY_RULES:
            raise ConfigurationError(
                f"unknown probability_rule {self.probability_rule!r}; "
                f"expected one of {PROBABILITY_RULES}"
            )


def posterior_probabilities(p_local, p_edge, rule: str = "joint_conditional"):
    """Per-user local/edge sampling probabilities from relaxation fractions.

    Inputs must already be clamped to [0, 1]; scalars and arrays broadcast.
    On the degenerate diagonal p_l = p_e in {0, 1} both rules fall back to
    P_local = p_l, P_edge = 1 - p_l.
    """
    if rule not in PROBABILITY_RULES:
        raise ConfigurationError(f"unknown probability rule {rule!r}")
    p_l = np.asarray(p_local, dtype=float)
    p_e = np.asarray(p_edge, dtype=float)
    z = p_l * (1.0 - p_e) + (1.0 - p_l) * p_e
    degenerate = z <= 0.0
    z_safe = np.where(degenerate, 1.0, z)
    if rule == "joint_conditional":
        local = p_l * (1.0 - p_e) / z_safe
        edge = (1.0 - p_l) * p_e / z_safe
    else:
        local = np.clip(p_l / z_safe, 0.0, 1.0)
        edge = np.clip(p_e / z_safe, 0.0, 1.0)
    local = np.where(degenerate, p_l, local)
    edge = np.where(degenerate, 1.0 - p_l, edge)
    if local.ndim == 0:
        return float(local), float(edge)
    return local, edge


def sample_decisions(probabilities, policy: RoundingPolicy,
                     rng: np.random.Generator | None = None) -> list[DecisionVector]:
    """Draw policy.num_samples i.i.d. decision vectors.

    probabilities is the per-user chance of computing locally. Each sample
    uses its own child stream spawned from the parent generator, so results
    do not depend on how samples are later distributed across workers.
    """
    p_local = np.asarray(probabilities, dtype=float)
    if np.any((p_local < 0) | (p_local > 1)):
        raise ConfigurationError("probabilities must lie in [0, 1]")
    parent = rng if rng is not None else np.random.default_rng(policy.rng_seed)
    samples = []
    for child in parent.spawn(policy.num_samples):
        local = child.random(p_local.shape[0]) < p_local
        samples.append(DecisionVector.from_offload_mask(~local))
    return samples


def select_best(scenario: Scenario, samples: list[DecisionVector],
                config: BisectionConfig | None = None) -> tuple[DecisionVector, Allocation]:
    """Score every sample with the exact allocator; smallest worst delay wins.

    Ties keep the earliest sample. Every binary decision vector is feasible
    (an all-local vector needs no bandwidth at all), so this never fails.
    """
    if not samples:
        raise ConfigurationError("select_best needs at least one sample")
    best_pair = None
    for decisions in samples:
        allocation = allocate_bandwidth(scenario, decisions, config)
        if best_pair is None or allocation.worst_delay < best_pair[1].worst_delay:
            best_pair = (decisions, allocation)
    return best_pair
