"""Ground-truth solvers: exact bandwidth allocation and exhaustive search.

For a fixed decision vector, user m's delay is k_fixed[m] + k_band[m]/beta_m
with k_band positive exactly for offloaders. Feasibility of a worst-delay
target theta therefore requires beta_m >= k_band[m] / (theta - k_fixed[m]),
and the bandwidth budget admits theta if and only if

    g(theta) = sum over offloaders of k_band / (theta - k_fixed) <= 1.

g is strictly decreasing on (max k_fixed, inf), so the smallest admissible
theta is found by bisection, and the shares at that theta equalize every
offloader's delay. Local users keep a zero share and contribute their fixed
compute delay to the reported worst case.

The brute-force oracle enumerates all 2^M decision vectors with the
bisection vectorized across the whole batch.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BisectionNonConvergenceError, ConfigurationError, EnumerationLimitError
from .model import Allocation, DecisionVector, Scenario, delay_coefficients, fixed_decision_coefficients

BRUTE_FORCE_GUARD = 20


@dataclass(frozen=True)
class BisectionConfig:
    abs_tol: float = 1e-9
    max_iters: int = 200

    def __post_init__(self):
        if self.abs_tol <= 0 or self.max_iters < 1:
            raise ConfigurationError("bisection tolerances must be positive")


DEFAULT_BISECTION = BisectionConfig()


def _bisect_theta_batch(k_fixed: np.ndarray, k_band: np.ndarray,
                        config: BisectionConfig) -> np.ndarray:
    """Smallest theta with g(theta) <= 1, rowwise over a batch of decisions.

    Rows without any offloader get NaN; callers fold in the local-only
    delay. Returned thetas are upper bracket ends, so g(theta) <= 1 holds
    and the implied shares are budget-feasible.
    """
    batch, _ = k_fixed.shape
    offload = k_band > 0.0
    any_off = offload.any(axis=1)
    theta = np.full(batch, np.nan)
    if not any_off.any():
        return theta

    kf = np.where(offload, k_fixed, -np.inf)
    pole = kf.max(axis=1)
    band_sum = k_band.sum(axis=1)

    lo = np.where(any_off, pole + config.abs_tol, 1.0)
    hi = np.where(any_off, pole + band_sum, 2.0)

    def excess(t):
        # g(t) - 1 with inactive rows clamped to a harmless value
        tt = t[:, None] - k_fixed
        terms = np.where(offload, k_band / np.maximum(tt, 1e-300), 0.0)
        return terms.sum(axis=1) - 1.0

    # pro-rata upper bound already satisfies g <= 1; double defensively
    for _ in range(64):
        bad = any_off & (excess(hi) > 0.0)
        if not bad.any():
            break
        hi = np.where(bad, lo + 2.0 * (hi - lo), hi)

    # rows feasible at the pole edge need no search
    at_edge = any_off & (excess(lo) <= 0.0)
    hi = np.where(at_edge, lo, hi)

    width = hi - lo
    for _ in range(config.max_iters):
        active = any_off & (width > config.abs_tol)
        if not active.any():
            break
        mid = 0.5 * (lo + hi)
        ok = excess(mid) <= 0.0
        hi = np.where(active & ok, mid, hi)
        lo = np.where(active & ~ok, mid, lo)
        width = hi - lo
    else:
        worst = float(width[any_off].max())
        if worst > config.abs_tol:
            raise BisectionNonConvergenceError(
                f"bisection bracket still {worst:.3e} wide after {config.max_iters} iterations",
                bracket=(lo.copy(), hi.copy()),
            )

    theta[any_off] = hi[any_off]
    return theta


def allocate_bandwidth(scenario: Scenario, decisions: DecisionVector,
                       config: BisectionConfig | None = None) -> Allocation:
    """Exact min-max bandwidth split for a fixed decision vector."""
    cfg = config or DEFAULT_BISECTION
    k_fixed, k_band = fixed_decision_coefficients(scenario, decisions)
    offload = k_band > 0.0

    if not offload.any():
        return Allocation(beta=(0.0,) * scenario.num_users,
                          worst_delay=float(k_fixed.max()))

    theta = float(_bisect_theta_batch(k_fixed[None, :], k_band[None, :], cfg)[0])
    beta = np.where(offload, k_band / np.maximum(theta - k_fixed, 1e-300), 0.0)
    beta = np.minimum(beta, 1.0)
    local_max = float(k_fixed[~offload].max()) if (~offload).any() else 0.0
    return Allocation(beta=tuple(float(v) for v in beta),
                      worst_delay=max(theta, local_max))


def _batch_worst_delay(k_fixed: np.ndarray, k_band: np.ndarray,
                       config: BisectionConfig) -> np.ndarray:
    """Worst-case delay per row of a (batch, M) coefficient table."""
    theta = _bisect_theta_batch(k_fixed, k_band, config)
    local = np.where(k_band > 0.0, -np.inf, k_fixed).max(axis=1)
    return np.fmax(np.nan_to_num(theta, nan=-np.inf), local)


def brute_force(scenario: Scenario, config: BisectionConfig | None = None,
                guard: int = BRUTE_FORCE_GUARD) -> tuple[DecisionVector, Allocation]:
    """Global minimizer of the worst-case delay over all 2^M decisions.

    Ties break toward fewer offloaders, then lexicographically smallest
    offload pattern (user 0 most significant).
    """
    cfg = config or DEFAULT_BISECTION
    m_users = scenario.num_users
    if m_users > guard:
        raise EnumerationLimitError(
            f"refusing to enumerate 2^{m_users} decisions (guard is {guard} users)"
        )

    k_local, k_edge, k_upload = delay_coefficients(scenario)
    codes = np.arange(2 ** m_users, dtype=np.int64)
    # bit m of the code is user m's offload flag
    y = ((codes[:, None] >> np.arange(m_users)) & 1).astype(float)
    x = 1.0 - y
    k_fixed = x * k_local + y * k_edge
    k_band = y * k_upload

    worst = _batch_worst_delay(k_fixed, k_band, cfg)
    lex = (y.astype(np.int64) << np.arange(m_users - 1, -1, -1)).sum(axis=1)
    order = np.lexsort((lex, y.sum(axis=1), worst))
    winner = int(order[0])

    decisions = DecisionVector.from_offload_mask(y[winner].astype(int))
    return decisions, allocate_bandwidth(scenario, decisions, cfg)
