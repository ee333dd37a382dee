"""Network scenario and closed-form delay expressions.

Canonical internal units are bits, cycles/bit, Hz, cycles/s and seconds.
Task sizes quoted in MB and processing densities quoted in cycles/byte are
converted at scenario-build time (1 MB = 1e6 bytes = 8e6 bits).

A scenario holds M users; the first K have a good uplink while the rest sit
in a shadowed region whose spectral efficiency depends on whether the
reflecting surface is active. Each user either computes its task locally or
offloads it to the edge server, which splits its CPU equally among all M
users. The per-user delay is local compute time, or upload plus edge
compute time, and the quantity of interest is the worst delay in the
network.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigurationError, InfeasibleAllocationError

BITS_PER_MB = 8_000_000.0
BITS_PER_BYTE = 8.0


@dataclass(frozen=True)
class UserParams:
    """Per-user task and channel parameters.

    Attributes:
        data_size_bits: input task size in bits.
        local_cpu: local CPU clock speed, cycles/s.
        edge_cpu_share: CPU clock speed the edge server devotes to this
            user, cycles/s (fixed equal split of the edge total).
        spectral_eff: uplink spectral efficiency, bps/Hz. For a shadowed
            user this already reflects whether the reflecting surface is
            active in the scenario.
        good_link: True for users in the good-reception group.
    """

    data_size_bits: float
    local_cpu: float
    edge_cpu_share: float
    spectral_eff: float
    good_link: bool

    def __post_init__(self):
        for name in ("data_size_bits", "local_cpu", "edge_cpu_share", "spectral_eff"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0.0:
                raise ConfigurationError(f"UserParams.{name} must be strictly positive, got {value!r}")


@dataclass(frozen=True)
class Scenario:
    """A full network instance.

    users are ordered with the K good-link users first. Every user's
    edge_cpu_share must equal edge_total_cpu / M, the fixed equal split.
    """

    users: tuple[UserParams, ...]
    processing_density: float  # cycles per bit
    total_bandwidth: float     # Hz
    ris_enabled: bool
    edge_total_cpu: float      # cycles per second

    def __post_init__(self):
        if not self.users:
            raise ConfigurationError("Scenario needs at least one user")
        if self.processing_density <= 0 or self.total_bandwidth <= 0 or self.edge_total_cpu <= 0:
            raise ConfigurationError("Scenario rates and densities must be strictly positive")
        flags = [u.good_link for u in self.users]
        k = sum(flags)
        if k < 1:
            raise ConfigurationError("Scenario needs at least one good-link user")
        if any(flags[k:]) or not all(flags[:k]):
            raise ConfigurationError("users must be ordered good-link first, shadowed last")
        share = self.edge_total_cpu / len(self.users)
        for m, u in enumerate(self.users):
            if abs(u.edge_cpu_share - share) > 1e-9 * share:
                raise ConfigurationError(
                    f"user {m} edge_cpu_share {u.edge_cpu_share} != edge_total_cpu/M = {share}"
                )

    @property
    def num_users(self) -> int:
        return len(self.users)

    @property
    def num_good(self) -> int:
        return sum(u.good_link for u in self.users)

    def data_sizes(self) -> np.ndarray:
        return np.array([u.data_size_bits for u in self.users])


@dataclass(frozen=True)
class DecisionVector:
    """Complementary binary indicators: local[m] + offload[m] = 1."""

    local: tuple[int, ...]
    offload: tuple[int, ...]

    def __post_init__(self):
        if len(self.local) != len(self.offload):
            raise ConfigurationError("local and offload lengths differ")
        for x, y in zip(self.local, self.offload):
            if x not in (0, 1) or y not in (0, 1) or x + y != 1:
                raise ConfigurationError(f"decision bits must be complementary 0/1, got ({x}, {y})")

    @classmethod
    def from_offload_mask(cls, mask) -> "DecisionVector":
        offload = tuple(int(bool(v)) for v in mask)
        return cls(local=tuple(1 - y for y in offload), offload=offload)

    @classmethod
    def all_local(cls, m: int) -> "DecisionVector":
        return cls(local=(1,) * m, offload=(0,) * m)

    @classmethod
    def all_offload(cls, m: int) -> "DecisionVector":
        return cls(local=(0,) * m, offload=(1,) * m)

    @property
    def num_offloaders(self) -> int:
        return sum(self.offload)


@dataclass(frozen=True)
class Allocation:
    """Bandwidth fractions plus the achieved worst-case delay."""

    beta: tuple[float, ...]
    worst_delay: float

    def __post_init__(self):
        if self.worst_delay < 0:
            raise ConfigurationError("worst_delay must be nonnegative")
        for m, frac in enumerate(self.beta):
            if frac < -1e-12 or frac > 1.0 + 1e-9:
                raise ConfigurationError(f"beta[{m}] = {frac} outside [0, 1]")


def local_delay(scenario: Scenario, m: int) -> float:
    """Compute time of task m on its own CPU (the x_m gate is the caller's)."""
    u = scenario.users[m]
    return u.data_size_bits * scenario.processing_density / u.local_cpu


def offload_delay(scenario: Scenario, m: int, beta_m: float) -> float:
    """Upload plus edge-compute time of task m under bandwidth fraction beta_m.

    The same expression covers good-link and shadowed users; the channel
    quality enters only through the user's spectral efficiency.
    """
    if beta_m <= 0.0:
        raise InfeasibleAllocationError(
            f"user {m} offloads but has bandwidth fraction {beta_m}"
        )
    u = scenario.users[m]
    upload = u.data_size_bits / (u.spectral_eff * beta_m * scenario.total_bandwidth)
    compute = u.data_size_bits * scenario.processing_density / u.edge_cpu_share
    return upload + compute


def total_delay(scenario: Scenario, decisions: DecisionVector, allocation: Allocation, m: int) -> float:
    """Delay of user m: exactly one of the local/offload terms is active."""
    if decisions.local[m]:
        return local_delay(scenario, m)
    return offload_delay(scenario, m, allocation.beta[m])


def worst_case_delay(scenario: Scenario, decisions: DecisionVector, allocation: Allocation) -> float:
    return max(total_delay(scenario, decisions, allocation, m) for m in range(scenario.num_users))


def delay_coefficients(scenario: Scenario) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-user constants of the delay expressions.

    Returns (k_local, k_edge, k_upload) where the delay of user m is
    x_m * k_local[m] + y_m * (k_upload[m] / beta_m + k_edge[m]).
    """
    d = scenario.data_sizes()
    dens = scenario.processing_density
    k_local = d * dens / np.array([u.local_cpu for u in scenario.users])
    k_edge = d * dens / np.array([u.edge_cpu_share for u in scenario.users])
    k_upload = d / (np.array([u.spectral_eff for u in scenario.users]) * scenario.total_bandwidth)
    return k_local, k_edge, k_upload


def fixed_decision_coefficients(
    scenario: Scenario, decisions: DecisionVector
) -> tuple[np.ndarray, np.ndarray]:
    """Constants (k_fixed, k_band) so user m's delay is k_fixed[m] + k_band[m]/beta_m."""
    k_local, k_edge, k_upload = delay_coefficients(scenario)
    x = np.array(decisions.local, dtype=float)
    y = np.array(decisions.offload, dtype=float)
    return x * k_local + y * k_edge, y * k_upload


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything needed to sample random scenarios.

    Task sizes are drawn i.i.d. uniform over task_size_mb (a (lo, hi) pair
    in MB) and converted to bits. Processing density is quoted in
    cycles/byte as in the usual simulation tables.
    """

    num_users: int = 8
    num_good: int = 5
    local_cpu_hz: float = 5e8
    edge_total_cpu_hz: float = 5e9
    cycles_per_byte: float = 1900.0
    total_bandwidth_hz: float = 1.5e7
    eta_good: float = 3.5
    eta_shadow_no_ris: float = 0.1
    eta_shadow_ris: float = 3.0
    ris_enabled: bool = True
    task_size_mb: tuple[float, float] = (0.1, 0.9)

    def __post_init__(self):
        if self.num_users < 1:
            raise ConfigurationError("num_users must be >= 1")
        if not 1 <= self.num_good <= self.num_users:
            raise ConfigurationError(
                f"num_good must lie in [1, num_users], got {self.num_good} of {self.num_users}"
            )
        for name in ("local_cpu_hz", "edge_total_cpu_hz", "cycles_per_byte",
                     "total_bandwidth_hz", "eta_good", "eta_shadow_no_ris", "eta_shadow_ris"):
            if getattr(self, name) <= 0:
                raise ConfigurationError(f"{name} must be strictly positive")
        lo, hi = self.task_size_mb
        if lo <= 0 or hi < lo:
            raise ConfigurationError(f"task_size_mb range invalid: {self.task_size_mb}")

    def with_ris(self, ris_enabled: bool) -> "ScenarioConfig":
        return replace(self, ris_enabled=ris_enabled)


def build_scenario(config: ScenarioConfig, task_sizes_bits, ris_enabled: bool | None = None) -> Scenario:
    """Assemble a Scenario from explicit task sizes (bits), honoring the config."""
    ris = config.ris_enabled if ris_enabled is None else ris_enabled
    sizes = np.asarray(task_sizes_bits, dtype=float)
    if sizes.shape != (config.num_users,):
        raise ConfigurationError(
            f"expected {config.num_users} task sizes, got shape {sizes.shape}"
        )
    eta_shadow = config.eta_shadow_ris if ris else config.eta_shadow_no_ris
    share = config.edge_total_cpu_hz / config.num_users
    users = tuple(
        UserParams(
            data_size_bits=float(sizes[m]),
            local_cpu=config.local_cpu_hz,
            edge_cpu_share=share,
            spectral_eff=config.eta_good if m < config.num_good else eta_shadow,
            good_link=m < config.num_good,
        )
        for m in range(config.num_users)
    )
    return Scenario(
        users=users,
        processing_density=config.cycles_per_byte / BITS_PER_BYTE,
        total_bandwidth=config.total_bandwidth_hz,
        ris_enabled=ris,
        edge_total_cpu=config.edge_total_cpu_hz,
    )


def sample_scenario(rng: np.random.Generator, config: ScenarioConfig) -> Scenario:
    """Draw one random scenario: i.i.d. uniform task sizes in the MB range."""
    lo, hi = config.task_size_mb
    sizes_mb = rng.uniform(lo, hi, config.num_users)
    return build_scenario(config, sizes_mb * BITS_PER_MB)
