import numpy as np
import pytest

from ris_offload.model import Scenario, ScenarioConfig, UserParams

ACCEPTANCE_LINES = []


def record_criterion(number: int, passed: bool, detail: str) -> None:
    tag = "PASS" if passed else "FAIL"
    line = f"ACCEPTANCE {number}: {tag} - {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def default_config():
    return ScenarioConfig()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def make_plain_scenario(data_bits, local_cpu=5e8, edge_total=5e9, eta_good=3.5,
                        eta_shadow=3.0, num_good=None, bandwidth=1.5e7,
                        density=237.5, ris=True):
    """Scenario straight from arrays, bypassing the sampler."""
    m = len(data_bits)
    k = num_good if num_good is not None else m
    users = tuple(
        UserParams(
            data_size_bits=float(d),
            local_cpu=local_cpu,
            edge_cpu_share=edge_total / m,
            spectral_eff=eta_good if i < k else eta_shadow,
            good_link=i < k,
        )
        for i, d in enumerate(data_bits)
    )
    return Scenario(users=users, processing_density=density, total_bandwidth=bandwidth,
                    ris_enabled=ris, edge_total_cpu=edge_total)


def make_coefficient_scenario(k_fixed, k_band):
    """Scenario whose all-offload coefficients equal the given arrays.

    Uses unit data sizes so k_fixed pins the per-user edge CPU share and
    k_band pins the spectral efficiency. Requires equal k_fixed entries to
    keep the equal-split invariant, so pass a constant k_fixed.
    """
    k_fixed = np.asarray(k_fixed, dtype=float)
    k_band = np.asarray(k_band, dtype=float)
    if not np.allclose(k_fixed, k_fixed[0]):
        raise ValueError("equal-split edge CPU forces a constant k_fixed")
    m = len(k_fixed)
    d = 1e6
    density = 1.0
    share = d * density / k_fixed[0]
    bandwidth = 1e6
    users = tuple(
        UserParams(
            data_size_bits=d,
            local_cpu=share,
            edge_cpu_share=share,
            spectral_eff=d / (k_band[i] * bandwidth),
            good_link=i == 0,
        )
        for i in range(m)
    )
    return Scenario(users=users, processing_density=density, total_bandwidth=bandwidth,
                    ris_enabled=True, edge_total_cpu=share * m)
