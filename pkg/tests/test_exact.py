import numpy as np
import pytest

from ris_offload.errors import (BisectionNonConvergenceError, ConfigurationError,
                                EnumerationLimitError)
from ris_offload.exact import (BisectionConfig, allocate_bandwidth, brute_force,
                               _batch_worst_delay)
from ris_offload.model import (DecisionVector, ScenarioConfig, UserParams, Scenario,
                               delay_coefficients, fixed_decision_coefficients,
                               sample_scenario, total_delay)

from conftest import make_coefficient_scenario, make_plain_scenario


def local_vs_offload_scenario():
    """One user: local takes 1.9 s, full-band offload 2.1295 s."""
    user = UserParams(data_size_bits=4e6, local_cpu=5e8, edge_cpu_share=6.25e8,
                      spectral_eff=0.4375, good_link=True)
    return Scenario(users=(user,), processing_density=237.5, total_bandwidth=1.5e7,
                    ris_enabled=True, edge_total_cpu=6.25e8)


class TestAllocateBandwidth:
    def test_symmetric_two_offloaders_closed_form(self):
        sc = make_coefficient_scenario([1.0, 1.0], [0.5, 0.5])
        alloc = allocate_bandwidth(sc, DecisionVector.all_offload(2))
        assert alloc.worst_delay == pytest.approx(2.0, abs=1e-7)
        np.testing.assert_allclose(alloc.beta, [0.5, 0.5], atol=1e-7)

    def test_single_offloader_gets_whole_band(self):
        sc = make_plain_scenario([4e6, 8e5], edge_total=1.25e9)
        decisions = DecisionVector.from_offload_mask([1, 0])
        alloc = allocate_bandwidth(sc, decisions)
        k_fixed, k_band = fixed_decision_coefficients(sc, decisions)
        assert alloc.beta[0] == pytest.approx(1.0, rel=1e-6)
        assert alloc.beta[1] == 0.0
        offl_delay = k_fixed[0] + k_band[0]
        assert alloc.worst_delay == pytest.approx(max(offl_delay, k_fixed[1]), rel=1e-6)

    def test_all_local_needs_no_bandwidth(self):
        sc = make_plain_scenario([4e6, 8e5])
        alloc = allocate_bandwidth(sc, DecisionVector.all_local(2))
        assert alloc.beta == (0.0, 0.0)
        assert alloc.worst_delay == pytest.approx(1.9, rel=1e-12)

    def test_equalization_and_tight_budget(self, rng):
        for trial in range(25):
            m = int(rng.integers(2, 9))
            cfg = ScenarioConfig(num_users=m, num_good=max(1, m - 3),
                                 ris_enabled=bool(trial % 2))
            sc = sample_scenario(rng, cfg)
            mask = (rng.random(m) < 0.7).astype(int)
            if mask.sum() == 0:
                mask[0] = 1
            decisions = DecisionVector.from_offload_mask(mask)
            alloc = allocate_bandwidth(sc, decisions)
            k_fixed, k_band = fixed_decision_coefficients(sc, decisions)
            beta = np.array(alloc.beta)
            off = k_band > 0
            locals_max = k_fixed[~off].max() if (~off).any() else 0.0
            theta = float((k_fixed[off] + k_band[off] / beta[off]).max())
            for m_i in np.flatnonzero(off):
                user_delay = total_delay(sc, decisions, alloc, m_i)
                assert abs(user_delay - theta) <= 1e-8
            if theta > locals_max:
                assert 1 - 1e-6 <= beta[off].sum() <= 1 + 1e-12
            assert alloc.worst_delay == pytest.approx(max(theta, locals_max), rel=1e-9)

    def test_bisection_budget_exhaustion(self):
        sc = make_coefficient_scenario([1.0, 1.0], [0.5, 0.5])
        config = BisectionConfig(abs_tol=1e-12, max_iters=1)
        with pytest.raises(BisectionNonConvergenceError) as info:
            allocate_bandwidth(sc, DecisionVector.all_offload(2), config)
        lo, hi = info.value.bracket
        assert hi[0] > lo[0]

    def test_config_validation(self):
        with pytest.raises(ConfigurationError):
            BisectionConfig(abs_tol=-1.0)
        with pytest.raises(ConfigurationError):
            BisectionConfig(max_iters=0)


class TestBruteForce:
    def test_single_user_prefers_local(self):
        sc = local_vs_offload_scenario()
        decisions, alloc = brute_force(sc)
        assert decisions.local == (1,)
        assert alloc.worst_delay == pytest.approx(1.9, rel=1e-9)

    def test_single_user_prefers_edge_when_local_slow(self):
        user = UserParams(data_size_bits=4e6, local_cpu=1e6, edge_cpu_share=6.25e8,
                          spectral_eff=0.4375, good_link=True)
        sc = Scenario(users=(user,), processing_density=237.5, total_bandwidth=1.5e7,
                      ris_enabled=True, edge_total_cpu=6.25e8)
        decisions, alloc = brute_force(sc)
        assert decisions.offload == (1,)
        assert alloc.worst_delay == pytest.approx(2.1295238095, rel=1e-6)

    def test_surface_toggle_ordering(self, rng):
        cfg = ScenarioConfig()
        for seed in range(6):
            rng_local = np.random.default_rng(seed)
            sizes = rng_local.uniform(0.1, 0.9, 8) * 8e6
            from ris_offload.model import build_scenario
            with_ris = build_scenario(cfg, sizes, ris_enabled=True)
            without = build_scenario(cfg, sizes, ris_enabled=False)
            _, on = brute_force(with_ris)
            _, off = brute_force(without)
            assert off.worst_delay >= on.worst_delay - 1e-9

    def test_monotone_in_resources(self, rng):
        base_cfg = ScenarioConfig(num_users=5, num_good=3)
        from ris_offload.model import build_scenario
        from dataclasses import replace
        for seed in range(5):
            sizes = np.random.default_rng(seed).uniform(0.1, 0.9, 5) * 8e6
            base = brute_force(build_scenario(base_cfg, sizes))[1].worst_delay
            more_band = brute_force(build_scenario(
                replace(base_cfg, total_bandwidth_hz=3e7), sizes))[1].worst_delay
            more_cpu = brute_force(build_scenario(
                replace(base_cfg, edge_total_cpu_hz=1e10), sizes))[1].worst_delay
            better_eta = brute_force(build_scenario(
                replace(base_cfg, eta_good=7.0), sizes))[1].worst_delay
            assert more_band <= base + 1e-9
            assert more_cpu <= base + 1e-9
            assert better_eta <= base + 1e-9

    def test_enumeration_guard(self):
        sc = make_plain_scenario([4e6] * 21)
        with pytest.raises(EnumerationLimitError):
            brute_force(sc)

    def test_tie_break_prefers_few_offloaders_then_lex(self):
        # identical users: all same-popcount patterns score identically
        sc = make_coefficient_scenario([1.0, 1.0, 1.0], [0.2, 0.2, 0.2])
        decisions, alloc = brute_force(sc)
        pattern = decisions.offload
        assert pattern == tuple(sorted(pattern))
        k = sum(pattern)
        # every same-popcount permutation ties within bisection tolerance
        import itertools
        for perm in set(itertools.permutations(pattern)):
            other = DecisionVector.from_offload_mask(perm)
            worst = allocate_bandwidth(sc, other).worst_delay
            assert abs(worst - alloc.worst_delay) <= 1e-8

    def test_agrees_with_single_allocation_path(self, rng):
        cfg = ScenarioConfig(num_users=4, num_good=2)
        sc = sample_scenario(rng, cfg)
        k_local, k_edge, k_upload = delay_coefficients(sc)
        codes = np.arange(16)
        y = ((codes[:, None] >> np.arange(4)) & 1).astype(float)
        x = 1.0 - y
        batch = _batch_worst_delay(x * k_local + y * k_edge, y * k_upload,
                                   BisectionConfig())
        for code in range(16):
            decisions = DecisionVector.from_offload_mask(y[code].astype(int))
            single = allocate_bandwidth(sc, decisions).worst_delay
            assert single == pytest.approx(batch[code], rel=1e-9, abs=1e-9)
