import io

import numpy as np
import pytest

from ris_offload.errors import DimensionMismatchError
from ris_offload.exact import allocate_bandwidth, brute_force
from ris_offload.lift import (Stage1Layout, Stage2Layout, build_stage1, build_stage2,
                              dump_matrices, eval_quadratic)
from ris_offload.model import (DecisionVector, delay_coefficients,
                               fixed_decision_coefficients, sample_scenario,
                               ScenarioConfig)

from conftest import make_plain_scenario


def single_user_scenario():
    return make_plain_scenario([4e6], edge_total=6.25e8)


class TestStage1Construction:
    def test_single_user_counts(self):
        lift = build_stage1(single_user_scenario())
        assert lift.dim == 5
        assert len(lift.eq_constraints) == 3
        assert len(lift.ineq_constraints) == 2

    def test_counts_scale_with_users(self):
        sc = make_plain_scenario([4e6] * 6, num_good=4)
        lift = build_stage1(sc)
        assert lift.dim == 3 * 6 + 2
        assert len(lift.eq_constraints) == 18
        assert len(lift.ineq_constraints) == 7

    def test_pair_sum_at_binary_point(self):
        lift = build_stage1(single_user_scenario())
        z = lift.layout.pack([1.0], [0.0], [0.3], 0.7)
        pair_matrix = lift.eq_constraints[2][0]
        assert z @ pair_matrix @ z == pytest.approx(1.0, abs=1e-15)

    def test_delay_cap_matches_scalar_expansion(self, rng):
        sc = make_plain_scenario([4e6, 7.2e6], num_good=1, eta_shadow=0.1,
                                 edge_total=1.25e9)
        k_local, k_edge, k_upload = delay_coefficients(sc)
        lift = build_stage1(sc)
        for _ in range(20):
            x, y, beta = rng.random(2), rng.random(2), rng.random(2)
            t = rng.uniform(0, 5)
            z = lift.layout.pack(x, y, beta, t)
            for m in range(2):
                cap = lift.ineq_constraints[1 + m][0]
                want = (k_local[m] * x[m] * beta[m] + k_edge[m] * y[m] * beta[m]
                        + k_upload[m] * y[m] - beta[m] * t)
                assert z @ cap @ z == pytest.approx(want, rel=1e-12, abs=1e-14)

    def test_objective_selects_delay_variable(self, rng):
        lift = build_stage1(single_user_scenario())
        z = lift.layout.pack(rng.random(1), rng.random(1), rng.random(1), 3.25)
        assert z @ lift.objective @ z == pytest.approx(3.25, rel=1e-14)


class TestStage2Construction:
    def test_all_local_kills_upload_terms(self):
        sc = make_plain_scenario([4e6, 8e5])
        lift = build_stage2(sc, DecisionVector.all_local(2))
        assert np.all(lift.k_band == 0.0)

    def test_cap_matches_scalar_expansion(self, rng):
        sc = make_plain_scenario([4e6, 7.2e6, 1e6], num_good=2, eta_shadow=0.1)
        decisions = DecisionVector.from_offload_mask([1, 0, 1])
        k_fixed, k_band = fixed_decision_coefficients(sc, decisions)
        lift = build_stage2(sc, decisions)
        for _ in range(20):
            beta = rng.random(3)
            theta = rng.uniform(0, 5)
            s = lift.layout.pack(beta, theta)
            for m in range(3):
                cap = lift.ineq_constraints[1 + m][0]
                want = k_fixed[m] * beta[m] + k_band[m] - beta[m] * theta
                assert s @ cap @ s == pytest.approx(want, rel=1e-12, abs=1e-14)

    def test_two_offloaders_constraint_count(self):
        sc = make_plain_scenario([4e6, 8e5])
        lift = build_stage2(sc, DecisionVector.all_offload(2))
        assert len(lift.ineq_constraints) == 3
        assert lift.dim == 5

    def test_bandwidth_row_is_offload_weighted(self, rng):
        sc = make_plain_scenario([4e6, 8e5, 2e6])
        decisions = DecisionVector.from_offload_mask([0, 1, 1])
        lift = build_stage2(sc, decisions)
        beta = rng.random(3)
        s = lift.layout.pack(beta, 1.0)
        got = s @ lift.ineq_constraints[0][0] @ s
        assert got == pytest.approx(beta[1] + beta[2], rel=1e-14)


class TestEvalQuadratic:
    def test_feasible_point_from_exact_oracle(self):
        sc = make_plain_scenario([4e6, 7.2e6, 1e6], num_good=2, eta_shadow=0.1,
                                 edge_total=1.875e9)
        decisions, allocation = brute_force(sc)
        lift = build_stage1(sc)
        z = lift.layout.pack(decisions.local, decisions.offload,
                             allocation.beta, allocation.worst_delay)
        res = eval_quadratic(lift, z)
        assert np.abs(res.eq_residuals).max() < 1e-9
        assert res.ineq_residuals.max() < 1e-9
        assert res.objective == pytest.approx(allocation.worst_delay)

    def test_fractional_indicator_breaks_binary_row(self):
        lift = build_stage1(single_user_scenario())
        z = lift.layout.pack([0.5], [0.5], [0.2], 1.0)
        res = eval_quadratic(lift, z)
        # x^2 - x at one half
        assert res.eq_residuals[0] == pytest.approx(-0.25)
        assert abs(res.eq_residuals[0]) == pytest.approx(0.25)

    def test_zero_vector_violates_pair_sum_by_one(self):
        lift = build_stage1(single_user_scenario())
        z = np.zeros(lift.dim)
        z[lift.layout.hom_index] = 1.0
        res = eval_quadratic(lift, z)
        assert abs(res.eq_residuals[2]) == pytest.approx(1.0)

    def test_dimension_mismatch_rejected(self):
        lift = build_stage1(single_user_scenario())
        with pytest.raises(DimensionMismatchError):
            eval_quadratic(lift, np.ones(lift.dim + 1))

    def test_stage2_feasible_point(self):
        sc = make_plain_scenario([4e6, 7.2e6], num_good=1, eta_shadow=3.0)
        decisions = DecisionVector.all_offload(2)
        allocation = allocate_bandwidth(sc, decisions)
        lift = build_stage2(sc, decisions)
        s = lift.layout.pack(allocation.beta, allocation.worst_delay)
        res = eval_quadratic(lift, s)
        assert res.ineq_residuals.max() < 1e-7
        assert res.objective == pytest.approx(allocation.worst_delay)


class TestInvariants:
    def test_every_matrix_exactly_symmetric(self, rng):
        cfg = ScenarioConfig(num_users=5, num_good=3)
        sc = sample_scenario(rng, cfg)
        lift1 = build_stage1(sc)
        decisions = DecisionVector.from_offload_mask([1, 0, 1, 1, 0])
        lift2 = build_stage2(sc, decisions)
        mats = [lift1.objective] + [q for q, _ in lift1.eq_constraints]
        mats += [q for q, _ in lift1.ineq_constraints]
        mats += [lift2.objective] + [q for q, _ in lift2.ineq_constraints]
        for q in mats:
            assert np.array_equal(q, q.T)

    def test_scalar_matrix_equivalence_random_points(self, rng):
        cfg = ScenarioConfig(num_users=4, num_good=2, ris_enabled=False)
        sc = sample_scenario(rng, cfg)
        k_local, k_edge, k_upload = delay_coefficients(sc)
        lift1 = build_stage1(sc)
        decisions = DecisionVector.from_offload_mask([0, 1, 1, 0])
        k_fixed, k_band = fixed_decision_coefficients(sc, decisions)
        y_bits = np.array(decisions.offload, dtype=float)
        lift2 = build_stage2(sc, decisions)
        for _ in range(200):
            x, y, beta = rng.random(4), rng.random(4), rng.random(4)
            t = rng.uniform(0, 30)
            res = eval_quadratic(lift1, lift1.layout.pack(x, y, beta, t))
            want_eq = np.stack([x * x - x, y * y - y, x + y - 1], axis=1).ravel()
            want_ineq = np.concatenate(
                [[beta.sum() - 1.0],
                 k_local * x * beta + k_edge * y * beta + k_upload * y - beta * t])
            np.testing.assert_allclose(res.eq_residuals, want_eq, rtol=1e-12, atol=1e-12)
            np.testing.assert_allclose(res.ineq_residuals, want_ineq, rtol=1e-12,
                                       atol=1e-12 * max(1, np.abs(want_ineq).max()))
            theta = rng.uniform(0, 30)
            res2 = eval_quadratic(lift2, lift2.layout.pack(beta, theta))
            want2 = np.concatenate(
                [[(y_bits * beta).sum() - 1.0],
                 k_fixed * beta + k_band - beta * theta])
            np.testing.assert_allclose(res2.ineq_residuals, want2, rtol=1e-12,
                                       atol=1e-12 * max(1, np.abs(want2).max()))

    def test_layout_roundtrip(self, rng):
        layout = Stage1Layout(6)
        x, y, beta = rng.random(6), rng.random(6), rng.random(6)
        t = float(rng.uniform(0, 9))
        gx, gy, gb, gt = layout.unpack(layout.pack(x, y, beta, t))
        np.testing.assert_array_equal(gx, x)
        np.testing.assert_array_equal(gy, y)
        np.testing.assert_array_equal(gb, beta)
        assert gt == t

        layout2 = Stage2Layout(6)
        gb2, gth = layout2.unpack(layout2.pack(beta, t))
        np.testing.assert_array_equal(gb2, beta)
        assert gth == t

    def test_layout_indices(self):
        layout = Stage1Layout(3)
        assert [layout.x_index(m) for m in range(3)] == [0, 1, 2]
        assert [layout.y_index(m) for m in range(3)] == [3, 4, 5]
        assert [layout.beta_index(m) for m in range(3)] == [6, 7, 8]
        assert layout.t_index == 9
        assert layout.hom_index == 10
        layout2 = Stage2Layout(3)
        assert layout2.theta_index == 3
        assert layout2.v_hom_index == 4
        assert layout2.s_hom_index == 5


def test_dump_matrices_plain_text():
    lift = build_stage1(single_user_scenario())
    buf = io.StringIO()
    dump_matrices(lift, buf)
    text = buf.getvalue()
    headers = [line for line in text.splitlines() if line.startswith("#")]
    assert len(headers) == 1 + 3 + 2
    assert headers[0].startswith("# objective")
    rows = [line for line in text.splitlines() if not line.startswith("#")]
    assert len(rows) == 6 * lift.dim
