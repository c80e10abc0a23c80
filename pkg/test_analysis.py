"""
Tests for the exact average-slot expressions.
"""
import math

import numpy as np
import pytest

from splitting import analysis
from splitting.analysis import SeriesControl
from splitting.exceptions import InvalidArgumentError

GRID = [round(0.2 * i, 10) for i in range(1, 16)]


class TestCollisionSlots:
    def test_single_node_anchors(self):
        assert analysis.collision_slots_q1(1) == 0.0
        assert analysis.collision_slots_q1(2) == 2.0
        assert analysis.collision_slots_q1(3) == pytest.approx(7 / 3, abs=1e-12)
        assert analysis.collision_slots_q1(4) == pytest.approx(8 / 3, abs=1e-12)

    def test_single_node_growth_is_logarithmic(self):
        for k in range(2, 1001):
            value = analysis.collision_slots_q1(k)
            assert math.isfinite(value)
            assert value <= math.log2(k) + 1 + 1e-12

    def test_zero_nodes_rejected(self):
        with pytest.raises(InvalidArgumentError) as excinfo:
            analysis.collision_slots_q1(0)
        assert excinfo.value.param == "k"

    def test_two_node_base_case(self):
        assert analysis.collision_slots_q(2, 2, 1.221) == 3.0
        assert analysis.collision_table(2, 1.221)[2] == 3.0

    def test_three_colliders_two_selected(self):
        # Independent of p_e: only E_2^2 = 3 and E_2^1 = 2 enter
        assert analysis.collision_slots_q(3, 2, 1.221) == pytest.approx(13 / 3, abs=1e-12)
        assert analysis.collision_slots_q(3, 2, 0.7) == pytest.approx(13 / 3, abs=1e-12)

    def test_two_colliders_three_selected(self):
        assert analysis.collision_slots_q(2, 3, 1.214) == pytest.approx(5.48, abs=0.02)

    def test_table_matches_pointwise_values(self):
        table = analysis.collision_table(3, 1.2)
        assert table.Q == 3
        for k in (1, 2, 5, 17):
            assert table[k] == pytest.approx(analysis.collision_slots_q(k, 3, 1.2))


class TestAsymptotic:
    def test_single_node_optimum_value(self):
        assert analysis.avg_slots_asym_recursive(1.088) == pytest.approx(2.467, abs=1e-3)
        assert analysis.avg_slots_asym_markov(1.088) == pytest.approx(2.467, abs=1e-3)

    @pytest.mark.parametrize("p_e", GRID)
    def test_recursive_and_markov_forms_agree(self, p_e):
        ctl = SeriesControl(tol=1e-12)
        assert abs(analysis.avg_slots_asym_recursive(p_e, ctl) - analysis.avg_slots_asym_markov(p_e, ctl)) < 1e-8

    @pytest.mark.parametrize("p_e", GRID)
    def test_two_node_forms_agree(self, p_e):
        ctl = SeriesControl(tol=1e-12)
        assert abs(analysis.avg_slots_q_recursive(2, p_e, ctl) - analysis.avg_slots_q2_markov(p_e, ctl)) < 1e-8

    def test_small_load_dominated_by_idle_slots(self):
        idle = 1.0 / -math.expm1(-0.01)
        assert analysis.avg_slots_asym_recursive(0.01) == pytest.approx(idle, rel=0.01)
        assert analysis.avg_slots_q_recursive(3, 1e-8) == pytest.approx(3 / -math.expm1(-1e-8))

    @pytest.mark.parametrize("Q, p_e, expected, tol", [
        (2, 1.221, 4.406, 0.002),
        (3, 1.214, 6.491, 0.002),
        (6, 1.241, 12.645, 0.005),
    ])
    def test_multi_node_values(self, Q, p_e, expected, tol):
        assert analysis.avg_slots_q_recursive(Q, p_e) == pytest.approx(expected, abs=tol)

    def test_q1_delegates_to_single_node_series(self):
        assert analysis.avg_slots_q_recursive(1, 1.3) == analysis.avg_slots_asym_recursive(1.3)

    def test_partial_sums_are_non_decreasing(self):
        for evaluate in (
            analysis.avg_slots_asym_recursive,
            analysis.avg_slots_asym_markov,
            analysis.avg_slots_q2_markov,
        ):
            partial = [evaluate(1.2, terms=t) for t in range(1, 10)]
            assert all(b >= a for a, b in zip(partial, partial[1:]))
            assert partial[-1] <= evaluate(1.2) + 1e-12
        partial = [analysis.avg_slots_q_recursive(2, 1.2, terms=t) for t in range(1, 10)]
        assert all(b >= a for a, b in zip(partial, partial[1:]))

    def test_form_dispatch(self):
        assert analysis.avg_slots_q(2, 1.2, form="markov") == analysis.avg_slots_q2_markov(1.2)
        with pytest.raises(InvalidArgumentError):
            analysis.avg_slots_q(3, 1.2, form="markov")
        with pytest.raises(InvalidArgumentError):
            analysis.avg_slots_q(1, 1.2, form="closed")

    @pytest.mark.parametrize("p_e", [0.0, -1.0, math.inf, math.nan])
    def test_invalid_loads_rejected(self, p_e):
        with pytest.raises(InvalidArgumentError):
            analysis.avg_slots_asym_recursive(p_e)


class TestChains:
    def test_first_success_probability(self):
        chain = analysis.chain_probabilities_q1(1.0)
        assert chain.P0 == pytest.approx(math.exp(-1) / (1 - math.exp(-1)), abs=1e-12)

    def test_single_node_chain_probabilities(self):
        chain = analysis.chain_probabilities_q1(1.088)
        assert all(0 < p < 1 for p in chain.success)
        visits = np.array(chain.visit)
        assert np.all(np.diff(visits) <= 0)
        assert visits[-1] < analysis.DEFAULT_CONTROL.tol

    def test_fixed_number_of_states(self):
        chain = analysis.chain_probabilities_q1(1.088, states=4)
        assert len(chain.visit) == 4
        assert len(chain.success) == 4

    def test_two_node_chain_probabilities(self):
        chain = analysis.chain_probabilities_q2(1.221)
        for values in (chain.success, chain.success_right, chain.visit, chain.visit_prime, chain.visit_double_prime):
            assert all(0 <= p <= 1 for p in values)
        assert chain.visit_double_prime[0] == 0.0
        assert len(chain.visit_double_prime) == len(chain.visit) + 1
        assert chain.visit_prime[0] == pytest.approx(chain.visit[0] * chain.success[0])


class TestBounds:
    def test_upper_bound_value(self):
        assert analysis.upper_bound(1.088, 2.0) == pytest.approx(2.850, abs=0.005)

    def test_upper_bound_at_smallest_tangent_point(self):
        p_e = 1.2
        expected = 2 * p_e / (math.e * math.log(2)) + 1 / -math.expm1(-p_e)
        assert analysis.upper_bound(p_e, math.e / 2) == pytest.approx(expected, abs=1e-12)

    def test_tangent_point_below_e_over_two_rejected(self):
        with pytest.raises(InvalidArgumentError) as excinfo:
            analysis.upper_bound(1.0, 1.0)
        assert excinfo.value.param == "k0"

    @pytest.mark.parametrize("p_e", GRID)
    def test_bounds_enclose_exact_value(self, p_e):
        exact = analysis.avg_slots_asym_recursive(p_e)
        assert analysis.upper_bound(p_e, 2.0) >= exact
        assert analysis.lower_bound_recursive(p_e) <= exact + 1e-12
        assert analysis.lower_bound_markov(p_e) <= exact + 1e-12


class TestFinite:
    def test_idle_phase_length(self):
        assert analysis.idle_phase_length(10, 1.088) == 9
        assert analysis.idle_phase_length(10, 1.0) == 9
        assert analysis.idle_phase_length(1, 1.0) == 0

    def test_single_node(self):
        assert analysis.avg_slots_finite(1, 1.0) == pytest.approx(1.0, abs=1e-15)

    def test_ten_nodes_close_to_asymptote(self):
        value = analysis.avg_slots_finite(10, 1.088)
        assert value == pytest.approx(2.3956, abs=1e-3)
        assert abs(value - analysis.avg_slots_asym_recursive(1.088)) < 0.1

    @pytest.mark.parametrize("p_e", [0.5, 1.088, 2.0])
    def test_converges_to_asymptotic_value(self, p_e):
        assert abs(analysis.avg_slots_finite(1000, p_e) - analysis.avg_slots_asym_recursive(p_e)) < 0.01

    def test_load_above_node_count_rejected(self):
        with pytest.raises(InvalidArgumentError) as excinfo:
            analysis.avg_slots_finite(3, 3.5)
        assert excinfo.value.param == "p_e"


class TestThroughput:
    def test_values(self):
        assert analysis.throughput(1, 1.088) == pytest.approx(1 / 2.467, abs=1e-3)
        assert analysis.throughput(2, 1.221) == pytest.approx(2 / 4.406, abs=1e-3)

    def test_two_at_once_beats_one_twice(self):
        assert analysis.avg_slots_q_recursive(2, 1.221) < 2 * analysis.avg_slots_asym_recursive(1.088)


class TestSeriesControl:
    def test_invalid_settings(self):
        with pytest.raises(InvalidArgumentError):
            SeriesControl(tol=0.0)
        with pytest.raises(InvalidArgumentError):
            SeriesControl(k_max=5)
