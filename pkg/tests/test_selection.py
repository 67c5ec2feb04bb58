"""Priority formulas and descent selection."""

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vpsearch.config import ExplorationConfig
from vpsearch.errors import ExhaustedFrontierError, NormalizationError, WrongBranchError
from vpsearch.selection import priority_executed, priority_unexecuted, select_node

from conftest import ev, execute, manual_tree, random_engine_like_tree
from oracles import verify_selection_path


class TestPriorityExecuted:
    def test_hand_evaluated_example(self):
        score = priority_executed(0.9, 0.7, 10, 4, 0.5)
        assert score.value == pytest.approx(0.579357, abs=1e-6)

    def test_degenerate_single_visit(self):
        score = priority_executed(0.4, 0.4, 1, 1, 0.5)
        assert score.value == 0.0

    def test_negative_exploit_allowed(self):
        # Oracle: exact evaluation of the formula (spec's inline 0.086862
        # was computed with rounded intermediates).
        expected = (0.5 - 0.8) + 0.5 * math.sqrt(math.log(20) / 5)
        score = priority_executed(0.5, 0.8, 20, 5, 0.5)
        assert score.value == pytest.approx(expected, abs=1e-12)
        assert score.value == pytest.approx(0.0870228, abs=1e-6)

    def test_zero_visits_is_wrong_branch(self):
        with pytest.raises(WrongBranchError):
            priority_executed(0.5, 0.5, 3, 0, 0.5)

    def test_value_is_sum_of_components(self):
        score = priority_executed(0.9, 0.7, 10, 4, 0.5)
        assert score.value == pytest.approx(sum(score.components.values()), abs=1e-12)
        assert set(score.components) == {"exploit", "explore"}

    @given(
        r_max=st.floats(0, 1),
        r_parent=st.floats(0, 1),
        n_node=st.integers(1, 500),
        extra=st.integers(0, 500),
        lam=st.floats(0, 2),
    )
    @settings(max_examples=200, deadline=None)
    def test_always_finite(self, r_max, r_parent, n_node, extra, lam):
        score = priority_executed(r_max, r_parent, n_node + extra, n_node, lam)
        assert math.isfinite(score.value)

    def test_strictly_increasing_in_r_max(self):
        values = [priority_executed(r, 0.5, 10, 3, 0.5).value for r in (0.1, 0.4, 0.7, 1.0)]
        assert values == sorted(values) and len(set(values)) == len(values)

    def test_strictly_decreasing_in_n_node(self):
        values = [priority_executed(0.8, 0.5, 50, n, 0.5).value for n in (1, 2, 5, 10, 50)]
        assert values == sorted(values, reverse=True) and len(set(values)) == len(values)


class TestPriorityUnexecuted:
    def test_hand_evaluated_guarded_example(self):
        score = priority_unexecuted(0.75, 1.0, 1, 0, 0.15, 0.5)
        assert score.value == pytest.approx(1.316277, abs=1e-6)

    def test_hand_evaluated_example(self):
        expected = 0.5 + 0.15 * 0.5 + 0.5 * math.sqrt(math.log(6) / 4)
        score = priority_unexecuted(0.5, 0.5, 5, 3, 0.15, 0.5)
        assert score.value == pytest.approx(expected, abs=1e-12)

    def test_zero_coefficients(self):
        for n_parent, c_exec in ((1, 0), (7, 3), (100, 50)):
            assert priority_unexecuted(0.0, 0.0, n_parent, c_exec, 0.0, 0.0).value == 0.0

    def test_scores_outside_unit_interval_rejected(self):
        with pytest.raises(NormalizationError):
            priority_unexecuted(1.2, 0.5, 2, 1, 0.15, 0.5)
        with pytest.raises(NormalizationError):
            priority_unexecuted(0.5, -0.1, 2, 1, 0.15, 0.5)

    def test_strictly_decreasing_in_saturation(self):
        values = [priority_unexecuted(0.5, 0.5, 20, c, 0.15, 0.5).value for c in (0, 1, 3, 7, 15)]
        assert values == sorted(values, reverse=True) and len(set(values)) == len(values)

    @given(
        s_gain=st.floats(0, 1),
        s_novel=st.floats(0, 1),
        n_parent=st.integers(1, 500),
        c_exec=st.integers(0, 500),
    )
    @settings(max_examples=200, deadline=None)
    def test_always_finite(self, s_gain, s_novel, n_parent, c_exec):
        score = priority_unexecuted(s_gain, s_novel, n_parent, c_exec, 0.15, 0.5)
        assert math.isfinite(score.value)

    def test_argmax_invariant_to_constant_gain_shift(self):
        # Sibling ranking only shifts by the common constant.
        siblings = [(0.1, 0.9), (0.4, 0.2), (0.3, 0.6)]
        def ranking(shift):
            scores = [priority_unexecuted(g + shift, n, 9, 4, 0.15, 0.5).value for g, n in siblings]
            return max(range(len(scores)), key=lambda i: scores[i])
        assert ranking(0.0) == ranking(0.2) == ranking(0.5)


class TestSelectNode:
    def test_hand_evaluated_descent(self, config):
        tree = manual_tree(0.6)
        a = tree.add_child(0, "executed branch", ev(3, 3))
        b = tree.add_child(0, "fresh branch", ev(4, 5))  # s_gain .75, s_novel 1.0
        execute(tree, a, 0.8)
        # P_A = 0.2 + 0.5*sqrt(ln2/1) = 0.616..., P_B = 0.75 + 0.15 + 0.5*sqrt(ln3/2)
        assert select_node(tree, config) == b
        expected_b = 0.75 + 0.15 + 0.5 * math.sqrt(math.log(3) / 2)
        assert tree.node(b).last_priority["value"] == pytest.approx(expected_b, abs=1e-12)

    def test_descends_into_executed_child(self, config):
        tree = manual_tree(0.2)
        a = tree.add_child(0, "strong branch", ev(1, 1))
        execute(tree, a, 0.95)
        deep = tree.add_child(a, "refinement", ev(2, 2))
        tree.add_child(0, "weak sibling", ev(1, 1))
        assert select_node(tree, config) == deep

    def test_tie_breaks_to_lowest_id(self, config):
        tree = manual_tree(0.5)
        first = tree.add_child(0, "same scores", ev(3, 3))
        tree.add_child(0, "same scores too", ev(3, 3))
        tree.add_child(0, "same scores three", ev(3, 3))
        assert select_node(tree, config) == first

    def test_exhausted_frontier_raises(self, config):
        tree = manual_tree(0.5)
        with pytest.raises(ExhaustedFrontierError):
            select_node(tree, config)

    def test_rejected_nodes_never_selected(self, config):
        for seed in range(100):
            tree = random_engine_like_tree(seed, max_nodes=40)
            if not tree.frontier():
                continue
            picked = select_node(tree, config)
            assert tree.node(picked).status == "unexecuted"

    def test_fuzzed_selection_matches_path_oracle(self, config):
        for seed in range(60):
            tree = random_engine_like_tree(seed * 31 + 7, max_nodes=100)
            if not tree.frontier():
                continue
            picked = select_node(tree, config)
            verify_selection_path(tree, config, picked)

    def test_deterministic_across_repeats(self, config):
        tree = random_engine_like_tree(12345, max_nodes=80)
        picks = {select_node(tree, config) for _ in range(20)}
        assert len(picks) == 1
