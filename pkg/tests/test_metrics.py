import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cavsim.metrics import (
    OptimalAllocation,
    ResourceGraph,
    SweepPoint,
    efficiency,
    fairness_index,
    global_fairness,
    knee_from_sweep,
    max_min_fair_allocation,
    power,
)

from oracles import grid_max_min, lex_less_or_close


class TestFairnessIndex:
    def test_uniform_vector_is_perfectly_fair(self):
        assert fairness_index([5, 5, 5]) == 1.0

    def test_single_claimant_hits_lower_bound(self):
        assert fairness_index([1, 0, 0, 0]) == 0.25

    def test_hand_evaluated_example(self):
        assert fairness_index([4, 2]) == pytest.approx(0.9, abs=1e-15)

    def test_all_zero_rejected(self):
        with pytest.raises(ValueError):
            fairness_index([0.0, 0.0])

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            fairness_index([])

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            fairness_index([1.0, -0.5])

    @given(
        st.lists(st.floats(0.0, 1e6), min_size=1, max_size=20).filter(
            lambda xs: sum(xs) > 0
        ),
        st.floats(1e-3, 1e3),
    )
    def test_scale_invariance(self, xs, c):
        base = fairness_index(xs)
        scaled = fairness_index([c * x for x in xs])
        assert scaled == pytest.approx(base, rel=1e-9)

    @given(st.lists(st.floats(0.0, 1e6), min_size=1, max_size=20).filter(
        lambda xs: sum(xs) > 0))
    def test_bounds(self, xs):
        f = fairness_index(xs)
        assert 1.0 / len(xs) - 1e-12 <= f <= 1.0 + 1e-12


class TestPower:
    def test_direct_evaluation(self):
        assert power(0.2, 5) == pytest.approx(0.04, rel=1e-12)

    def test_zero_throughput(self):
        assert power(0.0, 5) == 0.0

    def test_throughput_preference_exponent(self):
        assert power(0.2, 5, alpha=2) == pytest.approx(0.008, rel=1e-12)

    def test_bad_inputs(self):
        with pytest.raises(ValueError):
            power(1.0, 0.0)
        with pytest.raises(ValueError):
            power(-1.0, 1.0)
        with pytest.raises(ValueError):
            power(1.0, 1.0, alpha=0.0)


class TestEfficiency:
    def test_at_knee(self):
        assert efficiency(0.04, 0.04) == 1.0

    def test_ratio(self):
        assert efficiency(0.02, 0.04) == 0.5

    def test_idle(self):
        assert efficiency(0.0, 0.04) == 0.0

    def test_bad_knee(self):
        with pytest.raises(ValueError):
            efficiency(0.5, 0.0)


class TestKneeFromSweep:
    def test_picks_max_power(self):
        pts = [SweepPoint(1, 0.10, 10), SweepPoint(2, 0.15, 20)]
        window, peak = knee_from_sweep(pts)
        assert window == 1
        assert peak == pytest.approx(0.01)

    def test_single_point(self):
        assert knee_from_sweep([SweepPoint(3, 0.2, 4)])[0] == 3

    def test_tie_prefers_smaller_window(self):
        pts = [SweepPoint(7, 0.2, 10.0), SweepPoint(4, 0.1, 5.0)]
        assert knee_from_sweep(pts)[0] == 4

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            knee_from_sweep([])

    @given(st.permutations(list(range(8))))
    def test_order_invariance(self, order):
        pts = [SweepPoint(w + 1, 0.05 * (w + 1), 4.0 + w * w) for w in range(8)]
        reference = knee_from_sweep(pts)
        assert knee_from_sweep([pts[i] for i in order]) == reference


class TestMaxMinFairAllocation:
    def test_equal_split_of_one_bottleneck(self):
        g = ResourceGraph({"r": 0.2}, [("r",), ("r",)])
        alloc = max_min_fair_allocation(g).allocations
        assert np.allclose(alloc, [0.1, 0.1])

    def test_sole_claimant_takes_capacity(self):
        g = ResourceGraph({"r": 3.5}, [("r",)])
        assert max_min_fair_allocation(g).allocations[0] == pytest.approx(3.5)

    def test_two_resource_example(self):
        g = ResourceGraph(
            {"r1": 10.0, "r2": 4.0},
            [("r1",), ("r1", "r2"), ("r2",)],
        )
        opt = max_min_fair_allocation(g)
        assert np.allclose(opt.allocations, [8.0, 2.0, 2.0])
        assert opt.bottleneck_of_user == ("r1", "r2", "r2")

    def test_demand_caps_free_capacity_for_others(self):
        g = ResourceGraph({"r": 9.0}, [("r",), ("r",), ("r",)])
        opt = max_min_fair_allocation(g, demands=[1.0, 100.0, 100.0])
        assert np.allclose(opt.allocations, [1.0, 4.0, 4.0])
        assert opt.bottleneck_of_user[0] is None

    def test_unknown_resource_rejected(self):
        with pytest.raises(ValueError):
            ResourceGraph({"r": 1.0}, [("nope",)])

    def test_empty_path_rejected(self):
        with pytest.raises(ValueError):
            ResourceGraph({"r": 1.0}, [()])

    def test_matches_grid_oracle_with_demands(self):
        g = ResourceGraph({"a": 2.0, "b": 1.0}, [("a",), ("a", "b"), ("b",)])
        opt = max_min_fair_allocation(g, demands=[0.25, 10.0, 10.0])
        # grid oracle with the demand caps folded in as per-user ceilings
        step = 0.0625
        best = grid_max_min({"a": 2.0, "b": 1.0, "d0": 0.25},
                            [("a", "d0"), ("a", "b"), ("b",)], step)
        assert lex_less_or_close(np.sort(best), np.sort(opt.allocations),
                                 step + 1e-9)


class TestGlobalFairness:
    def test_actual_equals_optimal(self):
        assert global_fairness([0.1, 0.1], [0.1, 0.1]) == 1.0

    def test_one_user_starved(self):
        assert global_fairness([0.2, 0.0], [0.1, 0.1]) == pytest.approx(0.5)

    def test_mild_imbalance(self):
        f = global_fairness([0.12, 0.08], [0.1, 0.1])
        assert f == pytest.approx(4.0 / 4.16, rel=1e-12)

    def test_accepts_optimal_allocation_object(self):
        opt = OptimalAllocation(np.array([0.1, 0.1]), (None, None))
        assert global_fairness([0.1, 0.1], opt) == 1.0

    def test_zero_optimal_rejected(self):
        with pytest.raises(ValueError):
            global_fairness([1.0], [0.0])

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError):
            global_fairness([1.0, 2.0], [1.0])
