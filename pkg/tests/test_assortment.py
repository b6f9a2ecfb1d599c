import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from conftest import atoms_of, gsp_models, random_model
from gsp.assortment import (
    EXACT,
    REVENUE_ORDERED,
    RevenueFunction,
    expected_revenue,
    optimal_assortment,
    ratio_report,
    revenue_ordered,
    revenue_ordered_sets,
)
from gsp.core import CapExceededError, GSPModel, ValidationError
from gsp.datasets import load_example, tightness_instance


@pytest.fixture
def worst_case():
    return tightness_instance()


class TestRevenueFunction:
    def test_levels(self):
        r = RevenueFunction.from_list([3, 1, 3, 2])
        assert r.levels == [1, 2, 3]
        assert revenue_ordered_sets(r) == [(1, 2, 3, 4), (1, 3, 4), (1, 3)]

    @pytest.mark.parametrize("values", [{}, {1: 0.0}, {1: -1.0}, {1: 1.0, 3: 1.0}, {0: 1.0}])
    def test_rejects(self, values):
        with pytest.raises(ValidationError):
            RevenueFunction(values)

    def test_must_cover_model(self, worst_case):
        model, _ = worst_case
        with pytest.raises(ValidationError):
            optimal_assortment(model, RevenueFunction.from_list([1, 1]))


class TestExpectedRevenue:
    def test_worst_case_pair(self, worst_case):
        model, r = worst_case
        assert expected_revenue(model, {1, 3}, r) == 2

    def test_worst_case_full(self, worst_case):
        model, r = worst_case
        assert expected_revenue(model, {1, 2, 3}, r) == 1

    @settings(max_examples=100, deadline=None)
    @given(gsp_models(max_n=4), st.data())
    def test_singleton(self, model, data):
        x = data.draw(st.integers(1, model.universe_size))
        rho = data.draw(st.floats(0.1, 100))
        r = RevenueFunction({i: rho if i == x else 1.0 for i in range(1, model.universe_size + 1)})
        assert expected_revenue(model, {x}, r) == pytest.approx(rho * oracles.prob(atoms_of(model), x, {x}))

    def test_linear_in_weights(self, rng):
        a, b = random_model(rng, 4, 3), random_model(rng, 4, 3)
        mix = GSPModel(tuple((t, 0.3 * w) for t, w in a.atoms) + tuple((t, 0.7 * w) for t, w in b.atoms), 4)
        r = RevenueFunction.from_list(rng.uniform(1, 5, size=4))
        for S in oracles.subsets(4):
            lhs = expected_revenue(mix, S, r)
            rhs = 0.3 * expected_revenue(a, S, r) + 0.7 * expected_revenue(b, S, r)
            assert lhs == pytest.approx(rhs, abs=1e-12)

    def test_rejects_empty(self, worst_case):
        model, r = worst_case
        with pytest.raises(ValidationError):
            expected_revenue(model, [], r)


class TestOptimal:
    def test_worst_case(self, worst_case):
        sol = optimal_assortment(*worst_case)
        assert sol.assortment == (1, 3) and sol.expected_revenue == 2
        assert sol.method == EXACT and sol.candidates_evaluated == 7

    def test_rational_single_type(self):
        m = GSPModel.from_pairs([((3, 2, 1), 1, 1.0)], 3)
        sol = optimal_assortment(m, RevenueFunction.from_list([1, 1, 2]))
        assert sol.assortment == (3,) and sol.expected_revenue == 2

    def test_all_zero_tie_break(self):
        m = GSPModel.from_pairs([((1,), 0, 1.0)], 3)
        sol = optimal_assortment(m, RevenueFunction.from_list([1, 2, 3]))
        assert sol.assortment == (1,) and sol.expected_revenue == 0

    def test_cap(self, worst_case):
        with pytest.raises(CapExceededError):
            optimal_assortment(*worst_case, cap=2)

    @settings(max_examples=100, deadline=None)
    @given(gsp_models(max_n=5), st.data())
    def test_matches_brute_force(self, model, data):
        n = model.universe_size
        vals = data.draw(st.lists(st.integers(1, 20), min_size=n, max_size=n))
        r = RevenueFunction.from_list(vals)
        best = oracles.best_revenue(atoms_of(model), dict(enumerate(vals, 1)), n)
        sol = optimal_assortment(model, r)
        assert sol.expected_revenue == pytest.approx(best, abs=1e-9)
        assert sol.candidates_evaluated == 2**n - 1


class TestRevenueOrdered:
    def test_worst_case(self, worst_case):
        sol = revenue_ordered(*worst_case)
        assert sol.assortment == (1, 2, 3) and sol.expected_revenue == 1
        assert sol.method == REVENUE_ORDERED and sol.candidates_evaluated == 2

    def test_ties_go_to_larger_set(self):
        m = GSPModel.from_pairs([((2,), 1, 1.0)], 2)
        sol = revenue_ordered(m, RevenueFunction.from_list([1, 2]))
        assert sol.assortment == (1, 2)

    def test_uniform_revenue_full_set_optimal(self, rng):
        for _ in range(20):
            m = random_model(rng, 4, 4)
            r = RevenueFunction.from_list([3.0] * 4)
            heur = revenue_ordered(m, r)
            assert heur.assortment == (1, 2, 3, 4)
            assert heur.expected_revenue == pytest.approx(optimal_assortment(m, r).expected_revenue)

    @settings(max_examples=100, deadline=None)
    @given(gsp_models(max_n=5, rational_only=True), st.data())
    def test_rational_models_one_over_k(self, model, data):
        n = model.universe_size
        r = RevenueFunction.from_list(data.draw(st.lists(st.integers(1, 30), min_size=n, max_size=n)))
        rep = ratio_report(model, r)
        assert rep.ratio >= 1 / len(r.levels) - 1e-9


class TestRatioReport:
    def test_worst_case_tight(self, worst_case):
        rep = ratio_report(*worst_case)
        assert rep.optimal_revenue == 2 and rep.heuristic_revenue == 1
        assert rep.ratio == rep.bound == 0.5

    def test_single_level(self):
        m = GSPModel.from_pairs([((1, 2), 1, 0.5), ((2, 1), 2, 0.5)], 2)
        rep = ratio_report(m, RevenueFunction.from_list([2, 2]))
        assert rep.bound == 1 and rep.ratio == 1

    @settings(max_examples=200, deadline=None)
    @given(gsp_models(max_n=5), st.data())
    def test_bound_holds(self, model, data):
        n = model.universe_size
        r = RevenueFunction.from_list(data.draw(st.lists(st.floats(0.5, 50), min_size=n, max_size=n)))
        rep = ratio_report(model, r)
        assert rep.bound - 1e-9 <= rep.ratio <= 1 + 1e-12

    def test_cameras_by_hand(self):
        m = load_example("cameras").reference_model
        r = RevenueFunction.from_list([170, 240, 470])
        # hand evaluation of all seven offer sets; the three rational types
        # buy any lone item, the position-2 type needs two offered items
        by_hand = {
            (1,): 0.72 * 170,
            (2,): 0.72 * 240,
            (3,): 0.72 * 470,
            (1, 2): 0.50 * 170 + 0.50 * 240,
            (1, 3): 0.50 * 170 + 0.50 * 470,
            (2, 3): 0.57 * 240 + 0.43 * 470,
            (1, 2, 3): 0.22 * 170 + 0.57 * 240 + 0.21 * 470,
        }
        for S, v in by_hand.items():
            assert expected_revenue(m, S, r) == pytest.approx(v, abs=1e-9)
        rep = ratio_report(m, r)
        assert rep.optimal_revenue == pytest.approx(max(by_hand.values()))
        nested = [by_hand[(1, 2, 3)], by_hand[(2, 3)], by_hand[(3,)]]
        assert rep.heuristic_revenue == pytest.approx(max(nested))

    def test_text_and_dict(self, worst_case):
        rep = ratio_report(*worst_case)
        assert rep.to_dict()["ratio"] == 0.5
        assert "r1/rk = 0.5" in rep.to_text()
