import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pairshift import (
    CapacityError,
    DecompositionResult,
    DomainError,
    EvaluationError,
    FactorScenario,
    PathIndependent,
    Sequential,
    Shapley,
    compare_schemes,
    evaluate_corner,
    interaction_term,
    path_independent_decompose,
    sequential_decompose,
    shapley_decompose,
)

from oracles import shapley_by_paths

TWO_FACTOR = FactorScenario(("x", "y"), {"x": 1.0, "y": 3.0}, {"x": 2.0, "y": 5.0})


def product(assignment):
    return assignment["x"] * assignment["y"]


def addition(assignment):
    return assignment["x"] + assignment["y"]


class TestEvaluateCorner:
    def test_pure_baseline(self):
        assert evaluate_corner(addition, TWO_FACTOR, set()) == 4.0

    def test_pure_final(self):
        assert evaluate_corner(addition, TWO_FACTOR, {"x", "y"}) == 7.0

    def test_mixed_corner(self):
        assert evaluate_corner(product, TWO_FACTOR, {"x"}) == 6.0

    def test_unknown_factor(self):
        with pytest.raises(DomainError, match="unknown factor"):
            evaluate_corner(product, TWO_FACTOR, {"z"})

    def test_non_finite_value_names_corner(self):
        def bad(assignment):
            return math.inf if assignment["x"] == 2.0 else 0.0

        with pytest.raises(EvaluationError, match=r"x=final, y=baseline"):
            evaluate_corner(bad, TWO_FACTOR, {"x"})


class TestScenarioValidation:
    def test_empty_factors(self):
        with pytest.raises(DomainError):
            FactorScenario((), {}, {})

    def test_duplicate_names(self):
        with pytest.raises(DomainError, match="unique"):
            FactorScenario(("x", "x"), {"x": 1}, {"x": 2})

    def test_key_mismatch(self):
        with pytest.raises(DomainError, match="do not match"):
            FactorScenario(("x",), {"x": 1}, {"y": 2})


class TestSequential:
    def test_product_forward(self):
        result = sequential_decompose(product, TWO_FACTOR, ("x", "y"))
        assert result.components == {"x": 3.0, "y": 4.0}
        assert result.total == 7.0
        assert result.interaction == 0.0

    def test_product_backward(self):
        result = sequential_decompose(product, TWO_FACTOR, ("y", "x"))
        assert result.components == {"x": 5.0, "y": 2.0}
        assert result.total == 7.0

    def test_additive_is_order_free(self):
        forward = sequential_decompose(addition, TWO_FACTOR, ("x", "y"))
        backward = sequential_decompose(addition, TWO_FACTOR, ("y", "x"))
        assert forward.components == backward.components == {"x": 1.0, "y": 2.0}

    def test_invalid_permutation(self):
        with pytest.raises(DomainError, match="permutation"):
            sequential_decompose(product, TWO_FACTOR, ("x", "x"))
        with pytest.raises(DomainError, match="permutation"):
            sequential_decompose(product, TWO_FACTOR, ("x",))


class TestPathIndependent:
    def test_product(self):
        result = path_independent_decompose(product, TWO_FACTOR)
        assert result.components == {"x": 3.0, "y": 2.0}
        assert result.interaction == 2.0
        assert result.total == 7.0

    def test_additive_has_no_interaction(self):
        result = path_independent_decompose(addition, TWO_FACTOR)
        assert result.components == {"x": 1.0, "y": 2.0}
        assert result.interaction == 0.0

    def test_single_factor(self):
        scenario = FactorScenario(("x",), {"x": 1.0}, {"x": 2.0})
        result = path_independent_decompose(lambda a: a["x"] ** 2, scenario)
        assert result.components == {"x": 3.0}
        assert result.interaction == 0.0


class TestInteractionTerm:
    def test_product(self):
        assert interaction_term(product, TWO_FACTOR) == 2.0

    def test_additive(self):
        assert interaction_term(addition, TWO_FACTOR) == 0.0

    def test_minimum(self):
        scenario = FactorScenario(("x", "y"), {"x": 0.0, "y": 0.0},
                                  {"x": 1.0, "y": 1.0})
        assert interaction_term(lambda a: min(a["x"], a["y"]), scenario) == 1.0

    def test_needs_two_factors(self):
        scenario = FactorScenario(("x",), {"x": 0.0}, {"x": 1.0})
        with pytest.raises(DomainError, match="two factors"):
            interaction_term(lambda a: a["x"], scenario)


class TestShapley:
    def test_product_two_factors(self):
        result = shapley_decompose(product, TWO_FACTOR)
        assert result.components == {"x": 4.0, "y": 3.0}
        assert result.interaction == 0.0

    def test_additive_matches_other_schemes(self):
        assert shapley_decompose(addition, TWO_FACTOR).components == \
            {"x": 1.0, "y": 2.0}

    def test_three_factor_symmetry(self):
        scenario = FactorScenario(
            ("x", "y", "z"),
            {"x": 0.0, "y": 0.0, "z": 0.0},
            {"x": 1.0, "y": 1.0, "z": 1.0},
        )
        triple = lambda a: a["x"] * a["y"] * a["z"]  # noqa: E731
        result = shapley_decompose(triple, scenario)
        for component in result.components.values():
            assert component == pytest.approx(1.0 / 3.0, rel=1e-12)
        by_paths = shapley_by_paths(triple, scenario)
        for name in scenario.factors:
            assert result.components[name] == pytest.approx(by_paths[name], rel=1e-12)

    def test_capacity_limit(self):
        names = tuple(f"f{i}" for i in range(13))
        scenario = FactorScenario(names, {n: 0.0 for n in names},
                                  {n: 1.0 for n in names})
        with pytest.raises(CapacityError, match="12"):
            shapley_decompose(lambda a: 0.0, scenario)


class TestCompareSchemes:
    def test_shared_total_and_gap(self):
        comparison = compare_schemes(product, TWO_FACTOR)
        totals = {result.total for result in comparison.results.values()}
        assert totals == {7.0}
        backward = Sequential(("y", "x"))
        assert comparison.attribution_gaps[backward]["x"] == 2.0
        assert comparison.attribution_gaps[Sequential(("x", "y"))]["x"] == 0.0

    def test_additive_collapse(self):
        comparison = compare_schemes(addition, TWO_FACTOR)
        components = [tuple(sorted(r.components.items()))
                      for r in comparison.results.values()]
        assert len(set(components)) == 1

    def test_needs_two_factors(self):
        scenario = FactorScenario(("x",), {"x": 0.0}, {"x": 1.0})
        with pytest.raises(DomainError, match="two factors"):
            compare_schemes(lambda a: a["x"], scenario)

    def test_outcome_called_once_per_corner(self):
        calls = []

        def counting(assignment):
            calls.append(tuple(sorted(assignment.items())))
            return assignment["x"] * assignment["y"]

        compare_schemes(counting, TWO_FACTOR)
        assert len(calls) == len(set(calls)) == 4


class TestResultValidation:
    def test_rejects_bad_adding_up(self):
        with pytest.raises(DomainError, match="sum to total"):
            DecompositionResult(PathIndependent(), {"x": 1.0}, 0.0, 2.0)

    def test_rejects_sequential_interaction(self):
        with pytest.raises(DomainError, match="zero interaction"):
            DecompositionResult(Sequential(("x",)), {"x": 1.0}, 0.5, 1.5)


# ---------------------------------------------------------------------------
# Invariants over randomized scenarios and polynomial outcome functions.

names_from_size = lambda n: tuple(f"f{i}" for i in range(n))  # noqa: E731

# Quantized draws keep every corner value and component in the normal float
# range, where the bitwise identities below actually hold.
values = st.floats(min_value=-3, max_value=3, allow_nan=False,
                   allow_infinity=False).map(lambda v: round(v, 3))
coefficients = st.floats(min_value=-2, max_value=2, allow_nan=False,
                         allow_infinity=False).map(lambda v: round(v, 3))


@st.composite
def scenarios(draw, min_factors=1, max_factors=4):
    n = draw(st.integers(min_factors, max_factors))
    factors = names_from_size(n)
    baseline = {name: draw(values) for name in factors}
    final = {name: draw(values) for name in factors}
    return FactorScenario(factors, baseline, final)


@st.composite
def polynomials(draw, factors):
    monomials = draw(st.lists(
        st.tuples(coefficients,
                  st.tuples(*[st.integers(0, 2) for _ in factors])),
        min_size=1, max_size=5,
    ))

    def outcome(assignment):
        total = 0.0
        for coefficient, exponents in monomials:
            term = coefficient
            for name, exponent in zip(factors, exponents):
                term *= assignment[name] ** exponent
            total += term
        return total

    return outcome


def assert_adds_up(result):
    parts = list(result.components.values()) + [result.interaction]
    scale = max(1.0, abs(result.total), math.fsum(abs(p) for p in parts))
    assert abs(math.fsum(parts) - result.total) <= 1e-12 * scale


@given(st.data())
@settings(max_examples=150)
def test_adding_up_all_schemes(data):
    scenario = data.draw(scenarios())
    outcome = data.draw(polynomials(scenario.factors))
    for result in (
        sequential_decompose(outcome, scenario, scenario.factors),
        sequential_decompose(outcome, scenario, scenario.factors[::-1]),
        path_independent_decompose(outcome, scenario),
        shapley_decompose(outcome, scenario),
    ):
        assert_adds_up(result)


@given(st.data())
@settings(max_examples=150)
def test_interaction_identity_two_factors(data):
    scenario = data.draw(scenarios(min_factors=2, max_factors=2))
    outcome = data.draw(polynomials(scenario.factors))
    first, second = scenario.factors
    forward = sequential_decompose(outcome, scenario, (first, second))
    backward = sequential_decompose(outcome, scenario, (second, first))
    bracket = interaction_term(outcome, scenario)
    # Switching `first` last instead of first shifts its component by exactly
    # the joint effect; the grouping in interaction_term makes this bitwise.
    assert backward.components[first] - forward.components[first] == bracket
    assert forward.components[second] - backward.components[second] == \
        pytest.approx(bracket, rel=1e-12, abs=1e-12)


@given(st.data())
@settings(max_examples=100)
def test_path_independent_ignores_factor_order(data):
    scenario = data.draw(scenarios(min_factors=2, max_factors=4))
    outcome = data.draw(polynomials(scenario.factors))
    reordered = FactorScenario(scenario.factors[::-1], scenario.baseline,
                               scenario.final)
    original = path_independent_decompose(outcome, scenario)
    flipped = path_independent_decompose(outcome, reordered)
    assert original.components == flipped.components
    assert original.interaction == flipped.interaction


@given(st.data())
@settings(max_examples=100)
def test_separable_outcome_collapses_schemes(data):
    # Integer-valued pieces keep corner sums exact and two-factor Shapley
    # weights are exact halves, so every scheme must agree bit for bit and
    # report a zero interaction.
    scenario = data.draw(scenarios(min_factors=2, max_factors=2))
    pieces = {
        name: data.draw(st.dictionaries(
            st.sampled_from(["base", "shift"]), st.integers(-50, 50),
            min_size=2, max_size=2))
        for name in scenario.factors
    }

    def outcome(assignment):
        total = 0.0
        for name in scenario.factors:
            is_final = assignment[name] == scenario.final[name]
            total += pieces[name]["shift" if is_final else "base"]
        return total

    results = [
        sequential_decompose(outcome, scenario, scenario.factors),
        sequential_decompose(outcome, scenario, scenario.factors[::-1]),
        path_independent_decompose(outcome, scenario),
        shapley_decompose(outcome, scenario),
    ]
    for result in results:
        assert result.components == results[0].components
        assert result.interaction == 0.0


@given(st.data())
@settings(max_examples=150)
def test_shapley_consistency_two_factors(data):
    scenario = data.draw(scenarios(min_factors=2, max_factors=2))
    outcome = data.draw(polynomials(scenario.factors))
    first, second = scenario.factors
    shapley = shapley_decompose(outcome, scenario)
    forward = sequential_decompose(outcome, scenario, (first, second))
    backward = sequential_decompose(outcome, scenario, (second, first))
    main = path_independent_decompose(outcome, scenario)
    for name in scenario.factors:
        mean = (forward.components[name] + backward.components[name]) / 2
        assert shapley.components[name] == mean
        assert shapley.components[name] == pytest.approx(
            main.components[name] + main.interaction / 2, rel=1e-12, abs=1e-12)


@given(st.data())
@settings(max_examples=100)
def test_single_factor_degeneracy(data):
    scenario = data.draw(scenarios(min_factors=1, max_factors=1))
    outcome = data.draw(polynomials(scenario.factors))
    (name,) = scenario.factors
    for result in (
        sequential_decompose(outcome, scenario, scenario.factors),
        path_independent_decompose(outcome, scenario),
        shapley_decompose(outcome, scenario),
    ):
        assert result.components == {name: result.total}
        assert result.interaction == 0.0
