"""Scheme-agnostic decomposition of a change in an outcome over named factors.

A scenario fixes baseline and final values for each factor; the outcome
function maps any complete factor assignment to a real number. The schemes
split the observed change (final minus baseline outcome) into per-factor
components, either by switching factors in a stated order, by taking
single-switch main effects plus an explicit joint-effect residual, or by
averaging over every switching order (Shapley attribution).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Any, Callable, Iterable, Mapping

from .errors import CapacityError, DomainError, EvaluationError

OutcomeFunction = Callable[[Mapping[str, Any]], float]

MAX_SHAPLEY_FACTORS = 12

ADDING_UP_RTOL = 1e-12


@dataclass(frozen=True)
class FactorScenario:
    """Baseline and final values of each named factor.

    Parameters
    ----------
    factors : sequence of str
        Factor names, in display order. Must be unique and non-empty.
    baseline, final : mapping
        Factor name to value. Key sets must equal ``factors``. Values are
        opaque to the engine; only the outcome function interprets them.
    """

    factors: tuple[str, ...]
    baseline: Mapping[str, Any]
    final: Mapping[str, Any]

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        object.__setattr__(self, "baseline", dict(self.baseline))
        object.__setattr__(self, "final", dict(self.final))
        if not self.factors:
            raise DomainError("scenario needs at least one factor")
        if len(set(self.factors)) != len(self.factors):
            raise DomainError(f"factor names must be unique, got {self.factors}")
        for name, values in (("baseline", self.baseline), ("final", self.final)):
            if set(values) != set(self.factors):
                raise DomainError(
                    f"{name} keys {sorted(values)} do not match factors {sorted(self.factors)}"
                )

    def corner(self, switched: Iterable[str]) -> dict[str, Any]:
        """Assignment taking final values on `switched`, baseline elsewhere."""
        switched = set(switched)
        unknown = switched - set(self.factors)
        if unknown:
            raise DomainError(f"unknown factor name(s): {sorted(unknown)}")
        return {
            name: self.final[name] if name in switched else self.baseline[name]
            for name in self.factors
        }

    def corner_label(self, switched: Iterable[str]) -> str:
        switched = set(switched)
        return ", ".join(
            f"{name}={'final' if name in switched else 'baseline'}"
            for name in self.factors
        )


@dataclass(frozen=True)
class Sequential:
    """Switch factors one at a time in `order`; joint effects fold into components."""

    order: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "order", tuple(self.order))


@dataclass(frozen=True)
class PathIndependent:
    """Single-switch main effects plus an explicit joint-effect residual."""


@dataclass(frozen=True)
class Shapley:
    """Average of the sequential components over every switching order."""


Scheme = Sequential | PathIndependent | Shapley


@dataclass(frozen=True)
class DecompositionResult:
    """Per-factor components, an explicit interaction term, and the total change.

    The interaction term is zero by construction for Sequential and Shapley
    schemes. Components plus interaction always sum to the total within a
    small accumulation tolerance, which is checked at construction.
    """

    scheme: Scheme
    components: dict[str, float]
    interaction: float
    total: float

    def __post_init__(self):
        object.__setattr__(self, "components", dict(self.components))
        parts = list(self.components.values()) + [self.interaction]
        residual = abs(math.fsum(parts) - self.total)
        scale = max(1.0, abs(self.total), math.fsum(abs(p) for p in parts))
        if residual > ADDING_UP_RTOL * scale:
            raise DomainError(
                f"components + interaction do not sum to total "
                f"(residual {residual:.3e}, scale {scale:.3e})"
            )
        if isinstance(self.scheme, (Sequential, Shapley)) and self.interaction != 0.0:
            raise DomainError(
                f"{type(self.scheme).__name__} results must carry a zero interaction"
            )


class _CornerCache:
    """Evaluates the outcome at scenario corners, at most once per corner."""

    def __init__(self, outcome: OutcomeFunction, scenario: FactorScenario):
        self._outcome = outcome
        self._scenario = scenario
        self._values: dict[frozenset[str], float] = {}

    def value(self, switched: Iterable[str]) -> float:
        key = frozenset(switched)
        if key not in self._values:
            assignment = self._scenario.corner(key)
            value = float(self._outcome(assignment))
            if not math.isfinite(value):
                raise EvaluationError(
                    f"outcome is not finite ({value!r}) at corner "
                    f"({self._scenario.corner_label(key)})"
                )
            self._values[key] = value
        return self._values[key]


def evaluate_corner(outcome: OutcomeFunction, scenario: FactorScenario,
                    switched: Iterable[str]) -> float:
    """Evaluate the outcome with `switched` factors at their final values.

    Raises DomainError for unknown factor names and EvaluationError, naming
    the corner, when the outcome is not finite there.
    """
    return _CornerCache(outcome, scenario).value(switched)


def sequential_decompose(outcome: OutcomeFunction, scenario: FactorScenario,
                         order: Iterable[str]) -> DecompositionResult:
    """Decompose by switching factors from baseline to final in `order`.

    The k-th factor in `order` receives the outcome change observed when it
    switches, with every earlier factor already at its final value. Joint
    effects are silently absorbed by whichever factor switches later, so the
    components depend on the order.

    Parameters
    ----------
    outcome : callable
        Maps a complete factor assignment to a finite float.
    scenario : FactorScenario
    order : iterable of str
        A permutation of the scenario's factor names.

    Returns
    -------
    DecompositionResult
        Components keyed by factor name, interaction fixed at 0.0.
    """
    order = tuple(order)
    if sorted(order) != sorted(scenario.factors):
        raise DomainError(
            f"order {order} is not a permutation of factors {scenario.factors}"
        )
    cache = _CornerCache(outcome, scenario)
    components: dict[str, float] = {}
    switched: set[str] = set()
    previous = cache.value(switched)
    for name in order:
        switched.add(name)
        current = cache.value(switched)
        components[name] = current - previous
        previous = current
    total = cache.value(scenario.factors) - cache.value(())
    components = {name: components[name] for name in scenario.factors}
    return DecompositionResult(Sequential(order), components, 0.0, total)


def path_independent_decompose(outcome: OutcomeFunction,
                               scenario: FactorScenario) -> DecompositionResult:
    """Decompose into single-switch main effects plus a joint-effect residual.

    Each factor's component is the outcome change from switching that factor
    alone, all others held at baseline. The interaction term is the remainder
    of the total change, so the components never depend on any assumed
    switching order. With two factors the interaction equals the familiar
    four-corner bracket (see :func:`interaction_term`); with more factors it
    aggregates all higher-order interplay into one residual.
    """
    cache = _CornerCache(outcome, scenario)
    base = cache.value(())
    components = {name: cache.value({name}) - base for name in scenario.factors}
    total = cache.value(scenario.factors) - base
    interaction = total - math.fsum(components.values())
    return DecompositionResult(PathIndependent(), components, interaction, total)


def interaction_term(outcome: OutcomeFunction, scenario: FactorScenario) -> float:
    """Joint effect of two factors: the four-corner second difference.

    For factors (x, y) this is the change of the x-effect when y switches,
    which equals the change of the y-effect when x switches. Exactly two
    factors are required.
    """
    if len(scenario.factors) != 2:
        raise DomainError(
            f"interaction_term needs exactly two factors, got {len(scenario.factors)}"
        )
    first, second = scenario.factors
    cache = _CornerCache(outcome, scenario)
    # Grouped so that it matches the difference of the two sequential
    # components of `first` bit for bit.
    return (
        (cache.value({first, second}) - cache.value({second}))
        - (cache.value({first}) - cache.value(()))
    )


def shapley_decompose(outcome: OutcomeFunction,
                      scenario: FactorScenario) -> DecompositionResult:
    """Decompose by averaging sequential components over all factor orders.

    Each factor's component is its sequential component averaged over all n!
    switching orders, computed exactly through the standard subset-weighted
    form, so only the 2**n corners are evaluated rather than n! paths. The
    interaction is distributed symmetrically across factors and the reported
    interaction term is 0 by construction.

    Capped at 12 factors (4096 corner evaluations).
    """
    names = scenario.factors
    n = len(names)
    if n > MAX_SHAPLEY_FACTORS:
        raise CapacityError(
            f"Shapley decomposition is limited to {MAX_SHAPLEY_FACTORS} factors, got {n}"
        )
    cache = _CornerCache(outcome, scenario)
    fact = [math.factorial(k) for k in range(n + 1)]
    weights = [fact[size] * fact[n - 1 - size] / fact[n] for size in range(n)]
    components: dict[str, float] = {}
    for name in names:
        others = [other for other in names if other != name]
        contribution = 0.0
        for size in range(n):
            for subset in combinations(others, size):
                gain = cache.value(set(subset) | {name}) - cache.value(subset)
                contribution += weights[size] * gain
        components[name] = contribution
    total = cache.value(names) - cache.value(())
    return DecompositionResult(Shapley(), components, 0.0, total)


@dataclass(frozen=True)
class SchemeComparison:
    """Side-by-side results of the four schemes on one two-factor scenario.

    `attribution_gaps` holds, for each sequential scheme, the difference
    between its components and the path-independent main effects, i.e. the
    share of the joint effect that the sequential order silently assigns to
    each factor.
    """

    results: dict[Scheme, DecompositionResult]
    attribution_gaps: dict[Scheme, dict[str, float]]


def compare_schemes(outcome: OutcomeFunction,
                    scenario: FactorScenario) -> SchemeComparison:
    """Run both sequential orders, the path-independent scheme, and Shapley.

    Requires exactly two factors. All four results share the same total;
    corners are evaluated once across the whole comparison.
    """
    if len(scenario.factors) != 2:
        raise DomainError(
            f"compare_schemes needs exactly two factors, got {len(scenario.factors)}"
        )
    memo: dict[tuple[int, ...], float] = {}

    def shared(assignment: Mapping[str, Any]) -> float:
        # Corner values come straight out of the scenario's maps, so object
        # identity pins down the assignment without hashing opaque values.
        key = tuple(id(assignment[name]) for name in scenario.factors)
        if key not in memo:
            memo[key] = outcome(assignment)
        return memo[key]

    forward = Sequential(scenario.factors)
    backward = Sequential(scenario.factors[::-1])
    results: dict[Scheme, DecompositionResult] = {
        forward: sequential_decompose(shared, scenario, forward.order),
        backward: sequential_decompose(shared, scenario, backward.order),
        PathIndependent(): path_independent_decompose(shared, scenario),
        Shapley(): shapley_decompose(shared, scenario),
    }
    main_effects = results[PathIndependent()].components
    gaps = {
        scheme: {
            name: result.components[name] - main_effects[name]
            for name in scenario.factors
        }
        for scheme, result in results.items()
        if isinstance(scheme, Sequential)
    }
    return SchemeComparison(results, gaps)
