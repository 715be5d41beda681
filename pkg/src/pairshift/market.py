"""Couple contingency tables and the two-factor homogamy decomposition.

A couples table counts pairs by (male education, female education). Its row
and column sums are the availability factor; its odds-ratio structure, held
as an iterative-proportional-fitting seed, is the preference factor.
Counterfactual tables combine the preferences of one wave with the
availability of another, which turns the homogamy share into an outcome
function over the two factors that the decomposition engine can split.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Mapping, Sequence

import numpy as np

from .decomposition import (
    DecompositionResult,
    FactorScenario,
    PathIndependent,
    Scheme,
    Sequential,
    Shapley,
    path_independent_decompose,
    sequential_decompose,
    shapley_decompose,
)
from .errors import ConvergenceError, DomainError

PREFERENCE = "preference"
AVAILABILITY = "availability"

DEFAULT_LEVELS = ("below-high-school", "high-school", "college-plus")

MARGINAL_TOTAL_RTOL = 1e-9


def _as_readonly(values: Any, shape: tuple[int, ...], what: str) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.shape != shape:
        raise DomainError(f"{what} must have shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{what} must be finite")
    arr.setflags(write=False)
    return arr


def _check_levels(levels: Sequence[str]) -> tuple[str, ...]:
    levels = tuple(levels)
    if len(levels) < 2:
        raise DomainError(f"need at least 2 education levels, got {levels}")
    if len(set(levels)) != len(levels):
        raise DomainError(f"education levels must be unique, got {levels}")
    return levels


@dataclass(frozen=True)
class ContingencyTable:
    """K x K nonnegative couple counts; rows male education, columns female."""

    levels: tuple[str, ...]
    counts: np.ndarray

    def __post_init__(self):
        levels = _check_levels(self.levels)
        k = len(levels)
        counts = _as_readonly(self.counts, (k, k), "counts")
        if np.any(counts < 0):
            raise DomainError("counts must be nonnegative")
        if counts.sum() <= 0:
            raise DomainError("table total must be positive")
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "counts", counts)

    @property
    def total(self) -> float:
        return float(self.counts.sum())


@dataclass(frozen=True)
class Marginals:
    """Education distributions of male and female partners (same couples)."""

    levels: tuple[str, ...]
    male: np.ndarray
    female: np.ndarray

    def __post_init__(self):
        levels = _check_levels(self.levels)
        k = len(levels)
        male = _as_readonly(self.male, (k,), "male marginals")
        female = _as_readonly(self.female, (k,), "female marginals")
        if np.any(male < 0) or np.any(female < 0):
            raise DomainError("marginals must be nonnegative")
        total_m, total_f = float(male.sum()), float(female.sum())
        if total_m <= 0:
            raise DomainError("marginal totals must be positive")
        if abs(total_m - total_f) > MARGINAL_TOTAL_RTOL * max(total_m, total_f):
            raise DomainError(
                f"male and female totals differ: {total_m!r} vs {total_f!r}"
            )
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "male", male)
        object.__setattr__(self, "female", female)

    @property
    def total(self) -> float:
        return float(self.male.sum())


@dataclass(frozen=True)
class AssociationModel:
    """Order-free association of a couples table, the preference factor.

    Held as a strictly positive seed table that fixes every 2x2 cross-product
    ratio; fitting the seed to arbitrary marginals preserves all of them.
    """

    levels: tuple[str, ...]
    seed: np.ndarray

    def __post_init__(self):
        levels = _check_levels(self.levels)
        k = len(levels)
        seed = _as_readonly(self.seed, (k, k), "association seed")
        if np.any(seed <= 0):
            raise DomainError("association seed must be strictly positive")
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "seed", seed)


@dataclass(frozen=True)
class CounterfactualConfig:
    """Fitting and zero-cell settings shared by all counterfactual corners."""

    ipf_tol: float = 1e-10
    ipf_max_iter: int = 10_000
    zero_adjust: float = 0.5

    def __post_init__(self):
        if self.ipf_tol <= 0:
            raise DomainError("ipf_tol must be positive")
        if self.ipf_max_iter < 1:
            raise DomainError("ipf_max_iter must be at least 1")
        if self.zero_adjust < 0:
            raise DomainError("zero_adjust must be nonnegative")


@dataclass(frozen=True)
class HomogamyDecomposition:
    """Change in the homogamy share split into its three drivers."""

    period: tuple[int, int]
    scheme: Scheme
    preference: float
    availability: float
    interaction: float
    total: float

    def __post_init__(self):
        object.__setattr__(self, "period", tuple(self.period))
        if len(self.period) != 2:
            raise DomainError(f"period must be (wave_from, wave_to), got {self.period}")
        parts = [self.preference, self.availability, self.interaction]
        residual = abs(math.fsum(parts) - self.total)
        scale = max(1.0, abs(self.total), math.fsum(abs(p) for p in parts))
        if residual > 1e-12 * scale:
            raise DomainError(
                f"components do not add up to total (residual {residual:.3e})"
            )
        if isinstance(self.scheme, (Sequential, Shapley)) and self.interaction != 0.0:
            raise DomainError("sequential and Shapley results carry a zero interaction")


def homogamy_share(table: ContingencyTable) -> float:
    """Share of couples on the diagonal, both partners in the same level."""
    return float(np.trace(table.counts) / table.counts.sum())


def extract_marginals(table: ContingencyTable) -> Marginals:
    """Row and column sums of a couples table."""
    return Marginals(table.levels, table.counts.sum(axis=1), table.counts.sum(axis=0))


def extract_association(table: ContingencyTable, zero_adjust: float = 0.5) -> AssociationModel:
    """Association model of a table, adding `zero_adjust` to every cell iff zeros exist.

    With no zero cells the counts pass through unchanged. `zero_adjust` must
    be positive when zeros are present, since the seed has to stay strictly
    positive for every odds ratio to be finite.
    """
    if zero_adjust < 0:
        raise DomainError("zero_adjust must be nonnegative")
    counts = table.counts
    if np.any(counts == 0):
        if zero_adjust == 0:
            raise DomainError(
                "table has zero cells; a positive zero_adjust is required"
            )
        counts = counts + zero_adjust
    return AssociationModel(table.levels, counts)


def counterfactual_table(association: AssociationModel, marginals: Marginals,
                         tol: float = 1e-10, max_iter: int = 10_000) -> ContingencyTable:
    """Fit the association seed to target marginals by alternating rescaling.

    Rows are scaled to the male targets, then columns to the female targets,
    until the largest row or column deviation relative to the grand total
    falls within `tol`. Rescaling preserves every 2x2 cross-product ratio of
    the seed, so the result combines the seed's preferences with the target
    availability. Zero target marginals produce exactly zero rows or columns.

    Parameters
    ----------
    association : AssociationModel
    marginals : Marginals
        Must carry the same levels as `association`.
    tol : float
        Maximum acceptable marginal deviation, relative to the grand total.
    max_iter : int
        Sweep limit before giving up.

    Raises
    ------
    DomainError
        Mismatched levels or incompatible totals.
    ConvergenceError
        Tolerance not reached within `max_iter` sweeps; carries the final
        deviation.
    """
    if association.levels != marginals.levels:
        raise DomainError(
            f"association levels {association.levels} do not match "
            f"marginals levels {marginals.levels}"
        )
    row_target = marginals.male
    total = row_target.sum()
    # Totals agree to 1e-9 by the Marginals invariant; snap the column
    # targets so that the fixed point exists at tolerances below that.
    col_target = marginals.female * (total / marginals.female.sum())

    fitted = np.array(association.seed, dtype=float)
    deviation = math.inf
    for _ in range(max_iter):
        row_sums = fitted.sum(axis=1)
        fitted *= np.divide(row_target, row_sums,
                            out=np.zeros_like(row_target), where=row_sums > 0)[:, None]
        col_sums = fitted.sum(axis=0)
        fitted *= np.divide(col_target, col_sums,
                            out=np.zeros_like(col_target), where=col_sums > 0)[None, :]
        deviation = max(
            float(np.abs(fitted.sum(axis=1) - row_target).max()),
            float(np.abs(fitted.sum(axis=0) - col_target).max()),
        ) / total
        if deviation <= tol:
            return ContingencyTable(association.levels, fitted)
    raise ConvergenceError(
        f"marginal fit did not reach {tol:g} within {max_iter} sweeps "
        f"(final deviation {deviation:.3e})",
        deviation=deviation, iterations=max_iter,
    )


def market_outcome(association_by_state: Mapping[str, AssociationModel],
                   marginals_by_state: Mapping[str, Marginals],
                   config: CounterfactualConfig):
    """Outcome function: homogamy share of the counterfactual table.

    `association_by_state` and `marginals_by_state` map "baseline"/"final" to
    the factor values; the returned callable accepts a factor assignment and
    labels any fitting failure with the offending corner.
    """
    state_of = {id(value): state
                for state, value in association_by_state.items()}
    state_of.update({id(value): state
                     for state, value in marginals_by_state.items()})

    def outcome(assignment: Mapping[str, Any]) -> float:
        association = assignment[PREFERENCE]
        marginals = assignment[AVAILABILITY]
        try:
            table = counterfactual_table(association, marginals,
                                         config.ipf_tol, config.ipf_max_iter)
        except ConvergenceError as exc:
            corner = (f"{PREFERENCE}={state_of.get(id(association), '?')}, "
                      f"{AVAILABILITY}={state_of.get(id(marginals), '?')}")
            raise ConvergenceError(
                f"counterfactual corner ({corner}) failed to converge: {exc}",
                deviation=exc.deviation, iterations=exc.iterations,
            ) from exc
        return homogamy_share(table)

    return outcome


def decompose_homogamy_change(baseline: ContingencyTable, final: ContingencyTable,
                              scheme: Scheme,
                              config: CounterfactualConfig = CounterfactualConfig(),
                              period: tuple[int, int] = (0, 1)) -> HomogamyDecomposition:
    """Split the change in homogamy share between two waves into its drivers.

    Preferences are the odds-ratio structure of each wave's table and
    availability its marginals; mixed corners are built by fitting one wave's
    association to the other wave's marginals. The matched corners reproduce
    the observed shares up to the fitting tolerance (exactly, when neither
    table needed a zero-cell adjustment).

    Parameters
    ----------
    baseline, final : ContingencyTable
        Tables for the two waves, sharing one level list.
    scheme : Scheme
        Sequential(order), PathIndependent() or Shapley(); sequential orders
        permute ("preference", "availability").
    config : CounterfactualConfig
    period : (int, int)
        Wave labels recorded on the result.

    Raises
    ------
    DomainError
        Mismatched levels or an invalid sequential order.
    ConvergenceError
        A counterfactual corner failed to fit; the message names the corner.
    """
    if baseline.levels != final.levels:
        raise DomainError(
            f"tables use different levels: {baseline.levels} vs {final.levels}"
        )
    associations = {
        "baseline": extract_association(baseline, config.zero_adjust),
        "final": extract_association(final, config.zero_adjust),
    }
    marginal_sets = {
        "baseline": extract_marginals(baseline),
        "final": extract_marginals(final),
    }
    scenario = FactorScenario(
        (PREFERENCE, AVAILABILITY),
        {PREFERENCE: associations["baseline"], AVAILABILITY: marginal_sets["baseline"]},
        {PREFERENCE: associations["final"], AVAILABILITY: marginal_sets["final"]},
    )
    outcome = market_outcome(associations, marginal_sets, config)
    if isinstance(scheme, Sequential):
        result = sequential_decompose(outcome, scenario, scheme.order)
    elif isinstance(scheme, PathIndependent):
        result = path_independent_decompose(outcome, scenario)
    elif isinstance(scheme, Shapley):
        result = shapley_decompose(outcome, scenario)
    else:
        raise DomainError(f"unknown scheme: {scheme!r}")
    return _to_homogamy(result, period)


def _to_homogamy(result: DecompositionResult, period: tuple[int, int]) -> HomogamyDecomposition:
    return HomogamyDecomposition(
        period=period,
        scheme=result.scheme,
        preference=result.components[PREFERENCE],
        availability=result.components[AVAILABILITY],
        interaction=result.interaction,
        total=result.total,
    )


def long_horizon_decompose(parts: Sequence[HomogamyDecomposition]) -> HomogamyDecomposition:
    """Sum consecutive short-horizon decompositions into one long-horizon one.

    The parts must chain (each wave_to equals the next wave_from) and share
    one scheme; every component of the result is the plain sum of that
    component across the parts.
    """
    if not parts:
        raise DomainError("need at least one decomposition to aggregate")
    for earlier, later in zip(parts, parts[1:]):
        if earlier.period[1] != later.period[0]:
            raise DomainError(
                f"periods do not chain: {earlier.period} is not followed by {later.period}"
            )
        if earlier.scheme != later.scheme:
            raise DomainError(
                f"mixed schemes: {earlier.scheme!r} vs {later.scheme!r}"
            )
    return HomogamyDecomposition(
        period=(parts[0].period[0], parts[-1].period[1]),
        scheme=parts[0].scheme,
        preference=sum(p.preference for p in parts),
        availability=sum(p.availability for p in parts),
        interaction=sum(p.interaction for p in parts),
        total=sum(p.total for p in parts),
    )
