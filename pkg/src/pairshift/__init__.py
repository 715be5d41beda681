"""Counterfactual decomposition of homogamy-share changes.

The decomposition engine (sequential, path-independent and Shapley schemes
over arbitrary outcome functions) lives in :mod:`pairshift.decomposition`;
couple-table machinery and the preference/availability outcome function in
:mod:`pairshift.market`; microdata ingestion in :mod:`pairshift.ingest`; the
``pairshift`` command in :mod:`pairshift.cli`.
"""

from .decomposition import (
    DecompositionResult,
    FactorScenario,
    PathIndependent,
    Scheme,
    SchemeComparison,
    Sequential,
    Shapley,
    compare_schemes,
    evaluate_corner,
    interaction_term,
    path_independent_decompose,
    sequential_decompose,
    shapley_decompose,
)
from .errors import (
    CapacityError,
    ConvergenceError,
    DataError,
    DomainError,
    EvaluationError,
    FormatError,
    PairshiftError,
)
from .ingest import (
    CoupleRecord,
    ParseResult,
    TabulationConfig,
    TabulationSummary,
    WavePanel,
    parse_microdata,
    read_tables_csv,
    tabulate,
    write_tables_csv,
)
from .market import (
    AssociationModel,
    ContingencyTable,
    CounterfactualConfig,
    HomogamyDecomposition,
    Marginals,
    counterfactual_table,
    decompose_homogamy_change,
    extract_association,
    extract_marginals,
    homogamy_share,
    long_horizon_decompose,
)

__version__ = "0.1.0"

__all__ = [
    "AssociationModel",
    "CapacityError",
    "ContingencyTable",
    "ConvergenceError",
    "CoupleRecord",
    "CounterfactualConfig",
    "DataError",
    "DecompositionResult",
    "DomainError",
    "EvaluationError",
    "FactorScenario",
    "FormatError",
    "HomogamyDecomposition",
    "Marginals",
    "ParseResult",
    "PairshiftError",
    "PathIndependent",
    "Scheme",
    "SchemeComparison",
    "Sequential",
    "Shapley",
    "TabulationConfig",
    "TabulationSummary",
    "WavePanel",
    "compare_schemes",
    "counterfactual_table",
    "decompose_homogamy_change",
    "evaluate_corner",
    "extract_association",
    "extract_marginals",
    "homogamy_share",
    "interaction_term",
    "long_horizon_decompose",
    "parse_microdata",
    "path_independent_decompose",
    "read_tables_csv",
    "sequential_decompose",
    "shapley_decompose",
    "tabulate",
    "write_tables_csv",
]
