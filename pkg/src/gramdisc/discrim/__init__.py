"""Discrimination programs on Gram matrices and on explicit ensembles."""

from .heuristics import (
    pattern_basis,
    solve_heuristic_structured,
    solve_heuristic_toeplitz,
    structured_pattern,
    toeplitz_basis,
    toeplitz_p_vector,
)
from .oracle import (
    conditional_probabilities,
    outcome_statistics,
    recover_povm,
    solve_full_oracle,
)
from .reduced import (
    gram_range,
    hermitian_basis,
    invariant_basis,
    reversal_symmetry,
    solve_lmi,
    solve_reduced_dual,
    solve_reduced_primal,
    solve_restricted_dual,
)
from .report import solve_instance
from .types import (
    POVM,
    DiscriminationInstance,
    DualSolution,
    MaskedInstanceError,
    OutcomeStatistics,
    ReducedPrimalSolution,
    SolveReport,
    SolverFailure,
)

__all__ = [
    "POVM",
    "DiscriminationInstance",
    "DualSolution",
    "MaskedInstanceError",
    "OutcomeStatistics",
    "ReducedPrimalSolution",
    "SolveReport",
    "SolverFailure",
    "conditional_probabilities",
    "gram_range",
    "hermitian_basis",
    "invariant_basis",
    "outcome_statistics",
    "pattern_basis",
    "recover_povm",
    "reversal_symmetry",
    "solve_full_oracle",
    "solve_heuristic_structured",
    "solve_heuristic_toeplitz",
    "solve_instance",
    "solve_lmi",
    "solve_reduced_dual",
    "solve_reduced_primal",
    "solve_restricted_dual",
    "structured_pattern",
    "toeplitz_basis",
    "toeplitz_p_vector",
]
