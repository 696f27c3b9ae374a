"""Primal-dual interior-point solver for block-diagonal semidefinite programs."""

from .hermitian import (
    HermitianProblem,
    HermitianSolution,
    embed_hermitian,
    embed_matrix,
    solve_hermitian,
    unembed_matrix,
)
from .ipm import SolverWarning, recording, solve
from .problem import (
    SdpDataError,
    SdpProblem,
    SdpResourceError,
    SdpSolution,
    SolverOptions,
    Status,
    check_psd,
)

__all__ = [
    "HermitianProblem",
    "HermitianSolution",
    "SdpDataError",
    "SdpProblem",
    "SdpResourceError",
    "SdpSolution",
    "SolverOptions",
    "SolverWarning",
    "Status",
    "check_psd",
    "embed_hermitian",
    "embed_matrix",
    "recording",
    "solve",
    "solve_hermitian",
    "unembed_matrix",
]
