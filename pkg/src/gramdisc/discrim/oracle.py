"""Full-dimension discrimination program, POVM recovery and outcome statistics."""

from __future__ import annotations

import time

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from ..rewards import RewardMatrix
from ..sdpcore import HermitianProblem, SolverOptions, solve_hermitian
from ..states import StateEnsemble
from . import _build
from .types import OutcomeStatistics, POVM, ReducedPrimalSolution


def solve_full_oracle(
    e: StateEnsemble,
    r: RewardMatrix,
    error_budget: float | None = None,
    opts: SolverOptions | None = None,
):
    """Optimize over POVMs on the state space directly.

    Maximizes ``sum_ij R_ij q_j <psi_j|M_i|psi_j>`` subject to
    ``sum_i M_i = I``.  Forbidden cells confine ``M_i`` to the orthogonal
    complement of the forbidden states.

    Returns
    -------
    alpha : float
    povm : POVM
    solution : HermitianSolution
    """
    if r.num_states != e.size:
        raise ValueError("reward columns must match the ensemble size")
    psi = e.state_matrix
    d, N = psi.shape
    L = r.num_guesses
    q = e.priors
    Rq = r.objective_matrix() * q[None, :]
    mask = r.forbidden.copy()
    if error_budget == 0.0:
        mask[:N] |= ~np.eye(N, dtype=bool) & (q > 0)[None, :]
    use_budget = error_budget is not None and error_budget > 0.0

    cplx = _build.is_complex(psi)
    layout = _build.basis_pairs(d, cplx)
    b = _build.target_vector(np.eye(d), layout)
    blocks, C, A, F_list, rows = [], [], [], [], []
    for i in range(L):
        bad = np.flatnonzero(mask[i])
        if bad.size:
            F = sla.null_space(psi[:, bad].conj().T, rcond=1e-10)
        else:
            F = np.eye(d)
        F_list.append(F)
        k = F.shape[1]
        if k == 0:
            continue
        Q = (psi * (Rq[i] * ~mask[i])[None, :]) @ psi.conj().T
        Ci = F.conj().T @ Q @ F
        Ai = _build.congruence_rows(F, layout)
        if use_budget:
            row = sp.csr_matrix((1, k * k), dtype=complex)
            if i < N:
                w = np.where(np.arange(N) == i, 0.0, q)
                E = (psi * w[None, :]) @ psi.conj().T
                row = sp.csr_matrix((F.conj().T @ E @ F).reshape(1, -1))
            Ai = sp.vstack([Ai, row]).tocsr()
        blocks.append(k)
        C.append((Ci + Ci.conj().T) / 2)
        A.append(Ai)
        rows.append(i)
    m = len(layout)
    if use_budget:
        blocks.append(1)
        C.append(np.zeros((1, 1)))
        A.append(sp.csr_matrix(([1.0], ([m], [0])), shape=(m + 1, 1)))
        b = np.append(b, error_budget)
    sol = solve_hermitian(HermitianProblem(blocks, C, A, b, "max"), opts)
    M = [np.zeros((d, d), dtype=complex) for _ in range(L)]
    for pos, i in enumerate(rows):
        Mi = F_list[i] @ sol.X[pos] @ F_list[i].conj().T
        M[i] = (Mi + Mi.conj().T) / 2
    return sol.primal_value, POVM(M), sol


def recover_povm(sol: ReducedPrimalSolution | list, e: StateEnsemble, tol: float = 1e-8) -> POVM:
    """Lift reduced variables ``W_i`` to a POVM on the state space.

    ``M_i = (Psi^+)^* W_i Psi^+ + (I - Psi Psi^+) / L``.
    """
    W = sol.W if isinstance(sol, ReducedPrimalSolution) else list(sol)
    psi = e.state_matrix
    d = psi.shape[0]
    L = len(W)
    G = psi.conj().T @ psi
    if np.abs(sum(W) - G).max() > 1e-6:
        raise ValueError("W does not sum to the ensemble's Gram matrix")
    pinv = np.linalg.pinv(psi, rcond=tol)
    comp = (np.eye(d) - psi @ pinv) / L
    M = []
    for Wi in W:
        Mi = pinv.conj().T @ Wi @ pinv + comp
        M.append((Mi + Mi.conj().T) / 2)
    return POVM(M)


def conditional_probabilities(W=None, povm: POVM | None = None, ensemble: StateEnsemble | None = None):
    """``p[i, j]``: probability of guess ``i`` given state ``j``."""
    if W is not None:
        return np.array([np.real(np.diag(w)) for w in W])
    if povm is None or ensemble is None:
        raise ValueError("need W, or a POVM with its ensemble")
    psi = ensemble.state_matrix
    return np.array([np.real(np.einsum("aj,ab,bj->j", psi.conj(), m, psi)) for m in povm.M])


def outcome_statistics(W=None, priors=None, povm: POVM | None = None,
                       ensemble: StateEnsemble | None = None) -> OutcomeStatistics:
    """Success, error and inconclusive probabilities.

    Guess rows ``0..N-1`` name states; any further row is inconclusive.
    """
    p = conditional_probabilities(W, povm, ensemble)
    if priors is None:
        if ensemble is None:
            raise ValueError("priors are required")
        priors = ensemble.priors
    q = np.asarray(priors, dtype=float)
    N = q.size
    L = p.shape[0]
    named = min(L, N)
    pc = float(sum(q[i] * p[i, i] for i in range(named)))
    pe = float(sum(q[j] * p[i, j] for i in range(named) for j in range(N) if j != i))
    pi = float(sum(q @ p[i] for i in range(N, L)))
    return OutcomeStatistics(pc, pe, pi)
