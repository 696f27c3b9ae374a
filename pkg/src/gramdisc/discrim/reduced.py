"""Reduced primal and dual programs on the Gram matrix.

Primal::

    maximize   sum_ij R_ij q_j <j|W_i|j>
    subject to sum_i W_i = G,  W_i PSD

Dual::

    minimize   <X, G>
    subject to X - sum_j R_ij q_j |j><j|  PSD  for every guess i

Forbidden cells restrict ``W_i`` to the unmasked coordinates.  When ``G``
is singular both programs are posed on ``range(G)``, which keeps a strictly
feasible point available to the interior-point method.
"""

from __future__ import annotations

import time

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from ..sdpcore import HermitianProblem, SolverOptions, solve_hermitian
from . import _build
from .types import (
    DiscriminationInstance,
    DualSolution,
    MaskedInstanceError,
    ReducedPrimalSolution,
)

RANK_TOL = 1e-9


def gram_range(G: np.ndarray, tol: float = RANK_TOL):
    """Eigen-split of ``G``: ``(rank, V_range, eigenvalues_range, V_null)``."""
    lam, V = np.linalg.eigh(G)
    keep = lam > tol * max(1.0, lam[-1])
    return int(keep.sum()), V[:, keep], lam[keep], V[:, ~keep]


def _row_basis(N: int, allowed: np.ndarray, Vnull: np.ndarray):
    """Orthonormal basis of vectors supported on ``allowed`` lying in range(G).

    Returns ``(F, selection)`` where ``selection`` is the index array when
    ``F`` is a plain coordinate selection, else ``None``.
    """
    S = np.flatnonzero(allowed)
    if Vnull.shape[1] == 0:
        return np.eye(N)[:, S], S
    if S.size == 0:
        return np.zeros((N, 0)), None
    B = sla.null_space(Vnull.conj().T[:, S], rcond=1e-10)
    F = np.zeros((N, B.shape[1]), dtype=B.dtype)
    F[S] = B
    return F, None


def solve_reduced_primal(
    inst: DiscriminationInstance, opts: SolverOptions | None = None
) -> ReducedPrimalSolution:
    """Solve the reduced primal program.

    Honors forbidden cells (as zero diagonal constraints) and an optional
    error budget ``sum_{i != j} q_j <j|W_i|j> <= eps``.
    """
    t0 = time.perf_counter()
    G = np.asarray(inst.gram.entries)
    N, L = inst.size, inst.num_guesses
    Rq = inst.weighted_reward()
    mask = inst.effective_mask()
    q = inst.priors

    r, Vr, lam, Vnull = gram_range(G)
    deflated = r < N
    cplx = _build.is_complex(G)
    layout = _build.basis_pairs(r if deflated else N, cplx)
    target = np.diag(lam) if deflated else G
    b = _build.target_vector(target, layout)

    use_budget = inst.error_budget is not None and inst.error_budget > 0.0
    blocks, C, A, F_list, rows = [], [], [], [], []
    for i in range(L):
        F, S = _row_basis(N, ~mask[i], Vnull)
        F_list.append(F)
        if F.shape[1] == 0:
            continue
        k = F.shape[1]
        if S is not None:
            Ai = _build.selection_rows(N, S, layout)
        else:
            Ai = _build.congruence_rows(Vr.conj().T @ F if deflated else F, layout)
        D = np.diag(Rq[i] * ~mask[i])
        Ci = F.conj().T @ D @ F
        if use_budget:
            e_row = sp.csr_matrix((1, k * k), dtype=complex)
            if i < N:
                E = np.diag(np.where(np.arange(N) == i, 0.0, q))
                e_row = sp.csr_matrix((F.conj().T @ E @ F).reshape(1, -1))
            Ai = sp.vstack([Ai, e_row]).tocsr()
        blocks.append(k)
        C.append((Ci + Ci.conj().T) / 2)
        A.append(Ai)
        rows.append(i)
    m = len(layout)
    if use_budget:
        blocks.append(1)
        C.append(np.zeros((1, 1)))
        A.append(sp.csr_matrix(([1.0], ([m], [0])), shape=(m + 1, 1)))
        b = np.append(b, inst.error_budget)

    sol = solve_hermitian(HermitianProblem(blocks, C, A, b, "max"), opts)
    W = [np.zeros((N, N), dtype=complex) for _ in range(L)]
    for pos, i in enumerate(rows):
        Wi = F_list[i] @ sol.X[pos] @ F_list[i].conj().T
        W[i] = (Wi + Wi.conj().T) / 2
    if not cplx:
        W = [w.real for w in W]
    Xh = _build.assemble_hermitian(layout, sol.y[:m], r if deflated else N)
    X = Vr @ Xh @ Vr.conj().T if deflated else Xh
    if not cplx:
        X = X.real
    return ReducedPrimalSolution(
        W=W,
        value=sol.primal_value,
        status=sol.status,
        solution=sol.raw,
        dual_X=X,
        rank=r,
        wall_time=time.perf_counter() - t0,
    )


def require_finite(inst: DiscriminationInstance, what: str):
    if inst.reward.has_mask or inst.error_budget is not None:
        raise MaskedInstanceError(
            f"{what} needs finite rewards without an error budget; "
            "solve masked or budgeted instances with the primal"
        )


def solve_lmi(
    basis: sp.csr_matrix,
    target: np.ndarray,
    lower_bounds: list,
    opts: SolverOptions | None = None,
):
    """Minimize ``<X, target>`` over ``X = sum_k x_k B_k`` with
    ``X - D_i`` PSD for each ``D_i`` in ``lower_bounds``.

    ``basis`` holds the flattened Hermitian ``B_k`` as rows.  Returns
    ``(value, x, X, HermitianSolution)``.
    """
    n = target.shape[0]
    b = -np.real(basis.conj() @ target.ravel())
    C = [-(D + D.conj().T) / 2 for D in lower_bounds]
    A = [-basis] * len(lower_bounds)
    sol = solve_hermitian(HermitianProblem([n] * len(C), C, A, b, "min"), opts)
    x = sol.y
    X = (basis.T @ x).reshape(n, n)
    X = (X + X.conj().T) / 2
    return -sol.dual_value, x, X, sol


def solve_restricted_dual(
    basis: sp.csr_matrix,
    G: np.ndarray,
    lower_bounds: list,
    opts: SolverOptions | None = None,
):
    """Restricted dual ``min <X, G>`` over ``X`` in the span of ``basis``.

    For singular ``G`` the conic dual of this program has no interior point.
    When the span contains a PSD matrix ``S`` supported on ``null(G)`` and
    positive definite there, every feasible ``W_i`` lives on ``range(G)``;
    the program is then solved in range coordinates over an independent
    reparameterization and lifted back as ``X + t S``.

    Returns ``(value, x, X, HermitianSolution, notes)``.
    """
    n = G.shape[0]
    r, Vr, lam, Vnull = gram_range(G)
    if r == n:
        value, x, X, sol = solve_lmi(basis, G.astype(complex), lower_bounds, opts)
        return value, x, X, sol, []
    m = basis.shape[0]
    dense = basis.toarray().reshape(m, n, n)
    # x with B(x) V_r = 0 span the matrices supported on null(G)
    lin = np.einsum("kab,br->kar", dense, Vr).reshape(m, -1)
    lin_real = np.hstack([lin.real, lin.imag])
    null_x = sla.null_space(lin_real.T, rcond=1e-10)
    S = None
    if null_x.shape[1]:
        Pn = Vnull @ Vnull.conj().T
        Bs = np.einsum("kab,ks->sab", dense, null_x).reshape(null_x.shape[1], -1)
        coef, *_ = np.linalg.lstsq(
            np.hstack([Bs.real, Bs.imag]).T, np.concatenate([Pn.real.ravel(), Pn.imag.ravel()]),
            rcond=None,
        )
        cand = (coef @ Bs).reshape(n, n)
        if np.linalg.eigvalsh(Vnull.conj().T @ cand @ Vnull)[0] > 1e-8:
            S = (cand + cand.conj().T) / 2
            s_coef = null_x @ coef
    if S is None:
        value, x, X, sol = solve_lmi(basis, G.astype(complex), lower_bounds, opts)
        return value, x, X, sol, [
            f"singular G (rank {r}) without a null-space certificate in the pattern; "
            "solved without reduction"
        ]
    Bhat = np.einsum("ar,kab,bs->krs", Vr.conj(), dense, Vr).reshape(m, -1)
    U, sv, _ = np.linalg.svd(np.hstack([Bhat.real, Bhat.imag]), full_matrices=False)
    rho = int((sv > 1e-10 * sv[0]).sum())
    T = U[:, :rho]
    red = sp.csr_matrix(T.T @ Bhat)
    bounds = [Vr.conj().T @ D @ Vr for D in lower_bounds]
    value, z, _, sol = solve_lmi(red, np.diag(lam).astype(complex), bounds, opts)
    x = T @ z
    X0 = (basis.T @ x).reshape(n, n)
    X0 = (X0 + X0.conj().T) / 2
    notes = [f"singular G (rank {r}): solved on range(G) with {rho} independent parameters"]
    # add a multiple of S to restore feasibility off range(G) when possible
    for t in [0.0] + [10.0**k for k in range(-6, 7)]:
        X = X0 + t * S
        if all(np.linalg.eigvalsh(X - D)[0] >= -1e-9 - 1e-14 * t for D in lower_bounds):
            break
    else:
        t, X = 0.0, X0
        notes.append("X is feasible on range(G) only")
    return value, x + t * s_coef, X, sol, notes


def hermitian_basis(n: int, complex_mode: bool) -> sp.csr_matrix:
    """Rows ``E_pp``, ``E_pq + E_qp`` and (complex) ``i E_pq - i E_qp``."""
    rr, cc, vv = [], [], []
    for row, (p, q, im) in enumerate(_build.basis_pairs(n, complex_mode)):
        if p == q:
            rr.append(row), cc.append(p * n + p), vv.append(1.0)
        else:
            rr += [row, row]
            cc += [p * n + q, q * n + p]
            vv += [1j, -1j] if im else [1.0, 1.0]
    m = len(rr) and max(rr) + 1
    return sp.csr_matrix((np.array(vv, dtype=complex), (rr, cc)), shape=(m, n * n))


def reversal_symmetry(inst: DiscriminationInstance, tol: float = 1e-12):
    """``(state_perm, guess_perm)`` when reversing the state order, together
    with the matching reversal of the first ``N`` guess rows, leaves the Gram
    matrix, the priors and the weighted reward unchanged; else ``None``."""
    N, L = inst.size, inst.num_guesses
    if L < N or inst.reward.has_mask:
        return None
    pi = np.arange(N)[::-1]
    sigma = np.concatenate([pi, np.arange(N, L)])
    G = np.asarray(inst.gram.entries)
    Rq = inst.weighted_reward()
    if np.abs(G[np.ix_(pi, pi)] - G).max() > tol:
        return None
    if np.abs(Rq[np.ix_(sigma, pi)] - Rq).max() > tol:
        return None
    return pi, sigma


def invariant_basis(perm: np.ndarray, complex_mode: bool) -> sp.csr_matrix:
    """Hermitian basis of the matrices with ``X[perm][:, perm] == X``.

    Each row is the orbit sum of an elementary Hermitian matrix under the
    permutation; orbit sums that cancel are dropped.
    """
    perm = np.asarray(perm)
    n = perm.size
    rows, seen = [], set()

    def orbit(p, q):
        out, a, b = [], p, q
        while True:
            out.append((a, b))
            a, b = perm[a], perm[b]
            if (a, b) == (p, q):
                return out

    for p in range(n):
        for q in range(p, n):
            if (p, q) in seen:
                continue
            entries: dict = {}
            for a, b in orbit(p, q):
                lo, hi = min(a, b), max(a, b)
                seen.add((lo, hi))
                entries[(a, b)] = 1.0
                entries[(b, a)] = 1.0
            rows.append(entries)
    if complex_mode:
        seen = set()
        for p in range(n):
            for q in range(p + 1, n):
                if (p, q) in seen:
                    continue
                entries = {}
                for a, b in orbit(p, q):
                    seen.add((min(a, b), max(a, b)))
                    entries[(a, b)] = entries.get((a, b), 0) + 1j
                    entries[(b, a)] = entries.get((b, a), 0) - 1j
                entries = {k: v for k, v in entries.items() if v != 0}
                if entries:
                    rows.append(entries)
    rr, cc, vv = [], [], []
    for k, entries in enumerate(rows):
        for (a, b), v in entries.items():
            rr.append(k), cc.append(a * n + b), vv.append(v)
    return sp.csr_matrix((np.array(vv, dtype=complex), (rr, cc)), shape=(len(rows), n * n))


def reward_bounds(inst: DiscriminationInstance) -> list:
    Rq = inst.weighted_reward()
    return [np.diag(Rq[i]) for i in range(inst.num_guesses)]


def solve_reduced_dual(
    inst: DiscriminationInstance,
    opts: SolverOptions | None = None,
    symmetry=None,
) -> DualSolution:
    """Solve the reduced dual over all Hermitian ``X``.

    Parameters
    ----------
    symmetry : {None, "auto"} or (state_perm, guess_perm)
        An involutive symmetry of the instance.  Averaging any optimal ``X``
        over it gives an invariant optimum, so ``X`` is restricted to the
        invariant subspace and one constraint per orbit of guess rows is
        kept.  The value is unchanged.  ``"auto"`` tries
        :func:`reversal_symmetry`.  Ignored for singular ``G``.

    Raises
    ------
    MaskedInstanceError
        For instances with forbidden cells or an error budget.
    """
    require_finite(inst, "the reduced dual")
    t0 = time.perf_counter()
    G = np.asarray(inst.gram.entries)
    N = inst.size
    cplx = _build.is_complex(G)
    r, Vr, lam, _ = gram_range(G)
    bounds = reward_bounds(inst)
    if isinstance(symmetry, str):
        if symmetry != "auto":
            raise ValueError("symmetry must be None, 'auto' or a permutation pair")
        symmetry = reversal_symmetry(inst)
    if symmetry is not None and r == N:
        pi, sigma = (np.asarray(a) for a in symmetry)
        if not (np.array_equal(pi[pi], np.arange(N))
                and np.array_equal(sigma[sigma], np.arange(len(bounds)))):
            raise ValueError("symmetry permutations must be involutions")
        Rq = inst.weighted_reward()
        if (np.abs(G[np.ix_(pi, pi)] - G).max() > 1e-12
                or np.abs(Rq[np.ix_(sigma, pi)] - Rq).max() > 1e-12):
            raise ValueError("the permutation pair is not a symmetry of the instance")
        reps = [i for i in range(len(bounds)) if i <= sigma[i]]
        basis = invariant_basis(pi, cplx)
        value, x, X, sol = solve_lmi(basis, G, [bounds[i] for i in reps], opts)
        if not cplx:
            X = X.real
        return DualSolution(
            X=X,
            value=value,
            status=sol.status,
            parameters=x,
            num_parameters=basis.shape[0],
            pattern="symmetric",
            solution=sol.raw,
            notes=[f"symmetry-reduced: {basis.shape[0]} parameters, {len(reps)} blocks"],
            wall_time=time.perf_counter() - t0,
        )
    if r < N:
        basis = hermitian_basis(r, cplx)
        target = np.diag(lam).astype(complex)
        bounds = [Vr.conj().T @ D @ Vr for D in bounds]
    else:
        basis = hermitian_basis(N, cplx)
        target = G
    value, x, X, sol = solve_lmi(basis, target, bounds, opts)
    notes = []
    if r < N:
        X = Vr @ X @ Vr.conj().T
        notes.append(f"posed on range(G) of rank {r}; X is supported on that range")
    if not cplx:
        X = X.real
    return DualSolution(
        X=X,
        value=value,
        status=sol.status,
        parameters=x,
        num_parameters=basis.shape[0],
        pattern="full",
        solution=sol.raw,
        notes=notes,
        wall_time=time.perf_counter() - t0,
    )
