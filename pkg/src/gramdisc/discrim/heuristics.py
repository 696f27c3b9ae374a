"""Restricted duals: ``X`` constrained to a Toeplitz or block-structured pattern.

Restricting the dual variable shrinks the feasible set of a minimization,
so the restricted value ``beta''`` upper-bounds ``beta'``.
"""

from __future__ import annotations

import time

import numpy as np
import scipy.sparse as sp

from ..sdpcore import SolverOptions
from ..states import enumerate_change_indices, expected_cardinality
from . import _build
from .reduced import reward_bounds, require_finite, solve_restricted_dual
from .types import DiscriminationInstance, DualSolution


def toeplitz_basis(N: int, complex_mode: bool = False) -> sp.csr_matrix:
    """Rows ``Theta_0 = I`` and ``Theta_k + Theta_k^T`` (plus imaginary
    counterparts ``i Theta_k - i Theta_k^T`` in complex mode), flattened."""
    rr, cc, vv = [], [], []
    row = 0
    for k in range(N):
        a = np.arange(N - k)
        if k == 0:
            rr += [row] * N
            cc += list(a * N + a)
            vv += [1.0] * N
            row += 1
            continue
        rr += [row] * (2 * a.size)
        cc += list(a * N + a + k) + list((a + k) * N + a)
        vv += [1.0] * (2 * a.size)
        row += 1
    if complex_mode:
        for k in range(1, N):
            a = np.arange(N - k)
            rr += [row] * (2 * a.size)
            cc += list(a * N + a + k) + list((a + k) * N + a)
            vv += [1j] * a.size + [-1j] * a.size
            row += 1
    return sp.csr_matrix((np.array(vv, dtype=complex), (rr, cc)), shape=(row, N * N))


def toeplitz_p_vector(G: np.ndarray, complex_mode: bool = False) -> np.ndarray:
    """``p_k = <Theta_k + Theta_k^T, G>``; for ``G = gamma^|i-j|`` this is
    ``(N, 2(N-1) gamma, ..., 2 gamma^(N-1))``."""
    N = G.shape[0]
    p = [float(np.real(np.trace(G)))]
    p += [2.0 * float(np.real(np.trace(G, offset=k))) for k in range(1, N)]
    if complex_mode:
        p += [2.0 * float(np.imag(np.trace(G, offset=k))) for k in range(1, N)]
    return np.array(p)


def solve_heuristic_toeplitz(
    inst: DiscriminationInstance,
    opts: SolverOptions | None = None,
    changepoint: bool = True,
) -> DualSolution:
    """Dual restricted to Hermitian Toeplitz ``X = sum_k x_k Theta_k``.

    The objective is evaluated as ``<x, p>`` and checked against ``<X, G>``.
    ``changepoint=False`` records that the restriction is applied outside
    the single-change-point setting it was designed for.
    """
    require_finite(inst, "the Toeplitz restriction")
    t0 = time.perf_counter()
    G = np.asarray(inst.gram.entries)
    N = inst.size
    cplx = _build.is_complex(G)
    basis = toeplitz_basis(N, cplx)
    value, x, X, sol, notes = solve_restricted_dual(basis, G, reward_bounds(inst), opts)
    p = toeplitz_p_vector(G, cplx)
    xp = float(x @ p)
    XG = float(np.real(np.vdot(X, G)))
    tol = 1e-9 * (1 + float(np.abs(x * p).sum()))
    if abs(xp - XG) > tol or abs(xp - value) > max(tol, 1e-7 * (1 + abs(value))):
        raise AssertionError(
            f"Toeplitz objective mismatch: <x,p>={xp!r}, <X,G>={XG!r}, value={value!r}"
        )
    if not changepoint:
        notes.append("Toeplitz restriction applied to a general instance")
    return DualSolution(
        X=X if cplx else X.real,
        value=value,
        status=sol.status,
        structured=True,
        parameters=x,
        num_parameters=basis.shape[0],
        pattern="toeplitz",
        solution=sol.raw,
        notes=notes,
        wall_time=time.perf_counter() - t0,
    )


def _key_1cp(u, v, N):
    return (abs(u[0] - v[0]),)


def _key_2cp(u, v, N):
    if u[0] > v[0]:
        u, v = v, u
    if u == (N, N) or v == (N, N):
        # free border vector for the no-change sequence
        other = u if v == (N, N) else v
        return ("border",) + tuple(other)
    i, j = u
    k, l = v
    d = k - i
    r, s = j - i - 1, l - k - 1
    if d == 0:
        return (0, abs(r - s))
    return (d, r - s)


def _key_3cp(u, v, N):
    top = (N, N, N)
    if u == top or v == top:
        other = u if v == top else v
        return ("border",) + tuple(other)
    if u[0] > v[0] or (u[0] == v[0] and u[1] > v[1]):
        u, v = v, u
    i, j, k = u
    l, m, n = v
    d = l - i
    if j == N and m == N:
        return (d, "corner")
    if m == N:
        return (d, "col", j, k)
    if j == N:
        return (d, "row", m, n)
    off = (k - j) - (n - m)
    if d == 0 and j == m:
        off = abs(off)
    return (d, m - j, off)


_KEYS = {1: _key_1cp, 2: _key_2cp, 3: _key_3cp}


def structured_pattern(N: int, P: int) -> list:
    """Groups of tied ``(a, b)`` positions (``a <= b``) over the change-point
    index set; one free real parameter per group."""
    idx = enumerate_change_indices(N, P).tuples()
    key = _KEYS[P]
    groups: dict = {}
    for a in range(len(idx)):
        for b in range(a, len(idx)):
            groups.setdefault(key(idx[a], idx[b], N), []).append((a, b))
    return list(groups.values())


def pattern_basis(groups: list, n: int) -> sp.csr_matrix:
    rr, cc, vv = [], [], []
    for row, members in enumerate(groups):
        for a, b in members:
            if a == b:
                rr.append(row), cc.append(a * n + a), vv.append(1.0)
            else:
                rr += [row, row]
                cc += [a * n + b, b * n + a]
                vv += [1.0, 1.0]
    return sp.csr_matrix((np.array(vv, dtype=complex), (rr, cc)), shape=(len(groups), n * n))


def solve_heuristic_structured(
    inst: DiscriminationInstance, pattern: int | str, opts: SolverOptions | None = None
) -> DualSolution:
    """Dual restricted to the block-Toeplitz pattern of a change-point Gram.

    Parameters
    ----------
    pattern : {1, 2, 3, "1cp", "2cp", "3cp"}
        Number of change points; the instance must be indexed by the
        lexicographic change-point index set of that order.
    """
    require_finite(inst, "the structured restriction")
    P = int(str(pattern).lower().replace("cp", ""))
    if P not in _KEYS:
        raise ValueError("pattern must be 1, 2 or 3 change points")
    G = np.asarray(inst.gram.entries)
    if _build.is_complex(G):
        raise ValueError("structured restriction is defined for real Gram matrices")
    t0 = time.perf_counter()
    n = inst.size
    N = _horizon_for(n, P)
    groups = structured_pattern(N, P)
    basis = pattern_basis(groups, n)
    value, x, X, sol, notes = solve_restricted_dual(basis, G, reward_bounds(inst), opts)
    return DualSolution(
        X=X.real,
        value=value,
        status=sol.status,
        structured=True,
        parameters=x,
        num_parameters=len(groups),
        pattern=f"{P}cp",
        solution=sol.raw,
        notes=notes,
        wall_time=time.perf_counter() - t0,
    )


def _horizon_for(size: int, P: int) -> int:
    N = 1
    while expected_cardinality(N, P) < size:
        N += 1
    if expected_cardinality(N, P) != size:
        raise ValueError(f"size {size} is not a change-point index set size for P = {P}")
    return N
