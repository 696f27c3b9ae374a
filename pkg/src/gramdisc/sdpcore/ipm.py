"""Infeasible-start primal-dual interior-point method (HKM direction,
Mehrotra predictor-corrector).

Blocks that share size and constraint data are grouped and processed as
stacked arrays.  The Schur complement ``M_ij = sum_l tr(A_i X_l A_j Z_l^-1)``
is assembled either through the Kronecker form ``A (sum_l Z_l^-1 (x) X_l) A^T``
in row chunks or column by column, whichever needs fewer flops.
"""

from __future__ import annotations

import contextlib
import os
import hashlib
import time
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .problem import SdpProblem, SdpResourceError, SdpSolution, SolverOptions, Status

# Soft cap on the number of doubles held by one Kronecker chunk.
_CHUNK_BUDGET = 4_000_000

_recorders: list = []


@contextlib.contextmanager
def recording():
    """Collect every solution returned by :func:`solve` inside the block."""
    sink: list = []
    _recorders.append(sink)
    try:
        yield sink
    finally:
        _recorders.remove(sink)


class SolverWarning(UserWarning):
    pass


@dataclass
class _Group:
    index: list          # block positions in the problem
    n: int
    A: sp.csr_matrix      # (m, n*n), shared by every block in the group
    AT: sp.csr_matrix
    Acsc: sp.csc_matrix
    dense: np.ndarray | None
    C: np.ndarray         # (g, n, n)
    active: np.ndarray    # constraints touching this group
    use_kron: bool
    chunk: int

    @property
    def g(self) -> int:
        return len(self.index)


def _group_blocks(p: SdpProblem, sign: float) -> list:
    keys: dict = {}
    for k, (n, a) in enumerate(zip(p.blocks, p.A)):
        a = a.copy()
        a.sum_duplicates()
        a.sort_indices()
        a.eliminate_zeros()
        h = hashlib.sha1()
        for arr in (a.indptr, a.indices, a.data):
            h.update(np.ascontiguousarray(arr).tobytes())
        keys.setdefault((n, h.hexdigest()), []).append((k, a))
    groups = []
    m = p.num_constraints
    for (n, _), members in keys.items():
        A = members[0][1]
        idx = [k for k, _ in members]
        g = len(idx)
        active = np.flatnonzero(np.diff(A.indptr))
        density = A.nnz / max(1, m * n * n)
        kron_cost = g * n**4 + n**4 + 2 * A.nnz * n * n
        col_cost = len(active) * 2 * g * n**3
        chunk = max(1, min(n, _CHUNK_BUDGET // max(1, n**3)))
        groups.append(
            _Group(
                index=idx,
                n=n,
                A=A,
                AT=A.T.tocsr(),
                Acsc=A.tocsc(),
                dense=A.toarray() if density > 0.25 else None,
                C=sign * np.stack([p.C[k] for k in idx]),
                active=active,
                use_kron=kron_cost < col_cost,
                chunk=chunk,
            )
        )
    return groups


def _sym(x):
    return (x + np.swapaxes(x, -1, -2)) / 2


def _A_of(groups, Xs, m):
    out = np.zeros(m)
    for gr, X in zip(groups, Xs):
        out += gr.A @ X.sum(axis=0).ravel()
    return out


def _At_of(groups, y):
    return [(gr.AT @ y).reshape(gr.n, gr.n) for gr in groups]


def _inner(Xs, Zs):
    return float(sum(np.sum(x * z) for x, z in zip(Xs, Zs)))


def _schur(groups, Xs, Zis, m):
    M = np.zeros((m, m))
    for gr, X, Zi in zip(groups, Xs, Zis):
        if gr.active.size == 0:
            continue
        n, g = gr.n, gr.g
        if gr.use_kron:
            Xf = X.reshape(g, n * n)
            for p0 in range(0, n, gr.chunk):
                p1 = min(n, p0 + gr.chunk)
                c = p1 - p0
                Zp = Zi[:, p0:p1, :].reshape(g, c * n)
                K = (Zp.T @ Xf).reshape(c, n, n, n).transpose(0, 2, 1, 3)
                K = K.reshape(c * n, n * n)
                if gr.dense is not None:
                    T = gr.dense @ K.T
                    M += gr.dense[:, p0 * n:p1 * n] @ T.T
                else:
                    T = gr.A @ K.T
                    M += gr.Acsc[:, p0 * n:p1 * n] @ T.T
        else:
            for j in gr.active:
                Aj = gr.A.getrow(j).toarray().reshape(n, n)
                S = np.einsum("lab,lbc->ac", X @ Aj, Zi)
                M[:, j] += gr.A @ S.ravel()
    return (M + M.T) / 2


def _chol_inv(Zs):
    """Return (Z^-1, cholesky factor) for a stack, or None if not PD."""
    try:
        L = np.linalg.cholesky(Zs)
    except np.linalg.LinAlgError:
        return None
    Li = np.linalg.inv(L)
    return np.swapaxes(Li, -1, -2) @ Li, Li


def _max_step(Lis, dXs, frac):
    """Largest step in (0, 1] keeping X + a dX PD, scaled by ``frac``."""
    lam = np.inf
    for Li, dX in zip(Lis, dXs):
        B = Li @ dX @ np.swapaxes(Li, -1, -2)
        lam = min(lam, float(np.linalg.eigvalsh(_sym(B)).min()))
    if lam >= 0:
        return 1.0
    return min(1.0, -frac / lam)


def _log(opts, text):
    if opts.verbose:
        import sys

        print(text, file=opts.stream or sys.stdout)


def _check_memory(m: int, opts: SolverOptions):
    budget = opts.max_memory_bytes
    if budget is None:
        try:
            budget = 0.8 * os.sysconf("SC_PAGE_SIZE") * os.sysconf("SC_PHYS_PAGES")
        except (ValueError, OSError, AttributeError):
            return
    need = 2 * 8 * m * m
    if need > budget:
        raise SdpResourceError(
            f"{m} constraints need {need / 2**30:.1f} GiB for the Schur complement; "
            f"budget is {budget / 2**30:.1f} GiB"
        )


def solve(p: SdpProblem, opts: SolverOptions | None = None) -> SdpSolution:
    """Solve a block-diagonal SDP.

    Parameters
    ----------
    p : SdpProblem
    opts : SolverOptions, optional

    Returns
    -------
    SdpSolution
        ``status`` reports how the iteration ended; values are only
        certified when it is ``optimal``.
    """
    opts = opts or SolverOptions()
    t0 = time.perf_counter()
    sign = 1.0 if p.sense == "min" else -1.0
    m = p.num_constraints
    b = p.b
    _check_memory(m, opts)
    groups = _group_blocks(p, sign)
    ntot = sum(gr.n * gr.g for gr in groups)

    scale = max(
        [1.0]
        + [float(np.abs(b).max(initial=0.0))]
        + [float(np.abs(gr.C).max(initial=0.0)) for gr in groups]
        + [float(abs(gr.A).max()) if gr.A.nnz else 0.0 for gr in groups]
    )
    tau = 1.0 + scale
    Xs = [tau * np.broadcast_to(np.eye(gr.n), (gr.g, gr.n, gr.n)).copy() for gr in groups]
    Zs = [x.copy() for x in Xs]
    y = np.zeros(m)

    normb = np.linalg.norm(b)
    normC = np.sqrt(sum(np.sum(gr.C**2) for gr in groups))
    history = []
    warn_list: list = []
    status = Status.MAX_ITERATIONS
    reg_used = 0.0
    it = 0
    rel_p = rel_d = np.inf
    pobj = dobj = np.nan
    xz = np.nan

    _log(opts, f"{'it':>4} {'pobj':>15} {'dobj':>15} {'rel_p':>9} {'rel_d':>9} {'gap':>9} {'mu':>9}")
    while True:
        AX = _A_of(groups, Xs, m)
        rp = b - AX
        Aty = _At_of(groups, y)
        Rd = [gr.C - Z - aty[None] for gr, Z, aty in zip(groups, Zs, Aty)]
        pobj = _inner([gr.C for gr in groups], Xs)
        dobj = float(b @ y)
        xz = _inner(Xs, Zs)
        mu = xz / ntot if ntot else 0.0
        rel_p = np.linalg.norm(rp) / (1.0 + normb)
        rel_d = np.sqrt(sum(np.sum(r**2) for r in Rd)) / (1.0 + normC)
        gap = abs(pobj - dobj) / (1.0 + abs(pobj))
        comp = xz / (1.0 + abs(pobj))
        if opts.keep_history:
            history.append(
                {"iteration": it, "primal_objective": sign * pobj, "dual_objective": sign * dobj,
                 "primal_residual": rel_p, "dual_residual": rel_d, "gap": gap, "mu": mu,
                 "complementarity": xz}
            )
        _log(opts, f"{it:4d} {sign * pobj: .8e} {sign * dobj: .8e} {rel_p:9.2e} {rel_d:9.2e} {gap:9.2e} {mu:9.2e}")

        if ntot == 0:
            # no cone variables: feasible exactly when b = 0, and the dual is
            # unbounded otherwise
            ok = rel_p <= opts.tol_primal
            status = Status.OPTIMAL if ok else Status.INFEASIBLE_OR_UNBOUNDED
            break
        if not (np.isfinite(pobj) and np.isfinite(dobj) and np.isfinite(mu)):
            status = Status.NUMERICAL_FAILURE
            break
        if (rel_p <= opts.tol_primal and rel_d <= opts.tol_dual
                and gap <= opts.tol_gap and comp <= opts.tol_gap):
            status = Status.OPTIMAL
            break
        big = max(max(np.abs(x).max() for x in Xs), max(np.abs(z).max() for z in Zs),
                  np.abs(y).max(initial=0.0))
        if big > opts.divergence_limit * tau:
            status = Status.INFEASIBLE_OR_UNBOUNDED
            break
        if it >= opts.max_iterations:
            status = Status.MAX_ITERATIONS
            break

        zi = [_chol_inv(Z) for Z in Zs]
        xi = [_chol_inv(X) for X in Xs]
        if any(v is None for v in zi) or any(v is None for v in xi):
            status = Status.NUMERICAL_FAILURE
            break
        Zis = [v[0] for v in zi]
        LiZ = [v[1] for v in zi]
        LiX = [v[1] for v in xi]

        M = _schur(groups, Xs, Zis, m)
        factor = None
        if m:
            shift = 0.0
            for attempt in range(8):
                try:
                    factor = sla.cho_factor(M + shift * np.eye(m), lower=True, check_finite=False)
                    break
                except (np.linalg.LinAlgError, sla.LinAlgError):
                    base = opts.regularization * (1.0 + float(np.abs(np.diag(M)).max()))
                    shift = base * (100.0 ** attempt)
            if factor is None:
                status = Status.NUMERICAL_FAILURE
                break
            if shift > 0 and shift > reg_used:
                reg_used = shift
        solve_M = (lambda r: sla.cho_solve(factor, r, check_finite=False)) if m else (lambda r: r)

        XRZ = _A_of(groups, [X @ R @ Zi for X, R, Zi in zip(Xs, Rd, Zis)], m)
        AZi = _A_of(groups, Zis, m)

        def direction(sigma_mu, corr):
            rhs = b - sigma_mu * AZi + XRZ
            if corr is not None:
                rhs = rhs + _A_of(groups, corr, m)
            dy = solve_M(rhs)
            Atdy = _At_of(groups, dy)
            dZ = [R - a[None] for R, a in zip(Rd, Atdy)]
            dX = []
            for k, (X, Zi, dz) in enumerate(zip(Xs, Zis, dZ)):
                d = sigma_mu * Zi - X - X @ dz @ Zi
                if corr is not None:
                    d = d - corr[k]
                dX.append(_sym(d))
            return dy, dX, dZ

        # predictor
        dy_a, dX_a, dZ_a = direction(0.0, None)
        ap = _max_step(LiX, dX_a, 1.0)
        ad = _max_step(LiZ, dZ_a, 1.0)
        xz_a = _inner([X + ap * d for X, d in zip(Xs, dX_a)], [Z + ad * d for Z, d in zip(Zs, dZ_a)])
        sigma = min(1.0, max(0.0, xz_a / xz)) ** 3 if xz > 0 else 0.0

        # corrector
        corr = [dx @ dz @ Zi for dx, dz, Zi in zip(dX_a, dZ_a, Zis)]
        dy, dX, dZ = direction(sigma * mu, corr)
        ap = _max_step(LiX, dX, opts.step_fraction)
        ad = _max_step(LiZ, dZ, opts.step_fraction)

        Xs = [X + ap * d for X, d in zip(Xs, dX)]
        Zs = [_sym(Z + ad * d) for Z, d in zip(Zs, dZ)]
        y = y + ad * dy
        it += 1

    if reg_used > 0:
        msg = f"Schur complement regularized (shift {reg_used:.1e}); constraints may be nearly dependent"
        warn_list.append(msg)
        warnings.warn(msg, SolverWarning, stacklevel=2)

    # scatter back to block order in the caller's sense
    X_out = [None] * len(p.blocks)
    Z_out = [None] * len(p.blocks)
    for gr, X, Z in zip(groups, Xs, Zs):
        for k, pos in enumerate(gr.index):
            X_out[pos] = X[k].copy()
            Z_out[pos] = Z[k].copy()
    sol = SdpSolution(
        primal_X=X_out,
        dual_y=sign * y,
        dual_slack_Z=Z_out,
        primal_value=sign * pobj,
        dual_value=sign * dobj,
        status=status,
        iterations=it,
        primal_residual=float(rel_p),
        dual_residual=float(rel_d),
        complementarity=float(xz),
        warnings=warn_list,
        history=history,
        solve_time=time.perf_counter() - t0,
    )
    for sink in _recorders:
        sink.append(sol)
    return sol
