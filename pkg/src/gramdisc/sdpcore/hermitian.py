"""Complex Hermitian SDPs and their real symmetric embedding.

A Hermitian ``H`` maps to ``[[Re H, -Im H], [Im H, Re H]]``.  The map is a
ring homomorphism that preserves positive semidefiniteness, and
``<emb A, emb H> = 2 Re tr(A^* H)``.  Objective and constraint blocks are
halved after embedding so that values are unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .ipm import solve
from .problem import SdpDataError, SdpProblem, SdpSolution, SolverOptions


def embed_matrix(H: np.ndarray) -> np.ndarray:
    H = np.asarray(H, dtype=complex)
    re, im = H.real, H.imag
    return np.block([[re, -im], [im, re]])


def unembed_matrix(Y: np.ndarray) -> np.ndarray:
    """Inverse of :func:`embed_matrix` (averaging the redundant copies)."""
    n = Y.shape[0] // 2
    re = (Y[:n, :n] + Y[n:, n:]) / 2
    im = (Y[n:, :n] - Y[:n, n:]) / 2
    return re + 1j * im


def _embed_rows(A: sp.spmatrix, n: int) -> sp.csr_matrix:
    """Embed every row (a flattened ``n x n`` Hermitian block) into ``2n x 2n``."""
    coo = sp.coo_matrix(A)
    p, q = np.divmod(coo.col, n)
    re, im = coo.data.real, coo.data.imag
    N2 = 2 * n
    rows = np.concatenate([coo.row] * 4)
    cols = np.concatenate([
        p * N2 + q,
        (p + n) * N2 + (q + n),
        p * N2 + (q + n),
        (p + n) * N2 + q,
    ])
    vals = np.concatenate([re, re, -im, im]) / 2
    out = sp.csr_matrix((vals, (rows, cols)), shape=(A.shape[0], N2 * N2))
    out.eliminate_zeros()
    return out


@dataclass
class HermitianProblem:
    """Block-diagonal SDP over Hermitian matrices.

    Inner products are ``<A, X> = Re tr(A^* X)``.  Rows of ``A[b]`` hold the
    row-major flattening of the Hermitian constraint block.
    """

    blocks: list
    C: list
    A: list
    b: np.ndarray
    sense: str = "min"

    def __post_init__(self):
        self.b = np.asarray(self.b, dtype=float).ravel()
        self.C = [np.asarray(c, dtype=complex) for c in self.C]
        self.A = [sp.csr_matrix(a, dtype=complex) for a in self.A]
        for k, c in enumerate(self.C):
            if np.abs(c - c.conj().T).max(initial=0.0) > 1e-12:
                raise SdpDataError(f"C block {k} is not Hermitian")

    @property
    def is_real(self) -> bool:
        return not any(np.any(c.imag) for c in self.C) and not any(
            np.any(a.data.imag) for a in self.A
        )

    def real_part(self) -> SdpProblem:
        """Real symmetric problem when all data is real."""
        return SdpProblem(
            self.blocks,
            [c.real for c in self.C],
            [a.real for a in self.A],
            self.b,
            self.sense,
        )


def embed_hermitian(h: HermitianProblem) -> SdpProblem:
    """Real symmetric SDP with the same optimal value as ``h``."""
    blocks = [2 * n for n in h.blocks]
    C = [embed_matrix(c) / 2 for c in h.C]
    A = [_embed_rows(a, n) for a, n in zip(h.A, h.blocks)]
    return SdpProblem(blocks, C, A, h.b, h.sense)


@dataclass
class HermitianSolution:
    """Solver output mapped back to Hermitian blocks."""

    X: list
    Z: list
    y: np.ndarray
    raw: SdpSolution
    embedded: bool

    @property
    def status(self):
        return self.raw.status

    @property
    def primal_value(self) -> float:
        return self.raw.primal_value

    @property
    def dual_value(self) -> float:
        return self.raw.dual_value


def solve_hermitian(
    h: HermitianProblem, opts: SolverOptions | None = None, force_embed: bool = False
) -> HermitianSolution:
    """Solve a Hermitian SDP, embedding only when the data is complex."""
    if h.is_real and not force_embed:
        sol = solve(h.real_part(), opts)
        return HermitianSolution(
            [x.astype(complex) for x in sol.primal_X],
            [z.astype(complex) for z in sol.dual_slack_Z],
            sol.dual_y,
            sol,
            False,
        )
    sol = solve(embed_hermitian(h), opts)
    X = [unembed_matrix(x) for x in sol.primal_X]
    # the embedded slack equals emb(Z) / 2
    Z = [2 * unembed_matrix(z) for z in sol.dual_slack_Z]
    return HermitianSolution(X, Z, sol.dual_y, sol, True)
