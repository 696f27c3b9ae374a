"""Problem and solution containers for block-diagonal semidefinite programs.

Standard form (``sense="min"``)::

    minimize    <C, X>
    subject to  <A_i, X> = b_i,  i = 1..m
                X = diag(X_1, ..., X_k) PSD

with dual ``maximize b^T y  s.t.  Z = C - sum_i y_i A_i  PSD``.  For
``sense="max"`` the roles of minimize and maximize swap and
``Z = sum_i y_i A_i - C``.

Constraint data for block ``b`` is a sparse ``(m, n_b * n_b)`` matrix whose
row ``i`` is the row-major flattening of the symmetric block ``A_i``.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Optional, TextIO

import numpy as np
import scipy.sparse as sp

SYM_TOL = 1e-12


class Status(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE_OR_UNBOUNDED = "infeasible_or_unbounded"
    MAX_ITERATIONS = "max_iterations"
    NUMERICAL_FAILURE = "numerical_failure"

    def __str__(self):
        return self.value


class SdpDataError(ValueError):
    """Malformed problem data (shapes, symmetry, non-finite values)."""


class SdpResourceError(MemoryError):
    """The Schur complement would not fit in the memory budget."""


@dataclass
class SolverOptions:
    """Interior-point settings.

    Attributes
    ----------
    tol_primal, tol_dual, tol_gap : float
        Relative stopping tolerances.
    max_iterations : int
        Iteration cap.
    step_fraction : float
        Fraction of the distance to the PSD boundary taken per step.
    regularization : float
        Relative Tikhonov shift added to the Schur complement when its
        Cholesky factorization fails.
    verbose : bool
        Write an iteration log to ``stream``.
    max_memory_bytes : int, optional
        Budget for the dense Schur complement and its factor; defaults to
        80% of physical memory.  Larger problems raise ``SdpResourceError``
        before iterating.
    """

    tol_primal: float = 1e-8
    tol_dual: float = 1e-8
    tol_gap: float = 1e-8
    max_iterations: int = 200
    step_fraction: float = 0.98
    regularization: float = 1e-12
    divergence_limit: float = 1e12
    verbose: bool = False
    stream: Optional[TextIO] = None
    keep_history: bool = True
    max_memory_bytes: Optional[int] = None


@dataclass
class SdpProblem:
    """Block-diagonal SDP in standard form.

    Parameters
    ----------
    blocks : list of int
        Block sizes.
    C : list of ndarray
        Objective block matrices (symmetric).
    A : list of sparse matrices
        Per-block constraint data, each of shape ``(m, n_b**2)``.
    b : ndarray
        Right-hand sides, length ``m``.
    sense : {"min", "max"}
    """

    blocks: list
    C: list
    A: list
    b: np.ndarray
    sense: str = "min"

    def __post_init__(self):
        self.blocks = [int(n) for n in self.blocks]
        self.b = np.asarray(self.b, dtype=float).ravel()
        self.C = [np.asarray(c, dtype=float) for c in self.C]
        self.A = [sp.csr_matrix(a, dtype=float) for a in self.A]
        self.validate()

    @property
    def num_constraints(self) -> int:
        return self.b.size

    def validate(self):
        m = self.b.size
        if self.sense not in ("min", "max"):
            raise SdpDataError(f"sense must be 'min' or 'max', got {self.sense!r}")
        if not (len(self.blocks) == len(self.C) == len(self.A)):
            raise SdpDataError("blocks, C and A must have equal length")
        if not np.all(np.isfinite(self.b)):
            raise SdpDataError("b contains NaN or Inf")
        for k, (n, c, a) in enumerate(zip(self.blocks, self.C, self.A)):
            if n < 1:
                raise SdpDataError(f"block {k} has size {n}")
            if c.shape != (n, n):
                raise SdpDataError(f"C block {k} has shape {c.shape}, expected {(n, n)}")
            if a.shape != (m, n * n):
                raise SdpDataError(
                    f"A block {k} has shape {a.shape}, expected {(m, n * n)}"
                )
            if not np.all(np.isfinite(c)) or not np.all(np.isfinite(a.data)):
                raise SdpDataError(f"block {k} contains NaN or Inf")
            if np.abs(c - c.T).max(initial=0.0) > SYM_TOL:
                raise SdpDataError(f"C block {k} is not symmetric")
            perm = np.arange(n * n).reshape(n, n).T.ravel()
            asym = abs(a - a[:, perm])
            if asym.nnz and asym.max() > SYM_TOL:
                raise SdpDataError(f"A block {k} has a non-symmetric constraint matrix")

    def constraint_matrix(self, i: int) -> list:
        """Dense blocks of constraint ``i``."""
        return [
            a.getrow(i).toarray().reshape(n, n) for n, a in zip(self.blocks, self.A)
        ]

    def scale_rows(self, factors) -> "SdpProblem":
        """Copy with constraint ``i`` multiplied by ``factors[i]``."""
        d = sp.diags(np.asarray(factors, dtype=float))
        return SdpProblem(
            self.blocks, self.C, [d @ a for a in self.A], self.b * factors, self.sense
        )

    def to_dict(self) -> dict:
        out = {"sense": self.sense, "blocks": self.blocks, "b": self.b.tolist()}
        out["C"] = [c.tolist() for c in self.C]
        out["A"] = []
        for a in self.A:
            coo = a.tocoo()
            out["A"].append(
                {"row": coo.row.tolist(), "col": coo.col.tolist(), "val": coo.data.tolist()}
            )
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "SdpProblem":
        m = len(data["b"])
        A = []
        for n, a in zip(data["blocks"], data["A"]):
            A.append(sp.csr_matrix((a["val"], (a["row"], a["col"])), shape=(m, n * n)))
        return cls(data["blocks"], data["C"], A, data["b"], data.get("sense", "min"))

    def dump(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def load(cls, path) -> "SdpProblem":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


@dataclass
class SdpSolution:
    """Result of an interior-point solve.

    ``primal_value`` and ``dual_value`` are reported in the problem's own
    sense.  Residuals are relative: ``|b - A(X)| / (1 + |b|)`` and
    ``|C - Z - A^*(y)|_F / (1 + |C|_F)`` (sign-adjusted for max problems).
    """

    primal_X: list
    dual_y: np.ndarray
    dual_slack_Z: list
    primal_value: float
    dual_value: float
    status: Status
    iterations: int
    primal_residual: float = float("nan")
    dual_residual: float = float("nan")
    complementarity: float = float("nan")
    warnings: list = field(default_factory=list)
    history: list = field(default_factory=list)
    solve_time: float = 0.0

    @property
    def gap(self) -> float:
        return abs(self.primal_value - self.dual_value) / (1.0 + abs(self.primal_value))

    @property
    def optimal(self) -> bool:
        return self.status == Status.OPTIMAL

    @property
    def value(self) -> float:
        return self.primal_value

    def certificate(self) -> dict:
        """Certificate metrics used by the acceptance checks."""
        mins = [float(np.linalg.eigvalsh(x)[0]) for x in self.primal_X]
        minz = [float(np.linalg.eigvalsh(z)[0]) for z in self.dual_slack_Z]
        return {
            "status": str(self.status),
            "primal_residual": self.primal_residual,
            "dual_residual": self.dual_residual,
            "gap": self.gap,
            "complementarity": self.complementarity,
            "complementarity_bound": 1e-7 * (1 + abs(self.primal_value)),
            "min_eig_X": min(mins, default=0.0),
            "min_eig_Z": min(minz, default=0.0),
        }


def check_psd(M, tol: float = 1e-9) -> tuple[bool, float]:
    """Return ``(min_eig >= -tol, min_eig)`` for the Hermitian part of ``M``."""
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("matrix must be square")
    if M.size == 0:
        return True, 0.0
    lam = float(np.linalg.eigvalsh((M + M.conj().T) / 2)[0])
    return lam >= -tol, lam
