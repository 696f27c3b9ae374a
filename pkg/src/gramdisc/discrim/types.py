"""Data types shared by the discrimination solvers."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..gram import GramMatrix
from ..rewards import RewardMatrix


class MaskedInstanceError(ValueError):
    """Dual and heuristic programs are only defined for finite rewards."""


class SolverFailure(RuntimeError):
    """Raised by callers that demand an optimal status."""

    def __init__(self, message, status=None):
        super().__init__(message)
        self.status = status


@dataclass(frozen=True, eq=False)
class DiscriminationInstance:
    """Gram matrix, priors and reward defining a reduced program.

    Parameters
    ----------
    gram : GramMatrix
    priors : array_like
        Nonnegative, summing to one.
    reward : RewardMatrix
    error_budget : float, optional
        Upper bound on the probability of a wrong conclusive guess.  Only
        meaningful when the reward has a guess row per state.
    """

    gram: GramMatrix
    priors: np.ndarray
    reward: RewardMatrix
    error_budget: Optional[float] = None

    def __post_init__(self):
        q = np.array(self.priors, dtype=float).ravel()
        if q.size != self.gram.size:
            raise ValueError("priors length must equal the Gram size")
        if np.any(q < 0) or abs(q.sum() - 1) > 1e-12:
            raise ValueError("priors must be nonnegative and sum to 1")
        if self.reward.num_states != self.gram.size:
            raise ValueError("reward columns must equal the Gram size")
        eps = self.error_budget
        if eps is not None:
            if not 0.0 <= eps <= 1.0:
                raise ValueError("error budget must lie in [0, 1]")
            if self.reward.num_guesses < self.gram.size:
                raise ValueError("error budget needs one guess row per state")
        q.setflags(write=False)
        object.__setattr__(self, "priors", q)

    @property
    def size(self) -> int:
        return self.gram.size

    @property
    def num_guesses(self) -> int:
        return self.reward.num_guesses

    @classmethod
    def uniform(cls, gram: GramMatrix, reward: RewardMatrix, error_budget=None):
        n = gram.size
        return cls(gram, np.full(n, 1.0 / n), reward, error_budget)

    def weighted_reward(self) -> np.ndarray:
        """``R_ij q_j`` with costs negated; masked cells are zero."""
        return self.reward.objective_matrix() * self.priors[None, :]

    def effective_mask(self) -> np.ndarray:
        """Forbidden cells, plus every wrong guess on a state of positive
        prior when the budget is zero."""
        mask = self.reward.forbidden.copy()
        if self.error_budget == 0.0:
            N = self.size
            mask[:N] |= ~np.eye(N, dtype=bool) & (self.priors > 0)[None, :]
        return mask


@dataclass
class ReducedPrimalSolution:
    """Optimal ``W_i`` of the reduced primal and its value ``alpha'``."""

    W: list
    value: float
    status: object
    solution: object = field(repr=False, default=None)
    dual_X: Optional[np.ndarray] = field(repr=False, default=None)
    rank: int = 0
    wall_time: float = 0.0

    @property
    def objective(self) -> float:
        return self.value


@dataclass
class DualSolution:
    """Optimal ``X`` of the reduced dual or one of its restrictions."""

    X: np.ndarray
    value: float
    status: object
    structured: bool = False
    parameters: Optional[np.ndarray] = None
    num_parameters: int = 0
    pattern: str = "full"
    solution: object = field(repr=False, default=None)
    notes: list = field(default_factory=list)
    wall_time: float = 0.0


@dataclass
class POVM:
    """Measurement operators ``M_i`` on the state space."""

    M: list

    def total(self) -> np.ndarray:
        return sum(self.M)

    def violations(self, tol_sum: float = 1e-7, tol_psd: float = 1e-9) -> list:
        out = []
        d = self.M[0].shape[0]
        dev = np.abs(self.total() - np.eye(d)).max()
        if dev > tol_sum:
            out.append(f"completeness: deviation {dev:.3e}")
        for i, m in enumerate(self.M):
            lam = np.linalg.eigvalsh((m + m.conj().T) / 2)[0]
            if lam < -tol_psd:
                out.append(f"psd: operator {i} min eigenvalue {lam:.3e}")
        return out


@dataclass(frozen=True)
class OutcomeStatistics:
    p_correct: float
    p_error: float
    p_inconclusive: float

    def as_tuple(self):
        return (self.p_correct, self.p_error, self.p_inconclusive)


@dataclass
class SolveReport:
    """Values from the programs solved for one instance.

    ``alpha`` is the full-dimension oracle, ``alpha_prime`` and
    ``beta_prime`` the reduced primal and dual, ``beta_double_prime`` a
    restricted dual.  All values are in maximization form; for cost
    schemes (``sense == "min"``) the reported ``objective`` is
    ``-alpha_prime``, the minimal expected cost.
    """

    alpha: Optional[float] = None
    alpha_prime: Optional[float] = None
    beta_prime: Optional[float] = None
    beta_double_prime: Optional[float] = None
    statuses: dict = field(default_factory=dict)
    wall_times: dict = field(default_factory=dict)
    sense: str = "max"
    notes: list = field(default_factory=list)
    num_parameters: dict = field(default_factory=dict)
    statistics: Optional[OutcomeStatistics] = None

    @property
    def objective(self) -> Optional[float]:
        v = self.alpha_prime if self.alpha_prime is not None else self.beta_prime
        if v is None:
            return None
        return v if self.sense == "max" else -v

    @property
    def gaps(self) -> dict:
        out = {}
        if self.alpha is not None and self.alpha_prime is not None:
            out["alpha_vs_alpha_prime"] = abs(self.alpha - self.alpha_prime)
        if self.alpha_prime is not None and self.beta_prime is not None:
            out["alpha_prime_vs_beta_prime"] = abs(self.alpha_prime - self.beta_prime)
        if self.beta_prime is not None and self.beta_double_prime is not None:
            out["heuristic_gap"] = self.beta_double_prime - self.beta_prime
        return out

    def violations(self) -> list:
        """Report invariants broken among values whose solves were optimal."""
        ok = {k for k, v in self.statuses.items() if str(v) == "optimal"}
        out = []
        g = self.gaps
        if {"alpha", "alpha_prime"} <= ok and g.get("alpha_vs_alpha_prime", 0) > 1e-6:
            out.append("alpha differs from alpha_prime")
        if {"alpha_prime", "beta_prime"} <= ok and g.get("alpha_prime_vs_beta_prime", 0) > 1e-6:
            out.append("alpha_prime differs from beta_prime")
        if {"beta_prime", "beta_double_prime"} <= ok and g.get("heuristic_gap", 0) < -1e-7:
            out.append("heuristic value below beta_prime")
        return out

    def to_dict(self) -> dict:
        d = {
            "alpha": self.alpha,
            "alpha_prime": self.alpha_prime,
            "beta_prime": self.beta_prime,
            "beta_double_prime": self.beta_double_prime,
            "objective": self.objective,
            "sense": self.sense,
            "gaps": self.gaps,
            "statuses": {k: str(v) for k, v in self.statuses.items()},
            "wall_times": {k: round(v, 3) for k, v in self.wall_times.items()},
            "num_parameters": self.num_parameters,
            "notes": self.notes,
        }
        if self.statistics is not None:
            d["statistics"] = {
                "p_correct": self.statistics.p_correct,
                "p_error": self.statistics.p_error,
                "p_inconclusive": self.statistics.p_inconclusive,
            }
        return d

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2)
