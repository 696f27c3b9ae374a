"""Reward matrices for discrimination schemes and change-point reward families.

Rows index guesses and columns index states.  Cells where a guess must never
be made for a given state are stored in a boolean ``forbidden`` mask and
become hard constraints downstream; their ``values`` entry is zero.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .states import enumerate_change_indices

SCHEMES = (
    "min_error",
    "exclusion",
    "unambiguous",
    "unambiguous_exclusion",
    "horseshoe",
    "closer_better",
    "exam",
    "classification",
)


@dataclass(frozen=True, eq=False)
class RewardMatrix:
    """Reward (or cost) matrix with a hard-constraint mask.

    Parameters
    ----------
    values : array_like, shape (L, N)
        Finite rewards.  Zero wherever ``forbidden`` is set.
    forbidden : array_like of bool, optional
        Cells that must receive zero probability.
    sense : {"max", "min"}
        ``"max"`` for rewards.  ``"min"`` marks a cost matrix: the solver
        maximizes ``-values`` and the reported objective is negated back.
    cases : ndarray of int, optional
        For change-point families, the printed case used for each cell.
    """

    values: np.ndarray
    forbidden: Optional[np.ndarray] = None
    sense: str = "max"
    label: str = ""
    cases: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise ValueError("reward values must be a nonempty 2-d array")
        f = (np.zeros(v.shape, dtype=bool) if self.forbidden is None
             else np.array(self.forbidden, dtype=bool))
        if f.shape != v.shape:
            raise ValueError("mask shape must match values")
        if not np.all(np.isfinite(v)):
            raise ValueError("reward values must be finite; use the mask for -inf")
        if np.any(v[f] != 0):
            raise ValueError("masked cells must carry value 0")
        if self.sense not in ("max", "min"):
            raise ValueError("sense must be 'max' or 'min'")
        v.setflags(write=False)
        f.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "forbidden", f)

    @property
    def num_guesses(self) -> int:
        return self.values.shape[0]

    @property
    def num_states(self) -> int:
        return self.values.shape[1]

    @property
    def has_mask(self) -> bool:
        return bool(self.forbidden.any())

    def objective_matrix(self) -> np.ndarray:
        """Matrix the engine maximizes (costs are negated)."""
        return self.values if self.sense == "max" else -self.values

    def to_dict(self) -> dict:
        return {
            "L": self.num_guesses,
            "N": self.num_states,
            "sense": self.sense,
            "label": self.label,
            "values": self.values.tolist(),
            "mask": self.forbidden.astype(int).tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RewardMatrix":
        v = np.array(data["values"], dtype=float)
        if v.shape != (data["L"], data["N"]):
            raise ValueError("reward shape does not match L, N")
        return cls(v, np.array(data["mask"], dtype=bool), data.get("sense", "max"),
                   data.get("label", ""))

    def dumps(self) -> str:
        return json.dumps(self.to_dict())


def _closer(gamma: float, N: int) -> np.ndarray:
    k = np.arange(N)
    return np.power(float(gamma), np.abs(k[:, None] - k[None, :]))


def build_reward(scheme: str, N: int, **params) -> RewardMatrix:
    """Reward matrix for a named scheme.

    Parameters
    ----------
    scheme : str
        One of ``min_error``, ``exclusion``, ``unambiguous``,
        ``unambiguous_exclusion``, ``horseshoe``, ``closer_better``, ``exam``,
        ``classification``.
    N : int
        Number of states.
    **params
        ``beta`` (unambiguous; omit for the exact mask), ``mu`` (horseshoe),
        ``gamma`` (closer_better), ``partial`` (exam, default 0.25),
        ``partition`` (classification: list of lists of 0-based state indices).

    Examples
    --------
    >>> build_reward("horseshoe", 3, mu=1).values
    array([[1., 1., 0.],
           [1., 1., 1.],
           [0., 1., 1.]])
    """
    if N < 1:
        raise ValueError("N must be positive")
    eye = np.eye(N)
    if scheme == "min_error":
        return RewardMatrix(eye, label="min_error")
    if scheme == "exclusion":
        # cost 1 for naming the state that was actually sent
        return RewardMatrix(eye, sense="min", label="exclusion")
    if scheme == "unambiguous":
        beta = params.get("beta")
        v = np.zeros((N + 1, N))
        v[:N] = eye
        mask = np.zeros((N + 1, N), dtype=bool)
        off = ~np.eye(N, dtype=bool)
        if beta is None:
            mask[:N] = off
            label = "unambiguous"
        else:
            if beta < 0 or not np.isfinite(beta):
                raise ValueError("beta must be finite and nonnegative")
            v[:N][off] = -beta
            label = f"unambiguous(beta={beta})"
        return RewardMatrix(v, mask, label=label)
    if scheme == "unambiguous_exclusion":
        # never exclude the true state; pay for the inconclusive outcome
        v = np.zeros((N + 1, N))
        v[N] = 1.0
        mask = np.zeros((N + 1, N), dtype=bool)
        mask[:N] = np.eye(N, dtype=bool)
        return RewardMatrix(v, mask, sense="min", label="unambiguous_exclusion")
    if scheme == "horseshoe":
        mu = int(params["mu"])
        if mu < 0:
            raise ValueError("mu must be nonnegative")
        k = np.arange(N)
        v = (np.abs(k[:, None] - k[None, :]) <= mu).astype(float)
        return RewardMatrix(v, label=f"horseshoe(mu={mu})")
    if scheme == "closer_better":
        gamma = float(params["gamma"])
        if gamma < 0:
            raise ValueError("gamma must be nonnegative")
        return RewardMatrix(_closer(gamma, N), label=f"closer_better(gamma={gamma})")
    if scheme == "exam":
        partial = float(params.get("partial", 0.25))
        v = np.vstack([eye, np.full((1, N), partial)])
        return RewardMatrix(v, label=f"exam(partial={partial})")
    if scheme == "classification":
        partition = params["partition"]
        v = np.zeros((len(partition), N))
        for c, members in enumerate(partition):
            for j in members:
                v[c, j] += 1.0
        if not np.all(v.sum(axis=0) == 1):
            raise ValueError("partition must place every state in exactly one class")
        return RewardMatrix(v, label="classification")
    raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")


@dataclass(frozen=True)
class ChangePointReward:
    """Distance-based reward for one change point.

    ``profile[k]`` rewards a guess ``k`` steps away from the truth and
    ``inconclusive`` is paid for the extra abstain outcome.
    """

    profile: tuple
    inconclusive: float = 0.0

    def __post_init__(self):
        prof = tuple(float(x) for x in self.profile)
        if not prof or not all(np.isfinite(prof)) or not np.isfinite(self.inconclusive):
            raise ValueError("profile must be nonempty and finite")
        object.__setattr__(self, "profile", prof)

    @property
    def horizon(self) -> int:
        return len(self.profile)

    @classmethod
    def geometric(cls, base: float, N: int, inconclusive: float = 0.0):
        return cls(tuple(base**k for k in range(N)), inconclusive)

    @classmethod
    def horseshoe(cls, mu: int, N: int, inconclusive: float = 0.0):
        return cls(tuple(1.0 if k <= mu else 0.0 for k in range(N)), inconclusive)


def build_1cp_reward(p: ChangePointReward) -> RewardMatrix:
    """``(N+1) x N`` matrix with rows ``r_|i-j|`` and a constant last row."""
    N = p.horizon
    prof = np.array(p.profile)
    k = np.arange(N)
    v = np.vstack([prof[np.abs(k[:, None] - k[None, :])], np.full((1, N), p.inconclusive)])
    return RewardMatrix(v, label="changepoint_1")


def ctb_2cp_value(guess: tuple, state: tuple, N: int, base: float) -> tuple[float, int]:
    """Closer-the-better reward for two change points and the case used.

    ``guess`` is ``None`` for the inconclusive outcome (case 0).  Cases are
    checked in order and the first match wins.
    """
    if guess is None:
        return 0.0, 0
    i, j = guess
    k, l = state
    if j < k:
        return base ** abs(i - j) * base ** abs(k - l), 1
    return base ** abs(i - k) * base ** abs(j - l), 2


def ctb_3cp_value(guess: tuple, state: tuple, N: int, base: float) -> tuple[float, int]:
    """Closer-the-better reward for three change points and the case used.

    Conditions are evaluated in their fixed order, first match wins.
    """
    if guess is None:
        return 0.0, 0
    i, j, k = guess
    l, m, n = state
    b = base
    if l <= j <= k <= m:
        return b ** abs(i - l) * b ** abs(j - k) * b ** abs(m - n), 1
    if l <= j <= n and k > m:
        return b ** abs(i - l) * b ** abs(j - m) * b ** abs(k - n), 2
    if l <= m <= n < j <= k:
        return b ** abs(i - l) * b ** abs(m - n), 3
    if j < l <= k <= m:
        return b ** abs(i - j) * b ** abs(l - k) * b ** abs(m - n), 4
    if j < l <= k and k > m:
        return b ** abs(i - j) * b ** abs(l - m), 5
    if j <= k < l:
        return b ** abs(i - j) * b ** abs(k - l) * b ** abs(m - n), 6
    raise ValueError(f"no case applies to guess {guess} and state {state}")


def _build_ctb(N: int, P: int, base: float, fn) -> RewardMatrix:
    idx = enumerate_change_indices(N, P).tuples()
    n = len(idx)
    v = np.zeros((n + 1, n))
    cases = np.zeros((n + 1, n), dtype=int)
    for a, g in enumerate(list(idx) + [None]):
        for c, s in enumerate(idx):
            v[a, c], cases[a, c] = fn(g, s, N, base)
    return RewardMatrix(v, label=f"changepoint_{P}(base={base})", cases=cases)


def build_2cp_ctb_reward(N: int, base: float) -> RewardMatrix:
    """Closer-the-better reward over all two-change-point sequences plus an
    inconclusive row of zeros."""
    return _build_ctb(N, 2, base, ctb_2cp_value)


def build_3cp_ctb_reward(N: int, base: float) -> RewardMatrix:
    """Closer-the-better reward over all three-change-point sequences plus an
    inconclusive row of zeros."""
    return _build_ctb(N, 3, base, ctb_3cp_value)


def build_changepoint_reward(
    scheme: str, N: int, P: int, base: float = 2**-0.5, mu: int = 0,
    inconclusive_row: bool = True,
) -> RewardMatrix:
    """Reward for change-point sweeps.

    ``scheme`` is ``closer_better``, ``horseshoe`` or ``min_error``.  For
    ``P = 1`` these come from :func:`build_1cp_reward`; for ``P >= 2`` only
    ``closer_better`` (``P <= 3``) and ``min_error`` are defined.
    """
    if P == 1:
        if scheme == "closer_better":
            r = build_1cp_reward(ChangePointReward.geometric(base, N))
        elif scheme == "horseshoe":
            r = build_1cp_reward(ChangePointReward.horseshoe(mu, N))
        elif scheme == "min_error":
            r = build_1cp_reward(ChangePointReward.horseshoe(0, N))
        else:
            raise ValueError(f"scheme {scheme!r} not available for one change point")
    else:
        if scheme == "closer_better":
            if P == 2:
                r = build_2cp_ctb_reward(N, base)
            elif P == 3:
                r = build_3cp_ctb_reward(N, base)
            else:
                raise ValueError("closer_better is defined for P <= 3")
        elif scheme == "min_error":
            n = len(enumerate_change_indices(N, P))
            r = RewardMatrix(np.vstack([np.eye(n), np.zeros((1, n))]), label="min_error")
        else:
            raise ValueError(f"scheme {scheme!r} not available for {P} change points")
    if not inconclusive_row:
        r = RewardMatrix(r.values[:-1], r.forbidden[:-1], r.sense, r.label,
                         None if r.cases is None else r.cases[:-1])
    return r


def partition_from_labels(labels: Sequence[int]) -> list:
    """Convert per-state class labels to a list of member lists."""
    classes: dict = {}
    for j, c in enumerate(labels):
        classes.setdefault(int(c), []).append(j)
    return [classes[c] for c in sorted(classes)]
