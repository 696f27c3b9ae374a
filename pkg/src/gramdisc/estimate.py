"""Sampling simulators for overlap estimation and noisy Gram assembly.

Swap and Hadamard tests are simulated at the level of their outcome
distributions: each run draws a binomial count from the closed-form
probability of outcome 0.

* swap test: ``P(0) = 1/2 + |<psi|phi>|^2 / 2``
* Hadamard test: ``P(0) = (1 + v) / 2`` with ``v`` the real part of the
  overlap, or the imaginary part when a phase gate is inserted.

All randomness comes from numpy's ``PCG64`` generator.  Per-pair streams
are derived from a master seed with ``SeedSequence(seed, spawn_key=...)``,
so results do not depend on the order in which pairs are evaluated.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .gram import GramMatrix, gram_from_ensemble
from .states import OverlapTable, PureState, StateEnsemble, overlap_table

#: Shot count meaning "no sampling noise": estimates equal the true overlaps.
INFINITE_SHOTS = math.inf

#: Hoeffding constant ``k`` in ``shots = ceil(k / eps^2 * ln(2 / delta))``.
HOEFFDING_K = 0.5

MODES = ("swap_nonneg", "hadamard_full")


class PromiseError(ValueError):
    """Swap-test estimation was requested without the nonnegativity promise."""


class DegenerateGramError(ValueError):
    """PSD repair produced a zero diagonal entry."""


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed))


def _pair_seed(master: int, *key: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(master, spawn_key=tuple(int(k) for k in key))


def _check_shots(shots):
    if shots != INFINITE_SHOTS and (int(shots) != shots or shots < 1):
        raise ValueError("shots must be a positive integer or INFINITE_SHOTS")


def swap_test_sample(overlap_sq: float, shots, seed=None) -> tuple:
    """Simulate ``shots`` swap tests.

    Returns
    -------
    count0 : int
        Number of outcome-0 results, or ``-1`` for infinite shots.
    estimate : float
        ``2 count0 / shots - 1`` clamped to ``[0, 1]``.

    Examples
    --------
    >>> swap_test_sample(1.0, 100, seed=3)
    (100, 1.0)
    """
    s = float(overlap_sq)
    if not -1e-12 <= s <= 1 + 1e-12:
        raise ValueError("overlap_sq must lie in [0, 1]")
    s = min(max(s, 0.0), 1.0)
    _check_shots(shots)
    if shots == INFINITE_SHOTS:
        return -1, s
    shots = int(shots)
    count0 = int(_rng(seed).binomial(shots, 0.5 + 0.5 * s))
    return count0, min(max(2.0 * count0 / shots - 1.0, 0.0), 1.0)


def hadamard_test_sample(overlap: complex, part: str, shots, seed=None) -> float:
    """Simulate ``shots`` Hadamard tests of the real or imaginary part.

    Parameters
    ----------
    overlap : complex
        ``<psi|phi>`` with modulus at most one.
    part : {"re", "im"}
    shots : int or INFINITE_SHOTS

    Returns
    -------
    float
        ``2 count0 / shots - 1`` clamped to ``[-1, 1]``.
    """
    z = complex(overlap)
    if abs(z) > 1 + 1e-12:
        raise ValueError("overlap modulus must be at most 1")
    p = str(part).lower()
    if p not in ("re", "im"):
        raise ValueError("part must be 're' or 'im'")
    v = z.real if p == "re" else z.imag
    v = min(max(v, -1.0), 1.0)
    _check_shots(shots)
    if shots == INFINITE_SHOTS:
        return v
    shots = int(shots)
    count0 = int(_rng(seed).binomial(shots, 0.5 * (1.0 + v)))
    return min(max(2.0 * count0 / shots - 1.0, -1.0), 1.0)


@dataclass(frozen=True)
class ShotPlan:
    """Shots per estimated quantity and the accuracy they buy.

    With ``shots_per_pair = ceil(ln(2/delta) / (2 epsilon^2))`` the outcome-0
    frequency of one test is within ``epsilon`` of its mean with probability
    at least ``1 - delta`` (two-sided Hoeffding).  The derived overlap
    estimate ``2 f - 1`` is then within ``2 epsilon``.
    """

    epsilon: float
    delta: float
    shots_per_pair: float

    def __post_init__(self):
        _check_shots(self.shots_per_pair)

    @property
    def infinite(self) -> bool:
        return self.shots_per_pair == INFINITE_SHOTS

    @classmethod
    def from_shots(cls, shots, delta: float = 0.05) -> "ShotPlan":
        """Plan for a fixed budget; ``epsilon`` is the Hoeffding radius."""
        _check_shots(shots)
        if shots == INFINITE_SHOTS:
            return cls(0.0, 0.0, INFINITE_SHOTS)
        eps = math.sqrt(HOEFFDING_K * math.log(2.0 / delta) / shots)
        return cls(eps, delta, int(shots))

    def to_dict(self) -> dict:
        s = self.shots_per_pair
        return {"epsilon": self.epsilon, "delta": self.delta,
                "shots_per_pair": "inf" if s == INFINITE_SHOTS else int(s)}


def plan_shots(epsilon: float, delta: float) -> ShotPlan:
    """Hoeffding shot budget.

    Examples
    --------
    >>> plan_shots(0.1, 0.05).shots_per_pair
    185
    """
    if not (0 < epsilon < 1 and 0 < delta < 1):
        raise ValueError("epsilon and delta must lie in (0, 1)")
    n = math.ceil(HOEFFDING_K / epsilon**2 * math.log(2.0 / delta))
    return ShotPlan(float(epsilon), float(delta), n)


def psd_project(H) -> GramMatrix:
    """Clip negative eigenvalues and rescale to a unit diagonal.

    Raises
    ------
    DegenerateGramError
        If a diagonal entry vanishes after clipping.
    """
    H = np.asarray(H)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValueError("H must be square")
    H = (H + H.conj().T) / 2
    lam, V = np.linalg.eigh(H)
    P = (V * np.clip(lam, 0.0, None)) @ V.conj().T
    P = (P + P.conj().T) / 2
    d = np.real(np.diag(P))
    if np.any(d <= 1e-14):
        raise DegenerateGramError("zero diagonal entry after clipping")
    s = 1.0 / np.sqrt(d)
    P = P * s[:, None] * s[None, :]
    np.fill_diagonal(P, 1.0)
    if np.iscomplexobj(P) and not np.any(P.imag):
        P = P.real
    return GramMatrix(P)


def _clip_norm(H: np.ndarray) -> float:
    lam = np.linalg.eigvalsh((H + H.conj().T) / 2)
    return float(np.linalg.norm(np.minimum(lam, 0.0)))


@dataclass(eq=False)
class EstimatedGram:
    """Sampled overlaps, their PSD repair and per-entry standard errors.

    ``clip_norm`` is the Frobenius norm of the clipped negative spectrum of
    ``raw`` and ``correction`` the Frobenius distance ``|repaired - raw|``.
    """

    raw: np.ndarray
    repaired: GramMatrix
    per_entry_std: np.ndarray
    seed: Optional[int]
    plan: ShotPlan
    mode: str
    correction: float = 0.0
    clip_norm: float = 0.0
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        def pairs(M):
            M = np.asarray(M, dtype=complex)
            return [[float(z.real), float(z.imag)] for z in M.ravel()]

        return {
            "size": int(self.raw.shape[0]),
            "mode": self.mode,
            "seed": self.seed,
            "plan": self.plan.to_dict(),
            "raw": pairs(self.raw),
            "repaired": pairs(self.repaired.entries),
            "per_entry_std": [float(x) for x in np.asarray(self.per_entry_std).ravel()],
            "correction": self.correction,
            "clip_norm": self.clip_norm,
            "notes": list(self.notes),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict())


def _true_gram(source) -> np.ndarray:
    if isinstance(source, GramMatrix):
        return np.asarray(source.entries)
    if isinstance(source, (StateEnsemble, list, tuple)):
        return np.asarray(gram_from_ensemble(source).entries)
    return np.asarray(GramMatrix(source).entries)


def _estimate_matrix(G, mode, plan, seed, promise, unit_cap=False):
    """Shared sampler for Gram matrices and alphabet overlap tables."""
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    notes = []
    if mode == "swap_nonneg":
        if not promise:
            raise PromiseError("swap_nonneg mode needs the nonnegative-overlap promise")
        if np.any(np.abs(G - np.abs(G)) > 1e-12):
            warnings.warn("overlaps are not all nonnegative; swap estimates drop their phases")
            notes.append("promise violated by the true overlaps")
    n = G.shape[0]
    shots = plan.shots_per_pair
    raw = np.eye(n, dtype=complex if mode == "hadamard_full" else float)
    std = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            g = G[i, j]
            if mode == "swap_nonneg":
                _, s = swap_test_sample(abs(g) ** 2, shots, _pair_seed(seed, i, j))
                val = math.sqrt(s)
                if not plan.infinite:
                    v_sq = 4.0 * (0.5 + 0.5 * s) * (0.5 - 0.5 * s) / shots
                    sd = math.sqrt(v_sq)
                    std[i, j] = min(sd / (2.0 * val), math.sqrt(sd)) if val > 0 else math.sqrt(sd)
            else:
                re = hadamard_test_sample(g, "re", shots, _pair_seed(seed, i, j, 0))
                im = hadamard_test_sample(g, "im", shots, _pair_seed(seed, i, j, 1))
                val = complex(re, im)
                if unit_cap and abs(val) > 1.0:
                    val /= abs(val)
                if not plan.infinite:
                    std[i, j] = math.sqrt(((1 - re * re) + (1 - im * im)) / shots)
            raw[i, j] = val
            raw[j, i] = np.conj(val)
            std[j, i] = std[i, j]
    if np.iscomplexobj(raw) and not np.any(raw.imag):
        raw = raw.real
    return raw, std, notes


def estimate_gram(
    source,
    mode: str = "hadamard_full",
    plan: ShotPlan | None = None,
    seed: int = 0,
    promise: bool = False,
    shots=None,
) -> EstimatedGram:
    """Estimate a Gram matrix from simulated swap or Hadamard tests.

    Parameters
    ----------
    source : StateEnsemble, list of PureState, GramMatrix or array
        Supplies the true overlaps the simulator samples from.
    mode : {"hadamard_full", "swap_nonneg"}
        ``swap_nonneg`` estimates ``|<i|j>|`` and takes the phase as ``+1``;
        it requires ``promise=True``.
    plan : ShotPlan, optional
        Shots per pair (per part in Hadamard mode).  Alternatively pass
        ``shots``; ``INFINITE_SHOTS`` returns the exact Gram.
    seed : int
        Master seed for the per-pair streams.
    """
    if plan is None:
        if shots is None:
            raise ValueError("give a ShotPlan or a shot count")
        plan = ShotPlan.from_shots(shots)
    G = _true_gram(source)
    raw, std, notes = _estimate_matrix(G, mode, plan, seed, promise)
    if plan.infinite:
        repaired = GramMatrix(raw)
        clip = 0.0
    else:
        repaired = psd_project(raw)
        clip = _clip_norm(raw)
    corr = float(np.linalg.norm(np.asarray(repaired.entries) - raw))
    return EstimatedGram(raw, repaired, std, seed, plan, mode, corr, clip, notes)


def estimate_overlap_table(
    alphabet: list,
    mode: str = "hadamard_full",
    plan: ShotPlan | None = None,
    seed: int = 0,
    promise: bool = False,
    shots=None,
) -> OverlapTable:
    """Estimate the alphabet overlap table from which sequence Grams are
    built; only ``(P + 1) P / 2`` pairs are sampled regardless of ``N``."""
    if plan is None:
        if shots is None:
            raise ValueError("give a ShotPlan or a shot count")
        plan = ShotPlan.from_shots(shots)
    if alphabet and isinstance(alphabet[0], PureState):
        T = overlap_table(alphabet).values
    else:
        T = np.asarray(alphabet)
    raw, _, _ = _estimate_matrix(np.asarray(T), mode, plan, seed, promise, unit_cap=True)
    return OverlapTable(raw)
