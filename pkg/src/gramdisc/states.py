"""Pure states, change-point index sets, alphabet overlap tables and ensembles.

A change-point sequence over a horizon ``N`` with ``P`` changes is described
by a tuple ``(a_1, ..., a_P)`` with ``1 <= a_1 <= ... <= a_P <= N`` and
``a_i < a_{i+1}`` unless ``a_i == N``.  The sequence emits the base state for
the first ``a_1`` time steps, then the first mutated state until step
``a_2``, and so on; an entry equal to ``N`` means that change never happened.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb
from typing import Iterator, Sequence

import numpy as np

NORM_TOL = 1e-12
DEFAULT_MAX_DIM = 2**24


class DimensionCapError(ValueError):
    """Raised when an explicit tensor-product state would exceed the size cap."""


@dataclass(frozen=True, eq=False)
class PureState:
    """Normalized pure state vector.

    Parameters
    ----------
    amplitudes : array_like
        Complex amplitude vector.  Normalization is checked, not repaired.
    """

    amplitudes: np.ndarray

    def __post_init__(self):
        amp = np.array(self.amplitudes, dtype=complex).ravel()
        if amp.size < 1:
            raise ValueError("state must have dimension >= 1")
        if not np.all(np.isfinite(amp)):
            raise ValueError("state amplitudes must be finite")
        norm = np.linalg.norm(amp)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state is not normalized (norm = {norm!r})")
        amp.setflags(write=False)
        object.__setattr__(self, "amplitudes", amp)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    @classmethod
    def from_unnormalized(cls, vec) -> "PureState":
        vec = np.asarray(vec, dtype=complex).ravel()
        return cls(vec / np.linalg.norm(vec))

    def with_phase(self, phase: complex) -> "PureState":
        """Return the state multiplied by a unit-modulus scalar."""
        if abs(abs(phase) - 1.0) > NORM_TOL:
            raise ValueError("phase must have unit modulus")
        return PureState(self.amplitudes * phase)

    def __repr__(self):
        return f"PureState(dim={self.dim}, amplitudes={np.round(self.amplitudes, 6).tolist()})"


def qubit_state(k: int, theta: float) -> PureState:
    """Return ``cos(k theta)|0> + sin(k theta)|1>``.

    With ``theta = pi/4`` this gives ``|0>, |+>, |1>`` for ``k = 0, 1, 2``.
    """
    if k < 0:
        raise ValueError("k must be nonnegative")
    a = k * theta
    return PureState(np.array([np.cos(a), np.sin(a)], dtype=complex))


def theta_alphabet(theta: float, num_changes: int) -> list[PureState]:
    """Alphabet ``[psi, phi_1, ..., phi_P]`` with ``phi_k = qubit_state(k, theta)``."""
    return [qubit_state(k, theta) for k in range(num_changes + 1)]


def inner_product(a: PureState, b: PureState) -> complex:
    """Return ``<a|b>`` (conjugate-linear in the first argument)."""
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


@dataclass(frozen=True, order=True)
class ChangeIndex:
    """Element of the change-point index set for a fixed horizon."""

    entries: tuple
    horizon: int = field(compare=False)

    def __post_init__(self):
        e = tuple(int(x) for x in self.entries)
        object.__setattr__(self, "entries", e)
        if not is_valid_change_index(e, self.horizon):
            raise ValueError(f"{e} is not a valid change index for N = {self.horizon}")

    @property
    def num_changes(self) -> int:
        return len(self.entries)

    def symbols(self) -> np.ndarray:
        """Alphabet symbol emitted at each of the ``N`` slots (0-based slots)."""
        t = np.arange(1, self.horizon + 1)
        return (t[:, None] > np.array(self.entries)[None, :]).sum(axis=1)


def is_valid_change_index(entries: Sequence[int], N: int) -> bool:
    if N < 1 or len(entries) < 1:
        return False
    if entries[0] < 1 or entries[-1] > N:
        return False
    for a, b in zip(entries, entries[1:]):
        if a > b or (a == b and a != N):
            return False
    return True


def _generate(N: int, P: int) -> Iterator[tuple]:
    # Lexicographic order: choose a strictly increasing prefix below N,
    # then pad with N.  Recursion keeps lexicographic order directly.
    def rec(prefix: tuple, low: int):
        if len(prefix) == P:
            yield prefix
            return
        for a in range(low, N + 1):
            if a == N:
                yield prefix + (N,) * (P - len(prefix))
            else:
                yield from rec(prefix + (a,), a + 1)

    yield from rec((), 1)


@dataclass(frozen=True, eq=False)
class ChangeIndexSet:
    """Ordered index set of all change-point sequences for ``(N, P)``."""

    horizon: int
    num_changes: int
    indices: tuple
    position_of: dict

    def __len__(self):
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)

    def __getitem__(self, k):
        return self.indices[k]

    def tuples(self) -> list[tuple]:
        return [c.entries for c in self.indices]

    def symbol_matrix(self) -> np.ndarray:
        """Integer array of shape ``(len(self), N)`` with the symbol per slot."""
        if not self.indices:
            return np.zeros((0, self.horizon), dtype=int)
        ent = np.array(self.tuples())
        t = np.arange(1, self.horizon + 1)
        return (t[None, :, None] > ent[:, None, :]).sum(axis=2)


def expected_cardinality(N: int, P: int) -> int:
    return sum(comb(N - 1, k) for k in range(P + 1))


def enumerate_change_indices(N: int, P: int) -> ChangeIndexSet:
    """Enumerate the change-point index set in lexicographic order.

    Examples
    --------
    >>> [c.entries for c in enumerate_change_indices(3, 2)]
    [(1, 2), (1, 3), (2, 3), (3, 3)]
    """
    if N < 1 or P < 1:
        raise ValueError("need N >= 1 and P >= 1")
    items = tuple(ChangeIndex(e, N) for e in _generate(N, P))
    # position_of uses 0-based linear positions
    pos = {c.entries: k for k, c in enumerate(items)}
    return ChangeIndexSet(N, P, items, pos)


def sequence_state(
    alphabet: Sequence[PureState], c: ChangeIndex, max_dim: int = DEFAULT_MAX_DIM
) -> PureState:
    """Explicit tensor-product state of a change-point sequence.

    Raises
    ------
    DimensionCapError
        If the total dimension would exceed ``max_dim``.
    """
    if len(alphabet) != c.num_changes + 1:
        raise ValueError("alphabet must contain P + 1 states")
    d = alphabet[0].dim
    if any(s.dim != d for s in alphabet):
        raise ValueError("alphabet states must share a dimension")
    if d ** c.horizon > max_dim:
        raise DimensionCapError(
            f"tensor dimension {d}^{c.horizon} exceeds cap {max_dim}"
        )
    vec = np.ones(1, dtype=complex)
    for s in c.symbols():
        vec = np.kron(vec, alphabet[s].amplitudes)
    return PureState(vec / np.linalg.norm(vec))


@dataclass(frozen=True, eq=False)
class OverlapTable:
    """Pairwise inner products of a change-point alphabet.

    ``values[s, t] = <a_s|a_t>`` with symbol 0 the base state.
    """

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=complex)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValueError("overlap table must be square")
        if not np.allclose(v, v.conj().T, atol=1e-12, rtol=0):
            raise ValueError("overlap table must be Hermitian")
        if not np.allclose(np.diag(v), 1.0, atol=1e-12, rtol=0):
            raise ValueError("overlap table must have unit diagonal")
        if np.abs(v).max() > 1.0 + 1e-12:
            raise ValueError("overlap magnitudes must lie in [0, 1]")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def size(self) -> int:
        return self.values.shape[0]

    @property
    def num_changes(self) -> int:
        return self.size - 1

    def gamma(self, s: int, t: int = 0) -> float:
        """Magnitude ``|<a_s|a_t>|``; ``gamma(i)`` is the overlap with the base state."""
        return float(abs(self.values[s, t]))

    def magnitudes(self) -> np.ndarray:
        return np.abs(self.values)

    def is_nonnegative(self, tol: float = 1e-12) -> bool:
        v = self.values
        return bool(np.all(np.abs(v.imag) <= tol) and np.all(v.real >= -tol))

    @classmethod
    def from_gammas(cls, gammas: dict, size: int) -> "OverlapTable":
        """Build a real table from ``{(s, t): value}`` with ``s < t``."""
        v = np.eye(size)
        for (s, t), g in gammas.items():
            v[s, t] = v[t, s] = g
        return cls(v)


def overlap_table(alphabet: Sequence[PureState]) -> OverlapTable:
    n = len(alphabet)
    v = np.empty((n, n), dtype=complex)
    for s in range(n):
        for t in range(n):
            v[s, t] = inner_product(alphabet[s], alphabet[t])
    # exact Hermitian symmetry and unit diagonal against rounding
    v = (v + v.conj().T) / 2
    np.fill_diagonal(v, 1.0)
    return OverlapTable(v)


@dataclass(frozen=True, eq=False)
class StateEnsemble:
    """Pure states with prior probabilities."""

    states: tuple
    priors: np.ndarray

    def __post_init__(self):
        states = tuple(self.states)
        if not states:
            raise ValueError("ensemble must contain at least one state")
        d = states[0].dim
        if any(s.dim != d for s in states):
            raise ValueError("all states must share a dimension")
        q = np.array(self.priors, dtype=float).ravel()
        if q.size != len(states):
            raise ValueError("priors length must match number of states")
        if np.any(q < 0) or not np.all(np.isfinite(q)):
            raise ValueError("priors must be finite and nonnegative")
        if abs(q.sum() - 1.0) > 1e-12:
            raise ValueError(f"priors must sum to 1 (sum = {q.sum()!r})")
        q.setflags(write=False)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "priors", q)

    @classmethod
    def uniform(cls, states: Sequence[PureState]) -> "StateEnsemble":
        n = len(states)
        return cls(tuple(states), np.full(n, 1.0 / n))

    @property
    def size(self) -> int:
        return len(self.states)

    @property
    def dim(self) -> int:
        return self.states[0].dim

    @property
    def state_matrix(self) -> np.ndarray:
        """``d x N`` matrix whose columns are the states."""
        return np.column_stack([s.amplitudes for s in self.states])


def changepoint_ensemble(
    alphabet: Sequence[PureState], N: int, priors=None, max_dim: int = DEFAULT_MAX_DIM
) -> tuple[StateEnsemble, ChangeIndexSet]:
    """Explicit ensemble of all sequence states (small ``N`` only)."""
    idx = enumerate_change_indices(N, len(alphabet) - 1)
    states = [sequence_state(alphabet, c, max_dim) for c in idx]
    if priors is None:
        priors = np.full(len(states), 1.0 / len(states))
    return StateEnsemble(tuple(states), priors), idx


def random_state(dim: int, rng: np.random.Generator, real: bool = False) -> PureState:
    v = rng.standard_normal(dim)
    if not real:
        v = v + 1j * rng.standard_normal(dim)
    return PureState.from_unnormalized(v)

