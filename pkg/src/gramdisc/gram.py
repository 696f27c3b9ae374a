"""Gram matrices of pure-state ensembles and of change-point sequences.

Two routes exist for sequence ensembles.  The general route multiplies
alphabet overlaps slot by slot and accepts any complex table.  The closed
forms for one, two and three change points only use overlap magnitudes and
assume a table whose entries are real and nonnegative.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass

import numpy as np

from .states import (
    ChangeIndexSet,
    OverlapTable,
    PureState,
    StateEnsemble,
    enumerate_change_indices,
)

HERM_TOL = 1e-12
PSD_TOL = 1e-9


class GramValidationError(ValueError):
    """A matrix failed the Hermitian, unit-diagonal or PSD checks."""


@dataclass(frozen=True, eq=False)
class GramMatrix:
    """Hermitian positive semidefinite matrix with unit diagonal.

    Parameters
    ----------
    entries : array_like
        Square matrix of pairwise inner products ``<psi_i|psi_j>``.
    validate : bool
        Check the invariants at construction (default).
    """

    entries: np.ndarray
    validate: bool = True

    def __post_init__(self):
        g = np.array(self.entries, dtype=complex)
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise GramValidationError("Gram matrix must be square")
        if self.validate:
            problems = gram_violations(g)
            if problems:
                raise GramValidationError("; ".join(problems))
        if not np.any(g.imag):
            g = g.real.copy()
        g.setflags(write=False)
        object.__setattr__(self, "entries", g)

    @property
    def size(self) -> int:
        return self.entries.shape[0]

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.entries)

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.entries)[0])

    def to_dict(self) -> dict:
        g = np.asarray(self.entries, dtype=complex)
        return {
            "size": self.size,
            "entries": [[float(z.real), float(z.imag)] for z in g.ravel()],
        }

    @classmethod
    def from_dict(cls, data: dict, validate: bool = True) -> "GramMatrix":
        n = int(data["size"])
        flat = np.array(data["entries"], dtype=float)
        if flat.shape != (n * n, 2):
            raise GramValidationError("entries must hold size*size [re, im] pairs")
        return cls((flat[:, 0] + 1j * flat[:, 1]).reshape(n, n), validate)

    def dumps(self) -> str:
        return json.dumps(self.to_dict())


def gram_violations(g: np.ndarray) -> list[str]:
    """Return names of violated Gram invariants (empty when valid)."""
    out = []
    if not np.all(np.isfinite(g)):
        return ["non-finite entries"]
    herm = np.abs(g - g.conj().T).max() if g.size else 0.0
    if herm > HERM_TOL:
        out.append(f"hermitian: asymmetry {herm:.3e}")
    diag = np.abs(np.diag(g) - 1).max() if g.size else 0.0
    if diag > HERM_TOL:
        out.append(f"unit_diagonal: deviation {diag:.3e}")
    if g.size:
        lam = np.linalg.eigvalsh((g + g.conj().T) / 2)[0]
        if lam < -PSD_TOL:
            out.append(f"psd: minimum eigenvalue {lam:.3e}")
    return out


def _finish(g: np.ndarray) -> GramMatrix:
    g = (g + g.conj().T) / 2
    np.fill_diagonal(g, 1.0)
    return GramMatrix(g)


def gram_from_ensemble(e: StateEnsemble | list) -> GramMatrix:
    """Gram matrix ``Psi^* Psi`` of an ensemble or a list of states."""
    if isinstance(e, StateEnsemble):
        psi = e.state_matrix
    else:
        psi = np.column_stack([s.amplitudes for s in e])
    return _finish(psi.conj().T @ psi)


def gram_sequences_general(table: OverlapTable, idx: ChangeIndexSet) -> GramMatrix:
    """Sequence Gram matrix from slot-wise products of alphabet overlaps.

    Works for any number of changes and complex tables.
    """
    if table.size != idx.num_changes + 1:
        raise ValueError("overlap table size must equal P + 1")
    sym = idx.symbol_matrix()
    v = table.values
    n = len(idx)
    g = np.ones((n, n), dtype=complex)
    for t in range(idx.horizon):
        s = sym[:, t]
        g *= v[s[:, None], s[None, :]]
    return _finish(g)


def _gpow(base: float, k: int) -> float:
    # 0**0 == 1 in Python, which is the convention we need
    return base ** abs(k)


def gram_1cp(gamma: float, N: int) -> GramMatrix:
    """One-change-point Gram matrix ``T_ij = gamma^|i-j|`` (symmetric Toeplitz)."""
    if not 0.0 <= gamma <= 1.0:
        raise ValueError("gamma must lie in [0, 1]")
    k = np.arange(N)
    d = np.abs(k[:, None] - k[None, :])
    return _finish(np.power(float(gamma), d).astype(float))


def _require_real_nonneg(table: OverlapTable, P: int):
    if table.size != P + 1:
        raise ValueError(f"closed form needs a table for {P} change points")
    if not table.is_nonnegative():
        raise ValueError(
            "closed-form builders need a real nonnegative overlap table; "
            "use phase canonicalization or gram_sequences_general"
        )


def gram_2cp(table: OverlapTable, N: int) -> GramMatrix:
    """Closed-form two-change-point Gram matrix over the lexicographic index set."""
    _require_real_nonneg(table, 2)
    m = table.values.real
    g1, g2, g12 = m[0, 1], m[0, 2], m[1, 2]
    idx = enumerate_change_indices(N, 2).tuples()
    n = len(idx)
    g = np.eye(n)
    for a in range(n):
        for b in range(a + 1, n):
            (i, j), (k, l) = idx[a], idx[b]
            if i > k:
                (i, j), (k, l) = (k, l), (i, j)
            if j < k:
                val = _gpow(g1, i - j) * _gpow(g2, j - k) * _gpow(g12, k - l)
            else:
                val = _gpow(g1, i - k) * _gpow(g12, j - l)
            g[a, b] = g[b, a] = val
    return _finish(g)


def gram_3cp_entry(m: np.ndarray, u: tuple, v: tuple) -> tuple[float, int]:
    """Closed-form entry for sequences ``u`` and ``v`` and the case used.

    ``m`` holds overlap magnitudes.  Cases follow the six-region split of the
    index pair after ordering so that the first change of ``u`` comes first.
    """
    if u[0] > v[0]:
        u, v = v, u
    i, j, k = u
    l, mm, n = v
    g1, g2, g3 = m[0, 1], m[0, 2], m[0, 3]
    g12, g13, g23 = m[1, 2], m[1, 3], m[2, 3]
    p = _gpow
    if l <= j <= k <= mm:
        return p(g1, i - l) * p(g12, j - k) * p(g13, k - mm) * p(g23, mm - n), 1
    if l <= j <= n and k > mm:
        return p(g1, i - l) * p(g12, j - mm) * p(g23, k - n), 2
    if l <= mm <= n < j <= k:
        return p(g1, i - l) * p(g12, mm - n) * p(g13, n - j) * p(g23, j - k), 3
    if j < l <= k <= mm:
        return (
            p(g1, i - j) * p(g2, j - l) * p(g12, l - k) * p(g13, k - mm) * p(g23, mm - n),
            4,
        )
    if j < l <= k and k > mm:
        return p(g1, i - j) * p(g2, j - l) * p(g12, l - mm) * p(g23, k - n), 5
    if j <= k < l:
        return (
            p(g1, i - j) * p(g2, j - k) * p(g3, k - l) * p(g13, l - mm) * p(g23, mm - n),
            6,
        )
    raise AssertionError(f"no case matched for {u}, {v}")


def gram_3cp(table: OverlapTable, N: int) -> GramMatrix:
    """Closed-form three-change-point Gram matrix over the lexicographic index set."""
    _require_real_nonneg(table, 3)
    m = table.values.real
    idx = enumerate_change_indices(N, 3).tuples()
    n = len(idx)
    g = np.eye(n)
    for a in range(n):
        for b in range(a + 1, n):
            g[a, b] = g[b, a] = gram_3cp_entry(m, idx[a], idx[b])[0]
    return _finish(g)


def gram_changepoint(table: OverlapTable, N: int, method: str = "auto") -> GramMatrix:
    """Sequence Gram matrix choosing between closed form and general route.

    ``method`` is ``"auto"``, ``"closed"`` or ``"general"``.  ``"auto"`` uses the
    closed form when ``P <= 3`` and the table is real and nonnegative after
    rephasing, and the general route otherwise.
    """
    P = table.num_changes
    if method not in ("auto", "closed", "general"):
        raise ValueError(f"unknown method {method!r}")
    if method != "general":
        canon = canonical_table(table)
        if P <= 3 and canon.is_nonnegative():
            builder = {1: lambda: gram_1cp(canon.gamma(1), N),
                       2: lambda: gram_2cp(canon, N),
                       3: lambda: gram_3cp(canon, N)}[P]
            return builder()
        if method == "closed":
            raise ValueError("no real nonnegative rephasing of this table exists")
    return gram_sequences_general(table, enumerate_change_indices(N, P))


def canonical_phases(values: np.ndarray, tol: float = 1e-14) -> np.ndarray:
    """Unit phases ``w`` making ``conj(w_s) values[s,t] w_t`` real and nonnegative
    along a spanning forest of the nonzero-overlap graph (rooted at state 0)."""
    n = values.shape[0]
    w = np.ones(n, dtype=complex)
    seen = np.zeros(n, dtype=bool)
    for root in range(n):
        if seen[root]:
            continue
        seen[root] = True
        queue = deque([root])
        while queue:
            s = queue.popleft()
            for t in range(n):
                z = values[s, t]
                if not seen[t] and abs(z) > tol:
                    # want conj(w_s) z w_t >= 0
                    w[t] = w[s] * np.conj(z) / abs(z)
                    seen[t] = True
                    queue.append(t)
    return w


def canonical_table(table: OverlapTable) -> OverlapTable:
    """Rephase alphabet symbols so tree overlaps become real nonnegative.

    The result may still contain negative or complex entries when the
    overlap graph has cycles whose phases cannot be removed.
    """
    w = canonical_phases(table.values)
    v = np.conj(w)[:, None] * table.values * w[None, :]
    v[np.abs(v.imag) < 1e-15] = v[np.abs(v.imag) < 1e-15].real
    return OverlapTable(v)


def phase_canonicalize(e: StateEnsemble) -> StateEnsemble:
    """Multiply states by global phases so their overlaps with a connected
    reference become real and nonnegative.

    Global phases do not change any outcome probability, so discrimination
    values are unchanged.
    """
    psi = e.state_matrix
    w = canonical_phases(psi.conj().T @ psi)
    states = tuple(PureState(s.amplitudes * w[k]) for k, s in enumerate(e.states))
    return StateEnsemble(states, e.priors)
