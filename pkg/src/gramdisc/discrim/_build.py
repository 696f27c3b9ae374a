"""Constraint-row builders for Hermitian matrix equalities.

A Hermitian equality ``Y = T`` on ``r x r`` matrices is written as one real
equation per independent entry: ``Re Y_pq`` for ``p <= q`` and, when the data
is complex, ``Im Y_pq`` for ``p < q``.  The coefficient block of a variable
entering as ``Y = K W K^*`` is ``K^* E K`` for each basis element ``E``.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp


def basis_pairs(r: int, complex_mode: bool):
    """Row layout: list of ``(p, q, is_imag)``."""
    rows = [(p, q, False) for p in range(r) for q in range(p, r)]
    if complex_mode:
        rows += [(p, q, True) for p in range(r) for q in range(p + 1, r)]
    return rows


def target_vector(T: np.ndarray, layout) -> np.ndarray:
    return np.array([T[p, q].imag if im else T[p, q].real for p, q, im in layout])


def selection_rows(N: int, S: np.ndarray, layout) -> sp.csr_matrix:
    """Rows for a block entering as ``P_S W P_S^T`` (coordinate selection)."""
    k = len(S)
    pos = -np.ones(N, dtype=int)
    pos[np.asarray(S, dtype=int)] = np.arange(k)
    rr, cc, vv = [], [], []
    for row, (p, q, im) in enumerate(layout):
        a, b = pos[p], pos[q]
        if a < 0 or b < 0:
            continue
        if p == q:
            rr.append(row), cc.append(a * k + a), vv.append(1.0)
        elif not im:
            rr += [row, row]
            cc += [a * k + b, b * k + a]
            vv += [0.5, 0.5]
        else:
            rr += [row, row]
            cc += [a * k + b, b * k + a]
            vv += [0.5j, -0.5j]
    return sp.csr_matrix(
        (np.array(vv, dtype=complex), (rr, cc)), shape=(len(layout), k * k)
    )


def congruence_rows(K: np.ndarray, layout) -> sp.csr_matrix:
    """Rows for a block entering as ``K W K^*`` with dense ``K`` (r x k)."""
    k = K.shape[1]
    P = np.array([p for p, _, _ in layout], dtype=int)
    Q = np.array([q for _, q, _ in layout], dtype=int)
    im = np.array([x for _, _, x in layout], dtype=bool)
    Kc = K.conj()
    # out[row, a, b] = conj(K[p, a]) K[q, b]
    T1 = Kc[P][:, :, None] * K[Q][:, None, :]
    T2 = Kc[Q][:, :, None] * K[P][:, None, :]
    out = np.where(
        im[:, None, None],
        0.5j * (T1 - T2),
        np.where((P == Q)[:, None, None], T1, 0.5 * (T1 + T2)),
    )
    out = out.reshape(len(layout), k * k)
    out[np.abs(out) < 1e-15] = 0.0
    return sp.csr_matrix(out)


def assemble_hermitian(layout, X_coeffs: np.ndarray, r: int) -> np.ndarray:
    """Inverse map: the Hermitian ``sum_k y_k A_k`` for the row layout."""
    X = np.zeros((r, r), dtype=complex)
    for y, (p, q, im) in zip(X_coeffs, layout):
        if p == q:
            X[p, p] += y
        elif not im:
            X[p, q] += y / 2
            X[q, p] += y / 2
        else:
            X[p, q] += 0.5j * y
            X[q, p] -= 0.5j * y
    return X


def is_complex(*arrays) -> bool:
    return any(np.iscomplexobj(a) and np.any(np.asarray(a).imag) for a in arrays)
