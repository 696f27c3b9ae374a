import io
import warnings

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from gramdisc.sdpcore import (
    HermitianProblem,
    SdpDataError,
    SdpProblem,
    SdpResourceError,
    SolverOptions,
    Status,
    check_psd,
    embed_hermitian,
    embed_matrix,
    recording,
    solve,
    solve_hermitian,
    unembed_matrix,
)


def rows(*mats):
    return sp.csr_matrix(np.array([np.asarray(m, dtype=float).ravel() for m in mats]))


def random_feasible(rng, sizes=(2, 3, 2), m=4):
    """Instance with strictly feasible primal and dual points."""
    A = []
    for n in sizes:
        mats = []
        for _ in range(m):
            R = rng.standard_normal((n, n))
            mats.append((R + R.T) / 2)
        A.append(mats)
    X0 = []
    for n in sizes:
        R = rng.standard_normal((n, n))
        X0.append(R @ R.T + np.eye(n))
    b = np.array([sum(np.sum(A[k][i] * X0[k]) for k in range(len(sizes))) for i in range(m)])
    y0 = rng.standard_normal(m)
    C = []
    for k, n in enumerate(sizes):
        R = rng.standard_normal((n, n))
        C.append(sum(y0[i] * A[k][i] for i in range(m)) + R @ R.T + np.eye(n))
    return SdpProblem(list(sizes), C, [rows(*A[k]) for k in range(len(sizes))], b, "min")


def test_trivial_min_forced_by_constraint():
    # minimize <I, X> s.t. X_11 = 1 -> value 1, X = E_11
    E11 = np.diag([1.0, 0.0])
    p = SdpProblem([2], [np.eye(2)], [rows(E11)], np.array([1.0]), "min")
    s = solve(p)
    assert s.status == Status.OPTIMAL
    assert abs(s.primal_value - 1) < 1e-7
    assert np.allclose(s.primal_X[0], E11, atol=1e-6)


def test_trivial_max_extreme_point():
    p = SdpProblem([2], [np.diag([1.0, 0.0])], [rows(np.eye(2))], np.array([1.0]), "max")
    s = solve(p)
    assert s.optimal and abs(s.value - 1) < 1e-7
    assert abs(s.dual_value - 1) < 1e-7


def test_two_by_two_matches_eigenvalue_oracle():
    # min <C, X> s.t. tr X = 1 has value lambda_min(C)
    C = np.array([[2.0, 0.7], [0.7, -1.0]])
    s = solve(SdpProblem([2], [C], [rows(np.eye(2))], np.array([1.0]), "min"))
    assert abs(s.value - np.linalg.eigvalsh(C)[0]) < 1e-7
    # brute-force grid over a = X_11, b = X_12 on the boundary b^2 = a(1-a)
    a = np.linspace(0, 1, 20001)
    vals = C[0, 0] * a + C[1, 1] * (1 - a) - 2 * abs(C[0, 1]) * np.sqrt(a * (1 - a))
    assert abs(s.value - vals.min()) < 1e-6


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_random_feasible_strong_duality(seed):
    p = random_feasible(np.random.default_rng(seed))
    s = solve(p)
    assert s.status == Status.OPTIMAL
    assert abs(s.primal_value - s.dual_value) <= 1e-7 * (1 + abs(s.primal_value))
    c = s.certificate()
    assert c["primal_residual"] <= 1e-8 and c["dual_residual"] <= 1e-8
    assert c["gap"] <= 1e-8
    assert c["complementarity"] <= c["complementarity_bound"]
    assert c["min_eig_X"] >= -1e-9 and c["min_eig_Z"] >= -1e-9


def test_weak_duality_at_feasible_iterates():
    p = random_feasible(np.random.default_rng(11))
    s = solve(p)
    checked = 0
    for h in s.history:
        if h["primal_residual"] <= 1e-8 and h["dual_residual"] <= 1e-8:
            # min sense: primal objective >= dual objective
            assert h["primal_objective"] >= h["dual_objective"] - 1e-9
            checked += 1
    assert checked >= 1


def test_row_rescaling_invariance():
    p = random_feasible(np.random.default_rng(5))
    s1 = solve(p)
    s2 = solve(p.scale_rows(np.array([1e-2, 3.0, 50.0, 0.7])))
    assert s2.optimal
    assert abs(s1.value - s2.value) <= 10 * 1e-8 * (1 + abs(s1.value)) + 1e-9


def test_infeasible_is_reported():
    # X_11 = -1 has no PSD solution
    p = SdpProblem([2], [np.eye(2)], [rows(np.diag([1.0, 0.0]))], np.array([-1.0]), "min")
    s = solve(p)
    assert s.status != Status.OPTIMAL


def test_iteration_cap_status():
    p = random_feasible(np.random.default_rng(2))
    s = solve(p, SolverOptions(max_iterations=2))
    assert s.status == Status.MAX_ITERATIONS


def test_data_errors():
    with pytest.raises(SdpDataError):
        SdpProblem([2], [np.array([[1.0, 2.0], [0.0, 1.0]])], [rows(np.eye(2))], np.array([1.0]), "min")
    with pytest.raises(SdpDataError):
        SdpProblem([2], [np.eye(2)], [rows(np.eye(2))], np.array([np.nan]), "min")
    with pytest.raises(SdpDataError):
        SdpProblem([3], [np.eye(2)], [rows(np.eye(2))], np.array([1.0]), "min")


def test_memory_guard():
    p = random_feasible(np.random.default_rng(0))
    with pytest.raises(SdpResourceError):
        solve(p, SolverOptions(max_memory_bytes=10))


def test_verbose_log_and_recording():
    p = random_feasible(np.random.default_rng(3))
    buf = io.StringIO()
    with recording() as sols:
        solve(p, SolverOptions(verbose=True, stream=buf))
    assert len(sols) == 1
    assert len(buf.getvalue().splitlines()) >= 3


def test_dump_load_round_trip(tmp_path):
    p = random_feasible(np.random.default_rng(8))
    path = tmp_path / "p.json"
    p.dump(path)
    q = SdpProblem.load(path)
    assert abs(solve(q).value - solve(p).value) < 1e-12


def test_check_psd_examples():
    assert check_psd(np.eye(3)) == (True, 1.0)
    ok, lam = check_psd(np.diag([1.0, -0.5]))
    assert not ok and lam == -0.5
    s = 2**-0.5
    ok, lam = check_psd(np.array([[1, s], [s, 1]]))
    assert ok and abs(lam - (1 - s)) < 1e-15


def test_embedding_of_hermitian_block():
    H = np.array([[1, 1j], [-1j, 1]])
    E = embed_matrix(H)
    assert np.allclose(E, E.T)
    assert np.allclose(np.sort(np.linalg.eigvalsh(E)), [0, 0, 2, 2], atol=1e-14)
    assert np.allclose(unembed_matrix(E), H)
    R = np.array([[2.0, 1.0], [1.0, 3.0]])
    assert np.allclose(embed_matrix(R), np.kron(np.eye(2), R))


def test_real_data_embedding_keeps_value():
    C = [np.array([[1.0, 0.3], [0.3, 2.0]])]
    A = [sp.csr_matrix(np.eye(2).reshape(1, -1).astype(complex))]
    h = HermitianProblem([2], C, A, np.array([1.0]), "min")
    direct = solve_hermitian(h)
    embedded = solve_hermitian(h, force_embed=True)
    assert not direct.embedded and embedded.embedded
    assert abs(direct.primal_value - embedded.primal_value) < 1e-8
    assert np.allclose(direct.X[0], embedded.X[0], atol=1e-6)
    assert embed_hermitian(h).blocks == [4]


def test_complex_instance_matches_real_parameterization():
    # min <C, X> s.t. tr X = 1 over Hermitian X: value lambda_min(C)
    C = np.array([[1.0, 0.5 - 0.8j], [0.5 + 0.8j, 0.2]])
    A = [sp.csr_matrix(np.eye(2, dtype=complex).reshape(1, -1))]
    s = solve_hermitian(HermitianProblem([2], [C], A, np.array([1.0]), "min"))
    assert s.embedded
    assert abs(s.primal_value - np.linalg.eigvalsh(C)[0]) < 1e-7
    # independent oracle: X = (I + x.sigma)/2 with |x| <= 1 gives
    # value tr(C)/2 - |c| with c the Pauli coefficients of C
    c = np.array([C[0, 1].real, -C[0, 1].imag, (C[0, 0] - C[1, 1]).real / 2])
    assert abs(s.primal_value - (np.trace(C).real / 2 - np.linalg.norm(c))) < 1e-7
    X = s.X[0]
    assert np.allclose(X, X.conj().T) and np.linalg.eigvalsh(X)[0] > -1e-9


def test_non_hermitian_input_rejected():
    C = np.array([[1.0, 1j], [1j, 1.0]])
    A = [sp.csr_matrix(np.eye(2, dtype=complex).reshape(1, -1))]
    with pytest.raises(SdpDataError):
        embed_hermitian(HermitianProblem([2], [C], A, np.array([1.0]), "min"))


def test_near_dependent_constraints_regularized():
    # duplicate constraint rows make the Schur complement singular
    E = np.diag([1.0, 0.0])
    p = SdpProblem([2], [np.eye(2)], [rows(E, E, np.eye(2))], np.array([1.0, 1.0, 2.0]), "min")
    with warnings.catch_warnings(record=True):
        warnings.simplefilter("always")
        s = solve(p)
    assert s.status == Status.OPTIMAL
    assert abs(s.value - 2.0) < 1e-6
