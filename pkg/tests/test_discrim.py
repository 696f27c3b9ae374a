import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gramdisc.discrim import (
    DiscriminationInstance,
    MaskedInstanceError,
    invariant_basis,
    outcome_statistics,
    recover_povm,
    reversal_symmetry,
    solve_full_oracle,
    solve_heuristic_structured,
    solve_heuristic_toeplitz,
    solve_instance,
    solve_reduced_dual,
    solve_reduced_primal,
    structured_pattern,
    toeplitz_p_vector,
)
from gramdisc.discrim.reduced import reward_bounds
from gramdisc.gram import GramMatrix, gram_1cp, gram_changepoint, gram_from_ensemble
from gramdisc.rewards import RewardMatrix, build_changepoint_reward, build_reward
from gramdisc.sdpcore import Status
from gramdisc.states import (
    PureState,
    StateEnsemble,
    overlap_table,
    random_state,
    theta_alphabet,
)

S = 2**-0.5
HELSTROM = 0.5 + 0.5 * S
JAEGER_SHIMONY = 1 - S


def helstrom_ensemble():
    return StateEnsemble.uniform([PureState([1, 0]), PureState([S, S])])


def uniform_instance(G, reward, eps=None):
    if not isinstance(G, GramMatrix):
        G = GramMatrix(G)
    return DiscriminationInstance.uniform(G, reward, eps)


def test_helstrom_three_ways():
    e = helstrom_ensemble()
    r = build_reward("min_error", 2)
    alpha, povm, _ = solve_full_oracle(e, r)
    inst = uniform_instance(gram_from_ensemble(e), r)
    assert abs(alpha - HELSTROM) < 1e-7
    assert abs(solve_reduced_primal(inst).value - HELSTROM) < 1e-7
    assert abs(solve_reduced_dual(inst).value - HELSTROM) < 1e-7
    assert povm.violations() == []


def test_helstrom_via_1cp_gram():
    inst = uniform_instance(gram_1cp(S, 2), build_reward("min_error", 2))
    assert abs(solve_reduced_primal(inst).value - HELSTROM) < 1e-7


def test_jaeger_shimony_unambiguous():
    e = helstrom_ensemble()
    r = build_reward("unambiguous", 2)
    alpha, _, _ = solve_full_oracle(e, r)
    p = solve_reduced_primal(uniform_instance(gram_from_ensemble(e), r))
    assert abs(alpha - JAEGER_SHIMONY) < 1e-7
    assert abs(p.value - JAEGER_SHIMONY) < 1e-7
    # masked cells carry no weight
    assert abs(p.W[0][1, 1]) < 1e-8 and abs(p.W[1][0, 0]) < 1e-8


@pytest.mark.parametrize("N", [2, 3, 5])
def test_orthonormal_gram(N):
    inst = uniform_instance(np.eye(N), build_reward("min_error", N))
    p = solve_reduced_primal(inst)
    d = solve_reduced_dual(inst)
    assert abs(p.value - 1) < 1e-7 and abs(d.value - 1) < 1e-7
    assert np.allclose(d.X, np.eye(N) / N, atol=1e-6)
    for i, W in enumerate(p.W):
        assert abs(W[i, i] - 1) < 1e-6
    assert abs(solve_heuristic_toeplitz(inst).value - 1) < 1e-7


@pytest.mark.parametrize("N", [2, 3, 4])
def test_identical_states_value_one_over_n(N):
    inst = uniform_instance(np.ones((N, N)), build_reward("min_error", N))
    p = solve_reduced_primal(inst)
    assert p.status == Status.OPTIMAL and p.rank == 1
    assert abs(p.value - 1 / N) < 1e-7
    assert abs(solve_reduced_dual(inst).value - 1 / N) < 1e-7
    # brute force: with identical states only the guess frequencies matter
    alpha, _, _ = solve_full_oracle(StateEnsemble.uniform([PureState([1, 0])] * N), inst.reward)
    assert abs(alpha - 1 / N) < 1e-7


@pytest.mark.parametrize("N", [2, 4, 6])
def test_toeplitz_on_identical_states(N):
    inst = uniform_instance(np.ones((N, N)), build_reward("min_error", N))
    assert abs(solve_heuristic_toeplitz(inst).value - 1 / N) < 1e-7


def random_instance(rng, d, N, L):
    e = StateEnsemble(
        tuple(random_state(d, rng) for _ in range(N)),
        rng.dirichlet(np.ones(N)),
    )
    r = RewardMatrix(rng.uniform(-1, 1, size=(L, N)))
    return e, DiscriminationInstance(gram_from_ensemble(e), e.priors, r)


@settings(max_examples=12, deadline=None)
@given(seed=st.integers(0, 10**6), d=st.integers(2, 5), N=st.integers(2, 4), extra=st.integers(0, 1))
def test_oracle_equals_reduced(seed, d, N, extra):
    rng = np.random.default_rng(seed)
    e, inst = random_instance(rng, d, N, N + extra)
    rep = solve_instance(inst, ensemble=e)
    assert rep.violations() == []
    assert abs(rep.alpha - rep.alpha_prime) <= 1e-6
    assert abs(rep.alpha_prime - rep.beta_prime) <= 1e-6


def test_error_budget_is_monotone():
    G = gram_1cp(S, 2)
    r = RewardMatrix(np.vstack([np.eye(2), np.zeros((1, 2))]))
    vals = [solve_reduced_primal(uniform_instance(G, r, eps)).value for eps in (0, 0.02, 0.08, 0.2, 1)]
    assert abs(vals[0] - JAEGER_SHIMONY) < 1e-6
    assert abs(vals[-1] - HELSTROM) < 1e-6
    assert all(b >= a - 1e-8 for a, b in zip(vals, vals[1:]))


def test_error_budget_is_respected():
    G = gram_1cp(S, 2)
    r = RewardMatrix(np.vstack([np.eye(2), np.zeros((1, 2))]))
    p = solve_reduced_primal(uniform_instance(G, r, 0.05))
    st_ = outcome_statistics(W=p.W, priors=[0.5, 0.5])
    assert st_.p_error <= 0.05 + 1e-7


def test_scheme_identities():
    G = gram_1cp(S, 4)
    me = solve_reduced_primal(uniform_instance(G, build_reward("min_error", 4))).value
    hs = solve_reduced_primal(uniform_instance(G, build_reward("horseshoe", 4, mu=0))).value
    assert abs(me - hs) < 1e-7
    exam = solve_reduced_primal(uniform_instance(G, build_reward("exam", 4))).value
    assert exam >= max(me, 0.25) - 1e-7
    # orthonormal states are perfectly excludable: minimal cost 0
    rep = solve_instance(uniform_instance(np.eye(3), build_reward("exclusion", 3)))
    assert rep.sense == "min" and abs(rep.objective) < 1e-7


def test_recover_povm_orthonormal():
    e = StateEnsemble.uniform([PureState([1, 0, 0]), PureState([0, 1, 0])])
    W = [np.diag([1.0, 0.0]), np.diag([0.0, 1.0])]
    M = recover_povm(W, e).M
    assert np.allclose(M[0], np.diag([1, 0, 0.5]))
    assert np.allclose(M[1], np.diag([0, 1, 0.5]))


def test_recover_povm_duplicate_state():
    a = PureState([1, 0, 0])
    b = PureState([S, S, 0])
    e = StateEnsemble.uniform([a, b, a])
    r = build_reward("min_error", 3)
    p = solve_reduced_primal(DiscriminationInstance(gram_from_ensemble(e), e.priors, r))
    povm = recover_povm(p, e)
    assert povm.violations() == []
    # the completion term acts on the third axis, outside the span
    assert all(abs(m[2, 2] - 1 / 3) < 1e-9 for m in povm.M)
    probs = np.array([[np.real(s.amplitudes.conj() @ m @ s.amplitudes) for s in e.states] for m in povm.M])
    diag = np.array([np.real(np.diag(w)) for w in p.W])
    assert np.abs(probs - diag).max() < 1e-7


def test_recover_povm_helstrom_reproduces_value():
    e = helstrom_ensemble()
    r = build_reward("min_error", 2)
    p = solve_reduced_primal(DiscriminationInstance(gram_from_ensemble(e), e.priors, r))
    povm = recover_povm(p, e)
    st_ = outcome_statistics(povm=povm, ensemble=e)
    assert abs(st_.p_correct - HELSTROM) < 1e-7
    assert abs(sum(st_.as_tuple()) - 1) < 1e-7
    with pytest.raises(ValueError):
        recover_povm(p, StateEnsemble.uniform([PureState([1, 0]), PureState([0, 1])]))


def test_outcome_statistics_unambiguous():
    inst = uniform_instance(gram_1cp(S, 2), build_reward("unambiguous", 2))
    rep = solve_instance(inst)
    pc, pe, pi = rep.statistics.as_tuple()
    assert abs(pc - JAEGER_SHIMONY) < 1e-7
    assert abs(pe) < 1e-8
    assert abs(pc + pe + pi - 1) < 1e-7


def test_masked_dual_and_heuristics_refuse():
    inst = uniform_instance(gram_1cp(S, 2), build_reward("unambiguous", 2))
    with pytest.raises(MaskedInstanceError):
        solve_reduced_dual(inst)
    with pytest.raises(MaskedInstanceError):
        solve_heuristic_toeplitz(inst)
    budget = uniform_instance(gram_1cp(S, 2), build_reward("min_error", 2), 0.1)
    with pytest.raises(MaskedInstanceError):
        solve_reduced_dual(budget)


def test_infeasible_mask_is_reported_not_zero():
    # guess i is forbidden on every state j != i; identical states make
    # sum_i W_i = G impossible without violating a mask
    N = 3
    mask = ~np.eye(N, dtype=bool)
    inst = uniform_instance(np.ones((N, N)), RewardMatrix(np.eye(N), mask))
    p = solve_reduced_primal(inst)
    assert p.status != Status.OPTIMAL


def test_unambiguous_identical_states_value_zero():
    inst = uniform_instance(np.ones((3, 3)), build_reward("unambiguous", 3))
    p = solve_reduced_primal(inst)
    assert p.status == Status.OPTIMAL and abs(p.value) < 1e-8


def test_toeplitz_p_vector_closed_form():
    g = 0.3
    N = 5
    p = toeplitz_p_vector(gram_1cp(g, N).entries)
    expect = [N] + [2 * (N - k) * g**k for k in range(1, N)]
    assert np.allclose(p, expect, atol=1e-15)


def test_1cp_heuristic_dominates_dual():
    for N in (3, 6, 10):
        inst = uniform_instance(gram_1cp(S, N), build_changepoint_reward("closer_better", N, 1))
        rep = solve_instance(inst, heuristic="toeplitz")
        assert rep.beta_double_prime >= rep.beta_prime - 1e-7
        assert rep.violations() == []


@pytest.mark.parametrize("P,N,expect", [(2, 4, 17), (2, 8, 93)])
def test_structured_parameter_counts(P, N, expect):
    n = len(structured_pattern(N, P))
    assert n == expect
    size = sum(math.comb(N - 1, k) for k in range(P + 1))
    assert n < size * (size + 1) // 2


@pytest.mark.parametrize("P,N", [(2, 5), (3, 5)])
def test_structured_dominance_pi4(P, N):
    G = gram_changepoint(overlap_table(theta_alphabet(math.pi / 4, P)), N)
    inst = uniform_instance(G, build_changepoint_reward("closer_better", N, P))
    d = solve_reduced_dual(inst)
    h = solve_heuristic_structured(inst, P)
    assert d.status == Status.OPTIMAL and h.status == Status.OPTIMAL
    assert h.value >= d.value - 1e-7
    assert h.num_parameters < d.num_parameters


def test_structured_on_orthogonal_sequences_is_tight():
    # zero overlaps: the Gram over the index set is the identity
    G = gram_changepoint(overlap_table(theta_alphabet(math.pi / 2, 2)), 4)
    inst = uniform_instance(G, build_changepoint_reward("closer_better", 4, 2))
    assert np.allclose(G.entries, np.eye(G.size))
    d = solve_reduced_dual(inst).value
    h = solve_heuristic_structured(inst, 2).value
    assert abs(h - d) < 1e-7


def test_structured_size_mismatch():
    inst = uniform_instance(np.eye(5), build_reward("min_error", 5))
    with pytest.raises(ValueError):
        solve_heuristic_structured(inst, 2)


def test_complex_gram_matches_oracle():
    rng = np.random.default_rng(12)
    e = StateEnsemble.uniform([random_state(2, rng) for _ in range(3)])
    r = build_reward("min_error", 3)
    rep = solve_instance(DiscriminationInstance(gram_from_ensemble(e), e.priors, r), ensemble=e)
    assert not gram_from_ensemble(e).is_real
    assert rep.violations() == []
    assert abs(rep.alpha - rep.alpha_prime) < 1e-6


def test_solve_report_dict():
    inst = uniform_instance(gram_1cp(S, 3), build_changepoint_reward("closer_better", 3, 1))
    rep = solve_instance(inst, heuristic="toeplitz")
    d = rep.to_dict()
    assert d["statuses"]["beta_prime"] == "optimal"
    assert set(d["gaps"]) == {"alpha_prime_vs_beta_prime", "heuristic_gap"}
    assert d["num_parameters"]["beta_double_prime"] == 3
    with pytest.raises(ValueError):
        solve_instance(inst, heuristic="nope")


def test_reversal_symmetry_keeps_dual_value():
    for N in (4, 9):
        inst = uniform_instance(gram_1cp(S, N), build_changepoint_reward("closer_better", N, 1))
        full = solve_reduced_dual(inst)
        sym = solve_reduced_dual(inst, symmetry="auto")
        assert sym.pattern == "symmetric"
        assert abs(full.value - sym.value) < 1e-7
        assert sym.num_parameters < full.num_parameters
        X = sym.X
        assert np.allclose(X, X[::-1, ::-1])
        for D in reward_bounds(inst):
            assert np.linalg.eigvalsh(X - D)[0] >= -1e-8


def test_reversal_symmetry_detection():
    inst = uniform_instance(gram_1cp(S, 4), build_changepoint_reward("closer_better", 4, 1))
    assert reversal_symmetry(inst) is not None
    G = gram_changepoint(overlap_table(theta_alphabet(math.pi / 4, 2)), 4)
    inst2 = uniform_instance(G, build_changepoint_reward("closer_better", 4, 2))
    assert reversal_symmetry(inst2) is None
    # not a symmetry: rejected when forced
    pi = np.arange(inst2.size)[::-1]
    sigma = np.concatenate([pi, [inst2.size]])
    with pytest.raises(ValueError):
        solve_reduced_dual(inst2, symmetry=(pi, sigma))


def test_invariant_basis_complex():
    pi = np.array([2, 1, 0])
    B = invariant_basis(pi, True).toarray().reshape(-1, 3, 3)
    for b in B:
        assert np.allclose(b, b.conj().T)
        assert np.allclose(b, b[np.ix_(pi, pi)])
    # real orbits {00, 22}, {11}, {01, 12}, {02}; the imaginary part of
    # 02 cancels, leaving one imaginary orbit
    assert len(B) == 5
