import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gramdisc.discrim import DiscriminationInstance, solve_reduced_primal
from gramdisc.estimate import (
    INFINITE_SHOTS,
    DegenerateGramError,
    PromiseError,
    ShotPlan,
    estimate_gram,
    estimate_overlap_table,
    hadamard_test_sample,
    plan_shots,
    psd_project,
    swap_test_sample,
)
from gramdisc.gram import GramMatrix, gram_from_ensemble
from gramdisc.rewards import build_reward
from gramdisc.states import PureState, StateEnsemble, random_state, theta_alphabet

S = 2**-0.5
HELSTROM = 0.5 + 0.5 * S


def helstrom():
    return StateEnsemble.uniform([PureState([1, 0]), PureState([S, S])])


def test_swap_identical_and_orthogonal():
    assert swap_test_sample(1.0, 1000, seed=1) == (1000, 1.0)
    c, _ = swap_test_sample(0.0, 100000, seed=2)
    assert abs(c / 100000 - 0.5) < 0.01
    assert swap_test_sample(0.3, INFINITE_SHOTS) == (-1, 0.3)
    with pytest.raises(ValueError):
        swap_test_sample(1.5, 10)
    with pytest.raises(ValueError):
        swap_test_sample(0.5, 0)


def test_swap_frequency_three_quarters():
    c, est = swap_test_sample(0.5, 10**6, seed=7)
    assert abs(c / 10**6 - 0.75) < 0.005
    assert abs(est - 0.5) < 0.01


def test_hadamard_examples():
    assert hadamard_test_sample(1.0, "re", 17, seed=0) == 1.0
    f_re = (hadamard_test_sample(1j, "re", 10**5, seed=3) + 1) / 2
    assert abs(f_re - 0.5) < 0.01
    assert hadamard_test_sample(1j, "im", 50, seed=4) == 1.0
    v = hadamard_test_sample(S, "re", 10**6, seed=5)
    assert abs(v - S) < 0.005
    with pytest.raises(ValueError):
        hadamard_test_sample(1.2, "re", 10)
    with pytest.raises(ValueError):
        hadamard_test_sample(0.5, "abs", 10)


def test_hadamard_recombines_complex_overlap():
    z = 0.3 - 0.4j
    re = hadamard_test_sample(z, "re", INFINITE_SHOTS)
    im = hadamard_test_sample(z, "im", INFINITE_SHOTS)
    assert complex(re, im) == z


def test_sampling_is_seeded():
    assert swap_test_sample(0.4, 1000, seed=9) == swap_test_sample(0.4, 1000, seed=9)
    a = estimate_gram(helstrom(), shots=1000, seed=3)
    b = estimate_gram(helstrom(), shots=1000, seed=3)
    assert np.array_equal(a.raw, b.raw)


def test_plan_shots_values():
    assert plan_shots(0.1, 0.05).shots_per_pair == 185
    assert plan_shots(0.01, 0.05).shots_per_pair == 18445
    assert math.ceil(50 * math.log(40)) == 185
    with pytest.raises(ValueError):
        plan_shots(0, 0.05)


@settings(max_examples=30, deadline=None)
@given(eps=st.floats(0.005, 0.5), delta=st.floats(1e-4, 0.5))
def test_halving_epsilon_quadruples_shots(eps, delta):
    a = plan_shots(eps, delta).shots_per_pair
    b = plan_shots(eps / 2, delta).shots_per_pair
    assert 4 * a - 4 <= b <= 4 * a


def test_shot_plan_from_shots():
    p = ShotPlan.from_shots(185)
    assert p.epsilon <= 0.1 + 1e-12
    assert ShotPlan.from_shots(INFINITE_SHOTS).infinite
    assert ShotPlan.from_shots(INFINITE_SHOTS).to_dict()["shots_per_pair"] == "inf"


def test_psd_project_examples():
    G = gram_from_ensemble(helstrom()).entries
    assert np.abs(psd_project(G).entries - G).max() < 1e-12
    r = psd_project([[1, 1.1], [1.1, 1]]).entries
    assert abs(r[0, 1]) <= 1 + 1e-12
    assert np.allclose(r, np.ones((2, 2)))
    with pytest.raises(DegenerateGramError):
        psd_project(np.diag([1.0, -1.0]))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10**6), n=st.integers(2, 6), t=st.floats(0.01, 0.3))
def test_repair_error_within_twice_the_noise(seed, n, t):
    rng = np.random.default_rng(seed)
    G = np.asarray(gram_from_ensemble([random_state(3, rng, real=True) for _ in range(n)]).entries)
    u = rng.standard_normal(n)
    E = t * np.outer(u, u) / (u @ u)
    np.fill_diagonal(E, 0.0)
    R = psd_project(G + E).entries
    assert np.linalg.norm(R - G) <= 2 * np.linalg.norm(E) + 1e-12


def test_infinite_shots_are_exact():
    e = helstrom()
    est = estimate_gram(e, shots=INFINITE_SHOTS)
    G = gram_from_ensemble(e).entries
    assert np.array_equal(est.raw, G)
    assert np.array_equal(est.repaired.entries, est.raw)
    assert est.correction == 0.0 and est.clip_norm == 0.0


def test_diagonal_is_never_sampled():
    e = StateEnsemble.uniform([PureState([1, 0]), PureState([0, 1])])
    for mode, promise in (("hadamard_full", False), ("swap_nonneg", True)):
        est = estimate_gram(e, mode=mode, shots=50, seed=1, promise=promise)
        assert np.all(np.diag(est.raw) == 1.0)
        assert np.all(np.diag(est.repaired.entries) == 1.0)


def test_swap_mode_needs_promise():
    with pytest.raises(PromiseError):
        estimate_gram(helstrom(), mode="swap_nonneg", shots=100)
    bad = StateEnsemble.uniform([PureState([1, 0]), PureState([-S, S])])
    with pytest.warns(UserWarning):
        est = estimate_gram(bad, mode="swap_nonneg", shots=100, promise=True)
    assert est.notes


def test_helstrom_end_to_end_at_one_million_shots():
    r = build_reward("min_error", 2)
    for seed in range(5):
        est = estimate_gram(helstrom(), shots=10**6, seed=seed)
        inst = DiscriminationInstance(est.repaired, [0.5, 0.5], r)
        assert abs(solve_reduced_primal(inst).value - HELSTROM) <= 0.02


def test_error_shrinks_along_a_shot_ladder():
    G = gram_from_ensemble(helstrom()).entries
    errs = []
    for shots in (10**2, 10**4, 10**6):
        e = [np.abs(estimate_gram(helstrom(), shots=shots, seed=s).raw - G).max() for s in range(10)]
        errs.append(np.mean(e))
    assert errs[0] > errs[1] > errs[2]


def test_per_entry_std_matches_spread():
    shots = 2000
    vals = [estimate_gram(helstrom(), shots=shots, seed=s) for s in range(300)]
    spread = np.std([v.raw[0, 1].real for v in vals])
    # std entry combines real and imaginary parts
    re_sd = math.sqrt((1 - 0.5) / shots)
    assert abs(spread - re_sd) < 0.2 * re_sd
    assert vals[0].per_entry_std[0, 1] > 0


def test_estimated_gram_serializes():
    est = estimate_gram(helstrom(), shots=100, seed=2)
    d = json.loads(est.dumps())
    assert d["size"] == 2 and d["plan"]["shots_per_pair"] == 100
    assert d["mode"] == "hadamard_full"


def test_overlap_table_estimate():
    alph = theta_alphabet(math.pi / 4, 2)
    t = estimate_overlap_table(alph, shots=10**5, seed=0)
    assert t.values.shape == (3, 3)
    assert abs(t.values[0, 1].real - S) < 0.02
    exact = estimate_overlap_table(alph, shots=INFINITE_SHOTS)
    assert np.allclose(exact.values[0, 2], 0, atol=1e-15)


def test_gram_input_accepted():
    est = estimate_gram(GramMatrix(np.eye(3)), shots=10, seed=0)
    assert est.raw.shape == (3, 3)
