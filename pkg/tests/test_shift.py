"""Transition-model construction, stationary laws, and orbit sampling."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import cltlab as cl
from cltlab import NotStochastic, Reducible

from conftest import TWO_STATE_P, random_stochastic


def test_build_rejects_non_square():
    with pytest.raises(NotStochastic, match="square"):
        cl.build_shift([[0.5, 0.5]])


def test_build_rejects_bad_row_sum():
    with pytest.raises(NotStochastic, match="row 0 sums to 0.9"):
        cl.build_shift([[0.6, 0.3], [0.2, 0.8]])


def test_build_rejects_negative_entry():
    with pytest.raises(NotStochastic, match=r"negative entry P\[0\]\[1\]"):
        cl.build_shift([[1.2, -0.2], [0.2, 0.8]])


def test_build_rejects_reducible():
    with pytest.raises(Reducible, match="strongly connected"):
        cl.build_shift([[1.0, 0.0], [0.0, 1.0]])


def test_two_state_stationary_law(two_state):
    assert np.allclose(two_state.stationary, [2.0 / 3.0, 1.0 / 3.0], atol=1e-14)
    assert two_state.irreducible
    assert two_state.period == 1


def test_reverse_chain_formula(two_state):
    P = np.asarray(TWO_STATE_P)
    pi = two_state.stationary
    expected = pi[None, :] * P.T / pi[:, None]
    assert np.allclose(two_state.reverse, expected, atol=1e-14)
    assert np.allclose(two_state.reverse.sum(axis=1), 1.0, atol=1e-13)


def test_mixing_rate_bound(two_state):
    # the second eigenvalue is 0.7, so the rows of P^n approach the
    # stationary law at rate 0.7^n
    P = np.asarray(TWO_STATE_P)
    Pn = np.linalg.matrix_power(P, 30)
    dev = np.abs(Pn - two_state.stationary[None, :]).max()
    assert dev <= 0.7**30


def test_classify_period_two():
    info = cl.classify([[0.0, 1.0], [1.0, 0.0]])
    assert info == {"irreducible": True, "period": 2}


def test_period_two_builds(period_two):
    assert period_two.period == 2
    assert np.allclose(period_two.stationary, [0.5, 0.5], atol=1e-14)


def test_with_sidedness_round_trip(two_state):
    twin = cl.with_sidedness(two_state, "two_sided")
    assert twin.sidedness == "two_sided"
    back = cl.with_sidedness(twin, "one_sided")
    assert back.sidedness == "one_sided"
    assert np.array_equal(back.transition, two_state.transition)
    with pytest.raises(cl.InvalidIndex):
        cl.with_sidedness(two_state, "sideways")


def test_sample_orbit_deterministic(two_state):
    a = cl.sample_orbit(two_state, 200, seed=11)
    b = cl.sample_orbit(two_state, 200, seed=11)
    assert np.array_equal(a.symbols, b.symbols)
    assert a.symbols.shape == (200,)
    assert a.symbols.dtype.kind == "i"
    c = cl.sample_orbit(two_state, 200, seed=12)
    assert not np.array_equal(a.symbols, c.symbols)


def test_sample_orbit_visits_match_stationary(two_state):
    orbit = cl.sample_orbit(two_state, 50_000, seed=3)
    freq = np.mean(orbit.symbols == 0)
    assert abs(freq - 2.0 / 3.0) < 0.02


def test_orbit_stream_determinism():
    a = cl.orbit_stream(9, (1, 4)).uniform(size=8)
    b = cl.orbit_stream(9, (1, 4)).uniform(size=8)
    assert np.array_equal(a, b)
    c = cl.orbit_stream(9, (1, 5)).uniform(size=8)
    assert not np.array_equal(a, c)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 4))
def test_stationary_law_is_invariant(entropy, m):
    rng = np.random.default_rng(entropy)
    P = random_stochastic(rng, m)
    pi = cl.stationary_distribution(P)
    assert pi.shape == (m,)
    assert np.all(pi > 0)
    assert abs(pi.sum() - 1.0) < 1e-12
    assert np.allclose(pi @ P, pi, atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 4))
def test_reverse_chain_is_stochastic_and_involutive(entropy, m):
    rng = np.random.default_rng(entropy)
    model = cl.build_shift(random_stochastic(rng, m))
    R = model.reverse
    assert np.allclose(R.sum(axis=1), 1.0, atol=1e-12)
    # reversing the reversed chain recovers the original transitions
    again = cl.build_shift(R)
    assert np.allclose(again.reverse, model.transition, atol=1e-10)
    assert np.allclose(again.stationary, model.stationary, atol=1e-10)
