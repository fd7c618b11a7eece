"""Shared fixtures: small reference chains with hand-computable statistics."""

import numpy as np
import pytest

import cltlab as cl

# Two-state chain with transition matrix [[0.9, 0.1], [0.2, 0.8]].
# Stationary law is (2/3, 1/3), second eigenvalue 0.7.  The observable
# f = (1/3, -2/3) is mean zero with E(f^2) = 2/9 and autocovariance
# gamma_j = (2/9) * 0.7^j, so the long-run variance is
#   -gamma_0 + 2 * sum_j gamma_j = -2/9 + (4/9)/0.3 = 34/27.
TWO_STATE_P = [[0.9, 0.1], [0.2, 0.8]]
SIGMA2_TWO_STATE = 34.0 / 27.0
GAMMA0_TWO_STATE = 2.0 / 9.0
DECAY_TWO_STATE = 0.7


@pytest.fixture
def two_state():
    return cl.build_shift(TWO_STATE_P)


@pytest.fixture
def two_state_f():
    return cl.parse_observable(
        "offset = 0\nlength = 1\nvalues = 0.3333333333333333, -0.6666666666666666",
        2,
    )


@pytest.fixture
def two_state_two_sided(two_state):
    return cl.with_sidedness(two_state, "two_sided")


@pytest.fixture
def bernoulli():
    return cl.build_shift([[0.5, 0.5], [0.5, 0.5]])


@pytest.fixture
def bernoulli_two_sided(bernoulli):
    return cl.with_sidedness(bernoulli, "two_sided")


@pytest.fixture
def period_two():
    return cl.build_shift([[0.0, 1.0], [1.0, 0.0]])


@pytest.fixture
def period_two_f():
    # centered indicator of symbol 0 on the deterministic two-cycle
    return cl.parse_observable("offset = 0\nlength = 1\nvalues = 0.5, -0.5", 2)


@pytest.fixture
def coboundary_f():
    # f(w0, w1) = r(w0) - r(w1) with r the +-1 relabeling; Birkhoff sums
    # telescope, so the scaled sums collapse to zero
    return cl.parse_observable("offset = 0\nlength = 2\nvalues = 0, 2, -2, 0", 2)


def random_stochastic(rng, m):
    """Strictly positive stochastic matrix, rows normalized."""
    P = rng.uniform(0.05, 1.0, size=(m, m))
    return P / P.sum(axis=1, keepdims=True)


def random_observable(rng, m, max_length=3, offsets=(0,)):
    length = int(rng.integers(1, max_length + 1))
    offset = int(rng.choice(offsets))
    values = rng.normal(size=m**length)
    return cl.CylinderFunction(offset, length, values, m)


def brute_force_expectation(model, f):
    """E(f) summed word by word, as a cross-check for the einsum path."""
    w = cl.word_weights(model, f.length)
    return float(np.ravel(w) @ f.values)
