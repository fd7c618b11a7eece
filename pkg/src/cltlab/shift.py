"""Stationary Markov shifts over a finite alphabet.

A model couples a row-stochastic transition matrix with its stationary
distribution and a choice of sidedness.  ``one_sided`` means the shift acts on
sequences indexed by the non-negative integers and is non-invertible;
``two_sided`` means bi-infinite sequences and an invertible shift.  Orbit
sampling draws the time-zero symbol from the stationary law, so every model is
a measure-preserving system from the start.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import InvalidIndex, NotStochastic, Reducible

ONE_SIDED = "one_sided"
TWO_SIDED = "two_sided"

_ROW_SUM_TOL = 1e-9
_STATIONARY_TOL = 1e-12
_DIRECT_SOLVE_LIMIT = 64


@dataclass(frozen=True, eq=False)
class TransitionModel:
    """A finite-alphabet stationary Markov shift.

    Attributes
    ----------
    transition : ndarray, shape (m, m)
        Row-stochastic matrix, rows renormalized exactly on ingest.
    stationary : ndarray, shape (m,)
        The unique stationary probability vector.
    reverse : ndarray, shape (m, m)
        Time-reversed transition matrix ``reverse[i, j] = pi[j] P[j, i] / pi[i]``.
        This drives the transfer operator and backward conditioning.
    sidedness : str
        ``"one_sided"`` or ``"two_sided"``.
    irreducible : bool
        Always true for constructed models; kept for report transparency.
    period : int
        gcd of cycle lengths through state 0.  Periodic chains are accepted
        (they are still ergodic) but flagged here.
    """

    transition: np.ndarray
    stationary: np.ndarray
    reverse: np.ndarray
    sidedness: str
    irreducible: bool
    period: int
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def alphabet_size(self) -> int:
        return self.transition.shape[0]


@dataclass(frozen=True, eq=False)
class OrbitSample:
    """A sampled orbit: symbol sequence plus the seed that produced it."""

    symbols: np.ndarray
    seed: int
    start_law: str = "stationary"


def _as_matrix(P) -> np.ndarray:
    P = np.asarray(P, dtype=np.float64)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise NotStochastic(f"transition matrix must be square, got shape {P.shape}")
    if P.shape[0] < 2:
        raise NotStochastic("alphabet size must be at least 2")
    if np.any(P < -1e-12):
        i, j = np.argwhere(P < -1e-12)[0]
        raise NotStochastic(f"negative entry P[{i}][{j}] = {P[i, j]}")
    return np.clip(P, 0.0, None)


def classify(P) -> dict:
    """Classify the transition graph of ``P``.

    Returns a dict with ``irreducible`` (strong connectivity of the
    positive-entry digraph) and ``period`` (gcd of cycle lengths through
    state 0, computed on the strongly connected component of state 0).
    """
    P = _as_matrix(P)
    adj = P > 0.0
    n_comp, labels = connected_components(csr_matrix(adj), directed=True, connection="strong")
    irreducible = n_comp == 1

    # breadth-first levels inside the component of state 0; each edge (u, v)
    # closing back into the tree contributes gcd(level[u] + 1 - level[v])
    comp = labels == labels[0]
    level = {0: 0}
    g = 0
    queue = [0]
    while queue:
        u = queue.pop()
        for v in np.flatnonzero(adj[u]):
            v = int(v)
            if not comp[v]:
                continue
            if v in level:
                g = math.gcd(g, level[u] + 1 - level[v])
            else:
                level[v] = level[u] + 1
                queue.append(v)
    return {"irreducible": irreducible, "period": abs(g) if g != 0 else 1}


def stationary_distribution(P) -> np.ndarray:
    """Solve pi P = pi, sum(pi) = 1 for an irreducible chain.

    Uses a direct linear solve for small alphabets and power iteration above
    64 states.  Raises ``Reducible`` when the chain has no unique stationary
    law.
    """
    P = _as_matrix(P)
    if not classify(P)["irreducible"]:
        raise Reducible("transition graph is not strongly connected")
    m = P.shape[0]
    if m <= _DIRECT_SOLVE_LIMIT:
        A = P.T - np.eye(m)
        A[-1, :] = 1.0
        b = np.zeros(m)
        b[-1] = 1.0
        pi = np.linalg.solve(A, b)
    else:
        pi = np.full(m, 1.0 / m)
        for _ in range(1_000_000):
            nxt = pi @ P
            if np.abs(nxt - pi).max() < 1e-16:
                pi = nxt
                break
            pi = nxt
    pi = np.clip(pi, 0.0, None)
    pi = pi / pi.sum()
    if np.abs(pi @ P - pi).max() > _STATIONARY_TOL:
        raise Reducible("stationary solve did not converge to tolerance")
    return pi


def build_shift(P, sidedness: str = ONE_SIDED) -> TransitionModel:
    """Validate ``P``, renormalize rows, and assemble a ``TransitionModel``.

    Rejects matrices whose rows do not sum to 1 within 1e-9 and reducible
    chains.  Periodic irreducible chains are accepted with ``period > 1``.
    """
    if sidedness not in (ONE_SIDED, TWO_SIDED):
        raise InvalidIndex(f"sidedness must be one_sided or two_sided, got {sidedness!r}")
    P = _as_matrix(P)
    sums = P.sum(axis=1)
    bad = np.flatnonzero(np.abs(sums - 1.0) > _ROW_SUM_TOL)
    if bad.size:
        raise NotStochastic(f"row {bad[0]} sums to {sums[bad[0]]:.12g}, expected 1")
    P = P / sums[:, None]

    info = classify(P)
    if not info["irreducible"]:
        raise Reducible("transition graph is not strongly connected")
    pi = stationary_distribution(P)
    # reverse-chain weights; rows sum to 1 because pi is stationary
    R = (pi[None, :] * P.T) / pi[:, None]

    for arr in (P, pi, R):
        arr.setflags(write=False)
    return TransitionModel(
        transition=P,
        stationary=pi,
        reverse=R,
        sidedness=sidedness,
        irreducible=True,
        period=info["period"],
    )


def with_sidedness(model: TransitionModel, sidedness: str) -> TransitionModel:
    """The same chain viewed with the other sidedness (shares all arrays)."""
    if sidedness not in (ONE_SIDED, TWO_SIDED):
        raise InvalidIndex(f"sidedness must be one_sided or two_sided, got {sidedness!r}")
    if sidedness == model.sidedness:
        return model
    return TransitionModel(
        transition=model.transition,
        stationary=model.stationary,
        reverse=model.reverse,
        sidedness=sidedness,
        irreducible=model.irreducible,
        period=model.period,
    )


def orbit_stream(seed: int, spawn_key: tuple = ()) -> np.random.Generator:
    """Counter-based RNG stream for ``(seed, spawn_key)``.

    Philox generators keyed by a spawn path are reproducible independent of
    scheduling, which keeps parallel orbit batches deterministic.
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in spawn_key))
    return np.random.Generator(np.random.Philox(ss))


def _cumulative(model: TransitionModel):
    cache = model._cache
    if "cum" not in cache:
        cache["cum"] = (
            np.cumsum(model.stationary),
            np.cumsum(model.transition, axis=1),
        )
    return cache["cum"]


def sample_orbit(model: TransitionModel, length: int, seed: int) -> OrbitSample:
    """Sample one stationary orbit of ``length`` symbols.

    Pure function of ``(model, length, seed)``: regenerating with the same
    seed yields the identical symbol array.
    """
    if length < 1:
        raise InvalidIndex("orbit length must be positive")
    m = model.alphabet_size
    cum_pi, cum_P = _cumulative(model)
    u = orbit_stream(seed).random(length)

    start = min(int(np.searchsorted(cum_pi, u[0], side="right")), m - 1)
    if length == 1:
        return OrbitSample(symbols=np.array([start], dtype=np.int64), seed=int(seed))

    # precomputed next-state lookup per step, then a cheap sequential scan
    steps = np.minimum((u[1:, None, None] >= cum_P[None, :, :]).sum(axis=2), m - 1)
    table = steps.tolist()
    out = [start]
    s = start
    for row in table:
        s = row[s]
        out.append(s)
    symbols = np.asarray(out, dtype=np.int64)
    symbols.setflags(write=False)
    return OrbitSample(symbols=symbols, seed=int(seed))
