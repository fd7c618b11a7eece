"""Exact algebra of cylinder functions on a Markov shift.

A cylinder function depends on finitely many coordinates ``[offset,
offset + length)`` through a dense table of ``m**length`` values stored in
lexicographic word order (first coordinate most significant).  All operators
here are exact up to float arithmetic: expectations, inner products, the
composition operator ``U`` (koopman), its adjoint ``U*`` (transfer on
one-sided models, inverse composition on two-sided ones), and conditional
expectations with respect to the coordinate filtrations

    one_sided:  F_k = sigma(coordinates >= k), decreasing in k, k >= 0
    two_sided:  F_k = sigma(coordinates <= k), increasing in k, any k

so that in both cases F_k is the pullback of F_0 under the k-th shift power.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CapExceeded, InvalidIndex, SidednessMismatch, WindowMismatch
from .shift import ONE_SIDED, TWO_SIDED, TransitionModel

# cap on dense table size when windows grow (2**20 entries, i.e. length 20
# for a binary alphabet); raise it module-wide if a study truly needs more
MAX_TABLE_ENTRIES = 2**20


@dataclass(frozen=True, eq=False)
class CylinderFunction:
    """A function of coordinates ``[offset, offset + length)``.

    ``values`` has ``alphabet_size ** length`` entries in lexicographic word
    order.  Constants are canonicalized to ``length == 0`` with offset 0.
    """

    offset: int
    length: int
    values: np.ndarray
    alphabet_size: int

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64).reshape(-1)
        expected = self.alphabet_size**self.length
        if vals.size != expected:
            raise WindowMismatch(
                f"table has {vals.size} entries, window of length {self.length} "
                f"over {self.alphabet_size} symbols needs {expected}"
            )
        vals = vals.copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def end(self) -> int:
        return self.offset + self.length

    def table(self) -> np.ndarray:
        """Values reshaped to one axis per coordinate."""
        return self.values.reshape((self.alphabet_size,) * self.length)

    # arithmetic sugar; the general entry point is combine()
    def __add__(self, other):
        return combine(self, _coerce(other, self), "add")

    __radd__ = __add__

    def __sub__(self, other):
        return combine(self, _coerce(other, self), "sub")

    def __rsub__(self, other):
        return combine(_coerce(other, self), self, "sub")

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return scale(self, float(other))
        return combine(self, other, "mul")

    __rmul__ = __mul__

    def __neg__(self):
        return scale(self, -1.0)


def _coerce(x, like: CylinderFunction) -> CylinderFunction:
    if isinstance(x, CylinderFunction):
        return x
    return constant(float(x), like.alphabet_size)


def constant(value: float, alphabet_size: int) -> CylinderFunction:
    return CylinderFunction(0, 0, np.array([float(value)]), alphabet_size)


def indicator(symbol: int, alphabet_size: int, offset: int = 0) -> CylinderFunction:
    """Indicator of ``symbol`` at a single coordinate."""
    if not 0 <= symbol < alphabet_size:
        raise WindowMismatch(f"symbol {symbol} outside alphabet of size {alphabet_size}")
    vals = np.zeros(alphabet_size)
    vals[symbol] = 1.0
    return CylinderFunction(offset, 1, vals, alphabet_size)


def rademacher(alphabet_size: int = 2, offset: int = 0) -> CylinderFunction:
    """+1 on symbol 0, -1 on symbol 1 (and 0 elsewhere for larger alphabets)."""
    vals = np.zeros(alphabet_size)
    vals[0] = 1.0
    vals[1] = -1.0
    return CylinderFunction(offset, 1, vals, alphabet_size)


def _canonicalize(offset: int, table: np.ndarray, m: int) -> CylinderFunction:
    # trim coordinates the table provably does not depend on (exact equality,
    # so canonicalization never changes values)
    while table.ndim > 0 and table.shape[0] > 0:
        if table.ndim >= 1 and np.all(table == table[(0,) + (slice(None),) * (table.ndim - 1)]):
            table = table[0]
            offset += 1
            continue
        break
    while table.ndim > 0:
        if np.all(table == table[..., :1]):
            table = table[..., 0]
            continue
        break
    if table.ndim == 0:
        return CylinderFunction(0, 0, np.array([float(table)]), m)
    return CylinderFunction(offset, table.ndim, table.reshape(-1), m)


def lift(f: CylinderFunction, offset: int, end: int) -> CylinderFunction:
    """Re-express ``f`` on the larger window ``[offset, end)`` without change."""
    if f.length and (offset > f.offset or end < f.end):
        raise WindowMismatch(
            f"cannot lift window [{f.offset}, {f.end}) into [{offset}, {end})"
        )
    m = f.alphabet_size
    new_len = end - offset
    if new_len < 0:
        raise WindowMismatch("lift target window is empty")
    if m**new_len > MAX_TABLE_ENTRIES:
        raise CapExceeded(
            f"window of length {new_len} over {m} symbols exceeds the table cap"
        )
    if f.length == 0:
        tb = np.full((m,) * new_len, f.values[0])
    else:
        left = f.offset - offset
        right = end - f.end
        shape = (1,) * left + (m,) * f.length + (1,) * right
        tb = np.broadcast_to(f.table().reshape(shape), (m,) * new_len)
    return CylinderFunction(offset, new_len, np.ascontiguousarray(tb).reshape(-1), m)


def combine(
    f: CylinderFunction,
    h: CylinderFunction,
    op: str,
    alpha: float = 1.0,
    beta: float = 1.0,
) -> CylinderFunction:
    """Pointwise ``(alpha * f) op (beta * h)`` on the union window."""
    if f.alphabet_size != h.alphabet_size:
        raise WindowMismatch("operands live over different alphabets")
    m = f.alphabet_size
    windows = [(g.offset, g.end) for g in (f, h) if g.length > 0]
    if not windows:
        lo, hi = 0, 0
    else:
        lo = min(w[0] for w in windows)
        hi = max(w[1] for w in windows)
    F = lift(f, lo, hi).table() * alpha
    H = lift(h, lo, hi).table() * beta
    if op == "add":
        out = F + H
    elif op == "sub":
        out = F - H
    elif op == "mul":
        out = F * H
    else:
        raise ValueError(f"unknown op {op!r}")
    return _canonicalize(lo, out, m)


def scale(f: CylinderFunction, c: float) -> CylinderFunction:
    return _canonicalize(f.offset, f.table() * c, f.alphabet_size)


def shift_window(f: CylinderFunction, delta: int) -> CylinderFunction:
    """Translate the window by ``delta`` (same table).  ``koopman`` is +1."""
    if f.length == 0:
        return f
    return CylinderFunction(f.offset + delta, f.length, f.values, f.alphabet_size)


def koopman(f: CylinderFunction) -> CylinderFunction:
    """Composition with the shift: (Uf)(w) = f(Tw)."""
    return shift_window(f, +1)


def koopman_power(f: CylinderFunction, n: int) -> CylinderFunction:
    return shift_window(f, n)


def koopman_inverse(model: TransitionModel, f: CylinderFunction) -> CylinderFunction:
    """(U^-1 f)(w) = f(T^-1 w); only invertible (two-sided) shifts have it."""
    if model.sidedness != TWO_SIDED:
        raise SidednessMismatch("koopman_inverse needs a two_sided model")
    return shift_window(f, -1)


def evaluate(f: CylinderFunction, window) -> float:
    """Value of ``f`` on a word covering exactly its window."""
    word = np.asarray(window, dtype=np.int64).reshape(-1)
    if f.length == 0:
        return float(f.values[0])
    if word.size != f.length:
        raise WindowMismatch(f"word of length {word.size} for window of length {f.length}")
    if np.any(word < 0) or np.any(word >= f.alphabet_size):
        raise WindowMismatch("word contains symbols outside the alphabet")
    idx = 0
    for s in word:
        idx = idx * f.alphabet_size + int(s)
    return float(f.values[idx])


def _require_nonnegative_window(model: TransitionModel, f: CylinderFunction):
    if model.sidedness == ONE_SIDED and f.length and f.offset < 0:
        raise InvalidIndex(
            f"window starts at coordinate {f.offset}; one_sided orbits have none below 0"
        )


def word_weights(model: TransitionModel, length: int) -> np.ndarray:
    """Stationary measure of every word of ``length``, shape (m,)*length."""
    cache = model._cache
    key = ("weights", length)
    if key not in cache:
        if length == 0:
            W = np.array(1.0)
        else:
            W = model.stationary
            for _ in range(length - 1):
                W = W[..., :, None] * model.transition
        W.setflags(write=False)
        cache[key] = W
    return cache[key]


def expectation(model: TransitionModel, f: CylinderFunction) -> float:
    """E(f) under the stationary law; independent of the window offset."""
    if f.length == 0:
        return float(f.values[0])
    W = word_weights(model, f.length)
    return float(np.sum(W * f.table()))


def inner_product(model: TransitionModel, f: CylinderFunction, h: CylinderFunction) -> float:
    """L2 inner product E(f * h)."""
    return expectation(model, combine(f, h, "mul"))


def l2_norm(model: TransitionModel, f: CylinderFunction) -> float:
    return float(np.sqrt(max(inner_product(model, f, f), 0.0)))


def sup_norm(f: CylinderFunction) -> float:
    return float(np.abs(f.values).max())


def _mix_lowest(R: np.ndarray, tb: np.ndarray) -> np.ndarray:
    # out[i1, rest] = sum_j R[i1, j] * tb[j, i1, rest]
    m = R.shape[0]
    t3 = tb.reshape(m, m, -1)
    out = np.einsum("ij,jik->ik", R, t3)
    return out.reshape(tb.shape[1:])


def _mix_highest(P: np.ndarray, tb: np.ndarray) -> np.ndarray:
    # out[rest, i] = sum_j P[i, j] * tb[rest, i, j]
    m = P.shape[0]
    t3 = tb.reshape(-1, m, m)
    out = np.einsum("kij,ij->ki", t3, P)
    return out.reshape(tb.shape[:-1])


def transfer(model: TransitionModel, f: CylinderFunction) -> CylinderFunction:
    """Adjoint of U on a one-sided shift.

    (U* f)(w) = sum_j reverse[w0, j] f(j w), averaging over the symbol that
    could have preceded the orbit.  The result lives on ``[0, max(L-1, 1))``.
    """
    if model.sidedness != ONE_SIDED:
        raise SidednessMismatch("transfer needs a one_sided model; use koopman_inverse")
    _require_nonnegative_window(model, f)
    if f.length == 0:
        return f
    g = f if (f.offset == 0 and f.length >= 2) else lift(f, 0, max(f.end, 2))
    out = _mix_lowest(model.reverse, g.table())
    return _canonicalize(0, out, f.alphabet_size)


def conditional(model: TransitionModel, f: CylinderFunction, k: int) -> CylinderFunction:
    """Conditional expectation E(f | F_k) for the model's filtration.

    One-sided: integrates out coordinates below ``k`` using the reverse
    chain (requires ``k >= 0``).  Two-sided: integrates out coordinates above
    ``k`` using forward transitions.  F_k-measurable inputs pass through
    unchanged, and E(conditional(f, k)) == E(f) exactly.
    """
    m = f.alphabet_size
    if model.sidedness == ONE_SIDED:
        if k < 0:
            raise InvalidIndex("one_sided filtrations are indexed by k >= 0")
        _require_nonnegative_window(model, f)
        if f.length == 0 or f.offset >= k:
            return f
        g = f
        while g.length and g.offset < k:
            lifted = lift(g, g.offset, max(g.end, g.offset + 2))
            out = _mix_lowest(model.reverse, lifted.table())
            g = _canonicalize(lifted.offset + 1, out, m)
        return g
    # two-sided: F_k = sigma(coords <= k)
    if f.length == 0 or f.end - 1 <= k:
        return f
    g = f
    while g.length and g.end - 1 > k:
        lifted = lift(g, min(g.offset, g.end - 2), g.end)
        out = _mix_highest(model.transition, lifted.table())
        g = _canonicalize(lifted.offset, out, m)
    return g


def adjoint(model: TransitionModel, f: CylinderFunction) -> CylinderFunction:
    """U* for the model at hand: transfer (one-sided) or U^-1 (two-sided)."""
    if model.sidedness == ONE_SIDED:
        return transfer(model, f)
    return koopman_inverse(model, f)


def project_innovation(model: TransitionModel, h: CylinderFunction, k: int) -> CylinderFunction:
    """Orthogonal projection onto L2(F_{k+1}) minus L2(F_k).

    The image is the new information carried by coordinate ``k + 1`` on a
    two-sided shift: E(h | F_{k+1}) - E(h | F_k).
    """
    if model.sidedness != TWO_SIDED:
        raise SidednessMismatch("innovation subspaces are defined on two_sided models")
    return combine(conditional(model, h, k + 1), conditional(model, h, k), "sub")


# ---------------------------------------------------------------------------
# lag expectations E(h . U^j f), computed through boundary profiles so the
# cost stays O(m^2) per lag instead of growing a union window with j
# ---------------------------------------------------------------------------


def _end_profile(model: TransitionModel, h: CylinderFunction) -> np.ndarray:
    # alpha_i = sum over words w of mu(w) h(w) with last symbol i
    W = word_weights(model, h.length)
    prod = W * h.table()
    return prod.sum(axis=tuple(range(h.length - 1))) if h.length > 1 else prod


def _start_profile(model: TransitionModel, f: CylinderFunction) -> np.ndarray:
    # beta_i = sum over words w starting at i of (mu(w) / pi(i)) f(w)
    W = word_weights(model, f.length)
    cond = W / model.stationary.reshape((-1,) + (1,) * (f.length - 1))
    prod = cond * f.table()
    return prod.sum(axis=tuple(range(1, f.length))) if f.length > 1 else prod


def cross_covariances(
    model: TransitionModel,
    h: CylinderFunction,
    f: CylinderFunction,
    max_lag: int,
) -> np.ndarray:
    """Raw lag expectations ``E(h . U^j f)`` for j = 0..max_lag.

    No centering is applied; subtract ``E(h) E(f)`` for covariances.
    """
    if max_lag < 0:
        raise InvalidIndex("max_lag must be non-negative")
    out = np.empty(max_lag + 1)
    if h.length == 0 or f.length == 0:
        const = expectation(model, h) * expectation(model, f)
        if h.length and f.length == 0:
            const = expectation(model, h) * float(f.values[0])
        elif f.length and h.length == 0:
            const = float(h.values[0]) * expectation(model, f)
        out[:] = const
        return out

    # overlap region: direct products on the (bounded) union window
    j_split = min(max_lag + 1, max(h.end - f.offset, 0))
    for j in range(j_split):
        out[j] = expectation(model, combine(h, koopman_power(f, j), "mul"))

    if j_split <= max_lag:
        alpha = _end_profile(model, h)
        beta = _start_profile(model, f)
        # gap steps between the last h-coordinate and first f-coordinate
        v = alpha.copy()
        gap = f.offset + j_split - (h.end - 1)
        for _ in range(gap):
            v = v @ model.transition
        for j in range(j_split, max_lag + 1):
            out[j] = float(v @ beta)
            v = v @ model.transition
    return out


def autocovariances(model: TransitionModel, f: CylinderFunction, max_lag: int) -> np.ndarray:
    """Raw ``E(f . U^j f)`` for j = 0..max_lag (center externally if needed)."""
    return cross_covariances(model, f, f, max_lag)


# ---------------------------------------------------------------------------
# plain-text serialization, used by the experiment config format
# ---------------------------------------------------------------------------


def format_observable(f: CylinderFunction) -> str:
    vals = ", ".join(repr(float(v)) for v in f.values)
    return f"offset = {f.offset}\nlength = {f.length}\nvalues = {vals}\n"


def parse_observable(text: str, alphabet_size: int) -> CylinderFunction:
    fields = {}
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise WindowMismatch(f"expected key = value, got {line!r}")
        key, _, val = line.partition("=")
        fields[key.strip()] = val.strip()
    try:
        offset = int(fields["offset"])
        length = int(fields["length"])
        values = np.array([float(x) for x in fields["values"].split(",")] if fields["values"] else [])
    except KeyError as exc:
        raise WindowMismatch(f"missing observable field {exc}") from exc
    except ValueError as exc:
        raise WindowMismatch(f"malformed observable field: {exc}") from exc
    return CylinderFunction(offset, length, values, alphabet_size)
