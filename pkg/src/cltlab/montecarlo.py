"""Simulation side of the package: normalized Birkhoff sums against N(0, sigma2).

The operator machinery predicts a limit law for S_n/sqrt(n); this module
draws stationary orbits, forms the normalized sums, and compares them with
the prediction through the KS distance, sample moments, an empirical
characteristic-function diagnostic, and the decay of the coboundary
remainder (U^n g - g + f)/sqrt(n).

Orbits are generated from counter-based RNG streams keyed by
(seed, domain, orbit index), so results are bit-identical regardless of
chunking or thread count.  Reductions rely on numpy's pairwise summation,
which keeps them order-stable at the 1e-12 level.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr
from scipy.stats import kurtosis as _excess_kurtosis

from .backward import decompose, detect_coboundary
from .cylinder import CylinderFunction, shift_window, sup_norm
from .errors import (
    DegenerateSigma,
    Diverging,
    InvalidIndex,
    NonSummable,
    SidednessMismatch,
    WindowMismatch,
)
from .shift import ONE_SIDED, TransitionModel, _cumulative, orbit_stream, sample_orbit, with_sidedness

CONSISTENT = "consistent"
INCONSISTENT = "inconsistent"
DEGENERATE = "degenerate"

DEGENERACY_TOL = 1e-8
KS_MIN_SAMPLES = 500
DEFAULT_T_GRID = (-2.0, -1.0, -0.5, 0.5, 1.0, 2.0)

_CHUNK = 256
_SIM_DOMAIN = 1
_REMAINDER_DOMAIN = 2


def _require_same_alphabet(model: TransitionModel, f: CylinderFunction):
    if f.alphabet_size != model.alphabet_size:
        raise WindowMismatch(
            f"observable over {f.alphabet_size} symbols, model over {model.alphabet_size}"
        )


def _uniform_block(seed: int, domain: int, lo: int, hi: int, w: int) -> np.ndarray:
    """Uniforms for orbits lo..hi-1, one independent stream per orbit."""
    out = np.empty((hi - lo, w))
    for b in range(hi - lo):
        out[b] = orbit_stream(seed, (domain, lo + b)).random(w)
    return out


def _advance(model: TransitionModel, uniforms: np.ndarray) -> np.ndarray:
    """Map a (orbits, steps) uniform block to stationary symbol paths."""
    cum_pi, cum_rows = _cumulative(model)
    m = model.alphabet_size
    n_orbits, w = uniforms.shape
    symbols = np.empty((n_orbits, w), dtype=np.int64)
    symbols[:, 0] = np.minimum((uniforms[:, 0, None] >= cum_pi[None, :]).sum(axis=1), m - 1)
    for t in range(1, w):
        rows = cum_rows[symbols[:, t - 1]]
        symbols[:, t] = np.minimum((uniforms[:, t, None] >= rows).sum(axis=1), m - 1)
    return symbols


def _window_codes(symbols: np.ndarray, f: CylinderFunction, first_col: int, count: int) -> np.ndarray:
    """Table indices of f evaluated at ``count`` consecutive shifts.

    Column ``first_col`` of ``symbols`` is the first coordinate of f's window
    at shift 0; the Horner recursion below packs each length-L window into a
    lexicographic table index.
    """
    codes = np.zeros((symbols.shape[0], count), dtype=np.int64)
    for j in range(f.length):
        codes *= f.alphabet_size
        codes += symbols[:, first_col + j : first_col + j + count]
    return codes


def _chunk_sums(model, f, n, seed, lo, hi):
    w = n + f.length - 1
    uniforms = _uniform_block(seed, _SIM_DOMAIN, lo, hi, w)
    symbols = _advance(model, uniforms)
    values = f.values[_window_codes(symbols, f, 0, n)]
    return values.sum(axis=1) / math.sqrt(n)


def simulate_birkhoff(
    model: TransitionModel,
    f: CylinderFunction,
    n: int,
    m: int,
    seed: int,
    workers: int = 1,
) -> np.ndarray:
    """m independent draws of S_n/sqrt(n) for f along stationary orbits.

    Orbit j uses its own RNG stream derived from (seed, j), so the result is
    a pure function of (model, f, n, m, seed); ``workers`` only changes wall
    time.  Two-sided windows are handled by reading the same stationary
    segment with a shifted origin.
    """
    if n < 1:
        raise InvalidIndex("need at least one Birkhoff step")
    if m < 1:
        raise InvalidIndex("need at least one orbit")
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    _require_same_alphabet(model, f)
    if f.length == 0:
        return np.full(m, float(f.values[0]) * n / math.sqrt(n))

    out = np.empty(m)
    spans = [(lo, min(lo + _CHUNK, m)) for lo in range(0, m, _CHUNK)]

    def fill(span):
        lo, hi = span
        out[lo:hi] = _chunk_sums(model, f, n, seed, lo, hi)

    if workers == 1 or len(spans) == 1:
        for span in spans:
            fill(span)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(fill, spans))
    return out


def orbit_average(model: TransitionModel, f: CylinderFunction, n: int, seed: int) -> float:
    """Birkhoff average of f over one stationary orbit of n steps."""
    if n < 1:
        raise InvalidIndex("need at least one Birkhoff step")
    _require_same_alphabet(model, f)
    if f.length == 0:
        return float(f.values[0])
    orbit = sample_orbit(model, n + f.length - 1, seed)
    symbols = orbit.symbols[None, :]
    values = f.values[_window_codes(symbols, f, 0, n)]
    return float(values.mean())


def ks_statistic(samples, sigma2: float) -> dict:
    """Sup-distance between the empirical CDF and the N(0, sigma2) CDF.

    The 5% threshold uses the asymptotic constant 1.358/sqrt(m), which is
    why fewer than 500 samples are rejected outright.
    """
    if sigma2 < DEGENERACY_TOL:
        raise DegenerateSigma(
            f"sigma2 = {sigma2:.3e} is below {DEGENERACY_TOL}; "
            "use the coboundary/remainder checks instead of a KS test"
        )
    arr = np.sort(np.asarray(samples, dtype=np.float64).ravel())
    m = arr.size
    if m < KS_MIN_SAMPLES:
        raise ValueError(f"KS threshold constant needs m >= {KS_MIN_SAMPLES}, got {m}")
    grid = np.arange(m, dtype=np.float64)
    cdf = ndtr(arr / math.sqrt(sigma2))
    distance = max(np.max((grid + 1.0) / m - cdf), np.max(cdf - grid / m))
    return {"distance": float(distance), "threshold_5pct": 1.358 / math.sqrt(m)}


def cf_diagnostic(samples, sigma2: float, t_grid=None) -> tuple:
    """Deviation |psi(t) - 1| of the rescaled empirical characteristic function.

    psi(t) = exp(sigma2 t^2 / 2) * mean(exp(i t sample)); it tends to 1
    exactly when the samples are asymptotically N(0, sigma2).  Note the
    exp factor amplifies the O(1/sqrt(m)) empirical error at large |t|.
    """
    if sigma2 < 0:
        raise ValueError(f"sigma2 must be non-negative, got {sigma2}")
    arr = np.asarray(samples, dtype=np.float64).ravel()
    if arr.size == 0:
        raise ValueError("need at least one sample")
    if t_grid is None:
        t_grid = DEFAULT_T_GRID
    out = []
    for t in t_grid:
        t = float(t)
        ecf = np.exp(1j * t * arr).mean()
        psi = math.exp(0.5 * sigma2 * t * t) * ecf
        out.append((t, float(abs(psi - 1.0))))
    return tuple(out)


def _values_at(f: CylinderFunction, symbols: np.ndarray, t: int) -> np.ndarray:
    """Evaluate f at shift t along each row of a symbol block."""
    if f.length == 0:
        return np.full(symbols.shape[0], float(f.values[0]))
    codes = _window_codes(symbols, f, t + f.offset, 1)
    return f.values[codes[:, 0]]


def remainder_probability(
    model: TransitionModel,
    f: CylinderFunction,
    g: CylinderFunction,
    n_grid,
    eps: float,
    m: int,
    seed: int,
) -> np.ndarray:
    """P(|g(T^n w) - g(w) + f(w)| > eps * sqrt(n)) estimated by Monte Carlo.

    This is the telescoping remainder left after subtracting the martingale
    part from a Birkhoff sum; it must die off in probability for the CLT to
    transfer.  Each grid point gets its own batch of m orbits.
    """
    if model.sidedness != ONE_SIDED:
        raise SidednessMismatch("remainder term is defined on one_sided models")
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    if m < 1:
        raise InvalidIndex("need at least one orbit")
    _require_same_alphabet(model, f)
    _require_same_alphabet(model, g)
    if f.offset < 0 or g.offset < 0:
        raise InvalidIndex("one_sided observables must use non-negative windows")

    n_grid = [int(n) for n in n_grid]
    out = np.empty(len(n_grid))
    for i, n in enumerate(n_grid):
        if n < 1:
            raise InvalidIndex("need at least one Birkhoff step")
        w = max(f.end, g.end, n + g.end, 1)
        threshold = eps * math.sqrt(n)
        exceed = 0
        for lo in range(0, m, _CHUNK):
            hi = min(lo + _CHUNK, m)
            uniforms = np.empty((hi - lo, w))
            for b in range(hi - lo):
                stream = orbit_stream(seed, (_REMAINDER_DOMAIN, i * m + lo + b))
                uniforms[b] = stream.random(w)
            symbols = _advance(model, uniforms)
            numer = _values_at(g, symbols, n) - _values_at(g, symbols, 0) + _values_at(f, symbols, 0)
            exceed += int(np.count_nonzero(np.abs(numer) > threshold))
        out[i] = exceed / m
    return out


def moment_summary(samples) -> dict:
    """Unbiased mean/variance and excess kurtosis of the samples."""
    arr = np.asarray(samples, dtype=np.float64).ravel()
    if arr.size < 4:
        raise ValueError(f"moment summary needs at least 4 samples, got {arr.size}")
    return {
        "mean": float(arr.mean()),
        "variance": float(arr.var(ddof=1)),
        "excess_kurtosis": float(_excess_kurtosis(arr, fisher=True, bias=False)),
    }


@dataclass(frozen=True)
class CltReport:
    """Outcome of one simulate-and-test cycle at a fixed (n, m, seed)."""

    n: int
    samples: int
    sigma2_theory: float
    sample_mean: float
    sample_variance: float
    excess_kurtosis: float
    ks_distance: float | None
    ks_threshold: float | None
    psi_deviation: tuple
    remainder_prob: float | None
    verdict: str
    degenerate_bound: float | None = None
    degenerate_bound_ok: bool | None = None

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "samples": self.samples,
            "sigma2_theory": self.sigma2_theory,
            "sample_mean": self.sample_mean,
            "sample_variance": self.sample_variance,
            "excess_kurtosis": self.excess_kurtosis,
            "ks_distance": self.ks_distance,
            "ks_threshold": self.ks_threshold,
            "psi_deviation": [[t, dev] for t, dev in self.psi_deviation],
            "remainder_prob": self.remainder_prob,
            "verdict": self.verdict,
            "degenerate_bound": self.degenerate_bound,
            "degenerate_bound_ok": self.degenerate_bound_ok,
        }


def verdict(
    model: TransitionModel,
    f: CylinderFunction,
    sigma2_theory: float,
    n: int,
    m: int,
    seed: int,
    tolerances=None,
    workers: int = 1,
) -> CltReport:
    """Simulate m normalized sums and judge them against sigma2_theory.

    Consistent means the KS distance clears its 5% threshold and the sample
    variance sits within ``variance_factor * sigma2 * sqrt(2/m)`` of theory.
    A theory variance below the degeneracy tolerance flips to the coboundary
    regime: no KS test, but the samples must respect the telescoping bound
    (sup|f| + 2 sup|g|)/sqrt(n) built from the recovered witness g.

    The remainder probability is estimated at this report's n with
    ``min(m, 1000)`` orbits and eps from ``tolerances["remainder_eps"]``;
    it is None when no summable decomposition exists.
    """
    tol = {"degeneracy": DEGENERACY_TOL, "variance_factor": 4.0, "remainder_eps": 0.1}
    if tolerances:
        unknown = sorted(set(tolerances) - set(tol))
        if unknown:
            raise ValueError(f"unknown tolerance keys: {unknown}")
        tol.update(tolerances)

    samples = simulate_birkhoff(model, f, n, m, seed, workers=workers)
    moments = moment_summary(samples)
    psi = cf_diagnostic(samples, max(float(sigma2_theory), 0.0))

    one_sided = with_sidedness(model, ONE_SIDED)
    base = shift_window(f, -f.offset) if f.offset < 0 else f
    remainder = None
    try:
        parts = decompose(one_sided, base)
        remainder = float(
            remainder_probability(
                one_sided, base, parts.g, (n,), tol["remainder_eps"], min(m, 1000), seed
            )[0]
        )
    except (NonSummable, Diverging):
        parts = None

    ks_distance = ks_threshold = None
    bound = bound_ok = None
    if sigma2_theory < tol["degeneracy"]:
        label = DEGENERATE
        witness = detect_coboundary(one_sided, base)
        if witness is not None:
            bound = (sup_norm(base) + 2.0 * sup_norm(witness)) / math.sqrt(n)
            bound_ok = bool(np.max(np.abs(samples)) <= bound)
    else:
        ks = ks_statistic(samples, sigma2_theory)
        ks_distance = ks["distance"]
        ks_threshold = ks["threshold_5pct"]
        variance_gap = abs(moments["variance"] - sigma2_theory)
        variance_tol = tol["variance_factor"] * sigma2_theory * math.sqrt(2.0 / m)
        in_law = ks_distance < ks_threshold and variance_gap < variance_tol
        label = CONSISTENT if in_law else INCONSISTENT

    return CltReport(
        n=int(n),
        samples=int(m),
        sigma2_theory=float(sigma2_theory),
        sample_mean=moments["mean"],
        sample_variance=moments["variance"],
        excess_kurtosis=moments["excess_kurtosis"],
        ks_distance=ks_distance,
        ks_threshold=ks_threshold,
        psi_deviation=psi,
        remainder_prob=remainder,
        verdict=label,
        degenerate_bound=bound,
        degenerate_bound_ok=bound_ok,
    )
