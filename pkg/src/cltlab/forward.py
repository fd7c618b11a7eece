"""Forward martingale approximation on two-sided shifts.

Here the filtration increases, F_k = sigma(coordinates <= k), and the new
information between levels -1 and 0 is the innovation subspace S_-1.  The
martingale approximant of an observable is built from the increments

    x_r = E(U^r f | F_0) - E(U^r f | F_-1),      r in Z,
    Y0  = sum_r x_r,

each of which lies in S_-1 exactly, so Y0 is a stationary martingale
difference for the forward filtration and ``E(Y0^2)`` is a second,
independent route to the long-run variance.  The exact Cesaro identity

    n^-1 E(S_n^2) = sum_{|j| < n} (1 - |j|/n) gamma_j

gives a third, simulation-free profile of the variance growth.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import cylinder as cyl
from .conditions import (
    FAIL,
    INDETERMINATE,
    PASS,
    ConditionEntry,
    ConditionReport,
)
from .cylinder import CylinderFunction
from .errors import NonSummable, SidednessMismatch
from .shift import TWO_SIDED, TransitionModel

DEFAULT_TOL = 1e-12
DEFAULT_R_MAX = 200
_STOP_RUN = 2  # consecutive below-tol increments before a tail is closed


@dataclass(frozen=True)
class ForwardApproximant:
    """Truncated innovation sum Y0 with its variance and diagnostics."""

    y0: CylinderFunction
    sigma2: float
    r_range: tuple[int, int]
    tail_norm: float
    past_projection_norm: float


def _require_two_sided(model: TransitionModel, what: str):
    if model.sidedness != TWO_SIDED:
        raise SidednessMismatch(f"{what} runs on two_sided models")


def increment(model: TransitionModel, f: CylinderFunction, r: int) -> CylinderFunction:
    """Innovation increment ``x_r = E(U^r f | F_0) - E(U^r f | F_-1)``.

    Exactly zero whenever ``U^r f`` is already F_-1-measurable, which kills
    the whole negative tail for observables of the coordinates <= 0.
    """
    _require_two_sided(model, "increment")
    shifted = cyl.koopman_power(f, r)
    if shifted.length and shifted.end - 1 <= -1:
        return cyl.constant(0.0, f.alphabet_size)
    return cyl.project_innovation(model, shifted, -1)


def martingale_approximant(
    model: TransitionModel,
    f: CylinderFunction,
    r_max: int = DEFAULT_R_MAX,
    tol: float = DEFAULT_TOL,
) -> ForwardApproximant:
    """Sum the increments ``x_r`` over both tails until they vanish.

    Each tail is expanded until two consecutive increments fall below ``tol``
    in L2 (after always covering the observable's own window), or raises
    ``NonSummable`` when ``r_max`` is hit with undecayed norms.
    """
    _require_two_sided(model, "martingale_approximant")
    mean = cyl.expectation(model, f)
    if abs(mean) > 1e-10:
        raise ValueError(f"observable must be centered, E(f) = {mean:.3e}")

    y0 = cyl.constant(0.0, f.alphabet_size)
    lo = hi = 0
    tails = []
    for direction in (+1, -1):
        run = 0
        r = 0 if direction > 0 else -1
        must_cover = f.length + 2
        last_norm = 0.0
        while True:
            x = increment(model, f, r)
            norm = cyl.l2_norm(model, x)
            if norm >= tol:
                y0 = cyl.combine(y0, x, "add")
                run = 0
            else:
                run += 1
            last_norm = norm
            covered = abs(r) >= must_cover
            if covered and run >= _STOP_RUN:
                break
            if abs(r) >= r_max:
                raise NonSummable(
                    f"increment norms not below {tol:g} by |r| = {r_max} "
                    f"(last {norm:.3e})"
                )
            r += direction
        tails.append(last_norm)
        if direction > 0:
            hi = r
        else:
            lo = r

    return ForwardApproximant(
        y0=y0,
        sigma2=cyl.inner_product(model, y0, y0),
        r_range=(lo, hi),
        tail_norm=max(tails),
        past_projection_norm=cyl.l2_norm(model, cyl.conditional(model, y0, -1)),
    )


def variance_profile(model: TransitionModel, f: CylinderFunction, n_grid) -> np.ndarray:
    """Exact ``n^-1 E(S_n^2)`` on a grid of horizons via autocovariances."""
    n_grid = [int(n) for n in n_grid]
    if any(n < 1 for n in n_grid):
        raise ValueError("horizons must be positive")
    mean = cyl.expectation(model, f)
    n_top = max(n_grid)
    gammas = cyl.autocovariances(model, f, n_top - 1) - mean * mean
    out = np.empty(len(n_grid))
    for i, n in enumerate(n_grid):
        j = np.arange(1, n)
        out[i] = gammas[0] + 2.0 * np.sum((1.0 - j / n) * gammas[1:n])
    return out


def approximation_defect(
    model: TransitionModel,
    f: CylinderFunction,
    g: CylinderFunction,
    n_grid,
) -> np.ndarray:
    """Normalized defect ``n^-1 E((S_n(f) - S_n(g))^2)`` on a horizon grid.

    Vanishing defect certifies that ``g`` carries the same scaled-sum limit
    as ``f`` (the approximant absorbs all of the variance growth).
    """
    diff = cyl.combine(f, g, "sub")
    return variance_profile(model, diff, n_grid)


def _base_measurable(f: CylinderFunction) -> CylinderFunction:
    """Shift the window left until it sits inside coordinates <= 0.

    Stationarity makes every statistic of Birkhoff sums invariant under a
    common shift, so this is a pure normalization.
    """
    if f.length == 0 or f.end - 1 <= 0:
        return f
    return cyl.koopman_power(f, -(f.end - 1))


def check_forward_clt_conditions(
    model: TransitionModel,
    f: CylinderFunction,
    k_max: int = 80,
    tol: float = 1e-8,
) -> ConditionReport:
    """Hypotheses of the forward-martingale CLT.

    With ``X_j = U^j f`` and ``h_n = E(X_n | F_0)`` the checks are
    (1) for each start ``n`` the sums ``sum_k E(X_k h_n)`` converge (Cauchy
    tails within ``tol``), and (2) the tail suprema decay to zero uniformly
    as the start recedes.  The observable is shifted into the coordinates
    <= 0 first (recorded in the evidence) since the hypotheses read off the
    base algebra.
    """
    _require_two_sided(model, "check_forward_clt_conditions")
    mean = cyl.expectation(model, f)
    if abs(mean) > 1e-10:
        raise ValueError(f"observable must be centered, E(f) = {mean:.3e}")
    f0 = _base_measurable(f)
    shifted_by = f0.offset - f.offset

    # a[k-1, n] = E(U^k f0 . E(U^n f0 | F_0)), k = 1..k_max, n = 0..k_max
    table = np.empty((k_max, k_max + 1))
    for n in range(k_max + 1):
        h_n = cyl.conditional(model, cyl.koopman_power(f0, n), 0)
        if h_n.length == 0 and h_n.values[0] == 0.0:
            table[:, n] = 0.0
            continue
        table[:, n] = cyl.cross_covariances(model, h_n, f0, k_max)[1:]

    # tails T(K, n) = sum_{k >= K} a(k, n)
    rev = np.cumsum(table[::-1, :], axis=0)[::-1, :]
    quarter = max(1, k_max // 4)
    cauchy_tail = np.abs(rev[-quarter:, :]).max()
    term_head = np.abs(table[: max(1, k_max // 5), :]).max()
    term_tail = np.abs(table[-max(1, k_max // 5):, :]).max()

    if cauchy_tail <= tol:
        v1 = PASS
    elif term_tail >= 0.9 * term_head and term_tail >= tol:
        v1 = FAIL
    else:
        v1 = INDETERMINATE
    entries = [
        ConditionEntry(
            "per_start_summability",
            v1,
            {
                "k_max": int(k_max),
                "max_cauchy_tail": float(cauchy_tail),
                "max_term_head": float(term_head),
                "max_term_tail": float(term_tail),
                "window_shift": int(shifted_by),
            },
        )
    ]

    sup_tail = np.abs(rev).max(axis=0)  # M(n) = sup_K |T(K, n)|
    late = sup_tail[-quarter:]
    if np.all(late <= tol):
        v2 = PASS
    elif late.max() >= 0.9 * sup_tail[: max(1, k_max // 5)].max() and late.max() >= tol:
        v2 = FAIL
    else:
        v2 = INDETERMINATE
    entries.append(
        ConditionEntry(
            "uniform_tail_decay",
            v2,
            {
                "sup_tail_first": float(sup_tail[0]),
                "sup_tail_last": float(sup_tail[-1]),
                "sup_tail_max_late": float(late.max()),
            },
        )
    )
    return ConditionReport(tuple(entries))
