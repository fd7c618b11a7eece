"""Martingale decomposition on one-sided shifts via the Poisson equation.

The workhorse operator is ``T0: f -> E(U* f | F_0)``.  Summing its powers
solves ``f = g - T0 g``, and the decomposition

    U f = Y1 + U g - g,   E(Y1 | F_1) = 0

turns Birkhoff sums of ``f`` into a backward-martingale plus a telescoping
remainder.  ``Y1`` is accumulated term by term as

    Y1 = sum_n [ T0^n f - E(T0^n f | F_1) ]

which makes its martingale property exact by construction while the identity
``U f = Y1 + U g - g`` then holds up to the series truncation tail; both
residuals are reported, so they are independent non-trivial diagnostics.

The long-run variance has three exact routes here: ``E(Y1^2)``, the
correlation series ``-E(f^2) + 2 sum_n E(f U^n f)``, and the damped variant
``E(Y1(lam)^2)`` with ``g(lam) = sum_n lam^-n T0^n f``.
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
    decay_verdict,
)
from .cylinder import CylinderFunction
from .errors import Diverging, NonSummable, SidednessMismatch
from .shift import ONE_SIDED, TWO_SIDED, TransitionModel

DEFAULT_TOL = 1e-12
DEFAULT_N_MAX = 10_000
# spans the lam -> 1 limit without adaptive refinement
DEFAULT_LAMBDA_GRID = (2.0, 1.5, 1.25, 1.1, 1.05, 1.01, 1.001)
_CENTER_TOL = 1e-10
_DIVERGENCE_RUN = 10


@dataclass(frozen=True)
class PoissonSolution:
    """Truncated series solution of ``f = g - lam^-1 T0 g``."""

    g: CylinderFunction
    lam: float
    truncation_depth: int
    tail_norm: float
    term_decay_ratio: float
    converged: bool


@dataclass(frozen=True)
class Decomposition:
    """Martingale-plus-coboundary split of ``U f``."""

    g: CylinderFunction
    y1: CylinderFunction
    residual_norm: float
    sigma2_mdiff: float
    mdiff_conditional_norm: float
    tail_norm: float


@dataclass(frozen=True)
class SeriesVariance:
    """Correlation-series route to the long-run variance."""

    value: float
    abs_bound: float
    terms: np.ndarray
    clamped: bool


def _require_one_sided(model: TransitionModel, what: str):
    if model.sidedness != ONE_SIDED:
        raise SidednessMismatch(f"{what} runs on one_sided models")


def _require_centered(model: TransitionModel, f: CylinderFunction):
    mean = cyl.expectation(model, f)
    if abs(mean) > _CENTER_TOL:
        raise ValueError(f"observable must be centered, E(f) = {mean:.3e}")


def projected_transfer(model: TransitionModel, f: CylinderFunction) -> CylinderFunction:
    """Apply ``T0``: the transfer operator followed by conditioning on F_0.

    With F_0 the full coordinate algebra of a one-sided shift the
    conditioning is the identity on any admissible window; it is kept for
    faithfulness to the operator's definition.
    """
    _require_one_sided(model, "projected_transfer")
    return cyl.conditional(model, cyl.transfer(model, f), 0)


def _collect_terms(model, f, lam, tol, n_max):
    """Weighted terms ``lam^-n T0^n f`` until the next norm drops below tol.

    Returns (terms, norms, tail_norm, converged).  At ``lam == 1`` a run of
    10 non-decreasing norms aborts with ``Diverging`` (no spectral gap).
    """
    terms: list[CylinderFunction] = []
    norms: list[float] = []
    phi = f
    weight = 1.0
    for _ in range(n_max + 1):
        term = cyl.scale(phi, weight) if weight != 1.0 else phi
        norm = cyl.l2_norm(model, term)
        if norm < tol:
            return terms, norms, norm, True
        terms.append(term)
        norms.append(norm)
        if lam == 1.0 and len(norms) > _DIVERGENCE_RUN:
            recent = norms[-(_DIVERGENCE_RUN + 1):]
            if all(b >= a for a, b in zip(recent, recent[1:])):
                raise Diverging(
                    f"series term norms non-decreasing for {_DIVERGENCE_RUN} steps "
                    f"(last {norm:.3e}); no spectral gap at lam = 1"
                )
        phi = projected_transfer(model, phi)
        weight /= lam
    return terms, norms, norms[-1] if norms else 0.0, False


def _decay_ratio(norms) -> float:
    if len(norms) >= 2 and norms[0] > 0:
        return (norms[-1] / norms[0]) ** (1.0 / (len(norms) - 1))
    return 0.0


def solve_poisson(
    model: TransitionModel,
    f: CylinderFunction,
    lam: float = 1.0,
    tol: float = DEFAULT_TOL,
    n_max: int = DEFAULT_N_MAX,
) -> PoissonSolution:
    """Sum ``g(lam) = sum_n lam^-n T0^n f`` until the next term is below tol.

    Raises ``Diverging`` when the term norms stop decreasing for 10
    consecutive steps at ``lam == 1``.
    """
    _require_one_sided(model, "solve_poisson")
    if lam < 1.0:
        raise ValueError(f"lam must be >= 1, got {lam}")
    _require_centered(model, f)

    terms, norms, tail, converged = _collect_terms(model, f, lam, tol, n_max)
    g = cyl.constant(0.0, f.alphabet_size)
    for term in terms:
        g = cyl.combine(g, term, "add")
    return PoissonSolution(
        g=g,
        lam=lam,
        truncation_depth=len(terms),
        tail_norm=tail,
        term_decay_ratio=_decay_ratio(norms),
        converged=converged,
    )


def decompose(
    model: TransitionModel,
    f: CylinderFunction,
    tol: float = DEFAULT_TOL,
    n_max: int = DEFAULT_N_MAX,
) -> Decomposition:
    """Split ``U f`` into martingale difference plus coboundary increment."""
    _require_one_sided(model, "decompose")
    _require_centered(model, f)

    terms, _, tail, _ = _collect_terms(model, f, 1.0, tol, n_max)
    g = cyl.constant(0.0, f.alphabet_size)
    y1 = cyl.constant(0.0, f.alphabet_size)
    for term in terms:
        g = cyl.combine(g, term, "add")
        y1 = cyl.combine(
            y1, cyl.combine(term, cyl.conditional(model, term, 1), "sub"), "add"
        )

    # Uf - Y1 - (Ug - g): equals the first omitted series term exactly
    residual = cyl.combine(
        cyl.combine(cyl.koopman(f), y1, "sub"),
        cyl.combine(cyl.koopman(g), g, "sub"),
        "sub",
    )
    return Decomposition(
        g=g,
        y1=y1,
        residual_norm=cyl.l2_norm(model, residual),
        sigma2_mdiff=cyl.inner_product(model, y1, y1),
        mdiff_conditional_norm=cyl.l2_norm(model, cyl.conditional(model, y1, 1)),
        tail_norm=tail,
    )


def sigma2_series(
    model: TransitionModel,
    f: CylinderFunction,
    n_max: int = DEFAULT_N_MAX,
    tol: float = DEFAULT_TOL,
) -> SeriesVariance:
    """Long-run variance via ``-E(f^2) + 2 sum_n E(f U^n f)``.

    Lags accumulate until three consecutive terms fall below ``tol`` (three,
    so an incidental zero cannot end the sum early).  Raises ``NonSummable``
    when the budget is exhausted first.  A tiny negative value from float
    cancellation is clamped to zero and flagged.
    """
    _require_centered(model, f)
    size = 64
    while True:
        max_lag = min(size, n_max)
        terms = cyl.autocovariances(model, f, max_lag)
        small = np.abs(terms) < tol
        stop = None
        for n in range(2, terms.size):
            if small[n] and small[n - 1] and small[n - 2]:
                stop = n
                break
        if stop is not None:
            terms = terms[: stop + 1]
            value = -terms[0] + 2.0 * terms.sum()
            abs_bound = -terms[0] + 2.0 * np.abs(terms).sum()
            clamped = value < 0.0
            return SeriesVariance(
                value=0.0 if clamped else float(value),
                abs_bound=float(abs_bound),
                terms=terms,
                clamped=bool(clamped),
            )
        if max_lag >= n_max:
            raise NonSummable(
                f"|E(f U^n f)| not below {tol:g} within {n_max} lags "
                f"(last term {terms[-1]:.3e})"
            )
        size *= 2


def sigma2_lambda(
    model: TransitionModel,
    f: CylinderFunction,
    lam: float,
    tol: float = 1e-14,
    n_max: int = DEFAULT_N_MAX,
) -> float:
    """Damped-route variance ``E((Uf - Ug(lam) + lam^-1 g(lam))^2)``.

    Evaluated directly as a quadratic form; see ``sigma2_lambda_diagnostics``
    for the algebraic expansions computed alongside.
    """
    if lam <= 1.0:
        raise ValueError(f"lam must be > 1, got {lam}")
    sol = solve_poisson(model, f, lam=lam, tol=tol, n_max=n_max)
    y1l = _damped_difference(f, sol.g, lam)
    return cyl.inner_product(model, y1l, y1l)


def _damped_difference(f, g, lam):
    return cyl.combine(
        cyl.combine(cyl.koopman(f), cyl.koopman(g), "sub"),
        cyl.scale(g, 1.0 / lam),
        "add",
    )


def sigma2_lambda_diagnostics(
    model: TransitionModel,
    f: CylinderFunction,
    lam: float,
    tol: float = 1e-14,
    n_max: int = DEFAULT_N_MAX,
) -> dict:
    """Direct damped variance plus alternative closed forms.

    ``expanded_identity`` is the algebraically equivalent expansion
    ``-E(f^2) + 2 E(g f) - (1 - lam^-2) E(g^2)`` and should match the direct
    quadratic form to float precision.  The two ``variant_*`` entries differ
    only in how the damping factor is parenthesized; both closed forms
    circulate in derivations of this quantity and neither is equivalent to
    the direct value, so their discrepancies are reported rather than hidden.
    """
    if lam <= 1.0:
        raise ValueError(f"lam must be > 1, got {lam}")
    sol = solve_poisson(model, f, lam=lam, tol=tol, n_max=n_max)
    g = sol.g
    y1l = _damped_difference(f, g, lam)
    direct = cyl.inner_product(model, y1l, y1l)

    ef2 = cyl.inner_product(model, f, f)
    egf = cyl.inner_product(model, g, f)
    eg2 = cyl.inner_product(model, g, g)
    ug = cyl.koopman(g)
    cross = cyl.inner_product(
        model, ug, cyl.combine(ug, cyl.scale(g, 1.0 / lam), "sub")
    )

    identity = -ef2 + 2.0 * egf - (1.0 - lam**-2) * eg2
    variant_sq = -ef2 + 2.0 * egf - (1.0 - lam**2) * eg2
    variant_paren = -ef2 + 2.0 * cross - (1.0 - lam**-2 * eg2)
    return {
        "lambda": float(lam),
        "direct": float(direct),
        "expanded_identity": float(identity),
        "variant_lambda_squared": float(variant_sq),
        "variant_shifted_paren": float(variant_paren),
        "identity_gap": float(abs(identity - direct)),
        "variant_lambda_squared_gap": float(abs(variant_sq - direct)),
        "variant_shifted_paren_gap": float(abs(variant_paren - direct)),
    }


def detect_coboundary(
    model: TransitionModel,
    f: CylinderFunction,
    tol: float = 1e-8,
):
    """Return a witness ``g`` with ``U f = U g - g`` when the variance is zero.

    Runs the decomposition; if ``E(Y1^2) < tol`` and the witness verifies
    ``||U f - U g + g||_2 < tol``, the degenerate case is certified and ``g``
    is returned.  Otherwise returns ``None``.
    """
    dec = decompose(model, f)
    if dec.sigma2_mdiff >= tol:
        return None
    g = dec.g
    check = cyl.combine(
        cyl.koopman(f),
        cyl.combine(cyl.koopman(g), g, "sub"),
        "sub",
    )
    if cyl.l2_norm(model, check) < tol:
        return g
    return None


def check_backward_clt_conditions(
    model: TransitionModel,
    f: CylinderFunction,
    n_max: int = 400,
    tol: float = 1e-10,
) -> ConditionReport:
    """Hypotheses of the backward-martingale CLT for a one-sided shift.

    Checks (1) centering and F_0-measurability, (2) summability of the
    correlation series |E(f U^n f)|, (3) sup-norm summability of the adjoint
    series E(U*^n f | F_0), whose convergence is what the Poisson solve
    needs.  Verdicts are pass/fail/indeterminate with numeric evidence.
    """
    _require_one_sided(model, "check_backward_clt_conditions")
    mean = cyl.expectation(model, f)
    entries = [
        ConditionEntry(
            "mean_zero",
            PASS if abs(mean) <= tol else FAIL,
            {"mean": float(mean)},
        )
    ]

    cond0 = cyl.conditional(model, f, 0)
    gap0 = cyl.l2_norm(model, cyl.combine(f, cond0, "sub"))
    entries.append(
        ConditionEntry(
            "base_measurable",
            PASS if gap0 <= tol else FAIL,
            {"l2_gap": float(gap0)},
        )
    )

    centered = cyl.combine(f, cyl.constant(mean, f.alphabet_size), "sub")
    corr = np.abs(cyl.autocovariances(model, centered, n_max))
    verdict, evidence = decay_verdict(corr, tol)
    entries.append(ConditionEntry("summable_correlations", verdict, evidence))

    sups = []
    phi = centered
    # keep enough settled terms that decay_verdict's trailing window can
    # certify a pass even when we stop before n_max
    settle = max(3, (n_max + 1) // 10)
    for _ in range(n_max + 1):
        s = cyl.sup_norm(phi)
        sups.append(s)
        if len(sups) >= settle and max(sups[-settle:]) < tol:
            break
        phi = projected_transfer(model, phi)
    verdict, evidence = decay_verdict(np.asarray(sups), tol)
    evidence["sup_sum"] = float(np.sum(sups))
    entries.append(ConditionEntry("adjoint_series_converges", verdict, evidence))
    return ConditionReport(tuple(entries))


def check_past_approximation(
    model: TransitionModel,
    f: CylinderFunction,
    alpha: float = 2.0,
    k_max: int = 12,
) -> ConditionReport:
    """Polynomial-rate approximation of ``f`` from the growing past.

    On a two-sided (invertible) shift the distances
    ``d_k = E|E(f | F_k) - f|`` must decay fast enough that
    ``sup_k k^alpha d_k`` is finite.  Cylinder observables hit ``d_k = 0``
    exactly once F_k covers their window, which this check reports.
    """
    if model.sidedness != TWO_SIDED:
        raise SidednessMismatch("check_past_approximation runs on two_sided models")
    if alpha <= 1.0:
        raise ValueError(f"alpha must exceed 1, got {alpha}")
    k_max = max(k_max, f.end + 1)
    dist = []
    for k in range(1, k_max + 1):
        diff = cyl.combine(cyl.conditional(model, f, k), f, "sub")
        absdiff = cyl.CylinderFunction(
            diff.offset, diff.length, np.abs(diff.values), diff.alphabet_size
        )
        dist.append(cyl.expectation(model, absdiff))
    dist_arr = np.asarray(dist)
    weighted = np.array([(k + 1.0) ** alpha * d for k, d in enumerate(dist)])
    evidence = {
        "distances": [float(d) for d in dist],
        "sup_k_alpha_d": float(weighted.max(initial=0.0)),
        "alpha": float(alpha),
    }
    zero_at = np.flatnonzero(dist_arr <= 1e-14)
    if zero_at.size and np.all(dist_arr[zero_at[0]:] <= 1e-14):
        evidence["first_zero_k"] = int(zero_at[0] + 1)
        verdict = PASS
    else:
        half = weighted[len(weighted) // 2:]
        verdict = FAIL if np.all(np.diff(half) > 0) else INDETERMINATE
    return ConditionReport((ConditionEntry("past_approximation_rate", verdict, evidence),))
