"""End-to-end checks of the package's headline guarantees.

Each test prints one ``[acceptance] criterion k (name): PASS/FAIL`` line on
the live terminal before asserting, so a full run always shows the scoreboard
even where a criterion is not met.
"""

import json
import math
import time

import numpy as np
import pytest

import cltlab as cl
from cltlab.experiment import run_preset

SIGMA2_TWO_STATE = 34.0 / 27.0


def _verdict_line(capsys, number, name, ok, detail=""):
    with capsys.disabled():
        tag = "PASS" if ok else "FAIL"
        suffix = f"  {detail}" if detail else ""
        print(f"[acceptance] criterion {number} ({name}): {tag}{suffix}")


def _preset_model(name):
    cfg = cl.parse_config(cl.get_preset(name).config_text)
    model = cl.build_shift(cfg.matrix)
    return cfg, model, cfg.observable


@pytest.fixture(scope="module")
def two_state_setup():
    return _preset_model("two-state-gap")


def test_criterion_1_operator_identities(capsys):
    start = time.perf_counter()
    rng = np.random.default_rng(1234)
    worst = 0.0
    for trial in range(200):
        m = int(rng.integers(2, 5))
        P = rng.uniform(0.05, 1.0, size=(m, m))
        model = cl.build_shift(P / P.sum(axis=1, keepdims=True))
        two_sided = trial % 2 == 1
        if two_sided:
            model = cl.with_sidedness(model, "two_sided")
            offsets = (-2, -1, 0, 1)
        else:
            offsets = (0, 1)

        def draw():
            length = int(rng.integers(1, 5))
            offset = int(rng.choice(offsets))
            return cl.CylinderFunction(
                offset, length, rng.normal(size=m**length), m
            )

        f, h = draw(), draw()

        back = cl.adjoint(model, cl.koopman(f))
        worst = max(worst, cl.l2_norm(model, cl.combine(back, f, "sub")))

        lhs = cl.inner_product(model, cl.koopman(f), h)
        rhs = cl.inner_product(model, f, cl.adjoint(model, h))
        worst = max(worst, abs(lhs - rhs))

        both = cl.conditional(model, cl.conditional(model, f, 1), 2)
        want = cl.conditional(model, f, 1 if two_sided else 2)
        worst = max(worst, cl.l2_norm(model, cl.combine(both, want, "sub")))

        n = int(rng.integers(1, 3))
        left = cl.conditional(model, cl.koopman_power(f, n), n)
        right = cl.koopman_power(cl.conditional(model, f, 0), n)
        worst = max(worst, cl.l2_norm(model, cl.combine(left, right, "sub")))

        roundtrip = cl.koopman(cl.adjoint(model, f))
        left = cl.conditional(model, roundtrip, 1)
        right = cl.conditional(model, f, 1)
        worst = max(worst, cl.l2_norm(model, cl.combine(left, right, "sub")))

    elapsed = time.perf_counter() - start
    ok = worst <= 1e-12 and elapsed < 5.0
    _verdict_line(
        capsys, 1, "operator-identities", ok,
        f"worst={worst:.2e} time={elapsed:.2f}s",
    )
    assert worst <= 1e-12
    assert elapsed < 5.0


def test_criterion_2_decomposition_identity(capsys, two_state_setup):
    start = time.perf_counter()
    _, model, f = two_state_setup
    dec = cl.decompose(model, f)
    elapsed = time.perf_counter() - start
    ok = (
        dec.residual_norm <= 1e-10
        and dec.mdiff_conditional_norm <= 1e-10
        and elapsed < 1.0
    )
    _verdict_line(
        capsys, 2, "decomposition-identity", ok,
        f"residual={dec.residual_norm:.2e} mdiff-proj={dec.mdiff_conditional_norm:.2e}",
    )
    assert dec.residual_norm <= 1e-10
    assert dec.mdiff_conditional_norm <= 1e-10
    assert elapsed < 1.0


def test_criterion_3_variance_route_agreement(capsys, two_state_setup):
    start = time.perf_counter()
    _, model, f = two_state_setup
    series = cl.sigma2_series(model, f).value
    mdiff = cl.decompose(model, f).sigma2_mdiff
    forward = cl.martingale_approximant(
        cl.with_sidedness(model, "two_sided"), f
    ).sigma2
    profile = cl.variance_profile(model, f, [10_000])[0]
    elapsed = time.perf_counter() - start

    routes = np.array([series, mdiff, forward])
    spread = routes.max() - routes.min()
    oracle_gap = np.abs(routes - SIGMA2_TWO_STATE).max()
    profile_gap = abs(profile - series)
    ok = (
        spread <= 1e-6
        and oracle_gap <= 1e-6
        and profile_gap <= 1e-3
        and elapsed < 2.0
    )
    _verdict_line(
        capsys, 3, "variance-route-agreement", ok,
        f"spread={spread:.2e} vs-34/27={oracle_gap:.2e} profile-gap={profile_gap:.2e}",
    )
    assert spread <= 1e-6
    assert oracle_gap <= 1e-6
    assert profile_gap <= 1e-3
    assert elapsed < 2.0


def test_criterion_4_coboundary_degeneracy(capsys):
    start = time.perf_counter()
    cfg, model, f = _preset_model("coboundary")
    series = cl.sigma2_series(model, f).value
    mdiff = cl.decompose(model, f).sigma2_mdiff
    forward = cl.martingale_approximant(
        cl.with_sidedness(model, "two_sided"), f
    ).sigma2
    witness = cl.detect_coboundary(model, f)
    samples = cl.simulate_birkhoff(model, f, 10_000, cfg.samples, seed=cfg.seed)
    peak = float(np.abs(samples).max())
    elapsed = time.perf_counter() - start

    routes_ok = max(abs(series), abs(mdiff), abs(forward)) <= 1e-10
    ok = (
        routes_ok
        and witness is not None
        and peak <= 0.02 + 1e-12
        and elapsed < 5.0
    )
    _verdict_line(
        capsys, 4, "coboundary-degeneracy", ok,
        f"max-sigma2={max(abs(series), abs(mdiff), abs(forward)):.2e} peak={peak:.4f}",
    )
    assert routes_ok
    assert witness is not None
    assert peak <= 0.02 + 1e-12
    assert elapsed < 5.0


def test_criterion_5_clt_verdicts(capsys):
    start = time.perf_counter()
    outcomes = {}
    for name in ("bernoulli-rademacher", "two-state-gap"):
        cfg, model, f = _preset_model(name)
        sigma2 = cl.sigma2_series(model, f).value
        rep = cl.verdict(model, f, sigma2, 10_000, 4000, seed=42)
        outcomes[name] = rep
    _, bern_model, bern_f = _preset_model("bernoulli-rademacher")
    mismatch = cl.verdict(bern_model, bern_f, 4.0, 10_000, 4000, seed=42)
    elapsed = time.perf_counter() - start

    consistent_ok = all(
        rep.verdict == cl.CONSISTENT and rep.ks_distance < rep.ks_threshold
        for rep in outcomes.values()
    )
    mismatch_ok = mismatch.verdict == cl.INCONSISTENT
    ok = consistent_ok and mismatch_ok and elapsed < 60.0
    detail = " ".join(
        f"{name}:ks={rep.ks_distance:.4f}" for name, rep in outcomes.items()
    )
    _verdict_line(
        capsys, 5, "clt-verdicts", ok,
        f"{detail} mismatch={mismatch.verdict} time={elapsed:.1f}s",
    )
    assert consistent_ok
    assert mismatch_ok
    assert elapsed < 60.0


def test_criterion_6_negative_control(capsys, tmp_path):
    start = time.perf_counter()
    _, model, f = _preset_model("period2-indicator")
    backward = cl.check_backward_clt_conditions(model, f)
    forward = cl.check_forward_clt_conditions(
        cl.with_sidedness(model, "two_sided"), f
    )
    exit_code = run_preset(
        "period2-indicator", tmp_path / "p2", render_figures=False
    )
    elapsed = time.perf_counter() - start

    corr = backward["summable_correlations"]
    backward_ok = corr.verdict == cl.FAIL and corr.evidence["last_abs"] >= 0.2
    forward_ok = (
        forward["per_start_summability"].verdict == cl.FAIL
        and forward["uniform_tail_decay"].verdict == cl.FAIL
        and forward["uniform_tail_decay"].evidence["sup_tail_max_late"] >= 0.2
    )
    ok = backward_ok and forward_ok and exit_code == 3 and elapsed < 2.0
    _verdict_line(
        capsys, 6, "negative-control", ok,
        f"last-corr={corr.evidence['last_abs']:.3f} exit={exit_code}",
    )
    assert backward_ok
    assert forward_ok
    assert exit_code == 3
    assert elapsed < 2.0


def test_criterion_7_lambda_regularization(capsys, two_state_setup):
    start = time.perf_counter()
    _, model, f = two_state_setup
    sigma2 = cl.sigma2_series(model, f).value
    grid = cl.DEFAULT_LAMBDA_GRID
    values = np.array([cl.sigma2_lambda(model, f, lam) for lam in grid])
    elapsed = time.perf_counter() - start

    monotone = bool(np.all(np.diff(values) > 0)) and bool(
        np.all(values < sigma2)
    )
    endpoint_gap = abs(values[-1] - sigma2)
    ok = monotone and endpoint_gap <= 1e-3 and elapsed < 2.0
    _verdict_line(
        capsys, 7, "lambda-regularization", ok,
        f"monotone={monotone} gap-at-1.001={endpoint_gap:.3e}",
    )
    assert monotone
    # the damped family converges at rate proportional to (lambda - 1), and
    # at lambda = 1.001 the remaining gap is ~8.4e-3; recorded here at the
    # advertised 1e-3 so the shortfall stays visible
    assert endpoint_gap <= 1e-3, (
        f"gap at lambda=1.001 is {endpoint_gap:.3e}, above 1e-3"
    )
    assert elapsed < 2.0


def test_criterion_8_ergodic_averaging(capsys, two_state_setup):
    start = time.perf_counter()
    _, model, f = two_state_setup
    f_sq = cl.combine(f, f, "mul")
    mean_sq = cl.expectation(model, f_sq)
    centered = cl.combine(f_sq, cl.constant(mean_sq, 2), "sub")
    lr_var = cl.sigma2_series(model, centered).value
    n = 1_000_000
    avg = cl.orbit_average(model, f_sq, n, seed=42)
    elapsed = time.perf_counter() - start

    se = math.sqrt(lr_var / n)
    dev = abs(avg - mean_sq)
    ok = dev <= 3.0 * se and elapsed < 5.0
    _verdict_line(
        capsys, 8, "ergodic-averaging", ok,
        f"dev={dev:.2e} 3se={3.0 * se:.2e} time={elapsed:.2f}s",
    )
    assert dev <= 3.0 * se
    assert elapsed < 5.0


def test_criterion_9_remainder_and_cf(capsys, two_state_setup):
    start = time.perf_counter()
    _, model, f = two_state_setup
    dec = cl.decompose(model, f)
    eps = 0.1
    n_star = math.ceil(
        (3.0 * (cl.sup_norm(dec.g) + cl.sup_norm(f)) / eps) ** 2
    )
    grid = [n_star, 8192, 10_000]
    probs = cl.remainder_probability(model, f, dec.g, grid, eps, 1000, seed=42)

    samples = cl.simulate_birkhoff(model, f, 10_000, 10_000, seed=2)
    psi = cl.cf_diagnostic(samples, SIGMA2_TWO_STATE)
    psi_max = max(d for _, d in psi)
    elapsed = time.perf_counter() - start

    remainder_ok = bool(np.all(probs == 0.0))
    ok = remainder_ok and psi_max < 0.1 and elapsed < 60.0
    _verdict_line(
        capsys, 9, "remainder-and-cf", ok,
        f"n*={n_star} probs={probs.tolist()} psi-max={psi_max:.4f}",
    )
    assert remainder_ok
    assert psi_max < 0.1
    assert elapsed < 60.0


def test_criterion_10_reproducibility(capsys, tmp_path):
    start = time.perf_counter()
    a = run_preset("two-state-gap", tmp_path / "a", render_figures=False)
    b = run_preset("two-state-gap", tmp_path / "b", render_figures=False)
    elapsed = time.perf_counter() - start

    report_a = (tmp_path / "a" / "report.json").read_bytes()
    report_b = (tmp_path / "b" / "report.json").read_bytes()
    samples_a = (tmp_path / "a" / "samples.csv").read_bytes()
    samples_b = (tmp_path / "b" / "samples.csv").read_bytes()
    ok = (
        a == 0
        and b == 0
        and report_a == report_b
        and samples_a == samples_b
        and elapsed < 60.0
    )
    _verdict_line(
        capsys, 10, "reproducibility", ok,
        f"bytes={len(report_a)} time={elapsed:.1f}s",
    )
    assert a == 0 and b == 0
    assert report_a == report_b
    assert samples_a == samples_b
    assert elapsed < 60.0
    json.loads(report_a)
