"""Batch runner: wires a parsed config through the engines and writes bundles.

A run produces, in the output directory:

* ``report.json``   -- every requested result, byte-identical across reruns
* ``samples.csv``   -- normalized Birkhoff sums when the clt stage runs
* ``meta.json``     -- versions, seed, workers, wall time (the only place
  anything non-reproducible lives)
* ``*.png``         -- diagnostic figures unless disabled

Exit codes: 0 all requested checks pass, 1 a simulation verdict came back
inconsistent, 2 config error, 3 hypothesis checks failed or a series did
not converge (informative, not a crash).
"""

from __future__ import annotations

import json
import math
import os
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import backward, figures, forward, montecarlo
from . import cylinder as cyl
from .config import ExperimentConfig, load_config, parse_config
from .errors import CltLabError, ConfigError, Diverging, NonSummable, NotStochastic, Reducible
from .presets import describe_presets, get_preset
from .shift import ONE_SIDED, TWO_SIDED, build_shift, with_sidedness

EXIT_OK = 0
EXIT_INCONSISTENT = 1
EXIT_CONFIG = 2
EXIT_CONDITIONS = 3

_CENTER_TOL = 1e-10


@dataclass
class RunResult:
    """In-memory outcome of one experiment before any files are written."""

    report: dict
    samples: np.ndarray | None
    exit_code: int
    notes: list
    extras: dict = field(default_factory=dict)


def _cyl_dict(f) -> dict:
    return {
        "offset": int(f.offset),
        "length": int(f.length),
        "values": [float(v) for v in f.values],
    }


def _sanitize(obj):
    """JSON-ready copy: numpy scalars unwrapped, non-finite floats to null."""
    if isinstance(obj, dict):
        return {key: _sanitize(value) for key, value in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(value) for value in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        return value if math.isfinite(value) else None
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    return obj


def execute(cfg: ExperimentConfig, seed=None, workers=None) -> RunResult:
    """Run the stages requested by ``cfg.kind`` and assemble the report.

    ``seed``/``workers`` override the config values; workers only move wall
    time.  Raises ConfigError for an unusable system description; every
    other contract failure is recorded in the report instead of raised.
    """
    seed = cfg.seed if seed is None else int(seed)
    workers = int(workers) if workers is not None else (cfg.workers or os.cpu_count() or 1)
    notes = []
    trouble = False
    inconsistent = False

    try:
        model = build_shift(cfg.matrix, cfg.sidedness)
    except (NotStochastic, Reducible) as exc:
        raise ConfigError(str(exc)) from exc

    f = cfg.observable
    mean = cyl.expectation(model, f)
    if abs(mean) > _CENTER_TOL:
        f = f - mean
        notes.append(f"observable centered by subtracting its mean {mean:.6g}")

    one = with_sidedness(model, ONE_SIDED)
    two = with_sidedness(model, TWO_SIDED)
    if f.offset < 0:
        f_base = cyl.shift_window(f, -f.offset)
        notes.append(
            f"window shifted right by {-f.offset} for the one-sided engines "
            "(harmless under stationarity)"
        )
    else:
        f_base = f

    kind = cfg.kind
    wants_gordin = kind in ("gordin", "all")
    wants_forward = kind in ("forward", "all")
    wants_conditions = kind in ("conditions", "all")
    wants_clt = kind in ("clt", "all")

    dec = None
    series = mdiff = fwd_sigma2 = None
    series_info = {}
    if wants_gordin or wants_clt:
        try:
            dec = backward.decompose(one, f_base)
            mdiff = dec.sigma2_mdiff
        except (NonSummable, Diverging) as exc:
            notes.append(f"decomposition unavailable: {exc}")
            trouble = True
        try:
            sv = backward.sigma2_series(one, f_base)
            series = sv.value
            series_info = {
                "series_abs_bound": float(sv.abs_bound),
                "series_terms": int(sv.terms.size),
                "series_clamped": bool(sv.clamped),
            }
        except NonSummable as exc:
            notes.append(f"correlation series not summable: {exc}")
            trouble = True

    decomposition_out = None
    lambda_curve = None
    lambda_diag = None
    if wants_gordin:
        if dec is not None:
            decomposition_out = {
                "g": _cyl_dict(dec.g),
                "g_sup_norm": cyl.sup_norm(dec.g),
                "y1": _cyl_dict(dec.y1),
                "residual_norm": dec.residual_norm,
                "mdiff_conditional_norm": dec.mdiff_conditional_norm,
                "series_tail_norm": dec.tail_norm,
                "sigma2_mdiff": dec.sigma2_mdiff,
            }
        lambda_curve = [
            [float(lam), backward.sigma2_lambda(one, f_base, lam)] for lam in cfg.lambda_grid
        ]
        lambda_diag = backward.sigma2_lambda_diagnostics(one, f_base, min(cfg.lambda_grid))

    forward_out = None
    if wants_forward:
        try:
            fa = forward.martingale_approximant(two, f)
            fwd_sigma2 = fa.sigma2
            forward_out = {
                "sigma2": fa.sigma2,
                "r_range": list(fa.r_range),
                "tail_norm": fa.tail_norm,
                "past_projection_norm": fa.past_projection_norm,
                "y0": _cyl_dict(fa.y0),
                "y0_sup_norm": cyl.sup_norm(fa.y0),
            }
        except NonSummable as exc:
            notes.append(f"forward approximant unavailable: {exc}")
            trouble = True

    profile = None
    extras = {"workers": workers}
    if wants_gordin or wants_forward:
        values = forward.variance_profile(one, f_base, cfg.n_grid)
        profile = [[int(n), float(v)] for n, v in zip(cfg.n_grid, values)]
        extras["autocovariances"] = cyl.autocovariances(one, f_base, 64)

    sigma2_out = None
    if wants_gordin or wants_forward or wants_clt:
        sigma2_out = {
            "series": None if series is None else float(series),
            "series_abs_bound": series_info.get("series_abs_bound"),
            "series_terms": series_info.get("series_terms"),
            "series_clamped": series_info.get("series_clamped"),
            "mdiff": None if mdiff is None else float(mdiff),
            "forward": None if fwd_sigma2 is None else float(fwd_sigma2),
            "variance_profile": profile,
            "lambda_curve": lambda_curve,
            "lambda_diagnostics": lambda_diag,
        }

    conditions_out = None
    if wants_conditions:
        backward_report = backward.check_backward_clt_conditions(one, f_base)
        past_report = backward.check_past_approximation(two, f)
        forward_report = forward.check_forward_clt_conditions(two, f)
        conditions_out = {
            "backward": backward_report.as_dict(),
            "past_approximation": past_report.as_dict(),
            "forward": forward_report.as_dict(),
        }
        if any(r.any_fail for r in (backward_report, past_report, forward_report)):
            trouble = True
            notes.append("condition checks reported failures")

    clt_out = None
    samples = None
    if wants_clt:
        theory = series if series is not None else (mdiff if mdiff is not None else fwd_sigma2)
        if theory is None:
            notes.append("clt stage skipped: no variance route converged")
            trouble = True
        else:
            n_top = max(cfg.n_grid)
            samples = montecarlo.simulate_birkhoff(
                model, f, n_top, cfg.samples, seed, workers=workers
            )
            rep = montecarlo.verdict(
                model,
                f,
                theory,
                n_top,
                cfg.samples,
                seed,
                tolerances={"remainder_eps": cfg.eps},
                workers=workers,
            )
            clt_out = rep.as_dict()
            remainder_curve = None
            if dec is not None:
                probs = montecarlo.remainder_probability(
                    one, f_base, dec.g, cfg.n_grid, cfg.eps, min(cfg.samples, 1000), seed
                )
                remainder_curve = [[int(n), float(p)] for n, p in zip(cfg.n_grid, probs)]
            clt_out["remainder_curve"] = remainder_curve
            if rep.verdict == montecarlo.INCONSISTENT:
                inconsistent = True
                notes.append("clt verdict inconsistent")
            elif rep.verdict == montecarlo.DEGENERATE:
                if rep.degenerate_bound_ok is False:
                    inconsistent = True
                    notes.append("degenerate case violated the coboundary sample bound")
                elif rep.degenerate_bound_ok is None:
                    trouble = True
                    notes.append("degenerate variance but no verifiable coboundary witness")

    if inconsistent:
        code = EXIT_INCONSISTENT
    elif trouble:
        code = EXIT_CONDITIONS
    else:
        code = EXIT_OK

    report = _sanitize(
        {
            "config": cfg.as_dict(),
            "seed": seed,
            "conditions": conditions_out,
            "decomposition": decomposition_out,
            "sigma2": sigma2_out,
            "forward": forward_out,
            "clt": clt_out,
            "notes": list(notes),
            "exit_code": code,
        }
    )
    return RunResult(report=report, samples=samples, exit_code=code, notes=notes, extras=extras)


def _package_version() -> str:
    try:
        from importlib.metadata import version

        return version("cltlab")
    except Exception:
        return "0+unknown"


def _write_bundle(result: RunResult, out_dir, wall_time: float, render_figures: bool):
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "report.json"), "w", encoding="utf-8") as fh:
        json.dump(result.report, fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")

    if result.samples is not None:
        with open(os.path.join(out_dir, "samples.csv"), "w", encoding="utf-8") as fh:
            fh.write("sample\n")
            for value in result.samples:
                fh.write("%.17g\n" % value)

    import scipy

    meta = {
        "package": "cltlab",
        "version": _package_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "seed": result.report["seed"],
        "workers": result.extras.get("workers"),
        "wall_time_seconds": wall_time,
    }
    with open(os.path.join(out_dir, "meta.json"), "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")

    if render_figures:
        _write_figures(result, out_dir)


def _write_figures(result: RunResult, out_dir):
    rep = result.report
    sig = rep.get("sigma2") or {}
    reference = sig.get("series")
    if reference is None:
        reference = sig.get("mdiff") if sig.get("mdiff") is not None else sig.get("forward")

    if result.samples is not None and rep.get("clt"):
        theory = rep["clt"]["sigma2_theory"]
        figures.save_sample_histogram(
            result.samples, theory, os.path.join(out_dir, "samples_hist.png")
        )
        figures.save_sample_ecdf(
            result.samples,
            theory,
            os.path.join(out_dir, "samples_ecdf.png"),
            ks_distance=rep["clt"].get("ks_distance"),
        )
    if sig.get("lambda_curve"):
        figures.save_lambda_curve(
            sig["lambda_curve"], reference, os.path.join(out_dir, "lambda_curve.png")
        )
    if sig.get("variance_profile"):
        figures.save_variance_profile(
            sig["variance_profile"], reference, os.path.join(out_dir, "variance_profile.png")
        )
    if "autocovariances" in result.extras:
        figures.save_autocovariance_decay(
            result.extras["autocovariances"], os.path.join(out_dir, "autocovariances.png")
        )


def _finish(cfg: ExperimentConfig, out_dir, seed, workers, render_figures) -> int:
    start = time.perf_counter()
    try:
        result = execute(cfg, seed=seed, workers=workers)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CltLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    _write_bundle(result, out_dir, time.perf_counter() - start, render_figures)
    if result.exit_code == EXIT_INCONSISTENT:
        print("verdict: inconsistent with the predicted limit law", file=sys.stderr)
    elif result.exit_code == EXIT_CONDITIONS:
        print(
            "hypothesis checks failed or a series did not converge; see report.json notes",
            file=sys.stderr,
        )
    return result.exit_code


def run(config_path, out_dir, seed=None, workers=None, render_figures: bool = True) -> int:
    """Run a config file; returns the process exit code."""
    try:
        cfg = load_config(config_path)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return _finish(cfg, out_dir, seed, workers, render_figures)


def run_preset(name, out_dir, seed=None, workers=None, render_figures: bool = True) -> int:
    """Run a named preset; returns the process exit code."""
    try:
        cfg = parse_config(get_preset(name).config_text)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return _finish(cfg, out_dir, seed, workers, render_figures)


def list_presets() -> str:
    """Formatted preset listing for the CLI."""
    return describe_presets()
