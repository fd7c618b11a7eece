"""Plot helpers that render run diagnostics to PNG files.

Every helper writes to the given path and returns it; nothing opens a
window, so the module is safe in headless batch runs.
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from scipy.special import ndtr


def save_sample_histogram(samples, sigma2, path):
    """Histogram of normalized sums with the predicted density overlaid."""
    samples = np.asarray(samples, dtype=np.float64)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.hist(samples, bins=60, density=True, alpha=0.65, label="samples")
    if sigma2 is not None and sigma2 > 0:
        sd = math.sqrt(sigma2)
        span = max(4.0 * sd, float(np.max(np.abs(samples))) if samples.size else 1.0)
        xs = np.linspace(-span, span, 400)
        ax.plot(
            xs,
            np.exp(-0.5 * (xs / sd) ** 2) / (sd * math.sqrt(2.0 * math.pi)),
            "k-",
            lw=1.5,
            label=f"N(0, {sigma2:.4g})",
        )
    ax.set_xlabel("S_n / sqrt(n)")
    ax.set_ylabel("density")
    ax.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def save_sample_ecdf(samples, sigma2, path, ks_distance=None):
    """Empirical CDF against the predicted normal CDF."""
    xs = np.sort(np.asarray(samples, dtype=np.float64))
    m = xs.size
    ecdf = np.arange(1, m + 1) / m
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.step(xs, ecdf, where="post", lw=1.0, label="empirical")
    if sigma2 is not None and sigma2 > 0:
        ax.plot(xs, ndtr(xs / math.sqrt(sigma2)), "k--", lw=1.2, label="normal")
    title = "empirical vs normal CDF"
    if ks_distance is not None:
        title += f" (KS = {ks_distance:.4f})"
    ax.set_title(title, fontsize=10)
    ax.set_xlabel("S_n / sqrt(n)")
    ax.set_ylabel("CDF")
    ax.legend(loc="lower right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def save_lambda_curve(curve, sigma2_ref, path):
    """Damped-variance values against lambda - 1 on a log axis."""
    lams = np.array([lam for lam, _ in curve])
    vals = np.array([v for _, v in curve])
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.semilogx(lams - 1.0, vals, "o-", lw=1.2)
    if sigma2_ref is not None:
        ax.axhline(sigma2_ref, color="k", ls="--", lw=1.0, label="series value")
        ax.legend(loc="best", fontsize=8)
    ax.set_xlabel("lambda - 1")
    ax.set_ylabel("damped variance")
    ax.invert_xaxis()
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def save_variance_profile(profile, sigma2_ref, path):
    """Finite-n variance n^-1 Var(S_n) along the horizon grid."""
    ns = np.array([n for n, _ in profile])
    vals = np.array([v for _, v in profile])
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.semilogx(ns, vals, "o-", lw=1.2, label="Var(S_n)/n")
    if sigma2_ref is not None:
        ax.axhline(sigma2_ref, color="k", ls="--", lw=1.0, label="limit")
    ax.set_xlabel("n")
    ax.set_ylabel("variance")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def save_autocovariance_decay(gammas, path):
    """Absolute autocovariances on a log scale; flat means trouble."""
    gammas = np.asarray(gammas, dtype=np.float64)
    mags = np.abs(gammas)
    floor = 1e-18
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.semilogy(np.arange(mags.size), np.maximum(mags, floor), "o-", lw=1.0)
    ax.set_xlabel("lag")
    ax.set_ylabel("|autocovariance|")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path
