"""Figure rendering for the report paths.

Each helper writes one PNG next to the delimited output it illustrates.
Figures are a convenience layer: nothing downstream consumes them, so they
are deliberately simple and can be switched off wholesale.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

plt.rcParams["figure.dpi"] = 130
plt.rcParams["savefig.bbox"] = "tight"
plt.rcParams["axes.grid"] = True
plt.rcParams["grid.alpha"] = 0.3

#: savefig keywords that keep PNG bytes stable across reruns
_SAVE_KW = {"metadata": {"Software": None}}


def _finish(fig, outfile: str | Path) -> Path:
    outfile = Path(outfile)
    fig.savefig(outfile, **_SAVE_KW)
    plt.close(fig)
    return outfile


def save_path_figure(sample, outfile: str | Path) -> Path:
    """Covariance entries and the observed process along one path, jumps marked."""
    d = sample.dim
    fig, (ax_v, ax_g) = plt.subplots(2, 1, figsize=(7.5, 5.4), sharex=True)
    for i in range(d):
        ax_v.plot(sample.grid, sample.v[:, i, i], lw=1.0, label=f"V[{i + 1},{i + 1}]")
    for i in range(d):
        for j in range(i + 1, d):
            ax_v.plot(sample.grid, sample.v[:, i, j], lw=0.8, ls="--", label=f"V[{i + 1},{j + 1}]")
    if sample.jump_times.size:
        ax_v.plot(
            sample.jump_times,
            np.full(sample.jump_times.size, ax_v.get_ylim()[0]),
            "|",
            color="k",
            ms=6,
            label="jumps",
        )
    ax_v.set_ylabel("covariance")
    ax_v.legend(fontsize=7, ncol=3, loc="upper right")
    for i in range(d):
        ax_g.plot(sample.grid, sample.g[:, i], lw=1.0, label=f"G[{i + 1}]")
    ax_g.set_xlabel("t")
    ax_g.set_ylabel("observed")
    ax_g.legend(fontsize=7, loc="upper right")
    fig.suptitle("simulated path", fontsize=10)
    return _finish(fig, outfile)


def save_acov_figure(lags, analytic_norms, empirical_norms, empirical_se, outfile) -> Path:
    """Autocovariance decay: analytic matrix-exponential curve against estimates."""
    lags = np.asarray(lags, dtype=float)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.errorbar(
        lags,
        empirical_norms,
        yerr=3 * np.asarray(empirical_se),
        fmt="o",
        capsize=3,
        label="empirical (3 SE)",
    )
    ax.plot(lags, analytic_norms, "-", color="C1", label="analytic")
    ax.set_yscale("log")
    ax.set_xlabel("lag")
    ax.set_ylabel("Frobenius norm of autocovariance")
    ax.legend(fontsize=8)
    fig.suptitle("autocovariance decay", fontsize=10)
    return _finish(fig, outfile)


def save_spectra_figure(ops, outfile) -> Path:
    """Eigenvalues of the drift and the two moment generators in the complex plane."""
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    groups = [
        ("drift", np.linalg.eigvals(ops.b), "o"),
        ("mean generator", np.linalg.eigvals(ops.mean_gen), "s"),
        ("second-moment generator", np.linalg.eigvals(ops.second_gen), "^"),
    ]
    for label, eigs, marker in groups:
        ax.plot(eigs.real, eigs.imag, marker, ms=5, ls="", label=label, alpha=0.8)
    ax.axvline(0.0, color="k", lw=0.8)
    ax.set_xlabel("real part")
    ax.set_ylabel("imaginary part")
    ax.legend(fontsize=8)
    fig.suptitle("generator spectra (all strictly left of zero for stationarity)", fontsize=9)
    return _finish(fig, outfile)


def save_ladder_figure(floors, distances, outfile) -> Path:
    """Truncation-ladder convergence: sup-distance against the jump-size floor."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(floors, distances, "o-")
    ax.set_xscale("log")
    positive = np.asarray(distances) > 0
    if positive.any():
        ax.set_yscale("symlog", linthresh=max(np.asarray(distances)[positive].min() * 0.1, 1e-16))
    ax.invert_xaxis()
    ax.set_xlabel("jump-size floor")
    ax.set_ylabel("sup distance to reference path")
    fig.suptitle("compound-Poisson approximation ladder", fontsize=10)
    return _finish(fig, outfile)


def save_validation_figure(results, outfile) -> Path:
    """One bar per acceptance criterion, green for pass."""
    fig, ax = plt.subplots(figsize=(7.0, 0.42 * max(4, len(results))))
    names = [r.key for r in results]
    times = [r.seconds for r in results]
    colors = ["#2a9d2a" if r.passed else "#cc3333" for r in results]
    ypos = np.arange(len(results))[::-1]
    ax.barh(ypos, times, color=colors)
    ax.set_yticks(ypos)
    ax.set_yticklabels(names, fontsize=8)
    ax.set_xlabel("seconds")
    fig.suptitle("validation suite (green = pass)", fontsize=10)
    return _finish(fig, outfile)
