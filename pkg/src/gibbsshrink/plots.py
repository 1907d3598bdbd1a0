"""Figure rendering for simulation reports, fits, and the self-test."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

METHOD_COLORS = {
    "vanilla": "tab:gray",
    "hierbetas": "tab:blue",
    "ebbetas": "tab:green",
    "ebsigmax": "tab:orange",
    "ebboth": "tab:purple",
    "ridg": "tab:red",
    "truth": "black",
}


def plot_metric_vs_tau(by_tau: dict, metric: str, ylabel: str, path, hline=None, hline_label=None):
    """One line per method across the surrogate-noise grid."""
    taus = sorted(by_tau)
    methods = sorted({m for agg in by_tau.values() for m in agg})
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for method in methods:
        ys = [by_tau[t].get(method, {}).get(metric) for t in taus]
        pts = [(t, y) for t, y in zip(taus, ys) if y is not None]
        if not pts:
            continue
        xs, vals = zip(*pts)
        ax.plot(xs, vals, marker="o", label=method, color=METHOD_COLORS.get(method))
    if hline is not None:
        ax.axhline(hline, color="black", linewidth=2.0, label=hline_label)
    ax.set_xlabel("surrogate noise level tau")
    ax.set_ylabel(ylabel)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)


def plot_trace(values: np.ndarray, ylabel: str, path, burn_in: int | None = None):
    fig, ax = plt.subplots(figsize=(6.0, 3.0))
    ax.plot(np.asarray(values), linewidth=0.8)
    if burn_in:
        ax.axvline(burn_in, color="tab:red", linestyle="--", linewidth=1.0, label="end of burn-in")
        ax.legend(fontsize=8)
    ax.set_xlabel("iteration")
    ax.set_ylabel(ylabel)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)


def plot_geweke_z(report, path, threshold: float = 4.0):
    z = np.asarray(report.z)
    fig, ax = plt.subplots(figsize=(7.0, 3.5))
    ax.bar(np.arange(z.size), z, color=["tab:red" if abs(v) > threshold else "tab:blue" for v in z])
    ax.axhline(threshold, color="black", linestyle="--", linewidth=0.8)
    ax.axhline(-threshold, color="black", linestyle="--", linewidth=0.8)
    ax.set_xticks(np.arange(z.size))
    ax.set_xticklabels(report.names, rotation=90, fontsize=6)
    ax.set_ylabel("moment z-score")
    ax.set_title(f"{report.method}: forward vs Gibbs moments ({report.sweeps} sweeps)")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)
