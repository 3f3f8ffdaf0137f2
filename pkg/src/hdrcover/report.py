"""Figure rendering for run outputs. All figures go to files; no interactive
backend is ever required."""

from __future__ import annotations

from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def render_selection_figure(path, shutters: Sequence[float],
                            covered_fraction: Sequence[float],
                            selected: Sequence[int],
                            title: str = "Exposure selection") -> None:
    """Per-frame coverage bars with the chosen frames highlighted.

    covered_fraction[j] is the fraction of pixels the (j+1)-th frame exposes
    acceptably; selected holds 1-based frame indices.
    """
    shutters = list(shutters)
    frac = np.asarray(covered_fraction, dtype=np.float64)
    chosen = set(int(s) for s in selected)
    colors = ["#d62728" if (j + 1) in chosen else "#7f7f7f"
              for j in range(len(shutters))]
    fig, ax = plt.subplots(figsize=(8, 3.2), constrained_layout=True)
    ax.bar(range(1, len(shutters) + 1), frac, color=colors)
    ax.set_xlabel("frame index (slow to fast ordering follows the ladder)")
    ax.set_ylabel("covered pixel fraction")
    ax.set_ylim(0.0, 1.05)
    ax.set_title(f"{title}: {len(chosen)} of {len(shutters)} frames")
    fig.savefig(path, dpi=110)
    plt.close(fig)


def render_benchmark_figure(path, results: Mapping[str, Mapping[str, float]],
                            cost_label: str = "shots") -> None:
    """Two-panel comparison: quality (log-domain MSE) and acquisition cost
    per method. results maps method name to a dict with keys `log_mse`,
    `cost`, `count`."""
    methods = list(results.keys())
    mse = [results[m].get("log_mse", float("nan")) for m in methods]
    cost = [results[m].get("cost", float("nan")) for m in methods]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.4), constrained_layout=True)
    xs = np.arange(len(methods))
    ax1.bar(xs, mse, color="#1f77b4")
    ax1.set_xticks(xs, methods, rotation=20, ha="right")
    ax1.set_ylabel("log10-domain MSE")
    ax1.set_title("Reconstruction error")
    if all(np.isfinite(v) and v > 0 for v in mse):
        ax1.set_yscale("log")
    ax2.bar(xs, cost, color="#2ca02c")
    ax2.set_xticks(xs, methods, rotation=20, ha="right")
    ax2.set_ylabel(cost_label)
    ax2.set_title("Acquisition cost")
    fig.savefig(path, dpi=110)
    plt.close(fig)


def render_histogram_figure(path, edges: np.ndarray, counts: np.ndarray,
                            extent: tuple[float, float] | None = None) -> None:
    """Estimated log10 irradiance distribution, with optional extent markers."""
    fig, ax = plt.subplots(figsize=(7, 3.2), constrained_layout=True)
    centers = 0.5 * (np.asarray(edges[:-1]) + np.asarray(edges[1:]))
    widths = np.diff(edges)
    ax.bar(centers, counts, width=widths, color="#9467bd")
    if extent is not None:
        for x in extent:
            ax.axvline(x, color="#d62728", linestyle="--", linewidth=1.0)
    ax.set_xlabel("log10 irradiance estimate")
    ax.set_ylabel("pixels")
    ax.set_title("Scene brightness distribution")
    fig.savefig(path, dpi=110)
    plt.close(fig)
