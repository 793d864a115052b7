"""Static SVG figures for every run and the sensitivity grid."""

from __future__ import annotations

from pathlib import Path
from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .experiments import GridSummary, RunDataset, aggregate  # noqa: E402

# stable element ids and no timestamp, so re-rendering gives identical bytes
plt.rcParams["svg.hashsalt"] = "edem"
plt.rcParams["svg.fonttype"] = "none"
SVG_METADATA = {"Date": None, "Creator": None}

MARKED_CELLS = ((-1.0, 0.15), (0.0, 0.15), (1.0, 0.15))
COLORS = ("tab:blue", "tab:orange", "tab:green")
MAX_POINTS = 2000


def _thin(n: int) -> np.ndarray:
    """Tick indices to draw: every tick for short runs, an even stride (last tick kept) otherwise."""
    stride = max(1, -(-n // MAX_POINTS))
    idx = np.arange(0, n, stride)
    if idx[-1] != n - 1:
        idx = np.append(idx, n - 1)
    return idx


def _price_panel(ax, dataset: RunDataset, color: str = "tab:blue", label: Optional[str] = None,
                 relative: bool = False, traces: bool = True) -> None:
    agg = aggregate(dataset)
    scale = dataset.config.initial_price if relative else 1.0
    ticks = _thin(dataset.ticks)
    if traces:
        for row in dataset.columns["price"]:
            ax.plot(ticks, row[ticks] / scale, color=color, alpha=0.15, lw=0.5)
    ax.fill_between(ticks, agg.p10["price"][ticks] / scale, agg.p90["price"][ticks] / scale,
                    color=color, alpha=0.25, lw=0)
    ax.plot(ticks, agg.median["price"][ticks] / scale, color=color, lw=1.5, label=label)


def _population_panel(ax, dataset: RunDataset, color_s: str = "tab:red", color_b: str = "tab:blue",
                      suffix: str = "") -> None:
    agg = aggregate(dataset)
    ticks = _thin(dataset.ticks)
    ax.plot(ticks, agg.median["sellers"][ticks], color=color_s, lw=1, label=f"sellers{suffix}")
    ax.plot(ticks, agg.median["buyers"][ticks], color=color_b, lw=1, ls="--", label=f"buyers{suffix}")
    ax.set_ylabel("agents")


def _shock_lines(ax, dataset: RunDataset) -> None:
    for shock in dataset.config.shocks:
        ax.axvline(shock.tick, color="red", ls="--", lw=0.8)


def de_figure(dataset: RunDataset):
    """Price panel (median, 10-90 band, seed traces, textbook line) over agent counts."""
    fig, (top, bottom) = plt.subplots(2, 1, figsize=(8, 6), sharex=True)
    _price_panel(top, dataset)
    ticks = _thin(dataset.ticks)
    implied = aggregate(dataset).median["implied_equilibrium"][ticks]
    top.plot(ticks, implied, color="black", ls="--", lw=1, label="textbook equilibrium")
    _shock_lines(top, dataset)
    top.set_ylabel("market price")
    top.set_title(dataset.config.name)
    top.legend(loc="best", fontsize=8)
    _population_panel(bottom, dataset)
    _shock_lines(bottom, dataset)
    bottom.set_xlabel("tick")
    bottom.legend(loc="best", fontsize=8)
    fig.tight_layout()
    return fig


def shock_figure(scenario_a: RunDataset, scenario_b: RunDataset):
    """Both shock scenarios stacked, each with its textbook line and shock markers."""
    fig, axes = plt.subplots(2, 1, figsize=(8, 6))
    for ax, ds in zip(axes, (scenario_a, scenario_b)):
        _price_panel(ax, ds)
        ticks = _thin(ds.ticks)
        ax.plot(ticks, aggregate(ds).median["implied_equilibrium"][ticks], color="black", ls="--", lw=1)
        _shock_lines(ax, ds)
        ax.set_ylabel("market price")
        ax.set_title(ds.config.name)
    axes[-1].set_xlabel("tick")
    fig.tight_layout()
    return fig


def edem_figure(datasets: Sequence[RunDataset], labels: Optional[Sequence[str]] = None, sigma_panel: bool = False):
    """Value ratio on a log axis over agent counts; optionally a dispersion panel."""
    n = 3 if sigma_panel else 2
    fig, axes = plt.subplots(n, 1, figsize=(8, 2.6 * n + 0.8), sharex=True)
    labels = list(labels) if labels else [ds.config.name for ds in datasets]
    for ds, label, color in zip(datasets, labels, COLORS):
        _price_panel(axes[0], ds, color=color, label=label, relative=True, traces=len(datasets) == 1)
        agg = aggregate(ds)
        ticks = _thin(ds.ticks)
        axes[1].plot(ticks, agg.median["sellers"][ticks], color=color, lw=1, label=f"sellers {label}")
        axes[1].plot(ticks, agg.median["buyers"][ticks], color=color, lw=1, ls="--", label=f"buyers {label}")
    axes[0].set_yscale("log")
    axes[0].set_ylabel("v / v*")
    axes[0].legend(loc="best", fontsize=8)
    axes[1].set_ylabel("agents")
    axes[1].legend(loc="best", fontsize=7, ncol=len(datasets))
    if sigma_panel:
        ticks = _thin(datasets[0].ticks)
        axes[2].plot(ticks, aggregate(datasets[0]).median["sigma_bar"][ticks], color="black", lw=1)
        axes[2].set_ylabel("sigma bar")
    axes[-1].set_xlabel("tick")
    fig.tight_layout()
    return fig


def grid_figure(grid: GridSummary, marked: Sequence[tuple[float, float]] = MARKED_CELLS):
    """Heatmap of log10 cell medians, annotated with the linear values."""
    fig, ax = plt.subplots(figsize=(8, 5))
    image = ax.imshow(grid.log10, cmap="viridis", aspect="auto", origin="lower")
    ax.set_xticks(range(len(grid.sigma)), [f"{round(s * 100)}%" for s in grid.sigma])
    ax.set_yticks(range(len(grid.c_b)), [f"{c:+g}" for c in grid.c_b])
    ax.set_xlabel("sigma bar")
    ax.set_ylabel("C_b")
    for i in range(len(grid.c_b)):
        for j in range(len(grid.sigma)):
            ax.text(j, i, f"{grid.cells[i, j]:.1f}", ha="center", va="center", color="white", fontsize=8)
    for c_b, sigma in marked:
        if c_b in grid.c_b and sigma in grid.sigma:
            i, j = grid.c_b.index(c_b), grid.sigma.index(sigma)
            ax.add_patch(plt.Rectangle((j - 0.5, i - 0.5), 1, 1, fill=False, edgecolor="red", lw=2))
    fig.colorbar(image, ax=ax, label="log10 median v / v*")
    fig.tight_layout()
    return fig


def panel_count(fig) -> int:
    """Number of data panels (colour bars excluded)."""
    return sum(1 for ax in fig.axes if ax.get_label() != "<colorbar>")


def save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata=SVG_METADATA)
    plt.close(fig)
    return path
