"""Figure rendering for the report path.

Every plot here is a batch rendering of an aggregate table that is also
written as CSV; figures land next to the delimited output. Uses the Agg
backend so rendering works headless.
"""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .experiment import KERNEL_ORDER

_LABELS = {
    "linear": "Linear",
    "polynomial": "Poly",
    "rbf": "RBF",
    "rx": "RX",
    "iqp": "IQP",
    "qaoa": "QAOA",
}


def _pair_grid(entries, value_key) -> np.ndarray:
    """Upper-triangular 6x6 grid of per-pair values in canonical order."""
    grid = np.full((len(KERNEL_ORDER), len(KERNEL_ORDER)), np.nan)
    index = {k: i for i, k in enumerate(KERNEL_ORDER)}
    for e in entries:
        i, j = index[e["kernel_a"]], index[e["kernel_b"]]
        grid[i, j] = e[value_key]
    return grid


def _draw_grid(ax, grid, title):
    masked = np.ma.masked_invalid(grid)
    im = ax.imshow(masked, cmap="viridis")
    ax.set_title(title, fontsize=9)
    ticks = range(len(KERNEL_ORDER))
    ax.set_xticks(ticks, [_LABELS[k] for k in KERNEL_ORDER], rotation=45, fontsize=7)
    ax.set_yticks(ticks, [_LABELS[k] for k in KERNEL_ORDER], fontsize=7)
    for i in range(len(KERNEL_ORDER)):
        for j in range(len(KERNEL_ORDER)):
            if not np.isnan(grid[i, j]):
                ax.text(j, i, f"{grid[i, j]:.2f}", ha="center", va="center", fontsize=6)
    return im


def save_median_heatmaps(report: dict, out_dir) -> list[Path]:
    """One figure per metric: median grids per result type plus the
    III-minus-I difference grid when both types are present."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    metrics = sorted({m["metric"] for m in report["medians"]})
    for metric in metrics:
        rows = [m for m in report["medians"] if m["metric"] == metric]
        types = sorted({m["result_type"] for m in rows})
        diffs = [d for d in report["differences"] if d["metric"] == metric]
        n_panels = len(types) + (1 if diffs else 0)
        fig, axes = plt.subplots(1, n_panels, figsize=(3.2 * n_panels, 3.4), squeeze=False)
        for ax, rt in zip(axes[0], types):
            selected = [m for m in rows if m["result_type"] == rt]
            im = _draw_grid(ax, _pair_grid(selected, "median"), f"({rt}) median {metric}")
            fig.colorbar(im, ax=ax, fraction=0.046)
        if diffs:
            ax = axes[0][-1]
            im = _draw_grid(ax, _pair_grid(diffs, "difference"), f"{metric}: III - I")
            fig.colorbar(im, ax=ax, fraction=0.046)
        fig.tight_layout()
        path = out / f"median_{metric}.png"
        fig.savefig(path, dpi=150)
        plt.close(fig)
        paths.append(path)
    return paths


def save_weight_densities(report: dict, out_dir) -> list[Path]:
    """Per feature count: histograms of the second kernel's weight for every
    pair, overlaying the available result types."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    densities = report["densities"]
    paths = []
    for d in sorted({e["d"] for e in densities}):
        rows = [e for e in densities if e["d"] == d]
        pairs = sorted({(e["kernel_a"], e["kernel_b"]) for e in rows})
        ncols = 3
        nrows = (len(pairs) + ncols - 1) // ncols
        fig, axes = plt.subplots(
            nrows, ncols, figsize=(3.0 * ncols, 1.9 * nrows), squeeze=False, sharex=True
        )
        for k, (a, b) in enumerate(pairs):
            ax = axes[k // ncols][k % ncols]
            for rt, style in (("II", {"alpha": 0.45}), ("III", {"histtype": "step", "linewidth": 1.4}), ("I", {"alpha": 0.3})):
                bins = [e for e in rows if e["kernel_a"] == a and e["kernel_b"] == b and e["result_type"] == rt]
                if not bins:
                    continue
                lefts = [e["bin_left"] for e in bins]
                counts = [e["count"] for e in bins]
                width = bins[0]["bin_right"] - bins[0]["bin_left"]
                if "histtype" in style:
                    ax.step(lefts + [bins[-1]["bin_right"]], counts + [counts[-1]], where="post", label=rt, linewidth=style["linewidth"])
                else:
                    ax.bar(lefts, counts, width=width, align="edge", label=rt, **style)
            ax.axvline(0.5, color="grey", linewidth=0.6, linestyle=":")
            ax.set_title(f"{_LABELS[a]} - {_LABELS[b]}", fontsize=8)
            ax.set_xlim(0.0, 1.0)
        for k in range(len(pairs), nrows * ncols):
            axes[k // ncols][k % ncols].axis("off")
        handles, labels = axes[0][0].get_legend_handles_labels()
        if handles:
            fig.legend(handles, labels, loc="upper right", fontsize=8)
        fig.supxlabel("weight of the second kernel", fontsize=9)
        fig.tight_layout()
        path = out / f"weight_density_d{d}.png"
        fig.savefig(path, dpi=150)
        plt.close(fig)
        paths.append(path)
    return paths


def save_decision_surface(points, scores, out_path, dataset=None) -> Path:
    """Filled contour of the decision scores with the sign boundary; overlays
    the training points when a dataset is given."""
    points = np.asarray(points)
    scores = np.asarray(scores)
    resolution = int(round(np.sqrt(len(points))))
    gx = points[:, 0].reshape(resolution, resolution)
    gy = points[:, 1].reshape(resolution, resolution)
    gz = scores.reshape(resolution, resolution)
    fig, ax = plt.subplots(figsize=(4.2, 3.8))
    limit = max(abs(float(gz.min())), abs(float(gz.max())), 1e-12)
    filled = ax.contourf(gx, gy, gz, levels=21, cmap="RdBu", vmin=-limit, vmax=limit)
    ax.contour(gx, gy, gz, levels=[0.0], colors="k", linewidths=1.0)
    fig.colorbar(filled, ax=ax, label="decision score")
    if dataset is not None:
        X, y = dataset.train_X, dataset.train_y
        ax.scatter(X[y == 1, 0], X[y == 1, 1], marker="s", s=14, c="crimson", edgecolors="k", linewidths=0.3)
        ax.scatter(X[y == -1, 0], X[y == -1, 1], marker="o", s=14, c="royalblue", edgecolors="k", linewidths=0.3)
    ax.set_xlim(0.0, 2.0 * np.pi)
    ax.set_ylim(0.0, 2.0 * np.pi)
    ax.set_xlabel("feature 1")
    ax.set_ylabel("feature 2")
    fig.tight_layout()
    out_path = Path(out_path)
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return out_path
