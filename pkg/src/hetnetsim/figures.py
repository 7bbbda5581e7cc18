"""Figure rendering for deployments, per-cell loads, and scaling fits.

Everything renders through the Agg backend straight to files, so the
module is safe to import on headless machines.
"""

from __future__ import annotations

from typing import Optional

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .deployment import NetworkInstance
from .regions import RegionSet


def plot_deployment(
    instance: NetworkInstance,
    path: str,
    regions: Optional[RegionSet] = None,
    avoidance: Optional[RegionSet] = None,
) -> None:
    """Node positions on the unit square with protected cells shaded."""
    fig, ax = plt.subplots(figsize=(6.4, 6.4))
    if regions is not None:
        ax.imshow(
            regions.mask, origin="lower", extent=(0, 1, 0, 1),
            cmap="Greys", vmin=0, vmax=3, alpha=0.6, interpolation="nearest",
        )
    if avoidance is not None:
        overlay = np.ma.masked_where(~avoidance.mask, avoidance.mask.astype(float))
        ax.imshow(
            overlay, origin="lower", extent=(0, 1, 0, 1),
            cmap="Oranges", vmin=0, vmax=2, alpha=0.4, interpolation="nearest",
        )
    if instance.secondary.count:
        ax.scatter(
            instance.secondary.positions[:, 0], instance.secondary.positions[:, 1],
            s=2, c="tab:blue", alpha=0.5, label=f"secondary ({instance.secondary.count})",
        )
    if instance.primary.count:
        ax.scatter(
            instance.primary.positions[:, 0], instance.primary.positions[:, 1],
            s=14, c="tab:red", label=f"primary ({instance.primary.count})",
        )
    if instance.bs_positions is not None and len(instance.bs_positions):
        ax.scatter(
            instance.bs_positions[:, 0], instance.bs_positions[:, 1],
            s=40, c="black", marker="^", label=f"base stations ({len(instance.bs_positions)})",
        )
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1)
    ax.set_aspect("equal")
    ax.legend(loc="upper right", fontsize=8)
    ax.set_title(f"deployment, n={instance.config.n:g}, model={instance.config.model.value}")
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)


def plot_load_heatmap(counts: np.ndarray, path: str, title: str = "per-cell load") -> None:
    """Served-path counts per cell; counts is a (rows, cols) array."""
    fig, ax = plt.subplots(figsize=(6.4, 5.6))
    im = ax.imshow(counts, origin="lower", interpolation="nearest", cmap="viridis")
    fig.colorbar(im, ax=ax, label="paths through cell")
    ax.set_xlabel("column")
    ax.set_ylabel("row")
    ax.set_title(title)
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)


def plot_scaling_fit(fit, path: str) -> None:
    """Log-log scatter of the sweep rows with the fitted power law."""
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    by_density: dict = {}
    for density, _, value in fit.rows:
        by_density.setdefault(density, []).append(value)
    for density, values in by_density.items():
        vals = [v for v in values if v > 0 and not np.isnan(v)]
        if vals:
            ax.scatter([density] * len(vals), vals, s=10, c="tab:blue", alpha=0.4)
    kept = [
        (d, x, mu) for d, x, mu in zip(fit.densities, fit.x_values, fit.means)
        if d not in fit.excluded and mu > 0
    ]
    if kept:
        ds = np.asarray([d for d, _, _ in kept])
        ax.plot(ds, [mu for _, _, mu in kept], "o-", c="tab:red", label="density mean")
        # the fit lives in the x variable's log space; map back through it
        xs = np.asarray([x for _, x, _ in kept])
        ax.plot(
            ds, np.exp(fit.intercept) * xs ** fit.slope, "--", c="black",
            label=f"slope {fit.slope:.3f} (r^2 {fit.r_squared:.3f})",
        )
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("density n")
    ax.set_ylabel(fit.statistic)
    ax.legend(fontsize=8)
    ax.set_title(f"{fit.statistic} vs {fit.x_name}")
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
