"""Matplotlib renders for the report paths (Agg backend, files only)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .optim import TraceRecord
from .reports import final_gaps

__all__ = [
    "convergence_figure",
    "run_figure",
    "accuracy_figure",
    "field_figure",
]

_GAP_FLOOR = 1e-16


def _save(fig, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def convergence_figure(
    curves: list[tuple[str, list[TraceRecord]]],
    path: str | Path,
    title: str | None = None,
) -> None:
    """Energy gap (against each run's final best) vs iteration, log scale.

    Restarted iterations are marked with crosses.
    """
    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    for label, records in curves:
        iters = np.array([r.iter for r in records])
        gaps = np.maximum(final_gaps(records), _GAP_FLOOR)
        (line,) = ax.semilogy(iters, gaps, label=label, linewidth=1.2)
        marks = np.array([r.restarted for r in records], dtype=bool)
        if marks.any():
            ax.semilogy(
                iters[marks],
                gaps[marks],
                "x",
                color=line.get_color(),
                markersize=4,
                linestyle="none",
            )
    ax.set_xlabel("iteration")
    ax.set_ylabel("energy gap")
    if title:
        ax.set_title(title)
    ax.legend(fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    _save(fig, path)


def run_figure(records: list[TraceRecord], path: str | Path, title: str | None = None) -> None:
    """Two panels for a single run: energy gap and accepted step size."""
    fig, (ax_gap, ax_alpha) = plt.subplots(
        2, 1, figsize=(6.4, 6.0), sharex=True, height_ratios=[2, 1]
    )
    iters = np.array([r.iter for r in records])
    gaps = np.maximum(final_gaps(records), _GAP_FLOOR)
    ax_gap.semilogy(iters, gaps, linewidth=1.2)
    marks = np.array([r.restarted for r in records], dtype=bool)
    if marks.any():
        ax_gap.semilogy(iters[marks], gaps[marks], "x", color="tab:red", markersize=4)
    ax_gap.set_ylabel("energy gap")
    ax_gap.grid(True, which="both", alpha=0.3)
    alphas = np.array([r.alpha for r in records])
    keep = iters > 0
    if keep.any():
        ax_alpha.semilogy(iters[keep], np.maximum(alphas[keep], _GAP_FLOOR), ".", markersize=3)
    ax_alpha.set_xlabel("iteration")
    ax_alpha.set_ylabel("step size")
    ax_alpha.grid(True, which="both", alpha=0.3)
    if title:
        ax_gap.set_title(title)
    _save(fig, path)


def accuracy_figure(
    dofs: list[int],
    coeff_errors: list[float],
    energy_errors: list[float],
    path: str | Path,
    title: str | None = None,
) -> None:
    """Coefficient and energy errors vs grid size, log-log."""
    fig, ax = plt.subplots(figsize=(5.6, 4.2))
    floor = 1e-18
    ax.loglog(dofs, np.maximum(coeff_errors, floor), "o-", label="coefficient error")
    ax.loglog(dofs, np.maximum(energy_errors, floor), "s-", label="energy error")
    ax.set_xlabel("modes per axis")
    ax.set_ylabel("error")
    if title:
        ax.set_title(title)
    ax.legend(fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    _save(fig, path)


def field_figure(
    values: np.ndarray,
    extent: tuple[float, float, float, float],
    path: str | Path,
    title: str | None = None,
) -> None:
    """Heatmap of a 2-d sample array indexed [ix, iy]."""
    fig, ax = plt.subplots(figsize=(5.4, 4.6))
    im = ax.imshow(
        values.T,
        origin="lower",
        extent=extent,
        aspect="equal",
        cmap="viridis",
        interpolation="nearest",
    )
    fig.colorbar(im, ax=ax, shrink=0.85)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    if title:
        ax.set_title(title)
    _save(fig, path)
