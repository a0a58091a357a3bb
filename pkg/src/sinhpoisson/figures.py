"""Matplotlib renderings written next to the delimited outputs.

Every report-producing subcommand saves a PNG alongside its CSV unless
figures are switched off; CSV stays the authoritative, bit-reproducible
record and the figures are a quick visual check.
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .torus import Field, TorusGrid
from .region import RegionSpec, triangles
from .bubbles import ExpansionReport
from .analysis import MassReport

__all__ = [
    "save_region_figure",
    "save_bubble_scan_figure",
    "save_field_figure",
    "save_sweep_figure",
    "save_analysis_figure",
]


def save_region_figure(spec: RegionSpec, points, results, path) -> None:
    """The two admissible triangles plus any evaluated points."""
    t1, t2 = triangles(spec)
    fig, ax = plt.subplots(figsize=(6, 5))
    for tri, color, label in ((t1, "tab:blue", "T1"), (t2, "tab:orange", "T2")):
        xs = [v[0] for v in tri.vertices] + [tri.vertices[0][0]]
        ys = [v[1] for v in tri.vertices] + [tri.vertices[0][1]]
        ax.fill(xs, ys, alpha=0.25, color=color, label=label)
        ax.plot(xs, ys, color=color, lw=1.0)
    for (x, y), inside in zip(points, results):
        ax.plot(x, y, "o" if inside else "x", color="tab:green" if inside else "tab:red",
                ms=8, mew=2)
    ax.set_xlabel(r"$\lambda_1$")
    ax.set_ylabel(r"$\lambda_2$")
    ax.set_title(f"admissible region, gamma={spec.gamma:g}, mu1*vol={spec.mu1_vol:.4f}")
    ax.legend(loc="upper right")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_bubble_scan_figure(report: ExpansionReport, path) -> None:
    """Scanned quantities against log(1/eps^2) with their affine fits."""
    t = np.log(1.0 / np.asarray(report.eps) ** 2)
    fig, axes = plt.subplots(2, 3, figsize=(12, 6), sharex=True)
    for ax, fit in zip(axes.ravel(), report.fits):
        ax.plot(t, fit.values, "o", ms=5)
        ax.plot(t, fit.slope * t + fit.intercept, "-", lw=1.0,
                label=f"slope {fit.slope:.3f}\nexpected {fit.expected_slope:.3f}")
        ax.set_title(fit.name + (" (underresolved)" if fit.resolution_warning else ""))
        ax.legend(fontsize=8)
        ax.set_xlabel(r"$\log(1/\epsilon^2)$")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_field_figure(f: Field, path, title: str = "") -> None:
    grid = f.grid
    fig, ax = plt.subplots(figsize=(6, 5))
    im = ax.pcolormesh(grid.x, grid.y, f.values, shading="nearest", cmap="RdBu_r")
    fig.colorbar(im, ax=ax)
    ax.set_aspect("equal")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_sweep_figure(manifest_rows, trend_rows, path) -> None:
    """Per-step J, sup-norm, and dominant masses along the sweep."""
    lam1 = [r["lambda1"] for r in manifest_rows]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(11, 4.5))
    ax1.plot(lam1, [r["J"] for r in manifest_rows], "o-", label="J")
    ax1.plot(lam1, [r["supnorm"] for r in manifest_rows], "s-", label="sup norm")
    ax1.set_xlabel(r"$\lambda_1$")
    ax1.invert_xaxis()
    ax1.legend()
    ax1.set_title("level and amplitude")
    ax2.plot([r["lambda1"] for r in trend_rows],
             [r["m1_dominant"] for r in trend_rows], "o-", label="dominant m1")
    ax2.axhline(8 * math.pi, color="k", ls="--", lw=0.8, label=r"$8\pi$")
    ax2.set_xlabel(r"$\lambda_1$")
    ax2.invert_xaxis()
    ax2.legend()
    ax2.set_title("dominant local mass")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_analysis_figure(report: MassReport, grid: TorusGrid, path) -> None:
    fig, axes = plt.subplots(1, 2, figsize=(11, 4.5))
    for ax, dens, name in (
        (axes[0], report.density1, "density 1"),
        (axes[1], report.density2, "density 2"),
    ):
        im = ax.pcolormesh(grid.x, grid.y, dens, shading="nearest", cmap="viridis")
        fig.colorbar(im, ax=ax)
        for cand in report.candidates:
            ax.plot(cand.point[0], cand.point[1], "r+", ms=12, mew=2)
            circle = plt.Circle(cand.point, cand.radius, fill=False, color="r", lw=0.8)
            ax.add_patch(circle)
        ax.set_aspect("equal")
        ax.set_title(name)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
