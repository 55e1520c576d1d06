"""Deterministic matplotlib rendering of point clouds and run curves.

Figures are rasterized through the Agg backend with a pinned style, so a
fixed input produces byte-identical PNG files: no timestamps are
embedded, fonts and dpi are fixed, and the palette is a constant map
from class label order to color.

Points outside the requested bounds are dropped before plotting; the
returned footer counts them per class so nothing disappears silently.
"""

from __future__ import annotations

import io

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .checkpoint import atomic_write_bytes

__all__ = ["render_scatter", "render_metrics"]

_PALETTE = ("#4878a8", "#c44e52", "#55a868", "#8172b3")
_DPI = 100


def _bounds_from(classes: list[tuple[str, np.ndarray]]) -> tuple[float, float, float, float]:
    pts = [np.asarray(p, dtype=np.float64) for _, p in classes if np.asarray(p).size]
    if not pts:
        return (-1.0, 1.0, -1.0, 1.0)
    allp = np.concatenate(pts, axis=0)
    lo = allp.min(axis=0)
    hi = allp.max(axis=0)
    span = np.maximum(hi - lo, 1e-9)
    pad = 0.05 * span
    return (float(lo[0] - pad[0]), float(hi[0] + pad[0]), float(lo[1] - pad[1]), float(hi[1] + pad[1]))


def render_scatter(
    path: str,
    classes: list[tuple[str, np.ndarray]],
    bounds: tuple[float, float, float, float] | None = None,
    resolution: int = 800,
) -> dict:
    """Scatter the labeled 2-D point sets into a square PNG.

    Returns a footer dict: per-class point and clipped counts. Bounds
    default to the tight box around all points plus 5% padding.
    """
    if resolution < 16:
        raise ValueError(f"resolution must be >= 16 pixels, got {resolution}")
    for label, pts in classes:
        a = np.asarray(pts, dtype=np.float64)
        if a.size and (a.ndim != 2 or a.shape[1] != 2):
            raise ValueError(f"class {label!r} must be N x 2, got shape {a.shape}")
    if bounds is None:
        bounds = _bounds_from(classes)
    x0, x1, y0, y1 = bounds
    if not (x1 > x0 and y1 > y0):
        raise ValueError(f"bounds must satisfy x1 > x0 and y1 > y0, got {bounds}")

    side = resolution / _DPI
    fig, ax = plt.subplots(figsize=(side, side), dpi=_DPI)
    footer = {"clipped": {}, "points": {}, "bounds": [x0, x1, y0, y1]}
    for i, (label, pts) in enumerate(classes):
        a = np.asarray(pts, dtype=np.float64).reshape(-1, 2)
        keep = (a[:, 0] >= x0) & (a[:, 0] <= x1) & (a[:, 1] >= y0) & (a[:, 1] <= y1)
        footer["points"][label] = int(a.shape[0])
        footer["clipped"][label] = int(a.shape[0] - keep.sum())
        a = a[keep]
        ax.scatter(
            a[:, 0], a[:, 1], s=4, linewidths=0, alpha=0.6,
            color=_PALETTE[i % len(_PALETTE)], label=label,
        )
    ax.set_xlim(x0, x1)
    ax.set_ylim(y0, y1)
    ax.set_aspect("equal")
    ax.legend(loc="upper right", fontsize=8, framealpha=0.9)
    ax.tick_params(labelsize=7)
    fig.tight_layout()
    _save_png(fig, path)
    plt.close(fig)
    return footer


def _save_png(fig, path: str) -> None:
    # Render to memory first so the file lands atomically and carries no
    # writer-version text chunk that could break byte determinism.
    buf = io.BytesIO()
    fig.savefig(buf, format="png", metadata={"Software": None})
    atomic_write_bytes(path, buf.getvalue())


def render_metrics(path: str, records: list[dict]) -> None:
    """Training curves from metrics-log records (one eval per record)."""
    rows = [r for r in records if "energy_distance" in r]
    if not rows:
        raise ValueError("no metric records to plot")
    steps = [r["step"] for r in rows]
    fig, axes = plt.subplots(1, 3, figsize=(10.8, 3.2), dpi=_DPI)
    panels = (
        ("energy_distance", lambda r: r["energy_distance"]),
        ("sliced_w1", lambda r: r["sliced_w1"]),
        ("stage-0 drift norm", lambda r: r["drift_norms"][0]),
    )
    for ax, (title, pick) in zip(axes, panels):
        vals = [pick(r) for r in rows]
        ax.plot(steps, vals, color=_PALETTE[0], marker="o", markersize=3, linewidth=1.2)
        ax.set_title(title, fontsize=9)
        ax.set_xlabel("step", fontsize=8)
        ax.tick_params(labelsize=7)
        if min(vals) > 0:
            ax.set_yscale("log")
    fig.tight_layout()
    _save_png(fig, path)
    plt.close(fig)
