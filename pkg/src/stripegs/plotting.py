"""Figures written straight to files (PNG, SVG or PDF by extension).

Only the object-oriented matplotlib API is used, so no display backend is needed.
Dates and random ids are left out so that repeated runs give identical files.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from matplotlib import rc_context
from matplotlib.collections import LineCollection
from matplotlib.figure import Figure
from matplotlib.patches import Rectangle


_NO_DATE = {".svg": {"Date": None}, ".pdf": {"CreationDate": None, "ModDate": None}}


def _save(fig: Figure, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with rc_context({"svg.hashsalt": "stripegs"}):
        fig.savefig(path, bbox_inches="tight", dpi=120, metadata=_NO_DATE.get(path.suffix.lower()))
    return path


def energy_curve_figure(curve, path) -> Path:
    """``e_s(h)`` with the optimal width marked."""
    fig = Figure(figsize=(5.5, 3.8))
    ax = fig.add_subplot()
    ax.plot(curve.h, curve.values, ".-", lw=1)
    if curve.params.tau < 0:
        ax.axvline(curve.h_star, color="C3", ls="--", lw=1,
                   label=f"h* = {curve.h_star}" + (" (tie)" if curve.tie else ""))
        ax.legend()
    ax.set_xlabel("stripe width h")
    ax.set_ylabel("energy per site e_s(h)")
    ax.set_title(f"p = {curve.params.p:g}, d = {curve.params.d}, tau = {curve.params.tau:.3g}")
    return _save(fig, path)


def width_scan_figure(scan, path) -> Path:
    """Log-log plot of ``h*`` against ``|tau|`` with the least-squares line."""
    fig = Figure(figsize=(5.0, 3.8))
    ax = fig.add_subplot()
    t = np.abs(np.array(scan.taus))
    h = np.array(scan.h_star, dtype=float)
    ax.loglog(t, h, "o", label="h*")
    if len(t) > 1:
        c = np.polyfit(np.log(t), np.log(h), 1)
        tt = np.geomspace(t.min(), t.max(), 50)
        ax.loglog(tt, np.exp(np.polyval(c, np.log(tt))), "-", lw=1, label=f"slope {c[0]:.3f}")
    ax.set_xlabel("|tau|")
    ax.set_ylabel("optimal width h*")
    ax.legend()
    return _save(fig, path)


def _bond_segments(cs):
    ox, oy = cs.origin
    vi, vj = np.nonzero(cs.vertical_bonds)
    hi, hj = np.nonzero(cs.horizontal_bonds)
    # same site conventions as ContourSet.vkey / hkey
    segs = [((ox + i, oy + j - 1), (ox + i, oy + j)) for i, j in zip(vi, vj)]
    segs += [((ox + i - 1, oy + j), (ox + i, oy + j)) for i, j in zip(hi, hj)]
    return segs


def decomposition_figure(partition, path, show_regions: bool = True) -> Path:
    """Minus sites, tile grid, bad tiles (red), good regions (tinted) and contour bonds."""
    cs = partition.contours
    ox, oy = cs.origin
    minus = cs.minus[1:-1, 1:-1]
    nx, ny = minus.shape
    fig = Figure(figsize=(6, 6 * ny / max(nx, 1)))
    ax = fig.add_subplot()
    ax.imshow(np.where(minus, 0.55, 1.0).T, origin="lower", cmap="gray", vmin=0, vmax=1,
              extent=(ox, ox + nx, oy, oy + ny), interpolation="nearest")
    L = partition.ell
    for a in range(partition.ntiles[0]):
        for b in range(partition.ntiles[1]):
            x, y = partition.tile_coords(a, b)
            if partition.bad[a, b]:
                ax.add_patch(Rectangle((x, y), L, L, fc="red", alpha=0.18, ec="none"))
            elif show_regions:
                ax.add_patch(Rectangle((x, y), L, L, fc=f"C{partition.labels[a, b] % 10}", alpha=0.12, ec="none"))
            ax.add_patch(Rectangle((x, y), L, L, fill=False, ec="0.4", lw=0.6))
    ax.add_collection(LineCollection(_bond_segments(cs), colors="navy", linewidths=0.8))
    ax.set_xlim(ox, ox + nx)
    ax.set_ylim(oy, oy + ny)
    ax.set_aspect("equal")
    ax.set_title(f"ell = {L}, N_c = {cs.n_corners}, bad tiles = {partition.n_bad}")
    return _save(fig, path)


def sliced_region_figure(sliced, path) -> Path:
    """A deformed good region with its slices and boundary segments labelled by index.

    Slices and segments carry site coordinates.
    """
    region = sliced.region
    ox, oy = region.origin
    mask = region.mask
    minus = region.minus_window & mask
    nx, ny = mask.shape
    img = np.where(mask, np.where(minus, 0.45, 0.82), 1.0)
    fig = Figure(figsize=(6, 6 * ny / max(nx, 1)))
    ax = fig.add_subplot()
    ax.imshow(img.T, origin="lower", cmap="gray", vmin=0, vmax=1, extent=(ox, ox + nx, oy, oy + ny),
              interpolation="nearest")
    for s in sliced.slices:
        ax.add_patch(Rectangle((s.x0, s.y0), s.x1 - s.x0, s.y1 - s.y0, fill=False, ec="C0", lw=0.8))
    for seg in sliced.segments:
        x = 0.5 * (seg.x0 + seg.x1)
        y = seg.y
        ax.plot([seg.x0, seg.x1], [y, y], color="C3", lw=1.5)
        ax.text(x, y + (1.5 if seg.side == "top" else -3.5), f"s{seg.index}", fontsize=6, ha="center")
    ax.set_aspect("equal")
    ax.set_title(f"{len(sliced.slices)} slices, {len(sliced.segments)} segments")
    return _save(fig, path)


def search_figure(report, path) -> Path:
    """The minimizers of a ground-state search side by side."""
    mins = report.minimizers[:6]
    fig = Figure(figsize=(2.2 * len(mins) + 0.5, 2.6))
    for k, m in enumerate(mins):
        ax = fig.add_subplot(1, len(mins), k + 1)
        a = np.asarray(m)
        a = a[:, None] if a.ndim == 1 else a
        ax.imshow(a.T, origin="lower", cmap="gray", vmin=-1, vmax=1, interpolation="nearest")
        ax.set_xticks([])
        ax.set_yticks([])
    fig.suptitle(f"{report.method}: E = {report.energy.value:.6g}")
    return _save(fig, path)


def constants_figure(fit, path) -> Path:
    """Fitted constants against the tile side."""
    fig = Figure(figsize=(5.0, 3.8))
    ax = fig.add_subplot()
    ell = [row["ell"] for row in fit.table]
    for k in ("C3", "C2", "c1", "c2"):
        ax.plot(ell, [row[k] for row in fit.table], "o-", label=k)
    ax.set_xlabel("tile side ell")
    ax.set_ylabel("fitted constant")
    ax.set_yscale("log")
    ax.legend()
    return _save(fig, path)
