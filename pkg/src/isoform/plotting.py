"""Matplotlib figure rendering for meshes, spectra and pipelines.

Everything renders straight to a file with the Agg backend, so the CLI can
drop figures next to its reports on headless machines.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from mpl_toolkits.mplot3d.art3d import Line3DCollection, Poly3DCollection  # noqa: E402


def _set_equal_aspect(ax, points):
    lo = points.min(axis=0)
    hi = points.max(axis=0)
    center = (lo + hi) / 2
    radius = float((hi - lo).max()) / 2 or 1.0
    ax.set_xlim(center[0] - radius, center[0] + radius)
    ax.set_ylim(center[1] - radius, center[1] + radius)
    ax.set_zlim(center[2] - radius, center[2] + radius)


def _add_mesh(ax, positions, faces, face_color, edge_color, alpha=0.85):
    polys = [positions[list(f)] for f in faces]
    coll = Poly3DCollection(
        polys, facecolors=face_color, edgecolors=edge_color, linewidths=0.4,
        alpha=alpha,
    )
    ax.add_collection3d(coll)


def save_mesh_figure(realization, path, title=None, edge_values=None):
    """Render a triangulated realization; optionally color edges by value."""
    fig = plt.figure(figsize=(6, 6))
    ax = fig.add_subplot(projection="3d")
    pos = realization.positions
    _add_mesh(ax, pos, realization.mesh.triangles, "#d8e6f2", "#40506a")
    if edge_values is not None:
        segs = pos[realization.mesh.edges]
        vals = np.asarray(edge_values, dtype=float)
        lc = Line3DCollection(segs, cmap="viridis", linewidths=1.2)
        lc.set_array(vals)
        ax.add_collection3d(lc)
        fig.colorbar(lc, ax=ax, shrink=0.7)
    _set_equal_aspect(ax, pos)
    ax.set_axis_off()
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=160)
    plt.close(fig)


def save_spectrum_figure(singular_values, threshold, path, title=None):
    """Log plot of a singular-value spectrum with the rank threshold."""
    fig, ax = plt.subplots(figsize=(6, 4))
    s = np.asarray(singular_values, dtype=float)
    floor = max(threshold * 1e-4, 1e-300)
    ax.semilogy(
        np.arange(1, len(s) + 1), np.maximum(s, floor), ".-", lw=0.8, ms=4
    )
    ax.axhline(threshold, color="crimson", lw=1.0, ls="--", label="rank threshold")
    ax.set_xlabel("index")
    ax.set_ylabel("singular value")
    ax.legend(loc="best")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=160)
    plt.close(fig)


def save_minimal_figure(surface, path, title=None):
    """Gauss map and minimal surface side by side."""
    fig = plt.figure(figsize=(11, 5.5))
    ax1 = fig.add_subplot(1, 2, 1, projection="3d")
    gauss = surface.gauss
    _add_mesh(ax1, gauss.positions, gauss.mesh.triangles, "#f2e3d5", "#6a5340")
    _set_equal_aspect(ax1, gauss.positions)
    ax1.set_axis_off()
    ax1.set_title("Gauss map")

    ax2 = fig.add_subplot(1, 2, 2, projection="3d")
    cells = [faces for _, faces in surface.dual_cells()]
    _add_mesh(ax2, surface.dual_positions, cells, "#d8e6f2", "#40506a")
    _set_equal_aspect(ax2, surface.dual_positions)
    ax2.set_axis_off()
    ax2.set_title(title or "minimal surface")
    fig.tight_layout()
    fig.savefig(path, dpi=160)
    plt.close(fig)


def save_angle_histogram(angles, path, title=None):
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.hist(np.asarray(angles, dtype=float), bins=40, color="#40506a")
    ax.set_xlabel("angle [rad]")
    ax.set_ylabel("count")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=160)
    plt.close(fig)


def save_quadnet_figure(net, dual_points, path, title=None):
    """Wireframes of a quad net and its dual."""
    fig = plt.figure(figsize=(11, 5.5))
    for idx, (pts, name) in enumerate(
        [(net.points, "net"), (dual_points, "dual")], start=1
    ):
        ax = fig.add_subplot(1, 2, idx, projection="3d")
        segs = []
        m1, n1, _ = pts.shape
        for m in range(m1):
            for n in range(n1):
                if m + 1 < m1:
                    segs.append([pts[m, n], pts[m + 1, n]])
                if n + 1 < n1:
                    segs.append([pts[m, n], pts[m, n + 1]])
        ax.add_collection3d(Line3DCollection(segs, colors="#40506a", linewidths=1.0))
        _set_equal_aspect(ax, pts.reshape(-1, 3))
        ax.set_axis_off()
        ax.set_title(name)
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=160)
    plt.close(fig)
