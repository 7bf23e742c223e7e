"""SVG rendering of the experiment outputs.

The CSVs are the source of truth; these helpers only read them back and
draw. Figures are deterministic across reruns: fixed svg hash salt, no
embedded creation date.
"""

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .runio import read_csv  # noqa: E402

matplotlib.rcParams["svg.hashsalt"] = "ns-flows"

_GRID = 200
_EXTENT = (-3.5, 3.5, -3.5, 3.5)
_NO_DATE = {"Date": None}


def _extent_around(points, margin=1.0):
    """Square window covering the points with a margin on every side."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    centre = (lo + hi) / 2.0
    half = float(np.max(hi - lo)) / 2.0 + margin
    return (
        centre[0] - half, centre[0] + half,
        centre[1] - half, centre[1] + half,
    )


def _grid_points(extent, grid):
    xs = np.linspace(extent[0], extent[1], grid)
    ys = np.linspace(extent[2], extent[3], grid)
    gx, gy = np.meshgrid(xs, ys)
    return np.column_stack([gx.ravel(), gy.ravel()])


def mixture_grid(gm, extent=_EXTENT, grid=_GRID):
    """Target density on a grid x grid lattice (rows indexed by y)."""
    pts = _grid_points(extent, grid)
    dens = np.zeros(pts.shape[0])
    for j in range(gm.n_components):
        z = np.linalg.solve(gm._chols[j], (pts - gm.means[j]).T)
        logp = -0.5 * (
            gm.dim * np.log(2.0 * np.pi) + gm._logdets[j] + np.einsum("dn,dn->n", z, z)
        )
        dens += gm.weights[j] * np.exp(logp)
    return dens.reshape(grid, grid)


def particle_grid(atoms, weights, bandwidth, extent=_EXTENT, grid=_GRID):
    """Density implied by the particle measure under the model kernel."""
    pts = _grid_points(extent, grid)
    d2 = ((pts[:, None, :] - atoms[None, :, :]) ** 2).sum(axis=-1)
    h2 = bandwidth * bandwidth
    dens = np.exp(-d2 / (2.0 * h2)) @ weights / (2.0 * np.pi * h2)
    return dens.reshape(grid, grid)


def _heat_panel(ax, dens, extent, title):
    ax.imshow(
        dens,
        origin="lower",
        extent=extent,
        cmap="magma",
        interpolation="bilinear",
    )
    ax.set_title(title, fontsize=9)
    ax.set_xticks([])
    ax.set_yticks([])


def render_experiment1(out_dir, gm, bandwidth):
    """Four panels: target density, then per-mode estimated density with
    the final particles scattered on top, sized by weight."""
    header, rows = read_csv(os.path.join(out_dir, "experiment1_particles.csv"))
    by_mode = {}
    for mode, _idx, x0, x1, w in rows:
        by_mode.setdefault(mode, []).append((float(x0), float(x1), float(w)))
    modes = list(by_mode)
    all_atoms = np.vstack(
        [np.asarray(gm.means)] + [np.array(by_mode[m])[:, :2] for m in modes]
    )
    extent = _extent_around(all_atoms)
    fig, axes = plt.subplots(1, 1 + len(modes), figsize=(3.1 * (1 + len(modes)), 3.2))
    axes = np.atleast_1d(axes)
    _heat_panel(axes[0], mixture_grid(gm, extent), extent, "target")
    for ax, mode in zip(axes[1:], modes):
        arr = np.array(by_mode[mode])
        atoms, weights = arr[:, :2], arr[:, 2]
        _heat_panel(ax, particle_grid(atoms, weights, bandwidth, extent), extent, mode)
        ax.scatter(
            atoms[:, 0],
            atoms[:, 1],
            s=400.0 * weights,
            c="white",
            edgecolors="black",
            linewidths=0.4,
            alpha=0.8,
        )
        ax.set_xlim(extent[0], extent[1])
        ax.set_ylim(extent[2], extent[3])
    fig.tight_layout()
    svg = os.path.join(out_dir, "experiment1_particles.svg")
    fig.savefig(svg, metadata=_NO_DATE)
    plt.close(fig)
    return svg


def render_bands(csv_path, svg_path, title):
    """Mean W2 with quantile band per arm over n, log-scale y axis."""
    header, rows = read_csv(csv_path)
    by_arm = {}
    for n, arm, mean, lower, upper in rows:
        by_arm.setdefault(arm, []).append((int(n), float(mean), float(lower), float(upper)))
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    for arm in sorted(by_arm):
        arr = np.array(sorted(by_arm[arm]))
        ax.plot(arr[:, 0], arr[:, 1], marker="o", markersize=3, label=arm)
        ax.fill_between(arr[:, 0], arr[:, 2], arr[:, 3], alpha=0.25)
    ax.set_yscale("log")
    ax.set_xlabel("n")
    ax.set_ylabel("W2 to truth")
    ax.set_title(title, fontsize=10)
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    fig.savefig(svg_path, metadata=_NO_DATE)
    plt.close(fig)
    return svg_path
