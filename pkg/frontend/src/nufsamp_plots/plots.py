"""Figure rendering: landscape heatmaps, spectral-density curves, trajectory
waterfalls and objective histories.

Output PNGs are byte-reproducible: fixed size and dpi, a pinned color map
recorded in the image metadata, and no timestamps.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .readers import read_grid, read_manifest, read_profile, read_trajectory

DPI = 150
COLORMAP = "viridis"
MARKER_COLOR = "red"


def _save(fig, out_path) -> None:
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(
        out_path,
        dpi=DPI,
        metadata={"Software": "nufsamp-plots", "ColorMap": COLORMAP},
    )
    plt.close(fig)


def _wrap(x, n_len):
    return ((np.asarray(x, dtype=float) + n_len / 2) % n_len) - n_len / 2


def plot_landscape(grid_csv, minima_json, out_image) -> dict:
    """Heatmap over [-N/2, N/2)^2 with the manifest's minima as red dots."""
    _, n_len, res, values = read_grid(grid_csv)
    manifest = read_manifest(minima_json)
    minima = np.asarray(manifest["minima"], dtype=float).reshape(-1, 2)
    half = n_len / 2
    fig, ax = plt.subplots(figsize=(5, 4.2))
    # rows of the value matrix index xi1, so transpose puts xi1 on x
    im = ax.imshow(
        values.T,
        origin="lower",
        extent=(-half, half, -half, half),
        cmap=COLORMAP,
        interpolation="nearest",
    )
    fig.colorbar(im, ax=ax)
    if minima.size:
        ax.scatter(minima[:, 0], minima[:, 1], s=6, c=MARKER_COLOR, marker=".")
    ax.set_xlim(-half, half)
    ax.set_ylim(-half, half)
    ax.set_xlabel("xi_1")
    ax.set_ylabel("xi_2")
    ax.set_title(manifest.get("term", ""))
    _save(fig, out_image)
    return {
        "out": str(out_image),
        "markers": int(len(minima)),
        "manifest_count": int(manifest["count"]),
        "xlim": [-half, half],
        "ylim": [-half, half],
    }


def plot_psd(profile_csvs, out_image, maxima_jsons=None) -> dict:
    """Overlayed spectral-density curves with maxima markers when given.

    Accepts one or more profile CSVs (e.g. the P = 1, 10, 100, 1000 family);
    maxima_jsons, when provided, must align with the CSV list.
    """
    if isinstance(profile_csvs, (str, Path)):
        profile_csvs = [profile_csvs]
    if maxima_jsons is None:
        maxima_jsons = [None] * len(profile_csvs)
    if len(maxima_jsons) != len(profile_csvs):
        raise ValueError("need one maxima manifest per profile (or none)")
    fig, ax = plt.subplots(figsize=(5.5, 3.8))
    markers = 0
    half = None
    for csv_path, manifest_path in zip(profile_csvs, maxima_jsons):
        meta, grid, rho = read_profile(csv_path)
        half = int(meta["config"]["n_len"]) / 2
        ax.plot(grid, rho, linewidth=1.0, label=Path(csv_path).stem)
        if manifest_path is not None:
            manifest = read_manifest(manifest_path)
            coords = np.asarray(manifest["maxima"], dtype=float)
            idx = np.searchsorted(grid, coords)
            idx = np.clip(idx, 0, grid.size - 1)
            ax.scatter(coords, rho[idx], s=12, c=MARKER_COLOR, marker=".", zorder=3)
            markers += int(manifest["count"])
    ax.set_xlim(-half, half)
    ax.set_xlabel("xi")
    ax.set_ylabel("average spectral density")
    ax.legend(fontsize=7)
    _save(fig, out_image)
    return {"out": str(out_image), "markers": markers, "xlim": [-half, half]}


def plot_trajectory(traj_csv, out_image) -> dict:
    """Waterfall of the scheme coordinates: iteration on the vertical axis,
    frequencies wrapped periodically into [-N/2, N/2) on the horizontal axis.

    When smoothed columns are present (stochastic runs averaged over the
    trailing window) those are plotted; wrap jumps are broken with NaNs so
    lines do not streak across the period boundary.
    """
    meta, iterations, schemes, smoothed, _ = read_trajectory(traj_csv)
    n_len = int(meta["config"]["n_len"])
    coords = smoothed if smoothed is not None else schemes
    wrapped = _wrap(coords, n_len)
    fig, ax = plt.subplots(figsize=(5, 4.2))
    for m in range(wrapped.shape[1]):
        col = wrapped[:, m].copy()
        jumps = np.abs(np.diff(col)) > n_len / 2
        col[1:][jumps] = np.nan  # break the line at wrap-arounds
        ax.plot(col, iterations, linewidth=0.7, color="C0")
    half = n_len / 2
    ax.set_xlim(-half, half)
    ax.set_ylim(iterations[0], iterations[-1])
    ax.set_xlabel("xi (periodic)")
    ax.set_ylabel("iteration")
    _save(fig, out_image)
    return {
        "out": str(out_image),
        "coordinates": int(wrapped.shape[1]),
        "smoothed": smoothed is not None,
        "xlim": [-half, half],
    }


def plot_objective(traj_csvs, out_image) -> dict:
    """Objective value against iteration for one or more runs, overlaid."""
    if isinstance(traj_csvs, (str, Path)):
        traj_csvs = [traj_csvs]
    fig, ax = plt.subplots(figsize=(5.5, 3.8))
    for path in traj_csvs:
        _, iterations, _, _, values = read_trajectory(path)
        ax.semilogy(iterations, values, linewidth=1.0, label=Path(path).stem)
    ax.set_xlabel("iteration")
    ax.set_ylabel("cost")
    ax.legend(fontsize=7)
    _save(fig, out_image)
    return {"out": str(out_image), "curves": len(traj_csvs)}
