"""Static SVG figures for trajectories and singularity reports.

All figures use the Agg backend and fixed SVG metadata, so re-running on
the same data writes byte-identical files.
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from ..geometry import aspect_ratio  # noqa: E402
from ..singularity import (  # noqa: E402
    CurvatureProxy,
    SingularityError,
    model_polylines,
    type1_rescale,
)

matplotlib.rcParams["svg.hashsalt"] = "eqlmcf"
matplotlib.rcParams["svg.fonttype"] = "none"


def _save(fig, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def _closed(pts, closed):
    return np.vstack([pts, pts[:1]]) if closed else pts


def _frames(traj, n_frames):
    idx = np.unique(np.linspace(0, len(traj) - 1, min(n_frames, len(traj))).round().astype(int))
    return [traj[int(i)] for i in idx]


def plot_montage(traj, path, n_frames=8, mirror=False, annotate_aspect=False):
    """Overlay of evenly spaced snapshots, coloured by time.

    ``mirror`` also draws ``-gamma`` (the same Lagrangian).  With
    ``annotate_aspect`` the legend lists each frame's height/width ratio.
    """
    fig, ax = plt.subplots(figsize=(6, 6))
    frames = _frames(traj, n_frames)
    cmap = plt.get_cmap("viridis")
    for k, snap in enumerate(frames):
        colour = cmap(k / max(len(frames) - 1, 1))
        pts = _closed(snap.curve.points, snap.curve.closed)
        label = f"t={snap.time:.4g}"
        if annotate_aspect:
            label += f", h/w={aspect_ratio(snap.curve):.3g}"
        ax.plot(pts[:, 0], pts[:, 1], color=colour, lw=1.0, label=label)
        if mirror:
            ax.plot(-pts[:, 0], -pts[:, 1], color=colour, lw=1.0, ls="--")
    ax.plot([0], [0], "k+", ms=8)
    ax.set_aspect("equal")
    ax.set_title("profile curve snapshots")
    ax.legend(fontsize=7, loc="best")
    return _save(fig, path)


def plot_monitor(traj, report, path):
    """``K^2 (T_hat - t)`` against ``t``; flat for Type I, growing for Type II."""
    proxy = CurvatureProxy.from_trajectory(traj)
    fig, ax = plt.subplots(figsize=(6, 4))
    T = report.T_hat
    if T is not None:
        mask = proxy.times < T
        mon = proxy.values[mask] ** 2 * (T - proxy.times[mask])
        ax.semilogy(proxy.times[mask], mon, ".-", lw=1.0)
        ax.set_ylabel(r"$K^2(\hat T - t)$")
        ax.set_title(f"monitor: verdict {report.type_verdict}, T_hat={T:.6g}")
    else:
        ax.semilogy(proxy.times, proxy.values, ".-", lw=1.0)
        ax.set_ylabel("K")
        ax.set_title("curvature proxy (no singular time)")
    ax.set_xlabel("t")
    return _save(fig, path)


def plot_overlay(traj, report, path, window=2.0):
    """Type I rescaled final state against its fitted model, in the window."""
    fig, ax = plt.subplots(figsize=(6, 6))
    m = report.blowup_match
    if report.T_hat is None or m is None:
        raise SingularityError("report has no Type I blow-up to plot")
    (rc,) = type1_rescale(traj, report.w_hat, report.T_hat, [m["sigma"]])
    pts = _closed(rc.curve.points, rc.curve.closed)
    for sign, ls in ((1, "-"), (-1, ":")):
        ax.plot(sign * pts[:, 0], sign * pts[:, 1], "C0", ls=ls, lw=1.2)
    ax.plot([], [], "C0", label=f"rescaled, sigma={m['sigma']:.4g}")
    name = m["model"]
    fitted = name
    if name == "unmatched":
        fitted = m["fits"][0]["model"] if m.get("fits") else None
    if fitted is not None:
        for k, (mp, closed) in enumerate(model_polylines(fitted, m["params"], window)):
            mp = _closed(mp, closed)
            ax.plot(mp[:, 0], mp[:, 1], "C3--", lw=1.0,
                    label=f"{name} (d={m['distance']:.3g})" if k == 0 else None)
    u = np.linspace(0, 2 * math.pi, 200)
    ax.plot(window * np.cos(u), window * np.sin(u), color="0.7", lw=0.6)
    lim = 1.2 * window
    ax.set_xlim(-lim, lim)
    ax.set_ylim(-lim, lim)
    ax.set_aspect("equal")
    ax.legend(fontsize=8, loc="upper right")
    ax.set_title("Type I rescaling vs model")
    return _save(fig, path)


def emit_plots(traj, report, out_dir, mirror=False, annotate_aspect=True):
    """Write ``montage.svg``, and with a report ``monitor.svg`` and
    ``overlay.svg``.  Returns the written paths."""
    out_dir = Path(out_dir)
    paths = [plot_montage(traj, out_dir / "montage.svg", mirror=mirror,
                          annotate_aspect=annotate_aspect)]
    if report is not None and report.T_hat is not None:
        paths.append(plot_monitor(traj, report, out_dir / "monitor.svg"))
        if report.blowup_match is not None:
            paths.append(plot_overlay(traj, report, out_dir / "overlay.svg",
                                      report.blowup_match.get("window", 2.0)))
    return paths
