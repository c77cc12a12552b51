"""Static figures written next to the CSV/JSON outputs.

Figures are derived artifacts only; nothing here feeds back into the numbers.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "font.size": 10,
    "axes.labelsize": 11,
    "legend.fontsize": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.5,
    "svg.hashsalt": "apsk-isac",
}


def _save(fig, path):
    fmt = str(path).rsplit(".", 1)[-1].lower()
    meta = {"Date": None} if fmt == "svg" else None
    fig.savefig(path, bbox_inches="tight", metadata=meta)
    plt.close(fig)


def plot_constellation(c, path, title: str | None = None):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4.5, 4.5))
        if c.ring_radii is not None:
            t = np.linspace(0, 2 * np.pi, 256)
            for r in c.ring_radii:
                ax.plot(r * np.cos(t), r * np.sin(t), ls="--", color="0.75", lw=0.8)
        ax.scatter(c.points.real, c.points.imag, s=12, color="C0", zorder=3)
        ax.set_aspect("equal")
        ax.set_xlabel("In-phase")
        ax.set_ylabel("Quadrature")
        ax.set_title(title or c.label)
        _save(fig, path)


def plot_frontier(fs, path, boundary=None, title: str | None = None):
    """Swept points, Pareto frontier, time-sharing segment and an optional external boundary."""
    pts = fs.points
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(6, 4.5))
        if pts:
            ax.scatter([p.variance for p in pts], [p.rate.value_bits for p in pts],
                       s=6, color="0.7", label="swept designs")
        front = fs.frontier
        if front:
            ax.plot([p.variance for p in front], [p.rate.value_bits for p in front],
                    "o-", ms=3, color="C0", label="APSK Pareto frontier")
        if fs.baseline is not None:
            seg = fs.baseline
            ax.plot(seg.variances, seg.rates, "--", color="C3", label="PSK-QAM time sharing")
        if boundary is not None:
            var, rate = boundary
            ax.plot(var, rate, ":", color="k", label="external boundary")
        ax.set_xlabel(r"Var$(|X|^2)$")
        ax.set_ylabel("Rate (bits/symbol)")
        cfg = fs.config
        ax.set_title(title or f"m={cfg.m}, SNR={cfg.snr_c_db:g} dB")
        ax.legend(loc="lower right")
        _save(fig, path)
