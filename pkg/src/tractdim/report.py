"""Figure rendering for the report paths of the CLI.

Every report-producing subcommand can write a matplotlib figure next to
its delimited output.  Figures are plain files (Agg backend, no display)
and deliberately carry no timestamps.
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _new_axes(xlabel, ylabel, title):
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    return fig, ax


def _finish(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def fig_transfer_sweep(rows: list[dict], path):
    """Transfer values against log|w|, one line per (t, l) pair."""
    fig, ax = _new_axes("log |w|", "transfer value", "transfer operator sweep")
    series: dict[tuple, list] = {}
    for r in rows:
        series.setdefault((r["t"], r["l"]), []).append((r["u"], r["value"]))
    for (t, l), pts in sorted(series.items()):
        pts.sort()
        ax.semilogy([u for u, _ in pts], [v for _, v in pts],
                    marker=".", label=f"t={t:g}, l={l:g}")
    ax.legend(fontsize=8)
    return _finish(fig, path)


def fig_pressure(rows: list[dict], path):
    """Pressure against t with spread bars."""
    fig, ax = _new_axes("t", "pressure", "topological pressure")
    ts = [r["t"] for r in rows]
    ps = [r["P"] for r in rows]
    ss = [r["spread"] for r in rows]
    ax.errorbar(ts, ps, yerr=ss, marker="o", capsize=3)
    ax.axhline(0.0, color="k", lw=0.8)
    return _finish(fig, path)


def fig_hypdim_trend(rows: list[dict], path):
    """Dimension estimates against the translation, with brackets."""
    fig, ax = _new_axes("translation l", "dimension estimate", "Bowen-zero trend")
    ls = [r["l"] for r in rows if not math.isnan(r["h"])]
    hs = [r["h"] for r in rows if not math.isnan(r["h"])]
    lo = [r["h"] - r["h_lo"] for r in rows if not math.isnan(r["h"])]
    hi = [r["h_hi"] - r["h"] for r in rows if not math.isnan(r["h"])]
    if ls:
        ax.errorbar(ls, hs, yerr=[lo, hi], marker="o", capsize=3)
        ax.set_xscale("log")
    ax.axhline(1.0, color="k", lw=0.8, ls="--")
    return _finish(fig, path)


def fig_boxcount(scales, counts_upper, counts_lower, dim_upper, path):
    """log-log box counts with the fitted upper-variant slope."""
    fig, ax = _new_axes("log(1/scale)", "log N", "box-counting fit")
    x = np.log(1.0 / np.asarray(scales, dtype=float))
    ax.plot(x, np.log(np.asarray(counts_upper, dtype=float)), "o-",
            label="undecided counted in")
    low = np.asarray(counts_lower, dtype=float)
    if np.all(low > 0):
        ax.plot(x, np.log(low), "s--", label="undecided counted out")
    c = np.log(counts_upper[0]) - dim_upper * x[0]
    ax.plot(x, dim_upper * x + c, "k:", label=f"slope {dim_upper:.3f}")
    ax.legend(fontsize=8)
    return _finish(fig, path)


def fig_julia(image: np.ndarray, window, path):
    """Grayscale escape-time image with axis annotations."""
    fig, ax = plt.subplots(figsize=(6.0, 6.0))
    ax.imshow(image, cmap="gray", origin="lower", vmin=0, vmax=255,
              extent=(window[0], window[1], window[2], window[3]))
    ax.set_xlabel("Re z")
    ax.set_ylabel("Im z")
    ax.set_title("escape-time classification")
    return _finish(fig, path)
