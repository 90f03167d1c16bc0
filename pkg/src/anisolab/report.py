"""Figure rendering for experiment run directories.

Reads the delimited outputs written by the experiment families and
saves one PNG per recognized CSV next to them (or into a separate
directory).  Rendering is read-only with respect to the run artifacts,
so replays stay byte-identical.
"""

from __future__ import annotations

import csv
import os
from collections import defaultdict

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

__all__ = ["render_run_report"]


def _read_csv(path: str) -> tuple[list[str], list[list[str]]]:
    with open(path, "r", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [row for row in reader if row]
    return header, rows


def _save(fig, out_dir: str, name: str, written: list) -> None:
    path = os.path.join(out_dir, name)
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    written.append(path)


def _plot_voronoi(rows, out_dir, written):
    ok = np.array([r[4] == "1" for r in rows])
    ndim = np.array([int(r[2]) for r in rows])
    fig, ax = plt.subplots(figsize=(5, 3.5))
    dims = sorted(set(ndim))
    ax.bar([d - 0.15 for d in dims],
           [np.sum((ndim == d) & ok) for d in dims], width=0.3, label="pass")
    ax.bar([d + 0.15 for d in dims],
           [np.sum((ndim == d) & ~ok) for d in dims], width=0.3, label="fail")
    ax.set_xlabel("index dimension N")
    ax.set_ylabel("trials")
    ax.set_title("star-shape property checks")
    ax.legend()
    _save(fig, out_dir, "voronoi.png", written)


def _plot_covering(rows, out_dir, written):
    by_n = defaultdict(list)
    for r in rows:
        by_n[int(r[1])].append(int(r[2]))
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for n, counts in sorted(by_n.items()):
        vals, freq = np.unique(counts, return_counts=True)
        ax.plot(vals, freq, marker="o", label=f"n = {n}")
    ax.set_xlabel("covering count")
    ax.set_ylabel("trials")
    ax.set_yscale("log")
    ax.set_title("nearest-to-reference covering counts")
    ax.legend()
    _save(fig, out_dir, "covering.png", written)


def _plot_integral(rows, out_dir, written):
    by_beta = defaultdict(lambda: defaultdict(list))
    for r in rows:
        by_beta[float(r[1])][int(r[0])].append(float(r[4]))
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for beta, per_m in sorted(by_beta.items()):
        ms = sorted(per_m)
        ax.plot(ms, [np.mean(per_m[m]) for m in ms], marker="o",
                label=f"beta = {beta:g}")
    ax.set_xscale("log", base=2)
    ax.set_xlabel("point-set size m")
    ax.set_ylabel("fitted bound constant C")
    ax.set_title("min-distance integral bound")
    ax.legend()
    _save(fig, out_dir, "integral.png", written)


def _plot_slnd(rows, out_dir, written):
    ratios = np.array([float(r[1]) for r in rows])
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.hist(ratios, bins=50)
    ax.axvline(ratios.min(), color="k", linestyle="--",
               label=f"min = {ratios.min():.3g}")
    ax.set_xlabel("condVar / min rho^2")
    ax.set_ylabel("configs")
    ax.set_title("strong local nondeterminism scan")
    ax.legend()
    _save(fig, out_dir, "slnd.png", written)


def _plot_localtime(rows, out_dir, written):
    hist_l = np.array([float(r[3]) for r in rows if r[2] == "hist_L"])
    by_radius = defaultdict(list)
    for r in rows:
        if r[2] == "L_ball":
            by_radius[float(r[0])].append(float(r[3]))
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.5))
    axes[0].hist(hist_l, bins=50)
    axes[0].set_xlabel("estimated local time at the level")
    axes[0].set_ylabel("replicates")
    axes[0].set_title("occupation histogram estimates")
    radii = np.array(sorted(by_radius))
    if radii.size:
        for n in (1, 2):
            means = [np.mean(np.array(by_radius[r]) ** n) for r in radii]
            axes[1].plot(radii, means, marker="o", label=f"E[L^{n}]")
        axes[1].set_xscale("log", base=2)
        axes[1].set_yscale("log", base=2)
        axes[1].set_xlabel("ball radius r")
        axes[1].set_title("moment scaling over shrinking balls")
        axes[1].legend()
    _save(fig, out_dir, "localtime.png", written)


def _plot_levelset(rows, out_dir, written):
    by_order = defaultdict(list)
    for r in rows:
        by_order[int(r[1])].append(int(r[2]))
    orders = np.array(sorted(by_order))
    means = np.array([np.mean(by_order[q]) for q in orders])
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(orders, np.log2(np.maximum(means, 1e-12)), marker="o")
    ax.set_xlabel("dyadic order q")
    ax.set_ylabel("log2 mean N_q")
    ax.set_title("level-set box counts")
    _save(fig, out_dir, "levelset.png", written)


def _plot_she(rows, out_dir, written):
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for kind in ("spatial", "temporal"):
        lag = [float(r[1]) for r in rows if r[0] == kind]
        msq = [float(r[2]) for r in rows if r[0] == kind]
        if lag:
            ax.plot(lag, msq, marker="o", label=kind)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("lag")
    ax.set_ylabel("increment mean square")
    ax.set_title("heat-equation increment scaling")
    ax.legend()
    _save(fig, out_dir, "she.png", written)


_PLOTTERS = {
    "voronoi.csv": _plot_voronoi,
    "covering.csv": _plot_covering,
    "integral.csv": _plot_integral,
    "slnd.csv": _plot_slnd,
    "localtime.csv": _plot_localtime,
    "levelset.csv": _plot_levelset,
    "she.csv": _plot_she,
}


def render_run_report(run_dir: str, out_dir: str | None = None) -> list[str]:
    """Render PNG figures for every recognized CSV in a run directory.

    Returns the list of figure paths written.
    """
    out_dir = out_dir or run_dir
    os.makedirs(out_dir, exist_ok=True)
    written: list[str] = []
    for name, plotter in _PLOTTERS.items():
        path = os.path.join(run_dir, name)
        if os.path.exists(path):
            _, rows = _read_csv(path)
            if rows:
                plotter(rows, out_dir, written)
    if not written:
        raise FileNotFoundError(f"no recognized experiment CSVs in {run_dir}")
    return written
