"""Four figure views over a run directory, written as vector PDF.

Output is deterministic: a fixed style sheet, no timestamps in the PDF
metadata, and nothing drawn from wall-clock or environment state.  The
run directory itself is never written to; figures refuse to land inside
it.
"""
from __future__ import annotations

import math
import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .artifacts import VIEWS, RunArtifacts, SchemaError

STYLE = {
    "figure.figsize": (7.0, 4.4),
    "font.size": 11,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "axes.titlesize": 12,
    "legend.frameon": False,
    "savefig.bbox": "tight",
}

_PDF_METADATA = {"CreationDate": None, "Producer": None, "Creator": None}


def _save(fig, out_path):
    fig.savefig(out_path, format="pdf", metadata=_PDF_METADATA)
    plt.close(fig)
    return out_path


def figure_lyapunov(data, out_path):
    m = data.columns["m"]
    lam = data.columns["lambda1"]
    lo = data.columns["ci_lo"]
    hi = data.columns["ci_hi"]
    label = "final lambda1 = %.4f, 95%% CI [%.4f, %.4f]" % (lam[-1], lo[-1],
                                                            hi[-1])
    fig, ax = plt.subplots()
    if data.n_rows == 1:
        ax.errorbar(m, lam, yerr=np.vstack([lam - lo, hi - lam]), fmt="o",
                    capsize=4, label=label)
    else:
        ax.fill_between(m, lo, hi, alpha=0.25, label="95% CI")
        ax.plot(m, lam, marker="o", label=label)
    ax.set_xlabel("composed steps m")
    ax.set_ylabel("top exponent estimate")
    ax.set_title("Lyapunov estimate convergence")
    ax.legend()
    return _save(fig, out_path)


def figure_correlations(data, out_path):
    m = data.columns["m"]
    c = data.columns["c_m"]
    se = data.columns["stderr"]
    mag = np.abs(c)
    fig, ax = plt.subplots()
    pos = mag > 0
    ax.errorbar(m[pos], mag[pos], yerr=se[pos], fmt="o-", capsize=3,
                label="|c_m|")
    ax.set_yscale("log")
    summary = data.summary or {}
    rate = summary.get("lambda_hat")
    if rate is not None and pos.any():
        win = int(summary.get("window_len") or int(pos.sum()))
        k0 = int(np.argmax(pos))
        ks = m[k0:k0 + win]
        guide = mag[k0] * rate ** (ks - m[k0])
        ax.plot(ks, guide, "--",
                label="fitted rate %.3f (R2 %.3f)"
                      % (rate, summary.get("r2", math.nan)))
    ax.set_xlabel("composed steps m")
    ax.set_ylabel("|correlation|")
    ax.set_title("Correlation decay")
    ax.legend()
    return _save(fig, out_path)


def figure_mix(data, out_path):
    if data.n_rows == 0:
        raise SchemaError("mix.csv: no rows")
    m = data.columns["m"]
    scale = data.columns["mix_scale"]
    fig, ax = plt.subplots()
    pos = scale > 0
    ax.plot(m[pos], scale[pos], marker="o", label="mixing scale")
    if pos.any():
        ax.set_yscale("log")
    summary = data.summary or {}
    notes = []
    if summary.get("slope") is not None:
        notes.append("slope %.3f (R2 %.3f)" % (summary["slope"],
                                               summary.get("r2", math.nan)))
    if summary.get("eta_hat") is not None:
        notes.append("eta_hat %.3f" % summary["eta_hat"])
    if summary.get("xi_hat") is not None:
        notes.append("xi_hat %.3e" % summary["xi_hat"])
    if notes:
        ax.annotate("\n".join(notes), xy=(0.03, 0.05),
                    xycoords="axes fraction", va="bottom")
    ax.set_xlabel("composed steps m")
    ax.set_ylabel("largest ball radius with |mean| > 1")
    ax.set_title("Mixing scale decay")
    ax.legend()
    return _save(fig, out_path)


def figure_drift(data, out_path):
    """One polar heatmap of the one-step drift ratio per fixed point;
    rings are the sampled radii on a log scale."""
    cq = data.columns["center_q"]
    cp = data.columns["center_p"]
    centers = sorted(set(zip(np.round(cq, 9), np.round(cp, 9))))
    if not centers:
        raise SchemaError("drift.csv: no rows")
    ncol = 2 if len(centers) > 1 else 1
    nrow = (len(centers) + ncol - 1) // ncol
    fig, axes = plt.subplots(nrow, ncol, figsize=(4.0 * ncol, 3.6 * nrow),
                             subplot_kw={"projection": "polar"})
    axes = np.atleast_1d(axes).ravel()
    ratio = data.columns["ratio"]
    vmin, vmax = float(ratio.min()), float(ratio.max())
    mesh = None
    for ax, (q0, p0) in zip(axes, centers):
        sel = (np.round(cq, 9) == q0) & (np.round(cp, 9) == p0)
        radii = np.unique(data.columns["radius"][sel])
        angles = np.unique(data.columns["angle"][sel])
        grid = np.full((len(radii), len(angles)), math.nan)
        ri = np.searchsorted(radii, data.columns["radius"][sel])
        ai = np.searchsorted(angles, data.columns["angle"][sel])
        grid[ri, ai] = ratio[sel]
        mesh = ax.pcolormesh(angles, np.log(radii), grid, shading="nearest",
                             vmin=vmin, vmax=vmax)
        ax.set_yticklabels([])
        ax.set_xticklabels([])
        ax.set_title("center (%.2f, %.2f)" % (q0, p0), fontsize=10)
    for ax in axes[len(centers):]:
        ax.set_visible(False)
    fig.colorbar(mesh, ax=list(axes[:len(centers)]), shrink=0.85,
                 label="E[V after] / V")
    fig.suptitle("One-step drift ratio near the fixed set")
    return _save(fig, out_path)


_FIGURES = {"lyapunov": figure_lyapunov, "correlations": figure_correlations,
            "mix": figure_mix, "drift": figure_drift}


def render(run_dir: str, which: str = "all", out_dir: str | None = None):
    """Render the requested views; returns the written figure paths."""
    arts = RunArtifacts(run_dir)
    views = VIEWS if which == "all" else (which,)
    if out_dir is None:
        out_dir = os.path.normpath(run_dir) + "_figures"
    run_abs = os.path.abspath(run_dir)
    out_abs = os.path.abspath(out_dir)
    if os.path.commonpath([run_abs, out_abs]) == run_abs:
        raise SchemaError("refusing to write figures inside the run "
                          "directory: %s" % out_dir)
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    with plt.rc_context(STYLE):
        for view in views:
            data = arts.load(view)
            out_path = os.path.join(out_dir, view + ".pdf")
            paths.append(_FIGURES[view](data, out_path))
    return paths
