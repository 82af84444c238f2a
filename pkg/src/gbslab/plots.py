"""Static SVG renderings of the CSV tables written by the other commands.

The SVG writer is pinned (fixed hash salt, no date) so that identical tables
render to identical files.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from gbslab.validation import read_table  # noqa: E402

SVG_META = {"Date": None, "Creator": None}


def _numeric(rows):
    header, body = rows[0], rows[1:]
    cols = {}
    for j, name in enumerate(header):
        try:
            cols[name] = np.array([float(r[j]) for r in body])
        except ValueError:
            cols[name] = [r[j] for r in body]
    return header, cols


def _save(fig, path):
    with plt.rc_context({"svg.hashsalt": "gbslab", "svg.fonttype": "none"}):
        fig.savefig(path, format="svg", metadata=SVG_META)
    plt.close(fig)


def _title(ax, meta, text):
    tag = f" (spec {meta['spec_hash']}, seed {meta.get('seed', '')})" if meta.get("spec_hash") else ""
    ax.set_title(text + tag, fontsize=9)


def plot_histogram_table(rows, meta, path, xlabel, title):
    header, cols = _numeric(rows)
    lo, hi = cols[header[0]], cols[header[1]]
    centers = 0.5 * (lo + hi)
    fig, ax = plt.subplots(figsize=(6, 4))
    for lab in header[2:]:
        c = cols[lab]
        total = c.sum()
        ax.step(centers, c / total if total else c, where="mid", label=lab)
    ax.set_xlabel(xlabel)
    ax.set_ylabel("fraction")
    ax.legend(fontsize=8)
    _title(ax, meta, title)
    _save(fig, path)


def plot_click_hist(rows, meta, path):
    header, cols = _numeric(rows)
    k = cols["clicks"]
    fig, ax = plt.subplots(figsize=(6, 4))
    for lab in header[1:]:
        c = cols[lab]
        ax.plot(k, c / max(c.sum(), 1), marker="o", ms=3, label=lab)
    ax.set_xlabel("clicks")
    ax.set_ylabel("probability")
    ax.legend(fontsize=8)
    _title(ax, meta, "Click-number distributions")
    _save(fig, path)


def plot_hog(rows, meta, path):
    header, cols = _numeric(rows)
    fig, ax = plt.subplots(figsize=(6, 4))
    for name in header[1:]:
        if name.startswith("confidence"):
            ax.plot(cols["t"], cols[name], label=name.replace("confidence_", "vs "))
    ax.set_ylim(-0.02, 1.02)
    ax.set_xlabel("samples")
    ax.set_ylabel("confidence in ideal model")
    ax.legend(fontsize=8)
    _title(ax, meta, "Cumulative likelihood-ratio test")
    _save(fig, path)


def plot_prob_curve(rows, meta, path):
    _, cols = _numeric(rows)
    centers = 0.5 * (cols["bin_lo"] + cols["bin_hi"])
    fig, ax = plt.subplots(figsize=(6, 4))
    for name, lab in (("reference_density", "ideal (theory)"), ("uniform_density", "uniform"),
                      ("samples_density", "samples")):
        ax.plot(centers, cols[name], label=lab)
    ax.set_xlabel("log10 ideal probability")
    ax.set_ylabel("density")
    ax.legend(fontsize=8)
    _title(ax, meta, "Probability of sampled patterns")
    _save(fig, path)


def plot_bench(rows, meta, path):
    _, cols = _numeric(rows)
    k, t = cols["k"], cols["median_seconds"]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.semilogy(k, t, "o", label="median")
    ax.vlines(k, cols["min"], cols["max"], lw=1)
    if len(k) >= 2:
        a, b = np.polyfit(k, np.log2(t), 1)
        ax.semilogy(k, 2.0 ** (a * k + b), "-", label=f"fit, ratio {2 ** a:.2f}/click")
    ax.set_xlabel("clicks k")
    ax.set_ylabel("seconds per Torontonian")
    ax.legend(fontsize=8)
    _title(ax, meta, "Kernel scaling")
    _save(fig, path)


def plot_cost(rows, meta, path):
    _, cols = _numeric(rows)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.errorbar(cols["N"], cols["cost_seconds"], yerr=cols["cost_err"], fmt="o", ms=3)
    ax.set_yscale("log")
    ax.set_xlabel("clicks N")
    ax.set_ylabel("classical cost (s)")
    _title(ax, meta, f"Classical cost, {meta.get('model', '')} model")
    _save(fig, path)


def plot_key_values(rows, meta, path, title="Summary"):
    """Two-column name/value table drawn as text, PASS/FAIL rows coloured."""
    body = rows[1:]
    fig, ax = plt.subplots(figsize=(6, 0.6 + 0.22 * len(body)))
    ax.axis("off")
    for i, (name, value, *_) in enumerate(body):
        y = 1 - (i + 0.5) / len(body)
        color = {"PASS": "tab:green", "FAIL": "tab:red", "True": "tab:green", "False": "tab:red"}.get(value, "black")
        ax.text(0.02, y, name, fontsize=8, va="center", transform=ax.transAxes)
        ax.text(0.70, y, value, fontsize=8, va="center", color=color, transform=ax.transAxes)
    _title(ax, meta, title)
    _save(fig, path)


def plot_unitary(path_in, path):
    from scipy import stats

    from gbslab.config import read_unitary

    U = read_unitary(path_in)
    m = U.shape[0]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8, 3.5))
    amp = (np.abs(U) ** 2).ravel()
    ax1.hist(amp, bins=40, density=True, histtype="step", label="elements")
    x = np.linspace(0, amp.max(), 200)
    ax1.plot(x, stats.beta(1, max(m - 1, 1)).pdf(x), label=f"Beta(1, {m - 1})")
    ax1.set_xlabel("|U_ij|^2")
    ax1.legend(fontsize=8)
    ax2.hist(np.angle(U).ravel(), bins=36, range=(-np.pi, np.pi), density=True, histtype="step")
    ax2.axhline(1 / (2 * np.pi), color="tab:orange")
    ax2.set_xlabel("arg U_ij")
    fig.suptitle(f"Haar unitary, m={m}", fontsize=9)
    _save(fig, path)


RENDERERS = {
    "cij_hist.csv": lambda r, m, p: plot_histogram_table(r, m, p, "C_ij", "Two-point correlations"),
    "click_hist.csv": plot_click_hist,
    "hog_trajectory.csv": plot_hog,
    "prob_curve.csv": plot_prob_curve,
    "bench.csv": plot_bench,
    "cost.csv": plot_cost,
    "cost_anchored.csv": plot_cost,
    "report.csv": lambda r, m, p: plot_key_values(r, m, p, "Validation report"),
    "haar_report.csv": lambda r, m, p: plot_key_values(r, m, p, "Haar checks"),
    "fit.csv": lambda r, m, p: plot_key_values(r, m, p, "Scaling fit"),
}


def render_directory(out_dir, names) -> list:
    """Render every recognised CSV among ``names`` in ``out_dir``; returns the SVG paths."""
    written = []
    for name in names:
        if name == "unitary.csv":
            path = os.path.join(out_dir, "unitary.svg")
            plot_unitary(os.path.join(out_dir, name), path)
            written.append(path)
            continue
        fn = RENDERERS.get(name)
        if fn is None:
            continue
        rows, meta = read_table(os.path.join(out_dir, name))
        if len(rows) < 2:
            continue
        path = os.path.join(out_dir, name.replace(".csv", ".svg"))
        fn(rows, meta, path)
        written.append(path)
    return written
