"""Matplotlib figure emission for the batch commands (PNG files only)."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
from pathlib import Path  # noqa: E402


def _prepare(path):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    return path


def ladder_curve(res, sss, dce_ks, path) -> None:
    """Reconstruction-error / simplicity trade-off along one candidate ladder."""
    steps = range(len(res))
    fig, ax1 = plt.subplots(figsize=(6, 3.5))
    ax1.plot(steps, res, "o-", color="tab:blue", ms=3, label="RE")
    ax1.set_xlabel("pruning step (complex to simple)")
    ax1.set_ylabel("reconstruction error", color="tab:blue")
    ax1.tick_params(axis="y", labelcolor="tab:blue")
    ax2 = ax1.twinx()
    ax2.plot(steps, sss, "s-", color="tab:orange", ms=3, label="SS")
    ax2.set_ylabel("simplicity", color="tab:orange")
    ax2.tick_params(axis="y", labelcolor="tab:orange")
    ax1.set_title(f"k = {dce_ks[0]} .. {dce_ks[len(res) - 1]}")
    fig.tight_layout()
    fig.savefig(_prepare(path), format="png", dpi=100)
    plt.close(fig)


def report_figure(rows, path) -> None:
    """Mean RE / SS per dataset, Table-style bar pairs."""
    names = [r["dataset"] for r in rows]
    res = [r["mean_re"] for r in rows]
    sss = [r["mean_ss"] for r in rows]
    x = range(len(rows))
    fig, ax = plt.subplots(figsize=(max(4, 1.6 * len(rows) + 2), 3.5))
    ax.bar([i - 0.18 for i in x], res, width=0.36, label="mean RE",
           color="tab:blue")
    ax.bar([i + 0.18 for i in x], sss, width=0.36, label="mean SS",
           color="tab:orange")
    ax.set_xticks(list(x))
    ax.set_xticklabels(names, rotation=20, ha="right")
    ax.set_ylabel("value")
    ax.legend()
    ax.set_title("ground-truth quality by dataset")
    fig.tight_layout()
    fig.savefig(_prepare(path), format="png", dpi=100)
    plt.close(fig)


def eval_figure(aeps, f1s, path) -> None:
    """Distributions of per-item AEP and F1."""
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8, 3.2))
    if aeps:
        ax1.hist(aeps, bins=min(20, max(5, len(aeps) // 3)), color="tab:blue")
    ax1.set_xlabel("AEP (pixels)")
    ax1.set_ylabel("items")
    if f1s:
        ax2.hist(f1s, bins=min(20, max(5, len(f1s) // 3)), color="tab:orange")
    ax2.set_xlabel("F1")
    fig.tight_layout()
    fig.savefig(_prepare(path), format="png", dpi=100)
    plt.close(fig)
