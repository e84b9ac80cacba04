"""Figure rendering for the report-producing stages.

Each report path (filter summary, PIP comparison, score report) gets a PNG
next to its delimited table. Uses the Agg backend so headless runs work.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import os

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)


def _save(fig, path: str) -> None:
    """Atomic figure write: render to a temp file, then rename."""
    tmp = f"{path}.tmp.{os.getpid()}"
    try:
        fig.savefig(tmp, dpi=150, format="png")
        os.replace(tmp, path)
    finally:
        plt.close(fig)
        if os.path.exists(tmp):
            os.unlink(tmp)


def plot_noise_summary(summaries, path: str) -> str:
    """Bar chart of the per-class share of sentences tagged as noise."""
    labels = [s.label for s in summaries]
    pcts = [s.noise_pct for s in summaries]
    fig, ax = plt.subplots(figsize=(max(6.0, 0.9 * len(labels)), 4.0))
    ax.bar(range(len(labels)), pcts, color="#4878a8")
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=45, ha="right", fontsize=8)
    ax.set_ylabel("sentences tagged as noise (%)")
    ax.set_ylim(0, 100)
    ax.set_title("Semantic noise per class")
    for i, pct in enumerate(pcts):
        ax.text(i, pct + 1, f"{pct:.1f}", ha="center", fontsize=7)
    fig.tight_layout()
    _save(fig, path)
    return path


def plot_pip_comparison(report, path: str) -> str:
    """Loss-vs-k curves for basic vs infused corpora, one panel per alpha."""
    entries = report.entries
    fig, axes = plt.subplots(
        1, len(entries), figsize=(5.5 * len(entries), 4.0), squeeze=False
    )
    for ax, entry in zip(axes[0], entries):
        for analysis, name, color in (
            (entry.basic, "basic", "#4878a8"),
            (entry.infused, "infused", "#d1605e"),
        ):
            curve = analysis.curve
            ks = range(1, len(curve.total) + 1)
            ax.plot(ks, curve.total, label=f"{name} (k*={curve.k_star})", color=color)
            ax.axvline(curve.k_star, color=color, linestyle=":", linewidth=0.8)
        ax.set_xlabel("dimensionality k")
        ax.set_ylabel("estimated PIP loss")
        ax.set_title(f"alpha = {entry.alpha}")
        ax.legend(fontsize=8)
    fig.tight_layout()
    _save(fig, path)
    return path


def plot_score_report(report, path: str) -> str:
    """Grouped bars of precision/recall/F1 per class; undefined bars omitted."""
    labels = [c.label for c in report.classes]
    metrics = (
        ("precision", [c.precision for c in report.classes], "#4878a8"),
        ("recall", [c.recall for c in report.classes], "#d1605e"),
        ("f1", [c.f1 for c in report.classes], "#6aa56a"),
    )
    width = 0.27
    fig, ax = plt.subplots(figsize=(max(6.0, 1.2 * len(labels)), 4.0))
    for offset, (name, values, color) in enumerate(metrics):
        xs = [i + (offset - 1) * width for i in range(len(labels))]
        heights = [v if v is not None else 0.0 for v in values]
        ax.bar(xs, heights, width=width, label=name, color=color)
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=45, ha="right", fontsize=8)
    ax.set_ylim(0, 1.05)
    ax.set_ylabel("score")
    ax.set_title("Noise detection quality per class")
    ax.legend(fontsize=8)
    fig.tight_layout()
    _save(fig, path)
    return path
