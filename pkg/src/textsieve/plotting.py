"""Figure rendering for benchmark and simulation reports.

Rendering is headless and keeps PNG output byte-stable for a fixed input by
pinning the date metadata, so repeated runs of the same report compare equal.
"""

from __future__ import annotations

from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

_SAVE_KWARGS = {"dpi": 150, "metadata": {"Date": None}}


def _new_axes(title: str, xlabel: str, ylabel: str):
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(True, alpha=0.3)
    return fig, ax


def save_recall_curves(
    curves: Mapping[str, Sequence[tuple[float, float]]], path: str, title: str = "Errors found vs. review budget"
) -> None:
    """One line per method: mean recall against the reviewed top-k%."""
    fig, ax = _new_axes(title, "ranked prefix reviewed (%)", "mean recall")
    for method in curves:
        points = list(curves[method])
        ax.plot([k for k, _ in points], [r for _, r in points], marker="o", markersize=3, label=method)
    ax.set_xlim(0, 100)
    ax.set_ylim(0, 1.02)
    ax.legend(loc="lower right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KWARGS)
    plt.close(fig)


def save_diversity_trend(
    per_strategy: Mapping[str, Sequence[tuple[int, float]]], path: str, title: str = "Diversity by round"
) -> None:
    """One line per seeding strategy: per-round diversity of collected data."""
    fig, ax = _new_axes(title, "round", "diversity")
    for strategy in per_strategy:
        points = list(per_strategy[strategy])
        ax.plot([n for n, _ in points], [d for _, d in points], marker="s", markersize=4, label=strategy)
    ax.xaxis.get_major_locator().set_params(integer=True)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KWARGS)
    plt.close(fig)
