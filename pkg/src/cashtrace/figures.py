"""Figure rendering for analyze runs.

Two summary figures are written next to the delimited report when a
figures directory is given: finding counts per kind, and the profit
magnitude distribution on a log scale.
"""

from __future__ import annotations

import math
import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

KIND_ORDER = ["DirectManipulation", "IndirectManipulation", "Arbitrage"]


def render_figures(findings_by_kind: dict[str, int], profits: list[int], outdir: str) -> list[str]:
    """Write the summary figures and return the created paths."""
    os.makedirs(outdir, exist_ok=True)
    written: list[str] = []

    kinds = [k for k in KIND_ORDER if k in findings_by_kind]
    kinds += sorted(k for k in findings_by_kind if k not in KIND_ORDER)
    counts = [findings_by_kind[k] for k in kinds]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(range(len(kinds)), counts, color="#4477aa")
    ax.set_xticks(range(len(kinds)))
    ax.set_xticklabels(kinds, rotation=20, ha="right", fontsize=8)
    ax.set_ylabel("findings")
    ax.set_title("Findings per kind")
    fig.tight_layout()
    path = os.path.join(outdir, "findings_by_kind.png")
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(path)

    fig, ax = plt.subplots(figsize=(6, 4))
    magnitudes = [math.log10(abs(p)) for p in profits if p != 0]
    if magnitudes:
        ax.hist(magnitudes, bins=24, color="#cc6677")
    ax.set_xlabel("log10 |profit| (base units)")
    ax.set_ylabel("findings")
    ax.set_title("Profit magnitude distribution")
    fig.tight_layout()
    path = os.path.join(outdir, "profit_distribution.png")
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(path)

    return written
