"""Standalone vector-graphics line charts (SVG), no interactive display."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def line_chart(path, x, series: dict, xlabel: str = "", ylabel: str = "",
               logx: bool = False, logy: bool = False) -> None:
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for label, y in series.items():
        ax.plot(x, y, marker="o", markersize=3, label=label)
    if logx:
        ax.set_xscale("log")
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if len(series) > 1:
        ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
