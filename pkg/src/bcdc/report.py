"""Benchmark figures rendered next to the delimited output.

Takes the long-format results table from the benchmark runner and writes one
NMI figure and one runtime figure per design: mean with a 25-75% quantile
band over replicates, grouped by method, against the varying grid parameter.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd

_METHOD_COLORS = {"bcdc": "tab:red", "bsbm": "tab:blue"}


def _grid_axis(df: pd.DataFrame) -> str:
    """Pick the grid column that actually varies; fall back to replicate."""
    for col in df.columns:
        if col.startswith("grid_") and df[col].nunique() > 1:
            return col
    for col in df.columns:
        if col.startswith("grid_"):
            return col
    return "replicate"


def _panel(df: pd.DataFrame, value: str, ylabel: str, path: Path):
    axis = _grid_axis(df)
    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    for method, sub in df.groupby("method"):
        g = sub.groupby(axis)[value]
        mean, lo, hi = g.mean(), g.quantile(0.25), g.quantile(0.75)
        color = _METHOD_COLORS.get(method)
        ax.plot(mean.index, mean.values, marker="o", label=method, color=color)
        ax.fill_between(mean.index, lo.values, hi.values, alpha=0.2, color=color)
    ax.set_xlabel(axis.removeprefix("grid_"))
    ax.set_ylabel(ylabel)
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_benchmark_figures(results: pd.DataFrame, outdir) -> list:
    """One NMI and one runtime figure per design; returns the written paths."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    ok = results[results["status"] == "ok"]
    for design, sub in ok.groupby("design"):
        for value, ylabel, stem in (
            ("nmi", "NMI", "nmi"),
            ("runtime_seconds", "run time (s)", "runtime"),
        ):
            path = outdir / f"{stem}_{design}.png"
            _panel(sub, value, ylabel, path)
            written.append(path)
    return written
