"""Rendering DOA-convergence figures from parsed traces.

One figure shows every trace on shared axes: iteration on x, DOA
estimates in degrees on y, one line per (file, source) labelled after
the file, and dashed horizontal reference lines at the true DOAs.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .traces import read_trace

__all__ = ["build_figure", "plot_convergence"]


def build_figure(traces, true_doas_deg):
    """Assemble the convergence figure for already-parsed traces."""
    fig, ax = plt.subplots(figsize=(8.0, 5.0))
    for trace in traces:
        for m in range(trace.num_sources):
            ax.plot(
                trace.iterations,
                trace.doas_deg[:, m],
                label=f"{trace.name} source {m + 1}",
            )
    for doa in true_doas_deg:
        ax.axhline(doa, color="0.4", linestyle="--", linewidth=1.0)
    ax.set_xlabel("iteration")
    ax.set_ylabel("DOA estimate [deg]")
    ax.grid(True, alpha=0.3)
    ax.legend(loc="best", fontsize=9)
    fig.tight_layout()
    return fig


def plot_convergence(trace_paths, true_doas_deg, out_path) -> None:
    """Render one convergence figure from trace CSVs to a PNG file."""
    paths = [Path(p) for p in trace_paths]
    if not paths:
        raise ValueError("at least one trace file is required")
    out = Path(out_path)
    if out.suffix.lower() != ".png":
        raise ValueError(f"output path must end in .png, got '{out}'")
    truth = [float(v) for v in true_doas_deg]
    traces = [read_trace(p) for p in paths]
    fig = build_figure(traces, truth)
    try:
        fig.savefig(out, dpi=150)
    finally:
        plt.close(fig)
