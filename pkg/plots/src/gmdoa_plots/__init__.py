"""Convergence-figure rendering for DOA estimation trace CSVs."""

from .figure import build_figure, plot_convergence
from .traces import TraceFile, TraceFormatError, read_trace

__all__ = [
    "TraceFile",
    "TraceFormatError",
    "build_figure",
    "plot_convergence",
    "read_trace",
]

__version__ = "0.1.0"
