"""Per-iteration convergence records produced by the solvers.

A trace is an ordered list of rows.  Row 0 always holds the initial
estimate; integral iteration indices mark completed iterations, and
(when fine-grained tracing is on) fractional indices k - 1 + j/C mark
stage j of C within iteration k.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ValidationError
from .model import ParameterEstimate


@dataclass(frozen=True)
class TraceRow:
    """One recorded state of a run.

    ``errors_deg`` holds per-source absolute DOA errors in degrees
    after nearest-truth matching, or None when the truth was not
    supplied.  ``wall_ms`` is cumulative wall time since the run
    started, from a monotonic clock.
    """

    iteration: float
    doas_deg: tuple[float, ...]
    errors_deg: tuple[float, ...] | None
    mixing: tuple[float, ...]
    stddevs: tuple[float, ...]
    loglik: float
    wall_ms: float

    @property
    def is_iteration_boundary(self) -> bool:
        return float(self.iteration) == round(self.iteration)


@dataclass
class ConvergenceTrace:
    """Ordered trace rows plus the queries the harness needs."""

    rows: list[TraceRow] = field(default_factory=list)

    @property
    def num_sources(self) -> int:
        return len(self.rows[0].doas_deg)

    @property
    def num_components(self) -> int:
        return len(self.rows[0].mixing)

    def iteration_rows(self) -> list[TraceRow]:
        """Rows at integral iteration indices, including row 0."""
        return [r for r in self.rows if r.is_iteration_boundary]

    def final(self) -> TraceRow:
        if not self.rows:
            raise ValidationError("trace is empty")
        return self.rows[-1]

    def iterations_to_threshold(self, threshold_deg: float) -> int | None:
        """First completed iteration with every DOA error below threshold.

        Returns None when no iteration gets there (or errors were not
        recorded).  Row 0 counts as iteration 0: an initial point
        already below threshold reports 0.
        """
        for row in self.iteration_rows():
            if row.errors_deg is None:
                continue
            if max(row.errors_deg) < threshold_deg:
                return int(round(row.iteration))
        return None

    def logliks(self) -> np.ndarray:
        """Log-likelihood at each completed iteration (incl. row 0)."""
        return np.array([r.loglik for r in self.iteration_rows()])

    def doas_deg_matrix(self) -> np.ndarray:
        """Completed-iteration DOAs in degrees, shape (rows, M)."""
        return np.array([r.doas_deg for r in self.iteration_rows()])


def match_errors_deg(
    estimate_deg: np.ndarray, truth_deg: np.ndarray
) -> tuple[float, ...]:
    """Greedy nearest-truth matching of DOA estimates.

    Pairs (estimate, truth) in order of increasing absolute degree
    difference, never reusing either side, and reports each estimate's
    matched absolute error.  Estimates and truths must be equally many.
    """
    est = np.asarray(estimate_deg, dtype=float)
    tru = np.asarray(truth_deg, dtype=float)
    if est.shape != tru.shape or est.ndim != 1:
        raise ValidationError("estimates and truths must be equally many")
    m = est.size
    order = sorted(
        ((abs(est[i] - tru[j]), i, j) for i in range(m) for j in range(m)),
        key=lambda triple: (triple[0], triple[1], triple[2]),
    )
    errors = [math.nan] * m
    used_est, used_tru = set(), set()
    for diff, i, j in order:
        if i in used_est or j in used_tru:
            continue
        errors[i] = diff
        used_est.add(i)
        used_tru.add(j)
    return tuple(errors)


def build_trace_row(
    estimate: ParameterEstimate,
    iteration: float,
    loglik: float,
    wall_ms: float,
    true_doas_deg: np.ndarray | None = None,
) -> TraceRow:
    """Snapshot an estimate into a TraceRow (degrees at the interface)."""
    doas_deg = tuple(float(x) for x in np.degrees(estimate.doas))
    errors = (
        None
        if true_doas_deg is None
        else match_errors_deg(np.asarray(doas_deg), np.asarray(true_doas_deg))
    )
    return TraceRow(
        iteration=float(iteration),
        doas_deg=doas_deg,
        errors_deg=errors,
        mixing=tuple(float(x) for x in estimate.noise.mixing),
        stddevs=tuple(float(x) for x in estimate.noise.stddevs),
        loglik=float(loglik),
        wall_ms=float(wall_ms),
    )
