"""Space-alternating EM solver.

Each iteration runs three expectation/maximization pairs over the same
snapshot matrix:

1. Split the residual evenly across sources to form per-source
   conditional means, then refresh every DOA (via the configured
   search over u = cos(theta)) and its waveform against the shared
   responsibility weights.
2. Re-solve all waveforms jointly by per-snapshot weighted least
   squares at the new DOAs.
3. Refresh the noise mixture in closed form from the new residuals.

Responsibilities are recomputed at the current estimate before every
pair, so each pair can only improve the exact log-likelihood; the
iterate is monotone up to floating-point rounding.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .em import (
    multi_source_signal_update,
    noise_param_update,
    responsibilities,
    single_source_signal_update,
    doa_objective,
    weight_diagonals,
)
from .exceptions import GmdoaError, ValidationError
from .model import (
    NoiseModel,
    ParameterEstimate,
    SnapshotMatrix,
    log_likelihood,
    manifold_matrix,
    model_prediction,
)
from .search import U_EDGE, DoaSearchStrategy
from .trace import ConvergenceTrace, build_trace_row

# Optional early stop: all DOAs move less than this (radians) for this
# many consecutive iterations.
EARLY_STOP_TOL_RAD = 1e-6
EARLY_STOP_PATIENCE = 3


@dataclass
class SageState:
    """Mutable run bookkeeping: current estimate and iteration count."""

    estimate: ParameterEstimate
    iteration: int = 0


def _reraise(exc: GmdoaError, prefix: str):
    new = type(exc)(f"{prefix}: {exc}")
    if hasattr(exc, "snapshot"):
        new.snapshot = exc.snapshot
    raise new from exc


def _clamped_acos(u: float) -> float:
    return math.acos(min(max(float(u), -1.0 + U_EDGE), 1.0 - U_EDGE))


def sage_estep1(
    snapshots: SnapshotMatrix, estimate: ParameterEstimate
) -> tuple[np.ndarray, np.ndarray]:
    """First-pair E-step: responsibilities and per-source conditional means.

    Source m's conditional mean gets its own predicted contribution
    plus an even 1/M share of the joint residual:

        mu[m] = a(theta_m) s_m + (y - A s) / M.

    Returns
    -------
    (resp, mu) : (numpy.ndarray (N, T, L), numpy.ndarray (M, N, T))
    """
    y = snapshots.data
    pred = model_prediction(
        estimate.doas, estimate.waveforms, snapshots.num_sensors
    )
    resp = responsibilities(snapshots, pred, estimate.noise)
    m_count = estimate.num_sources
    if m_count == 1:
        # Single source: own contribution plus the full residual is the
        # data itself.
        return resp, y[None, :, :].copy()
    a = manifold_matrix(estimate.doas, snapshots.num_sensors)
    shared = (y - pred) / m_count
    mu = a.T[:, :, None] * estimate.waveforms[:, None, :] + shared[None, :, :]
    return resp, mu


def sage_mstep1(
    mu: np.ndarray,
    resp: np.ndarray,
    noise: NoiseModel,
    search: DoaSearchStrategy,
    doas: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """First-pair M-step: one DOA search and waveform update per source.

    Every source shares the responsibility weights computed in the
    E-step.  Source m maximizes

        g_m(u) = sum_t |a(u)^H W_t mu[m][:, t]|^2 / trace(W_t)

    over u = cos(theta) with the configured search, started from the
    current DOA.  If the search's point ranks strictly below the
    current direction on g_m, the current direction is kept (ascent
    guard; never triggered by the local search, which cannot return a
    point worse than its start).  The waveform is the weighted
    projection of mu[m] onto the chosen steering vector.

    Parameters
    ----------
    mu : numpy.ndarray, shape (M, N, T)
        Conditional means from :func:`sage_estep1`.
    resp : numpy.ndarray, shape (N, T, L)
        Responsibilities from the same E-step.
    noise : NoiseModel
        Current mixture estimate.
    search : DoaSearchStrategy
        DOA search to apply per source.
    doas : numpy.ndarray, shape (M,)
        Current DOAs (radians); search start points.

    Returns
    -------
    (doas, waveforms) : (numpy.ndarray (M,), numpy.ndarray (M, T))
    """
    mu = np.asarray(mu, dtype=complex)
    doas = np.asarray(doas, dtype=float)
    if mu.ndim != 3 or mu.shape[0] != doas.size:
        raise ValidationError("mu must have shape (M, N, T)")
    weights = weight_diagonals(resp, noise)
    if weights.shape != mu.shape[1:]:
        raise ValidationError("resp and mu disagree on (N, T)")
    new_doas = np.empty(doas.size)
    new_waveforms = np.empty((doas.size, mu.shape[2]), dtype=complex)
    for m in range(doas.size):
        objective = doa_objective(mu[m], weights)
        u_start = math.cos(doas[m])
        try:
            u_found = search.run(objective, u_start)
            if objective(u_found) < objective(u_start):
                u_found = u_start
        except GmdoaError as exc:
            _reraise(exc, f"source {m} (0-based)")
        theta = _clamped_acos(u_found)
        new_doas[m] = theta
        new_waveforms[m] = single_source_signal_update(mu[m], theta, weights)
    return new_doas, new_waveforms


def sage_empair2(
    snapshots: SnapshotMatrix, estimate: ParameterEstimate
) -> np.ndarray:
    """Second pair: joint waveform refresh by weighted least squares.

    Recomputes responsibilities at the current estimate, forms the
    per-snapshot weight diagonals, and solves all M waveforms jointly.
    Returns the (M, T) waveform matrix.
    """
    a = manifold_matrix(estimate.doas, snapshots.num_sensors)
    pred = a @ estimate.waveforms
    resp = responsibilities(snapshots, pred, estimate.noise)
    weights = weight_diagonals(resp, estimate.noise)
    return multi_source_signal_update(snapshots, a, weights)


def sage_empair3(
    snapshots: SnapshotMatrix, estimate: ParameterEstimate
) -> NoiseModel:
    """Third pair: closed-form noise mixture refresh at the current fit."""
    pred = model_prediction(
        estimate.doas, estimate.waveforms, snapshots.num_sensors
    )
    resp = responsibilities(snapshots, pred, estimate.noise)
    resid2 = np.abs(snapshots.data - pred) ** 2
    return noise_param_update(resp, resid2)


def sage_iterate(
    snapshots: SnapshotMatrix,
    state: "SageState | ParameterEstimate",
    search: DoaSearchStrategy,
    max_iterations: int,
    *,
    true_doas_deg=None,
    fine_trace: bool = False,
    early_stop: bool = False,
) -> tuple[ParameterEstimate, ConvergenceTrace]:
    """Run up to ``max_iterations`` full iterations and record a trace.

    Trace row 0 holds the initial estimate; row k the state after
    iteration k.  With ``fine_trace`` each pair also logs a row at
    fractional index k - 1 + pair/3.  With ``early_stop`` the loop
    exits once every DOA has moved less than ``EARLY_STOP_TOL_RAD``
    radians for ``EARLY_STOP_PATIENCE`` consecutive iterations.

    Parameters
    ----------
    snapshots : SnapshotMatrix
        Received data.
    state : SageState or ParameterEstimate
        Start point; a bare estimate is wrapped.
    search : DoaSearchStrategy
        DOA search used inside the first pair.
    max_iterations : int
        Nonnegative iteration budget.
    true_doas_deg : array_like, optional
        Ground-truth DOAs in degrees; enables the trace error columns.
    fine_trace : bool
        Log a row after every pair, not just every iteration.
    early_stop : bool
        Enable the DOA-stability stop rule (off by default).

    Returns
    -------
    (estimate, trace) : (ParameterEstimate, ConvergenceTrace)
    """
    estimate = state.estimate if isinstance(state, SageState) else state
    if not isinstance(estimate, ParameterEstimate):
        raise ValidationError("state must hold a ParameterEstimate")
    if estimate.num_snapshots != snapshots.num_snapshots:
        raise ValidationError("estimate and snapshots disagree on T")
    max_iterations = int(max_iterations)
    if max_iterations < 0:
        raise ValidationError("max_iterations must be nonnegative")
    truth = None if true_doas_deg is None else np.asarray(true_doas_deg, float)

    t_start = time.perf_counter()

    def ms() -> float:
        return (time.perf_counter() - t_start) * 1e3

    trace = ConvergenceTrace()
    trace.rows.append(
        build_trace_row(
            estimate, 0.0, log_likelihood(snapshots, estimate), ms(), truth
        )
    )
    calm = 0
    for k in range(1, max_iterations + 1):
        prev_doas = estimate.doas
        try:
            resp, mu = sage_estep1(snapshots, estimate)
            doas, waveforms = sage_mstep1(
                mu, resp, estimate.noise, search, estimate.doas
            )
            estimate = estimate.replace(doas=doas, waveforms=waveforms)
            if fine_trace:
                trace.rows.append(
                    build_trace_row(
                        estimate,
                        k - 1 + 1.0 / 3.0,
                        log_likelihood(snapshots, estimate),
                        ms(),
                        truth,
                    )
                )
            estimate = estimate.replace(
                waveforms=sage_empair2(snapshots, estimate)
            )
            if fine_trace:
                trace.rows.append(
                    build_trace_row(
                        estimate,
                        k - 1 + 2.0 / 3.0,
                        log_likelihood(snapshots, estimate),
                        ms(),
                        truth,
                    )
                )
            estimate = estimate.replace(
                noise=sage_empair3(snapshots, estimate)
            )
            loglik = log_likelihood(snapshots, estimate)
        except GmdoaError as exc:
            _reraise(exc, f"iteration {k}")
        trace.rows.append(build_trace_row(estimate, float(k), loglik, ms(), truth))
        if early_stop:
            if float(np.max(np.abs(estimate.doas - prev_doas))) < EARLY_STOP_TOL_RAD:
                calm += 1
                if calm >= EARLY_STOP_PATIENCE:
                    break
            else:
                calm = 0
    return estimate, trace
