"""E-step and M-step primitives shared by the SAGE and AECM solvers.

Both solvers alternate between (a) posterior component probabilities
of every residual under the current mixture ("responsibilities"),
(b) weighted least-squares waveform updates whose per-snapshot weight
matrix is diagonal, (c) a scalar DOA objective per source, and (d) a
closed-form mixture-parameter update.  Those four pieces live here.
"""

from __future__ import annotations

import warnings

import numpy as np

from .exceptions import DegenerateGeometryError, NumericError, ValidationError
from .model import NoiseModel, SnapshotMatrix, steering_vector

# Responsibility rows must renormalize to 1 within this tolerance.
RESP_SUM_TOL = 1e-12
# Max-shifted exponents are floored here so exp() never underflows to
# exactly 0 and every responsibility stays strictly positive.
_EXP_FLOOR = -700.0
# Mixture stddev floor applied by noise_param_update.
STDDEV_FLOOR = 1e-8
# Weighted Gram matrices with condition estimates beyond this get a
# Tikhonov ridge of RIDGE_SCALE * trace / M on the diagonal.
RIDGE_COND_THRESHOLD = 1e12
RIDGE_SCALE = 1e-10


def responsibilities(
    snapshots: SnapshotMatrix, predicted: np.ndarray, noise: NoiseModel
) -> np.ndarray:
    """Posterior component probabilities of each residual.

    Entry (n, t, l) is proportional to

        mixing[l] / var[l] * exp(-|y_n(t) - predicted_n(t)|^2 / var[l])

    normalized over l.  Exponents are max-shifted before exponentiation
    and floored so entries remain strictly positive in floating point.

    Parameters
    ----------
    snapshots : SnapshotMatrix
        Received data, shape (N, T).
    predicted : numpy.ndarray, shape (N, T)
        Model prediction the residuals are taken against.
    noise : NoiseModel
        Current mixture estimate, L components.

    Returns
    -------
    numpy.ndarray, shape (N, T, L)
        Rows over l sum to 1 within ``RESP_SUM_TOL``; all entries > 0.
    """
    y = snapshots.data
    predicted = np.asarray(predicted, dtype=complex)
    if predicted.shape != y.shape:
        raise ValidationError("predicted must match the snapshot shape")
    resid2 = np.abs(y - predicted) ** 2
    var = noise.variances
    z = (np.log(noise.mixing) - np.log(var))[None, None, :] - resid2[
        :, :, None
    ] / var[None, None, :]
    z -= z.max(axis=2, keepdims=True)
    np.maximum(z, _EXP_FLOOR, out=z)
    w = np.exp(z)
    w /= w.sum(axis=2, keepdims=True)
    sums = w.sum(axis=2)
    if np.any(w <= 0.0) or np.any(np.abs(sums - 1.0) > RESP_SUM_TOL):
        raise NumericError("responsibilities violated positivity/normalization")
    return w


def weight_diagonal(resp: np.ndarray, noise: NoiseModel, t: int) -> np.ndarray:
    """Diagonal of the snapshot-t weight matrix, sum_l resp[:, t, l] / var[l].

    Returns shape (N,); every entry is strictly positive because the
    responsibilities are and the variances are finite.
    """
    resp = np.asarray(resp, dtype=float)
    if resp.ndim != 3:
        raise ValidationError("resp must have shape (N, T, L)")
    if not 0 <= t < resp.shape[1]:
        raise ValidationError("snapshot index out of range")
    return resp[:, t, :] @ (1.0 / noise.variances)


def weight_diagonals(resp: np.ndarray, noise: NoiseModel) -> np.ndarray:
    """All snapshot weight diagonals at once, shape (N, T)."""
    resp = np.asarray(resp, dtype=float)
    if resp.ndim != 3 or resp.shape[2] != noise.num_components:
        raise ValidationError("resp must have shape (N, T, L)")
    return resp @ (1.0 / noise.variances)


def multi_source_signal_update(
    snapshots: SnapshotMatrix, manifold: np.ndarray, weights: np.ndarray
) -> np.ndarray:
    """Per-snapshot weighted least squares for all waveforms jointly.

    For each t solves (A^H D_t A) s(t) = A^H D_t y(t) with D_t the
    diagonal weight matrix ``diag(weights[:, t])``.  When the weighted
    Gram matrix's condition estimate exceeds ``RIDGE_COND_THRESHOLD``
    (possible once two DOA estimates collapse onto one direction), a
    Tikhonov ridge of ``RIDGE_SCALE * trace / M`` is added before
    solving.

    Parameters
    ----------
    snapshots : SnapshotMatrix
        Received data, shape (N, T).
    manifold : numpy.ndarray, shape (N, M)
        Steering matrix at the current DOA estimates, N > M.
    weights : numpy.ndarray, shape (N, T)
        Strictly positive per-snapshot weight diagonals.

    Returns
    -------
    numpy.ndarray, shape (M, T)
        Updated waveform matrix.

    Raises
    ------
    DegenerateGeometryError
        If some snapshot's Gram matrix stays singular after the ridge;
        the offending 0-based snapshot index is named.
    """
    y = snapshots.data
    manifold = np.asarray(manifold, dtype=complex)
    weights = np.asarray(weights, dtype=float)
    if manifold.ndim != 2 or manifold.shape[0] != y.shape[0]:
        raise ValidationError("manifold must have shape (N, M)")
    n_sensors, n_sources = manifold.shape
    if n_sensors <= n_sources:
        raise ValidationError("need more sensors than sources")
    if weights.shape != y.shape:
        raise ValidationError("weights must have shape (N, T)")
    if np.any(weights <= 0.0):
        raise ValidationError("weights must be strictly positive")

    conj = manifold.conj()
    gram = np.einsum("nm,nt,nk->tmk", conj, weights, manifold, optimize=True)
    rhs = np.einsum("nm,nt,nt->tm", conj, weights, y, optimize=True)

    svals = np.linalg.svd(gram, compute_uv=False)
    smin, smax = svals[:, -1], svals[:, 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        cond = np.where(smin > 0.0, smax / smin, np.inf)
    ill = ~(cond <= RIDGE_COND_THRESHOLD)
    if np.any(ill):
        trace = np.einsum("tmm->t", gram).real
        bump = RIDGE_SCALE * trace / n_sources
        gram[ill] += bump[ill, None, None] * np.eye(n_sources)

    try:
        sol = np.linalg.solve(gram, rhs[:, :, None])[:, :, 0]
    except np.linalg.LinAlgError:
        sol = None
    if sol is None or not np.all(np.isfinite(sol)):
        for t in range(y.shape[1]):
            try:
                s_t = np.linalg.solve(gram[t], rhs[t])
            except np.linalg.LinAlgError:
                s_t = np.array([np.nan])
            if not np.all(np.isfinite(s_t)):
                raise DegenerateGeometryError(
                    "waveform update: Gram matrix singular after ridge at "
                    f"snapshot {t} (0-based)",
                    snapshot=t,
                )
        raise DegenerateGeometryError(
            "waveform update produced non-finite values"
        )
    return sol.T


def single_source_signal_update(
    residual_target: np.ndarray, theta: float, weight: np.ndarray
) -> np.ndarray:
    """Rank-one weighted projection a(theta)^H W target / trace(W).

    ``residual_target`` and ``weight`` may be a single snapshot column
    of shape (N,) or a full (N, T) matrix; the result is a scalar or a
    length-T vector accordingly.
    """
    target = np.asarray(residual_target, dtype=complex)
    weight = np.asarray(weight, dtype=float)
    if target.shape != weight.shape or target.ndim not in (1, 2):
        raise ValidationError(
            "residual_target and weight must share shape (N,) or (N, T)"
        )
    if np.any(weight <= 0.0):
        raise ValidationError("weights must be strictly positive")
    a = steering_vector(theta, target.shape[0])
    chi = weight.sum(axis=0)
    return np.einsum("n,n...->...", a.conj(), weight * target) / chi


def doa_objective(
    residual_targets: np.ndarray, weights: np.ndarray
):
    """Concentrated single-source DOA objective over u = cos(theta).

    Returns a callable g with

        g(u) = sum_t |a(u)^H W_t target(:, t)|^2 / trace(W_t),

    where a(u)_n = exp(-1j * n * pi * u) and W_t = diag(weights[:, t]).
    The callable accepts a scalar or an array of u values and is exact
    for |u| < 1; it is smooth, so golden-section bracketing applies.

    Parameters
    ----------
    residual_targets : numpy.ndarray, shape (N, T)
        Per-snapshot target vectors (conditional means or residuals).
    weights : numpy.ndarray, shape (N, T)
        Strictly positive weight diagonals, one column per snapshot.
    """
    targets = np.asarray(residual_targets, dtype=complex)
    weights = np.asarray(weights, dtype=float)
    if targets.ndim == 1:
        targets = targets[:, None]
    if weights.ndim == 1:
        weights = weights[:, None]
    if targets.shape != weights.shape or targets.ndim != 2:
        raise ValidationError(
            "residual_targets and weights must share shape (N, T)"
        )
    if np.any(weights <= 0.0):
        raise ValidationError("weights must be strictly positive")
    chi = weights.sum(axis=0)
    if np.any(~np.isfinite(chi)) or np.any(chi <= 0.0):
        raise NumericError("weight traces must be positive and finite")
    # Fold 1/sqrt(chi_t) into the weighted targets once.
    scaled = (weights * targets) / np.sqrt(chi)[None, :]
    idx = np.arange(targets.shape[0])

    def objective(u):
        u_arr = np.asarray(u, dtype=float)
        phases = np.exp(1j * np.pi * np.multiply.outer(u_arr, idx))
        proj = phases @ scaled
        vals = np.sum(proj.real**2 + proj.imag**2, axis=-1)
        return float(vals) if u_arr.ndim == 0 else vals

    return objective


def noise_param_update(
    resp: np.ndarray, residuals: np.ndarray
) -> NoiseModel:
    """Closed-form mixture update from responsibilities and residual powers.

    With kappa_l = sum_{n,t} resp[n, t, l] and
    eps_l = sum_{n,t} resp[n, t, l] * residuals[n, t]:

        mixing[l] = kappa_l / (N * T)
        stddevs[l] = sqrt(eps_l / kappa_l)

    Stddevs that collapse below ``STDDEV_FLOOR`` are floored there and
    a RuntimeWarning is issued (a component latching onto a single
    near-zero residual would otherwise freeze the mixture).

    Parameters
    ----------
    resp : numpy.ndarray, shape (N, T, L)
        Strictly positive responsibilities, normalized over l.
    residuals : numpy.ndarray, shape (N, T)
        Squared residual magnitudes |y_n(t) - [A s(t)]_n|^2.
    """
    resp = np.asarray(resp, dtype=float)
    residuals = np.asarray(residuals, dtype=float)
    if resp.ndim != 3 or residuals.ndim != 2:
        raise ValidationError("resp must be (N, T, L), residuals (N, T)")
    if resp.shape[:2] != residuals.shape:
        raise ValidationError("resp and residuals disagree on (N, T)")
    if np.any(residuals < 0.0) or not np.all(np.isfinite(residuals)):
        raise ValidationError("residual powers must be finite and nonnegative")
    kappa = resp.sum(axis=(0, 1))
    eps = np.einsum("ntl,nt->l", resp, residuals)
    mixing = kappa / residuals.size
    stddevs = np.sqrt(eps / kappa)
    if np.any(stddevs < STDDEV_FLOOR):
        warnings.warn(
            f"mixture stddev collapsed; floored at {STDDEV_FLOOR:g}",
            RuntimeWarning,
            stacklevel=2,
        )
        stddevs = np.maximum(stddevs, STDDEV_FLOOR)
    # Renormalize away accumulated rounding so NoiseModel's sum check holds.
    mixing = mixing / mixing.sum()
    return NoiseModel(mixing=mixing, stddevs=stddevs)
