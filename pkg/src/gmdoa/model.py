"""Uniform linear array signal model with Gaussian mixture noise.

A half-wavelength-spaced linear array of N omnidirectional sensors
observes M narrowband far-field sources.  Snapshot t stacks the sensor
outputs into y(t) = A(theta) s(t) + v(t), where A collects the steering
vectors of the source directions and v(t) is zero-mean circular complex
noise drawn i.i.d. (over sensors and snapshots) from a finite Gaussian
mixture.  The mixture's heavy tail models impulsive interference.

Angles are measured from the array axis, in radians, on the open
interval (0, pi); the electrical phase depends on the direction only
through u = cos(theta).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import NumericError, ValidationError

# Tolerance on sum(mixing) == 1.
MIXING_SUM_TOL = 1e-12


def _frozen(values, dtype) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ArrayGeometry:
    """Uniform linear array with half-wavelength element spacing.

    Parameters
    ----------
    num_sensors : int
        Number of array elements, at least 2.
    """

    num_sensors: int

    def __post_init__(self):
        if isinstance(self.num_sensors, bool) or not isinstance(
            self.num_sensors, (int, np.integer)
        ):
            raise ValidationError("num_sensors must be an integer")
        object.__setattr__(self, "num_sensors", int(self.num_sensors))
        if self.num_sensors < 2:
            raise ValidationError("num_sensors must be at least 2")


@dataclass(frozen=True, eq=False)
class NoiseModel:
    """Finite mixture of zero-mean circular complex Gaussians.

    Component l has mixing proportion ``mixing[l]`` and total variance
    ``stddevs[l]**2`` (so the real and imaginary parts each carry half
    of it).  The density of a single noise sample v is

        p(v) = sum_l mixing[l] / (pi * stddevs[l]**2)
                     * exp(-|v|**2 / stddevs[l]**2).

    Parameters
    ----------
    mixing : array_like, shape (L,)
        Strictly positive proportions summing to 1.
    stddevs : array_like, shape (L,)
        Strictly positive per-component standard deviations.
    """

    mixing: np.ndarray
    stddevs: np.ndarray

    def __post_init__(self):
        mixing = _frozen(self.mixing, float)
        stddevs = _frozen(self.stddevs, float)
        if mixing.ndim != 1 or stddevs.ndim != 1:
            raise ValidationError("mixing and stddevs must be 1-D")
        if mixing.size == 0 or mixing.shape != stddevs.shape:
            raise ValidationError(
                "mixing and stddevs must have equal, nonzero length"
            )
        if not (np.all(np.isfinite(mixing)) and np.all(np.isfinite(stddevs))):
            raise ValidationError("noise parameters must be finite")
        if np.any(mixing <= 0.0):
            raise ValidationError("mixing proportions must be strictly positive")
        if np.any(stddevs <= 0.0):
            raise ValidationError("stddevs must be strictly positive")
        if abs(float(mixing.sum()) - 1.0) > MIXING_SUM_TOL:
            raise ValidationError(
                f"mixing proportions must sum to 1 within {MIXING_SUM_TOL:g}"
            )
        object.__setattr__(self, "mixing", mixing)
        object.__setattr__(self, "stddevs", stddevs)

    def __eq__(self, other):
        if not isinstance(other, NoiseModel):
            return NotImplemented
        return np.array_equal(self.mixing, other.mixing) and np.array_equal(
            self.stddevs, other.stddevs
        )

    @property
    def num_components(self) -> int:
        return int(self.mixing.size)

    @property
    def variances(self) -> np.ndarray:
        """Per-component total variances E|v|^2, shape (L,)."""
        return self.stddevs**2

    def average_power(self) -> float:
        """Mixture-averaged noise power sum_l mixing[l] * stddevs[l]**2."""
        return float(np.dot(self.mixing, self.variances))


@dataclass(frozen=True)
class SourceConfig:
    """Ground-truth sources: directions and deterministic waveforms.

    Parameters
    ----------
    doas : array_like, shape (M,)
        Distinct directions in radians, each inside the open interval
        (0, pi).
    waveforms : array_like, shape (M, T)
        Complex waveform samples; row m is source m over T snapshots.
    """

    doas: np.ndarray
    waveforms: np.ndarray

    def __post_init__(self):
        doas = _frozen(self.doas, float)
        waveforms = _frozen(self.waveforms, complex)
        if doas.ndim != 1 or doas.size < 1:
            raise ValidationError("doas must be a nonempty 1-D vector")
        if not np.all(np.isfinite(doas)):
            raise ValidationError("doas must be finite")
        if np.any(doas <= 0.0) or np.any(doas >= math.pi):
            raise ValidationError("doas must lie strictly inside (0, pi)")
        if np.unique(doas).size != doas.size:
            raise ValidationError("doas must be pairwise distinct")
        if waveforms.ndim != 2 or waveforms.shape[0] != doas.size:
            raise ValidationError("waveforms must have shape (num_sources, T)")
        if waveforms.shape[1] < 1:
            raise ValidationError("waveforms need at least one snapshot")
        if not np.all(np.isfinite(waveforms)):
            raise ValidationError("waveforms must be finite")
        object.__setattr__(self, "doas", doas)
        object.__setattr__(self, "waveforms", waveforms)

    @property
    def num_sources(self) -> int:
        return int(self.doas.size)

    @property
    def num_snapshots(self) -> int:
        return int(self.waveforms.shape[1])


@dataclass(frozen=True)
class SnapshotMatrix:
    """Received data, one column per snapshot.

    Parameters
    ----------
    data : array_like, shape (N, T)
        Complex sensor outputs; entry (n, t) is sensor n at snapshot t.
    """

    data: np.ndarray

    def __post_init__(self):
        data = _frozen(self.data, complex)
        if data.ndim != 2 or data.shape[0] < 1 or data.shape[1] < 1:
            raise ValidationError("snapshot data must be a nonempty 2-D matrix")
        if not np.all(np.isfinite(data)):
            raise ValidationError("snapshot data must be finite")
        object.__setattr__(self, "data", data)

    @property
    def num_sensors(self) -> int:
        return int(self.data.shape[0])

    @property
    def num_snapshots(self) -> int:
        return int(self.data.shape[1])


@dataclass(frozen=True)
class ParameterEstimate:
    """One full iterate of the unknowns: DOAs, waveforms, noise model.

    Unlike :class:`SourceConfig`, estimated DOAs are allowed to
    coincide: alternating solvers started from a poor point can drive
    two estimates onto the same direction, and that state must remain
    representable.
    """

    doas: np.ndarray
    waveforms: np.ndarray
    noise: NoiseModel

    def __post_init__(self):
        doas = _frozen(self.doas, float)
        waveforms = _frozen(self.waveforms, complex)
        if doas.ndim != 1 or doas.size < 1:
            raise ValidationError("doas must be a nonempty 1-D vector")
        if not np.all(np.isfinite(doas)):
            raise ValidationError("doas must be finite")
        if np.any(doas <= 0.0) or np.any(doas >= math.pi):
            raise ValidationError("doas must lie strictly inside (0, pi)")
        if waveforms.ndim != 2 or waveforms.shape[0] != doas.size:
            raise ValidationError("waveforms must have shape (num_sources, T)")
        if waveforms.shape[1] < 1:
            raise ValidationError("waveforms need at least one snapshot")
        if not np.all(np.isfinite(waveforms)):
            raise ValidationError("waveforms must be finite")
        if not isinstance(self.noise, NoiseModel):
            raise ValidationError("noise must be a NoiseModel")
        object.__setattr__(self, "doas", doas)
        object.__setattr__(self, "waveforms", waveforms)

    @property
    def num_sources(self) -> int:
        return int(self.doas.size)

    @property
    def num_snapshots(self) -> int:
        return int(self.waveforms.shape[1])

    def replace(
        self,
        doas: np.ndarray | None = None,
        waveforms: np.ndarray | None = None,
        noise: NoiseModel | None = None,
    ) -> "ParameterEstimate":
        """Return a copy with the given fields swapped out."""
        return ParameterEstimate(
            doas=self.doas if doas is None else doas,
            waveforms=self.waveforms if waveforms is None else waveforms,
            noise=self.noise if noise is None else noise,
        )


def steering_vector(theta: float, num_sensors: int) -> np.ndarray:
    """Array response of a unit-amplitude plane wave from direction theta.

    Element n (0-based) equals exp(-1j * n * pi * cos(theta)); the
    first sensor is the phase reference.

    Parameters
    ----------
    theta : float
        Direction in radians, strictly inside (0, pi).
    num_sensors : int
        Number of array elements, at least 1.

    Returns
    -------
    numpy.ndarray, shape (num_sensors,)
        Unit-modulus complex response.
    """
    theta = float(theta)
    if not 0.0 < theta < math.pi:
        raise ValidationError("theta must lie strictly inside (0, pi)")
    num_sensors = int(num_sensors)
    if num_sensors < 1:
        raise ValidationError("num_sensors must be at least 1")
    n = np.arange(num_sensors)
    return np.exp(-1j * math.pi * math.cos(theta) * n)


def manifold_matrix(doas: np.ndarray, num_sensors: int) -> np.ndarray:
    """Stack steering vectors column-wise into the N x M array manifold."""
    doas = np.asarray(doas, dtype=float)
    if doas.ndim != 1 or doas.size < 1:
        raise ValidationError("doas must be a nonempty 1-D vector")
    return np.stack(
        [steering_vector(theta, num_sensors) for theta in doas], axis=1
    )


def model_prediction(
    doas: np.ndarray, waveforms: np.ndarray, num_sensors: int
) -> np.ndarray:
    """Noise-free snapshot matrix A(doas) @ waveforms, shape (N, T)."""
    waveforms = np.asarray(waveforms, dtype=complex)
    a = manifold_matrix(doas, num_sensors)
    if waveforms.ndim != 2 or waveforms.shape[0] != a.shape[1]:
        raise ValidationError("waveforms must have shape (num_sources, T)")
    return a @ waveforms


def sample_gmm_noise(
    noise: NoiseModel, shape: tuple[int, int], seed: int
) -> np.ndarray:
    """Draw an (N, T) matrix of i.i.d. Gaussian-mixture noise samples.

    The stream layout is fixed so traces reproduce bit-for-bit: one
    PCG64 generator seeded with ``seed`` yields three uniforms per
    entry, consumed as (component label, Box-Muller radius, phase),
    with entries filled in column-major order (snapshot by snapshot).

    Parameters
    ----------
    noise : NoiseModel
        Mixture to sample from.
    shape : tuple of int
        (num_sensors, num_snapshots), both positive.
    seed : int
        Nonnegative generator seed.

    Returns
    -------
    numpy.ndarray, shape ``shape``
        Complex noise with E|v|^2 = noise.average_power().
    """
    if len(shape) != 2:
        raise ValidationError("shape must be (num_sensors, num_snapshots)")
    rows, cols = int(shape[0]), int(shape[1])
    if rows < 1 or cols < 1:
        raise ValidationError("shape entries must be positive")
    if int(seed) < 0:
        raise ValidationError("seed must be nonnegative")
    rng = np.random.default_rng(int(seed))
    draws = rng.random((rows * cols, 3))
    edges = np.cumsum(noise.mixing)
    labels = np.searchsorted(edges, draws[:, 0], side="right")
    # Guard the (measure-zero) case u >= edges[-1] from rounding.
    labels = np.minimum(labels, noise.num_components - 1)
    # |v| = sigma * sqrt(-ln(1 - u)) gives E|v|^2 = sigma^2.
    radius = noise.stddevs[labels] * np.sqrt(-np.log1p(-draws[:, 1]))
    phase = 2.0 * math.pi * draws[:, 2]
    flat = radius * (np.cos(phase) + 1j * np.sin(phase))
    return flat.reshape((rows, cols), order="F")


def synthesize_snapshots(
    geometry: ArrayGeometry,
    sources: SourceConfig,
    noise: NoiseModel,
    seed: int,
) -> SnapshotMatrix:
    """Simulate received data: manifold times waveforms plus mixture noise."""
    if geometry.num_sensors <= sources.num_sources:
        raise ValidationError(
            "num_sensors must exceed the number of sources"
        )
    clean = model_prediction(
        sources.doas, sources.waveforms, geometry.num_sensors
    )
    v = sample_gmm_noise(
        noise, (geometry.num_sensors, sources.num_snapshots), seed
    )
    return SnapshotMatrix(clean + v)


def signal_power(waveforms: np.ndarray) -> np.ndarray:
    """Per-source mean-square amplitude (1/T) sum_t |s_m(t)|^2, shape (M,)."""
    waveforms = np.asarray(waveforms, dtype=complex)
    if waveforms.ndim != 2 or waveforms.shape[1] < 1:
        raise ValidationError("waveforms must have shape (num_sources, T)")
    return np.mean(np.abs(waveforms) ** 2, axis=1)


def log_likelihood(
    snapshots: SnapshotMatrix, estimate: ParameterEstimate
) -> float:
    """Exact incomplete-data log-likelihood of an estimate.

    Sums, over all sensors and snapshots, the log of the mixture
    density evaluated at the residual y_n(t) - [A s(t)]_n.  The inner
    log-sum over components is max-shifted for stability.
    """
    y = snapshots.data
    if estimate.num_snapshots != snapshots.num_snapshots:
        raise ValidationError("estimate and snapshots disagree on T")
    pred = model_prediction(
        estimate.doas, estimate.waveforms, snapshots.num_sensors
    )
    with np.errstate(over="ignore", invalid="ignore"):
        resid2 = np.abs(y - pred) ** 2
        var = estimate.noise.variances
        logc = np.log(estimate.noise.mixing) - math.log(math.pi) - np.log(var)
        z = logc[None, None, :] - resid2[:, :, None] / var[None, None, :]
        zmax = z.max(axis=2)
        per_cell = zmax + np.log(np.sum(np.exp(z - zmax[:, :, None]), axis=2))
    if not np.all(np.isfinite(per_cell)):
        n, t = np.argwhere(~np.isfinite(per_cell))[0]
        raise NumericError(
            f"log-likelihood non-finite at sensor {n}, snapshot {t} (0-based)"
        )
    return float(per_cell.sum())
