import math

import numpy as np
import pytest

from gmdoa import (
    ArrayGeometry,
    NoiseModel,
    ParameterEstimate,
    SnapshotMatrix,
    SourceConfig,
    ValidationError,
    NumericError,
    log_likelihood,
    manifold_matrix,
    model_prediction,
    sample_gmm_noise,
    signal_power,
    steering_vector,
    synthesize_snapshots,
)
from oracles import ref_log_likelihood


# ---------------------------------------------------------------- types


def test_array_geometry_validation():
    assert ArrayGeometry(2).num_sensors == 2
    with pytest.raises(ValidationError):
        ArrayGeometry(1)
    with pytest.raises(ValidationError):
        ArrayGeometry(2.5)


def test_noise_model_basics():
    nm = NoiseModel(mixing=[0.95, 0.05], stddevs=[1.0, math.sqrt(20.0)])
    assert nm.num_components == 2
    assert nm.variances == pytest.approx([1.0, 20.0])
    # mixture-averaged power of the reference noise scenario
    assert nm.average_power() == pytest.approx(1.95)


def test_noise_model_validation():
    with pytest.raises(ValidationError):
        NoiseModel(mixing=[0.5, 0.4], stddevs=[1.0, 2.0])  # sums to 0.9
    with pytest.raises(ValidationError):
        NoiseModel(mixing=[1.0, 0.0], stddevs=[1.0, 2.0])  # zero weight
    with pytest.raises(ValidationError):
        NoiseModel(mixing=[0.5, 0.5], stddevs=[1.0, -2.0])
    with pytest.raises(ValidationError):
        NoiseModel(mixing=[0.5, 0.5], stddevs=[1.0])
    with pytest.raises(ValidationError):
        NoiseModel(mixing=[], stddevs=[])


def test_noise_model_arrays_frozen():
    nm = NoiseModel(mixing=[1.0], stddevs=[2.0])
    with pytest.raises(ValueError):
        nm.mixing[0] = 0.5


def test_source_config_validation():
    good = SourceConfig(
        doas=[1.0, 2.0], waveforms=np.ones((2, 3), dtype=complex)
    )
    assert good.num_sources == 2 and good.num_snapshots == 3
    with pytest.raises(ValidationError):
        SourceConfig(doas=[0.0, 1.0], waveforms=np.ones((2, 3)))
    with pytest.raises(ValidationError):
        SourceConfig(doas=[math.pi, 1.0], waveforms=np.ones((2, 3)))
    with pytest.raises(ValidationError):
        SourceConfig(doas=[1.0, 1.0], waveforms=np.ones((2, 3)))
    with pytest.raises(ValidationError):
        SourceConfig(doas=[1.0, 2.0], waveforms=np.ones((3, 3)))


def test_parameter_estimate_allows_coincident_doas():
    # estimates may collapse onto one direction; only truths must differ
    nm = NoiseModel(mixing=[1.0], stddevs=[1.0])
    est = ParameterEstimate(
        doas=[1.5, 1.5], waveforms=np.zeros((2, 4), dtype=complex), noise=nm
    )
    assert est.num_sources == 2


def test_parameter_estimate_replace():
    nm = NoiseModel(mixing=[1.0], stddevs=[1.0])
    est = ParameterEstimate(
        doas=[1.0], waveforms=np.ones((1, 2), dtype=complex), noise=nm
    )
    swapped = est.replace(doas=np.array([2.0]))
    assert swapped.doas[0] == 2.0
    assert est.doas[0] == 1.0
    assert swapped.noise is nm


def test_snapshot_matrix_validation():
    SnapshotMatrix(np.zeros((2, 2), dtype=complex))
    with pytest.raises(ValidationError):
        SnapshotMatrix(np.zeros((2,), dtype=complex))
    with pytest.raises(ValidationError):
        SnapshotMatrix(np.array([[1.0, np.inf]], dtype=complex))


# ------------------------------------------------------------ steering


def test_steering_vector_values():
    # cos(60 deg) = 0.5: phases step by -pi/2 per element
    a = steering_vector(math.radians(60.0), 4)
    expected = np.array([1.0, -1.0j, -1.0, 1.0j])
    assert np.allclose(a, expected, atol=1e-12)
    # broadside: cos = 0, all elements in phase
    b = steering_vector(math.pi / 2, 5)
    assert np.allclose(b, np.ones(5), atol=1e-12)


def test_steering_vector_unit_modulus(rng):
    for theta in rng.uniform(1e-6, math.pi - 1e-6, size=25):
        a = steering_vector(theta, 7)
        assert np.allclose(np.abs(a), 1.0, atol=1e-12)
        assert a[0] == 1.0 + 0.0j


def test_steering_vector_domain():
    for bad in (0.0, math.pi, -0.3, math.pi + 0.3, math.nan):
        with pytest.raises(ValidationError):
            steering_vector(bad, 4)
    with pytest.raises(ValidationError):
        steering_vector(1.0, 0)


def test_manifold_matrix_columns():
    doas = np.array([0.8, 1.7, 2.4])
    a = manifold_matrix(doas, 6)
    assert a.shape == (6, 3)
    for m, theta in enumerate(doas):
        assert np.array_equal(a[:, m], steering_vector(theta, 6))


def test_model_prediction_shape():
    doas = np.array([1.0, 2.0])
    s = np.ones((2, 5), dtype=complex)
    pred = model_prediction(doas, s, 4)
    assert pred.shape == (4, 5)
    expected = (
        steering_vector(1.0, 4)[:, None] + steering_vector(2.0, 4)[:, None]
    )
    assert np.allclose(pred, expected @ np.ones((1, 5)), atol=1e-12)


# ------------------------------------------------------------- sampling


def test_noise_sampling_moments():
    nm = NoiseModel(mixing=[0.95, 0.05], stddevs=[1.0, math.sqrt(20.0)])
    v = sample_gmm_noise(nm, (40, 2500), seed=7)
    assert v.shape == (40, 2500)
    power = np.mean(np.abs(v) ** 2)
    # E|v|^2 = 0.95 * 1 + 0.05 * 20 = 1.95; tolerance ~ 4 standard errors
    se = np.std(np.abs(v) ** 2) / math.sqrt(v.size)
    assert abs(power - 1.95) < 4 * se
    assert abs(np.mean(v.real)) < 0.02 and abs(np.mean(v.imag)) < 0.02
    # circularity: real and imaginary parts carry equal halves
    assert np.var(v.real) == pytest.approx(np.var(v.imag), rel=0.05)


def test_noise_sampling_component_fractions():
    # widely separated stddevs let samples be classified by magnitude
    nm = NoiseModel(mixing=[0.9, 0.1], stddevs=[0.01, 10.0])
    v = sample_gmm_noise(nm, (100, 1000), seed=3)
    frac_big = np.mean(np.abs(v) > 0.5)
    assert abs(frac_big - 0.1) < 0.01


def test_noise_sampling_deterministic():
    nm = NoiseModel(mixing=[0.7, 0.3], stddevs=[1.0, 3.0])
    a = sample_gmm_noise(nm, (4, 6), seed=11)
    b = sample_gmm_noise(nm, (4, 6), seed=11)
    assert np.array_equal(a, b)
    c = sample_gmm_noise(nm, (4, 6), seed=12)
    assert not np.array_equal(a, c)


def test_noise_sampling_column_major_stream():
    # the underlying draw stream is per entry in column-major order, so
    # reshaping a flat draw of the same size must reproduce the matrix
    nm = NoiseModel(mixing=[0.6, 0.4], stddevs=[0.5, 2.0])
    mat = sample_gmm_noise(nm, (3, 8), seed=5)
    flat = sample_gmm_noise(nm, (24, 1), seed=5)
    assert np.array_equal(mat, flat.reshape((3, 8), order="F"))


def test_noise_sampling_validation():
    nm = NoiseModel(mixing=[1.0], stddevs=[1.0])
    with pytest.raises(ValidationError):
        sample_gmm_noise(nm, (0, 5), seed=0)
    with pytest.raises(ValidationError):
        sample_gmm_noise(nm, (5, 3), seed=-1)


def test_synthesize_snapshots_mean():
    geometry = ArrayGeometry(5)
    sources = SourceConfig(
        doas=[math.radians(75.0)],
        waveforms=np.full((1, 4000), 2.0 + 0.0j),
    )
    nm = NoiseModel(mixing=[1.0], stddevs=[0.5])
    snap = synthesize_snapshots(geometry, sources, nm, seed=2)
    assert snap.num_sensors == 5 and snap.num_snapshots == 4000
    clean = 2.0 * steering_vector(math.radians(75.0), 5)
    assert np.allclose(snap.data.mean(axis=1), clean, atol=0.05)


def test_synthesize_requires_more_sensors_than_sources():
    nm = NoiseModel(mixing=[1.0], stddevs=[1.0])
    sources = SourceConfig(
        doas=[1.0, 2.0], waveforms=np.ones((2, 3), dtype=complex)
    )
    with pytest.raises(ValidationError):
        synthesize_snapshots(ArrayGeometry(2), sources, nm, seed=0)


# ---------------------------------------------------------------- power


def test_signal_power_constant_modulus():
    s = np.outer([1.0, math.sqrt(10.0)], np.ones(200)).astype(complex)
    assert signal_power(s) == pytest.approx([1.0, 10.0], rel=1e-12)


def test_signal_power_matches_direct_mean(rng):
    s = rng.normal(size=(3, 17)) + 1j * rng.normal(size=(3, 17))
    direct = [(np.abs(s[m]) ** 2).sum() / 17 for m in range(3)]
    assert signal_power(s) == pytest.approx(direct, rel=1e-12)


# ------------------------------------------------------- log-likelihood


def test_log_likelihood_frozen_scalar_case():
    # N=2, T=1, one broadside source, two components; value computed by
    # direct summation of the mixture density
    snap = SnapshotMatrix(np.array([[1.0 + 2.0j], [-0.5 + 0.0j]]))
    est = ParameterEstimate(
        doas=[math.pi / 2],
        waveforms=np.array([[0.3 - 0.1j]]),
        noise=NoiseModel(mixing=[0.7, 0.3], stddevs=[1.0, 2.0]),
    )
    assert log_likelihood(snap, est) == pytest.approx(
        -6.738237039793268, abs=1e-12
    )


def test_log_likelihood_matches_reference(rng):
    for _ in range(5):
        n, t = 4, 6
        y = rng.normal(size=(n, t)) + 1j * rng.normal(size=(n, t))
        doas = rng.uniform(0.3, math.pi - 0.3, size=2)
        s = rng.normal(size=(2, t)) + 1j * rng.normal(size=(2, t))
        mixing = [0.6, 0.4]
        stddevs = [0.8, 2.5]
        est = ParameterEstimate(
            doas=doas,
            waveforms=s,
            noise=NoiseModel(mixing=mixing, stddevs=stddevs),
        )
        ref = ref_log_likelihood(y, doas, s, mixing, stddevs)
        assert log_likelihood(SnapshotMatrix(y), est) == pytest.approx(
            ref, rel=1e-12
        )


def test_log_likelihood_single_component_closed_form(rng):
    # L=1 reduces to -N T ln(pi sigma^2) - sum |resid|^2 / sigma^2
    n, t, sigma = 3, 4, 1.7
    y = rng.normal(size=(n, t)) + 1j * rng.normal(size=(n, t))
    doas = np.array([1.1])
    s = rng.normal(size=(1, t)) + 1j * rng.normal(size=(1, t))
    est = ParameterEstimate(
        doas=doas, waveforms=s, noise=NoiseModel([1.0], [sigma])
    )
    resid2 = np.abs(y - model_prediction(doas, s, n)) ** 2
    closed = -n * t * math.log(math.pi * sigma**2) - resid2.sum() / sigma**2
    assert log_likelihood(SnapshotMatrix(y), est) == pytest.approx(
        closed, rel=1e-12
    )


def test_log_likelihood_stable_under_large_residuals():
    # a residual power of ~1e4 underflows the naive density but not the
    # max-shifted evaluation
    y = np.full((2, 2), 100.0 + 0.0j)
    est = ParameterEstimate(
        doas=[math.pi / 2],
        waveforms=np.zeros((1, 2), dtype=complex),
        noise=NoiseModel(mixing=[0.5, 0.5], stddevs=[1.0, 2.0]),
    )
    value = log_likelihood(SnapshotMatrix(y), est)
    # dominant component: lam/ (pi sig^2) exp(-1e4 / 4)
    expected = 4 * (math.log(0.5 / (math.pi * 4.0)) - 1e4 / 4.0)
    assert value == pytest.approx(expected, rel=1e-9)


def test_log_likelihood_shape_mismatch():
    snap = SnapshotMatrix(np.zeros((2, 3), dtype=complex))
    est = ParameterEstimate(
        doas=[1.0],
        waveforms=np.zeros((1, 4), dtype=complex),
        noise=NoiseModel([1.0], [1.0]),
    )
    with pytest.raises(ValidationError):
        log_likelihood(snap, est)


def test_log_likelihood_nonfinite_reports_cell():
    y = np.full((2, 3), 1e200 + 0.0j)
    y[0, 0] = 0.0
    est = ParameterEstimate(
        doas=[math.pi / 2],
        waveforms=np.zeros((1, 3), dtype=complex),
        noise=NoiseModel([1.0], [1.0]),
    )
    with pytest.raises(NumericError, match=r"sensor \d+, snapshot \d+"):
        log_likelihood(SnapshotMatrix(y), est)
