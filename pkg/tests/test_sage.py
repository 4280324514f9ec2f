import math

import numpy as np
import pytest

from gmdoa import (
    ArrayGeometry,
    DoaSearchStrategy,
    NoiseModel,
    NumericError,
    ParameterEstimate,
    SageState,
    SnapshotMatrix,
    SourceConfig,
    ValidationError,
    doa_objective,
    log_likelihood,
    responsibilities,
    sage_empair2,
    sage_empair3,
    sage_estep1,
    sage_iterate,
    sage_mstep1,
    synthesize_snapshots,
    weight_diagonals,
)


def make_problem(seed=0, t=60):
    geometry = ArrayGeometry(6)
    sources = SourceConfig(
        doas=np.radians([60.0, 100.0]),
        waveforms=np.outer([1.0, math.sqrt(10.0)], np.ones(t)).astype(complex),
    )
    truth_noise = NoiseModel([0.95, 0.05], [1.0, math.sqrt(20.0)])
    snapshots = synthesize_snapshots(geometry, sources, truth_noise, seed)
    initial = ParameterEstimate(
        doas=np.radians([55.0, 105.0]),
        waveforms=np.ones((2, t), dtype=complex),
        noise=NoiseModel([0.9, 0.1], [1.0, math.sqrt(10.0)]),
    )
    return snapshots, initial


def test_estep1_conditional_means_sum_to_data():
    snapshots, initial = make_problem()
    resp, mu = sage_estep1(snapshots, initial)
    assert mu.shape == (2, 6, 60)
    assert np.allclose(mu.sum(axis=0), snapshots.data, atol=1e-10)
    # responsibilities match the standalone computation
    from gmdoa import model_prediction

    pred = model_prediction(initial.doas, initial.waveforms, 6)
    expected = responsibilities(snapshots, pred, initial.noise)
    assert np.array_equal(resp, expected)


def test_estep1_single_source_mean_is_data():
    snapshots, _ = make_problem()
    nm = NoiseModel([1.0], [1.5])
    est = ParameterEstimate(
        doas=[1.0], waveforms=np.ones((1, 60), dtype=complex), noise=nm
    )
    _, mu = sage_estep1(snapshots, est)
    assert np.array_equal(mu[0], snapshots.data)


def test_mstep1_improves_each_source_objective():
    snapshots, initial = make_problem()
    resp, mu = sage_estep1(snapshots, initial)
    search = DoaSearchStrategy()
    doas, waveforms = sage_mstep1(mu, resp, initial.noise, search, initial.doas)
    weights = weight_diagonals(resp, initial.noise)
    for m in range(2):
        g = doa_objective(mu[m], weights)
        assert g(math.cos(doas[m])) >= g(math.cos(initial.doas[m]))
    assert waveforms.shape == (2, 60)


def test_mstep1_search_failure_names_source():
    mu = np.full((1, 3, 2), np.nan, dtype=complex)
    resp = np.ones((3, 2, 1))
    noise = NoiseModel([1.0], [1.0])
    with pytest.raises(NumericError, match="source 0"):
        sage_mstep1(mu, resp, noise, DoaSearchStrategy(), np.array([1.0]))


def test_empair2_improves_loglik():
    snapshots, initial = make_problem()
    before = log_likelihood(snapshots, initial)
    updated = initial.replace(waveforms=sage_empair2(snapshots, initial))
    assert log_likelihood(snapshots, updated) >= before - 1e-10 * abs(before)


def test_empair3_improves_loglik():
    snapshots, initial = make_problem()
    before = log_likelihood(snapshots, initial)
    updated = initial.replace(noise=sage_empair3(snapshots, initial))
    assert log_likelihood(snapshots, updated) >= before - 1e-10 * abs(before)


def test_iterate_converges_and_is_monotone():
    snapshots, initial = make_problem(t=200)
    est, trace = sage_iterate(
        snapshots,
        initial,
        DoaSearchStrategy(),
        30,
        true_doas_deg=[60.0, 100.0],
    )
    lls = trace.logliks()
    drops = np.diff(lls)
    assert np.all(drops >= -1e-10 * np.maximum(1.0, np.abs(lls[:-1])))
    assert max(trace.final().errors_deg) < 1.0
    assert len(trace.iteration_rows()) == 31


def test_iterate_accepts_state_wrapper():
    snapshots, initial = make_problem()
    est1, _ = sage_iterate(snapshots, initial, DoaSearchStrategy(), 2)
    est2, _ = sage_iterate(
        snapshots, SageState(estimate=initial), DoaSearchStrategy(), 2
    )
    assert np.array_equal(est1.doas, est2.doas)
    assert np.array_equal(est1.waveforms, est2.waveforms)


def test_iterate_trace_row_zero_is_initial():
    snapshots, initial = make_problem()
    _, trace = sage_iterate(
        snapshots, initial, DoaSearchStrategy(), 3, true_doas_deg=[60, 100]
    )
    row0 = trace.rows[0]
    assert row0.iteration == 0.0
    assert row0.doas_deg == pytest.approx([55.0, 105.0], abs=1e-12)
    assert row0.errors_deg == pytest.approx([5.0, 5.0], abs=1e-12)
    assert row0.loglik == pytest.approx(
        log_likelihood(snapshots, initial), rel=1e-12
    )


def test_iterate_fine_trace_rows():
    snapshots, initial = make_problem()
    _, trace = sage_iterate(
        snapshots, initial, DoaSearchStrategy(), 4, fine_trace=True
    )
    # row 0 plus three rows per iteration
    assert len(trace.rows) == 1 + 3 * 4
    assert len(trace.iteration_rows()) == 5
    fractional = [r.iteration for r in trace.rows if not r.is_iteration_boundary]
    assert fractional == pytest.approx(
        [k + f for k in range(4) for f in (1 / 3, 2 / 3)]
    )
    # fine rows never decrease the log-likelihood either
    lls = np.array([r.loglik for r in trace.rows])
    assert np.all(np.diff(lls) >= -1e-10 * np.maximum(1.0, np.abs(lls[:-1])))


def test_iterate_without_truth_has_no_errors():
    snapshots, initial = make_problem()
    _, trace = sage_iterate(snapshots, initial, DoaSearchStrategy(), 2)
    assert all(r.errors_deg is None for r in trace.rows)


def test_iterate_early_stop_disabled_by_default():
    snapshots, initial = make_problem()
    _, trace = sage_iterate(snapshots, initial, DoaSearchStrategy(), 6)
    assert len(trace.iteration_rows()) == 7


def test_iterate_early_stop_halts_converged_run():
    # a noise-free-ish single source converges to a fixed point quickly
    geometry = ArrayGeometry(5)
    sources = SourceConfig(
        doas=[math.radians(80.0)],
        waveforms=np.full((1, 40), 3.0 + 0.0j),
    )
    nm = NoiseModel([1.0], [0.01])
    snapshots = synthesize_snapshots(geometry, sources, nm, seed=4)
    initial = ParameterEstimate(
        doas=[math.radians(78.0)],
        waveforms=np.ones((1, 40), dtype=complex),
        noise=NoiseModel([1.0], [1.0]),
    )
    _, trace = sage_iterate(
        snapshots, initial, DoaSearchStrategy(), 40, early_stop=True
    )
    assert len(trace.iteration_rows()) < 41


def test_iterate_validation():
    snapshots, initial = make_problem()
    with pytest.raises(ValidationError):
        sage_iterate(snapshots, initial, DoaSearchStrategy(), -1)
    short = initial.replace(waveforms=np.ones((2, 3), dtype=complex))
    with pytest.raises(ValidationError):
        sage_iterate(snapshots, short, DoaSearchStrategy(), 1)


def test_iterate_wall_clock_is_monotone():
    snapshots, initial = make_problem()
    _, trace = sage_iterate(snapshots, initial, DoaSearchStrategy(), 5)
    walls = [r.wall_ms for r in trace.rows]
    assert all(b >= a for a, b in zip(walls, walls[1:]))
