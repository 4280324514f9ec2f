"""Maximum-likelihood DOA estimation in Gaussian mixture noise.

Deterministic sources impinge on a half-wavelength uniform linear
array; the noise is an i.i.d. finite mixture of zero-mean circular
complex Gaussians.  Two alternating EM solvers maximize the exact
log-likelihood over source directions, waveforms, and the mixture
parameters; nested scalar searches over u = cos(theta) handle the
directions.
"""

from .aecm import AecmState, aecm_cmstep_m, aecm_estep_m, aecm_iterate
from .em import (
    doa_objective,
    multi_source_signal_update,
    noise_param_update,
    responsibilities,
    single_source_signal_update,
    weight_diagonal,
    weight_diagonals,
)
from .exceptions import (
    DegenerateGeometryError,
    GmdoaError,
    NumericError,
    ValidationError,
)
from .harness import (
    ComparisonResult,
    ExperimentConfig,
    RunStats,
    compare_runs,
    config_from_dict,
    default_config,
    emit_trace,
    load_config,
    read_trace_rows,
    run_experiment,
    write_comparison_csv,
)
from .model import (
    ArrayGeometry,
    NoiseModel,
    ParameterEstimate,
    SnapshotMatrix,
    SourceConfig,
    log_likelihood,
    manifold_matrix,
    model_prediction,
    sample_gmm_noise,
    signal_power,
    steering_vector,
    synthesize_snapshots,
)
from .sage import (
    SageState,
    sage_empair2,
    sage_empair3,
    sage_estep1,
    sage_iterate,
    sage_mstep1,
)
from .search import DoaSearchStrategy, golden_local_search, grid_argmax
from .trace import ConvergenceTrace, TraceRow, build_trace_row, match_errors_deg

__version__ = "0.1.0"

__all__ = [
    "AecmState",
    "ArrayGeometry",
    "ComparisonResult",
    "ConvergenceTrace",
    "DegenerateGeometryError",
    "DoaSearchStrategy",
    "ExperimentConfig",
    "GmdoaError",
    "NoiseModel",
    "NumericError",
    "ParameterEstimate",
    "RunStats",
    "SageState",
    "SnapshotMatrix",
    "SourceConfig",
    "TraceRow",
    "ValidationError",
    "aecm_cmstep_m",
    "aecm_estep_m",
    "aecm_iterate",
    "build_trace_row",
    "compare_runs",
    "config_from_dict",
    "default_config",
    "doa_objective",
    "emit_trace",
    "golden_local_search",
    "grid_argmax",
    "load_config",
    "log_likelihood",
    "manifold_matrix",
    "match_errors_deg",
    "model_prediction",
    "multi_source_signal_update",
    "noise_param_update",
    "read_trace_rows",
    "responsibilities",
    "run_experiment",
    "sage_empair2",
    "sage_empair3",
    "sage_estep1",
    "sage_iterate",
    "sage_mstep1",
    "sample_gmm_noise",
    "signal_power",
    "single_source_signal_update",
    "steering_vector",
    "synthesize_snapshots",
    "weight_diagonal",
    "weight_diagonals",
    "write_comparison_csv",
]
