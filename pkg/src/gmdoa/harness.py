"""Experiment configuration, the run/compare drivers, and trace CSV I/O.

Configs are YAML mappings; every omitted field falls back to the
built-in default experiment: a 6-sensor array, two constant-modulus
sources at 60 and 100 degrees with powers 1 and 10, 200 snapshots,
two-component mixture noise (0.95, 0.05) with stddevs (1, sqrt(20)),
and the estimator initialized at 55/105 degrees, unit amplitudes, and
mixture guess (0.9, 0.1) / (1, sqrt(10)).

Angles cross this interface in degrees; the core works in radians.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from .aecm import aecm_iterate
from .exceptions import ValidationError
from .model import (
    ArrayGeometry,
    NoiseModel,
    ParameterEstimate,
    SourceConfig,
    synthesize_snapshots,
)
from .sage import sage_iterate
from .search import DoaSearchStrategy
from .trace import ConvergenceTrace, TraceRow

ALGORITHMS = ("sage", "aecm")
SEARCH_MODES = ("golden", "grid")
TRACE_GRANULARITIES = ("iteration", "cycle")

# Iterations-to-threshold use this DOA error bound (degrees).
CONVERGENCE_THRESHOLD_DEG = 1.0

_DEFAULTS: dict = {
    "num_sensors": 6,
    "num_snapshots": 200,
    "sources": {
        "doas": [60.0, 100.0],
        "amplitudes": [1.0, math.sqrt(10.0)],
    },
    "noise": {
        "mixing": [0.95, 0.05],
        "stddevs": [1.0, math.sqrt(20.0)],
    },
    "initial": {
        "doas": [55.0, 105.0],
        "amplitudes": [1.0, 1.0],
        "mixing": [0.9, 0.1],
        "stddevs": [1.0, math.sqrt(10.0)],
    },
    "algorithm": "sage",
    "search": "golden",
    "iterations": 50,
    "seed": 0,
    "trace": "iteration",
}


@dataclass(frozen=True)
class ExperimentConfig:
    """One fully-specified experiment.

    Angles are degrees in the open interval (0, 180).  ``amplitudes``
    are the constant moduli of the true waveforms; ``seed`` drives the
    noise synthesis, so a fixed config reproduces its trace exactly.
    """

    num_sensors: int
    num_snapshots: int
    true_doas_deg: tuple[float, ...]
    amplitudes: tuple[float, ...]
    noise: NoiseModel
    initial_doas_deg: tuple[float, ...]
    initial_amplitudes: tuple[float, ...]
    initial_noise: NoiseModel
    algorithm: str = "sage"
    search: str = "golden"
    iterations: int = 50
    seed: int = 0
    trace_granularity: str = "iteration"

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValidationError(f"algorithm must be one of {ALGORITHMS}")
        if self.search not in SEARCH_MODES:
            raise ValidationError(f"search must be one of {SEARCH_MODES}")
        if self.trace_granularity not in TRACE_GRANULARITIES:
            raise ValidationError(
                f"trace must be one of {TRACE_GRANULARITIES}"
            )
        if int(self.iterations) < 0:
            raise ValidationError("iterations must be nonnegative")
        if int(self.seed) < 0:
            raise ValidationError("seed must be nonnegative")
        object.__setattr__(self, "iterations", int(self.iterations))
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "true_doas_deg", tuple(float(x) for x in self.true_doas_deg))
        object.__setattr__(self, "amplitudes", tuple(float(x) for x in self.amplitudes))
        object.__setattr__(self, "initial_doas_deg", tuple(float(x) for x in self.initial_doas_deg))
        object.__setattr__(self, "initial_amplitudes", tuple(float(x) for x in self.initial_amplitudes))
        m = len(self.true_doas_deg)
        if m < 1:
            raise ValidationError("at least one source is required")
        if len(self.amplitudes) != m or len(self.initial_doas_deg) != m or len(self.initial_amplitudes) != m:
            raise ValidationError(
                "doas and amplitudes (true and initial) must all have the "
                "same length"
            )
        if int(self.num_sensors) <= m:
            raise ValidationError("num_sensors must exceed the number of sources")
        if int(self.num_snapshots) < 1:
            raise ValidationError("num_snapshots must be at least 1")
        object.__setattr__(self, "num_sensors", int(self.num_sensors))
        object.__setattr__(self, "num_snapshots", int(self.num_snapshots))
        for name, angles in (
            ("true_doas_deg", self.true_doas_deg),
            ("initial_doas_deg", self.initial_doas_deg),
        ):
            for x in angles:
                if not (math.isfinite(x) and 0.0 < x < 180.0):
                    raise ValidationError(
                        f"{name} entries must lie strictly inside (0, 180)"
                    )
        if len(set(self.true_doas_deg)) != m:
            raise ValidationError("true_doas_deg must be pairwise distinct")
        for name, amps in (
            ("amplitudes", self.amplitudes),
            ("initial_amplitudes", self.initial_amplitudes),
        ):
            for x in amps:
                if not (math.isfinite(x) and x > 0.0):
                    raise ValidationError(f"{name} entries must be positive")
        if not isinstance(self.noise, NoiseModel) or not isinstance(
            self.initial_noise, NoiseModel
        ):
            raise ValidationError("noise and initial_noise must be NoiseModels")

    @property
    def num_sources(self) -> int:
        return len(self.true_doas_deg)

    def geometry(self) -> ArrayGeometry:
        return ArrayGeometry(self.num_sensors)

    def source_config(self) -> SourceConfig:
        waveforms = np.outer(
            self.amplitudes, np.ones(self.num_snapshots)
        ).astype(complex)
        return SourceConfig(
            doas=np.radians(self.true_doas_deg), waveforms=waveforms
        )

    def initial_estimate(self) -> ParameterEstimate:
        waveforms = np.outer(
            self.initial_amplitudes, np.ones(self.num_snapshots)
        ).astype(complex)
        return ParameterEstimate(
            doas=np.radians(self.initial_doas_deg),
            waveforms=waveforms,
            noise=self.initial_noise,
        )

    def search_strategy(self) -> DoaSearchStrategy:
        kind = "golden_local" if self.search == "golden" else "grid_argmax"
        return DoaSearchStrategy(kind=kind)

    def with_overrides(self, **kwargs) -> "ExperimentConfig":
        """Copy with fields replaced; the copy is re-validated."""
        return dataclasses.replace(self, **kwargs)


def default_config() -> ExperimentConfig:
    """The built-in default experiment (see module docstring)."""
    return config_from_dict({})


def _merge(defaults, override, path: str):
    if isinstance(defaults, dict):
        if not isinstance(override, dict):
            raise ValidationError(f"{path or 'config'} must be a mapping")
        merged = {}
        for key, default_value in defaults.items():
            child = f"{path}.{key}" if path else key
            if key in override:
                merged[key] = _merge(default_value, override[key], child)
            else:
                merged[key] = default_value
        for key in override:
            if key not in defaults:
                child = f"{path}.{key}" if path else key
                raise ValidationError(f"unknown config key: {child}")
        return merged
    return override


def _number_list(values, path: str) -> list[float]:
    if not isinstance(values, (list, tuple)) or len(values) == 0:
        raise ValidationError(f"{path} must be a nonempty list of numbers")
    out = []
    for i, v in enumerate(values):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ValidationError(f"{path}[{i}] must be a number")
        if not math.isfinite(float(v)):
            raise ValidationError(f"{path}[{i}] must be finite")
        out.append(float(v))
    return out


def _angle_list(values, path: str) -> list[float]:
    out = _number_list(values, path)
    for i, v in enumerate(out):
        if not 0.0 < v < 180.0:
            raise ValidationError(
                f"{path}[{i}] must lie strictly inside (0, 180) degrees"
            )
    return out


def _positive_list(values, path: str) -> list[float]:
    out = _number_list(values, path)
    for i, v in enumerate(out):
        if v <= 0.0:
            raise ValidationError(f"{path}[{i}] must be positive")
    return out


def _int_field(value, path: str, minimum: int) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValidationError(f"{path} must be an integer")
    if value < minimum:
        raise ValidationError(f"{path} must be at least {minimum}")
    return value


def _choice_field(value, path: str, choices: tuple[str, ...]) -> str:
    if value not in choices:
        raise ValidationError(f"{path} must be one of {choices}")
    return value


def _noise_field(section: dict, path: str) -> NoiseModel:
    mixing = _positive_list(section["mixing"], f"{path}.mixing")
    stddevs = _positive_list(section["stddevs"], f"{path}.stddevs")
    if len(mixing) != len(stddevs):
        raise ValidationError(
            f"{path}.mixing and {path}.stddevs must have the same length"
        )
    if abs(sum(mixing) - 1.0) > 1e-12:
        raise ValidationError(f"{path}.mixing must sum to 1")
    try:
        return NoiseModel(mixing=mixing, stddevs=stddevs)
    except ValidationError as exc:
        raise ValidationError(f"{path}: {exc}") from exc


def config_from_dict(raw: dict) -> ExperimentConfig:
    """Validate a config mapping, filling gaps from the defaults.

    Error messages name the offending field with its full dotted path,
    e.g. ``initial.doas[0]``.
    """
    if not isinstance(raw, dict):
        raise ValidationError("config must be a mapping")
    merged = _merge(_DEFAULTS, raw, "")
    doas = _angle_list(merged["sources"]["doas"], "sources.doas")
    if len(set(doas)) != len(doas):
        raise ValidationError("sources.doas must be pairwise distinct")
    amplitudes = _positive_list(
        merged["sources"]["amplitudes"], "sources.amplitudes"
    )
    if len(amplitudes) != len(doas):
        raise ValidationError(
            "sources.amplitudes must match sources.doas in length"
        )
    initial_doas = _angle_list(merged["initial"]["doas"], "initial.doas")
    initial_amplitudes = _positive_list(
        merged["initial"]["amplitudes"], "initial.amplitudes"
    )
    if len(initial_doas) != len(doas) or len(initial_amplitudes) != len(doas):
        raise ValidationError(
            "initial.doas and initial.amplitudes must match sources.doas "
            "in length"
        )
    num_sensors = _int_field(merged["num_sensors"], "num_sensors", 2)
    if num_sensors <= len(doas):
        raise ValidationError(
            "num_sensors must exceed the number of sources"
        )
    return ExperimentConfig(
        num_sensors=num_sensors,
        num_snapshots=_int_field(merged["num_snapshots"], "num_snapshots", 1),
        true_doas_deg=tuple(doas),
        amplitudes=tuple(amplitudes),
        noise=_noise_field(merged["noise"], "noise"),
        initial_doas_deg=tuple(initial_doas),
        initial_amplitudes=tuple(initial_amplitudes),
        initial_noise=_noise_field(
            {
                "mixing": merged["initial"]["mixing"],
                "stddevs": merged["initial"]["stddevs"],
            },
            "initial",
        ),
        algorithm=_choice_field(merged["algorithm"], "algorithm", ALGORITHMS),
        search=_choice_field(merged["search"], "search", SEARCH_MODES),
        iterations=_int_field(merged["iterations"], "iterations", 0),
        seed=_int_field(merged["seed"], "seed", 0),
        trace_granularity=_choice_field(
            merged["trace"], "trace", TRACE_GRANULARITIES
        ),
    )


def load_config(path) -> ExperimentConfig:
    """Read a YAML config file; an empty file yields the defaults.

    Parse failures surface as validation errors carrying the YAML
    parser's line/column report.
    """
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read config {p}: {exc}") from exc
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ValidationError(f"config parse error in {p.name}: {exc}") from exc
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ValidationError("config must be a mapping at the top level")
    return config_from_dict(raw)


def run_experiment(config: ExperimentConfig) -> tuple[ConvergenceTrace, ParameterEstimate]:
    """Synthesize data and run the configured solver.

    Pure function of the config: no I/O, and identical configs produce
    identical traces (wall-clock columns aside).
    """
    snapshots = synthesize_snapshots(
        config.geometry(), config.source_config(), config.noise, config.seed
    )
    runner = sage_iterate if config.algorithm == "sage" else aecm_iterate
    estimate, trace = runner(
        snapshots,
        config.initial_estimate(),
        config.search_strategy(),
        config.iterations,
        true_doas_deg=np.asarray(config.true_doas_deg),
        fine_trace=config.trace_granularity == "cycle",
    )
    return trace, estimate


def _fmt(value: float) -> str:
    return format(float(value), ".12g")


def _fmt_iter(iteration: float) -> str:
    if float(iteration) == round(iteration):
        return str(int(round(iteration)))
    return _fmt(iteration)


def trace_header(num_sources: int, num_components: int) -> list[str]:
    """Column names: iter, per-source DOAs and errors, mixture, fit."""
    cols = ["iter"]
    cols += [f"theta_deg_{m}" for m in range(1, num_sources + 1)]
    cols += [f"err_deg_{m}" for m in range(1, num_sources + 1)]
    cols += [f"lambda_{l}" for l in range(1, num_components + 1)]
    cols += [f"sigma_{l}" for l in range(1, num_components + 1)]
    cols += ["loglik", "wall_ms"]
    return cols


def emit_trace(trace: ConvergenceTrace, path) -> None:
    """Write a trace as CSV: 12 significant digits, LF line endings."""
    if not trace.rows:
        raise ValidationError("trace is empty")
    lines = [",".join(trace_header(trace.num_sources, trace.num_components))]
    for row in trace.rows:
        errors = (
            [math.nan] * trace.num_sources
            if row.errors_deg is None
            else list(row.errors_deg)
        )
        fields = [_fmt_iter(row.iteration)]
        fields += [_fmt(x) for x in row.doas_deg]
        fields += [_fmt(x) for x in errors]
        fields += [_fmt(x) for x in row.mixing]
        fields += [_fmt(x) for x in row.stddevs]
        fields += [_fmt(row.loglik), _fmt(row.wall_ms)]
        lines.append(",".join(fields))
    Path(path).write_text("\n".join(lines) + "\n", newline="\n")


@dataclass(frozen=True)
class RunStats:
    """Convergence and timing summary of one run."""

    algorithm: str
    iterations_to_threshold: int | None
    total_wall_ms: float
    mean_iteration_wall_ms: float
    final_max_error_deg: float


@dataclass(frozen=True)
class ComparisonResult:
    """Both algorithms on the same data and start point."""

    seed: int
    sage: RunStats
    aecm: RunStats


def _run_stats(config: ExperimentConfig, algorithm: str) -> RunStats:
    trace, _ = run_experiment(config.with_overrides(algorithm=algorithm))
    final = trace.final()
    completed = max(len(trace.iteration_rows()) - 1, 1)
    errors = final.errors_deg or ()
    return RunStats(
        algorithm=algorithm,
        iterations_to_threshold=trace.iterations_to_threshold(
            CONVERGENCE_THRESHOLD_DEG
        ),
        total_wall_ms=final.wall_ms,
        mean_iteration_wall_ms=final.wall_ms / completed,
        final_max_error_deg=max(errors) if errors else math.nan,
    )


def compare_runs(config: ExperimentConfig) -> ComparisonResult:
    """Run both algorithms on identical snapshots and summarize them.

    Identical seeds and start points, so the comparison isolates the
    update schedules.
    """
    return ComparisonResult(
        seed=config.seed,
        sage=_run_stats(config, "sage"),
        aecm=_run_stats(config, "aecm"),
    )


def write_comparison_csv(results: list[ComparisonResult], path) -> None:
    """One row per seed; blank cells mean the run never hit threshold."""
    if not results:
        raise ValidationError("no comparison results to write")
    cols = ["seed"]
    for alg in ALGORITHMS:
        cols += [
            f"{alg}_iters_to_threshold",
            f"{alg}_total_wall_ms",
            f"{alg}_mean_iteration_wall_ms",
            f"{alg}_final_max_err_deg",
        ]
    lines = [",".join(cols)]
    for res in results:
        fields = [str(res.seed)]
        for stats in (res.sage, res.aecm):
            thr = stats.iterations_to_threshold
            fields += [
                "" if thr is None else str(thr),
                _fmt(stats.total_wall_ms),
                _fmt(stats.mean_iteration_wall_ms),
                _fmt(stats.final_max_error_deg),
            ]
        lines.append(",".join(fields))
    Path(path).write_text("\n".join(lines) + "\n", newline="\n")


def read_trace_rows(path) -> tuple[list[str], list[list[float]]]:
    """Parse a trace CSV back into (header, numeric rows).

    Utility for tests and downstream tools; raises a validation error
    when a cell fails to parse as a float.
    """
    text = Path(path).read_text()
    lines = [ln for ln in text.split("\n") if ln != ""]
    if not lines:
        raise ValidationError(f"trace file {path} is empty")
    header = lines[0].split(",")
    rows = []
    for idx, line in enumerate(lines[1:], start=2):
        cells = line.split(",")
        if len(cells) != len(header):
            raise ValidationError(
                f"trace file {path} line {idx}: expected {len(header)} "
                f"cells, got {len(cells)}"
            )
        try:
            rows.append([float(c) for c in cells])
        except ValueError as exc:
            raise ValidationError(
                f"trace file {path} line {idx}: {exc}"
            ) from exc
    return header, rows
