"""Reading and validating convergence-trace CSV files.

A trace file is the CSV the estimation harness emits: one header row
followed by one row per recorded estimate.  The column layout is

    iter, theta_deg_1..M, err_deg_1..M, lambda_1..L, sigma_1..L,
    loglik, wall_ms

with the source count M inferred from the theta block and the noise
component count L from the lambda block.  Every cell must parse as a
real number; only the err_deg columns may be NaN (the harness writes
NaN there when no ground truth was supplied).
"""

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = ["TraceFormatError", "TraceFile", "read_trace"]


class TraceFormatError(ValueError):
    """A trace file does not follow the documented CSV schema."""


@dataclass(frozen=True)
class TraceFile:
    """Parsed contents of one trace CSV."""

    name: str
    iterations: np.ndarray
    doas_deg: np.ndarray
    errors_deg: np.ndarray
    mixing: np.ndarray
    stddevs: np.ndarray
    loglik: np.ndarray
    wall_ms: np.ndarray

    @property
    def num_sources(self) -> int:
        return self.doas_deg.shape[1]

    @property
    def num_components(self) -> int:
        return self.mixing.shape[1]

    @property
    def num_rows(self) -> int:
        return len(self.iterations)


def _numbered_run(header, start, prefix):
    # count consecutive columns named prefix_1, prefix_2, ...
    count = 0
    while (
        start + count < len(header)
        and header[start + count] == f"{prefix}_{count + 1}"
    ):
        count += 1
    return count


def _validate_header(header, path):
    def fail(idx, expected):
        found = header[idx] if idx < len(header) else "<missing>"
        raise TraceFormatError(
            f"{path}: column {idx + 1} must be '{expected}', "
            f"found '{found}'"
        )

    if not header or header[0] != "iter":
        fail(0, "iter")
    num_sources = _numbered_run(header, 1, "theta_deg")
    if num_sources == 0:
        fail(1, "theta_deg_1")
    pos = 1 + num_sources
    for k in range(num_sources):
        if pos >= len(header) or header[pos] != f"err_deg_{k + 1}":
            fail(pos, f"err_deg_{k + 1}")
        pos += 1
    num_components = _numbered_run(header, pos, "lambda")
    if num_components == 0:
        fail(pos, "lambda_1")
    pos += num_components
    for k in range(num_components):
        if pos >= len(header) or header[pos] != f"sigma_{k + 1}":
            fail(pos, f"sigma_{k + 1}")
        pos += 1
    for tail in ("loglik", "wall_ms"):
        if pos >= len(header) or header[pos] != tail:
            fail(pos, tail)
        pos += 1
    if pos < len(header):
        raise TraceFormatError(
            f"{path}: unexpected column '{header[pos]}'"
        )
    return num_sources, num_components


def _parse_rows(lines, header, num_sources, path):
    rows = []
    for lineno, cells in lines:
        if len(cells) != len(header):
            raise TraceFormatError(
                f"{path}: line {lineno} has {len(cells)} cells, "
                f"expected {len(header)}"
            )
        values = []
        for col, cell in zip(header, cells):
            try:
                value = float(cell)
            except ValueError:
                raise TraceFormatError(
                    f"{path}: line {lineno}, column '{col}': "
                    f"'{cell}' is not a number"
                ) from None
            # NaN encodes absent ground truth in the error columns only
            nan_ok = col.startswith("err_deg_")
            if not math.isfinite(value) and not (
                nan_ok and math.isnan(value)
            ):
                raise TraceFormatError(
                    f"{path}: line {lineno}, column '{col}': "
                    f"'{cell}' is not finite"
                )
            values.append(value)
        rows.append(values)
    if not rows:
        raise TraceFormatError(f"{path}: no data rows")
    return np.array(rows, dtype=float)


def read_trace(path) -> TraceFile:
    """Parse and validate one trace CSV file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise TraceFormatError(f"cannot read trace: {exc}") from exc
    parsed = [
        (lineno, cells)
        for lineno, cells in enumerate(csv.reader(text.splitlines()), 1)
        if cells
    ]
    if not parsed:
        raise TraceFormatError(f"{path}: empty file")
    header = parsed[0][1]
    num_sources, num_components = _validate_header(header, path)
    table = _parse_rows(parsed[1:], header, num_sources, path)
    m, l = num_sources, num_components
    return TraceFile(
        name=path.stem,
        iterations=table[:, 0],
        doas_deg=table[:, 1 : 1 + m],
        errors_deg=table[:, 1 + m : 1 + 2 * m],
        mixing=table[:, 1 + 2 * m : 1 + 2 * m + l],
        stddevs=table[:, 1 + 2 * m + l : 1 + 2 * m + 2 * l],
        loglik=table[:, -2],
        wall_ms=table[:, -1],
    )
