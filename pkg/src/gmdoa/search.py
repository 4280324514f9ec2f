"""Scalar DOA searches over u = cos(theta) on the open interval (-1, 1).

Two strategies are provided.  ``golden_local_search`` is a
derivative-sign march followed by a golden-section-style shrink: it
finds the local maximum adjacent to its start point, which is what an
alternating solver wants when its current iterate is already near a
peak (a global grid pick can jump to a stronger source's lobe and drag
every source estimate to the same direction).  ``grid_argmax`` is that
global pick: coarse grid argmax, then the same local refinement.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .exceptions import NumericError, ValidationError

# Open-interval clamp: results stay at least this far inside (-1, 1)
# so arccos never lands exactly on a domain endpoint.
U_EDGE = 1e-9

_KINDS = ("golden_local", "grid_argmax")


@dataclass(frozen=True)
class DoaSearchStrategy:
    """Search strategy and its tuning constants.

    Parameters
    ----------
    kind : str
        ``"golden_local"`` or ``"grid_argmax"``.
    grid_step : float
        March step of the local search and cell width of the global
        grid; in (0, 1).
    bracket_tol : float
        Shrink until the bracket is at most this wide; in
        (0, grid_step).
    derivative_step : float
        Central finite-difference step used to pick the march
        direction.
    canonical_golden : bool
        The default interior points sit at 0.312 and 0.618 of the
        bracket; setting this uses the golden ratio pair 0.382/0.618
        instead.  Both shrink geometrically; results agree to within
        ``bracket_tol``.
    """

    kind: str = "golden_local"
    grid_step: float = 1e-3
    bracket_tol: float = 1e-4
    derivative_step: float = 1e-6
    canonical_golden: bool = False

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValidationError(f"kind must be one of {_KINDS}")
        if not 0.0 < self.grid_step < 1.0:
            raise ValidationError("grid_step must lie in (0, 1)")
        if not 0.0 < self.bracket_tol < self.grid_step:
            raise ValidationError("bracket_tol must lie in (0, grid_step)")
        if not self.derivative_step > 0.0:
            raise ValidationError("derivative_step must be positive")

    def run(self, objective, u_start: float) -> float:
        """Dispatch on ``kind``; grid searches ignore ``u_start``."""
        if self.kind == "golden_local":
            return golden_local_search(objective, u_start, self)
        return grid_argmax(objective, self.grid_step, self)


def _eval(objective, u: float) -> float:
    val = float(objective(u))
    if not np.isfinite(val):
        raise NumericError(f"search objective non-finite at u={u!r}")
    return val


def golden_local_search(
    objective, u_start: float, params: DoaSearchStrategy | None = None
) -> float:
    """Ascend to the local maximum of ``objective`` adjacent to ``u_start``.

    Mechanics: the ascent direction s is the sign of a central
    finite-difference derivative at the start (ties go uphill-positive).
    The search then marches in steps of ``grid_step`` while the
    objective keeps strictly increasing, brackets the peak with one
    step on each side of the last accepted point, and shrinks the
    bracket with interior points at fractions 0.312 and 0.618 (0.382
    with ``canonical_golden``) until it is at most ``bracket_tol``
    wide.

    The returned point is the final bracket midpoint unless some
    already-evaluated point (including the start) scored strictly
    higher, in which case that point is returned; the result therefore
    never ranks below the start.  Results are clamped to
    ``[-1 + U_EDGE, 1 - U_EDGE]``; a RuntimeWarning is issued when the
    march runs into a domain edge.

    Parameters
    ----------
    objective : callable
        Scalar function of u, finite on (-1, 1).
    u_start : float
        Start point, strictly inside (-1, 1).
    params : DoaSearchStrategy, optional
        Tuning constants; defaults are used when omitted.

    Returns
    -------
    float
        The located maximizer, inside [-1 + U_EDGE, 1 - U_EDGE].
    """
    p = params if params is not None else DoaSearchStrategy()
    lo, hi = -1.0 + U_EDGE, 1.0 - U_EDGE
    u_start = float(u_start)
    if not -1.0 < u_start < 1.0:
        raise ValidationError("u_start must lie strictly inside (-1, 1)")
    u_start = min(max(u_start, lo), hi)

    h = p.derivative_step
    deriv = (
        _eval(objective, min(u_start + h, hi))
        - _eval(objective, max(u_start - h, lo))
    )
    s = -1.0 if deriv < 0.0 else 1.0

    f_start = _eval(objective, u_start)
    best_u, best_f = u_start, f_start
    u_bar, f_bar = u_start, f_start

    # March uphill in grid_step increments while strictly improving.
    hit_edge = False
    u_breve = u_bar + s * p.grid_step
    if not lo < u_breve < hi:
        u_breve = min(max(u_breve, lo), hi)
        hit_edge = True
    f_breve = _eval(objective, u_breve)
    while f_bar < f_breve:
        u_bar, f_bar = u_breve, f_breve
        if f_bar > best_f:
            best_u, best_f = u_bar, f_bar
        if hit_edge:
            break
        u_breve = u_bar + s * p.grid_step
        if not lo < u_breve < hi:
            u_breve = min(max(u_breve, lo), hi)
            hit_edge = True
            if u_breve == u_bar:
                break
        f_breve = _eval(objective, u_breve)
    if hit_edge:
        warnings.warn(
            "DOA search reached the edge of the u = cos(theta) domain; "
            "bracket clamped",
            RuntimeWarning,
            stacklevel=2,
        )

    # One grid step behind the last accepted point, one ahead of it.
    if s > 0.0:
        star, end = u_bar - p.grid_step, u_breve
    else:
        star, end = u_breve, u_bar + p.grid_step
    star = min(max(star, lo), hi)
    end = min(max(end, lo), hi)

    frac_low = 0.382 if p.canonical_golden else 0.312
    frac_high = 0.618
    while end - star > p.bracket_tol:
        width = end - star
        u_low = star + frac_low * width
        u_high = star + frac_high * width
        f_low = _eval(objective, u_low)
        f_high = _eval(objective, u_high)
        if f_low > best_f:
            best_u, best_f = u_low, f_low
        if f_high > best_f:
            best_u, best_f = u_high, f_high
        if f_low < f_high:
            star = u_low
        else:
            end = u_high
    u_mid = 0.5 * (star + end)
    f_mid = _eval(objective, u_mid)
    if f_mid > best_f:
        best_u = u_mid
    return min(max(best_u, lo), hi)


def grid_argmax(
    objective,
    grid_step: float | None = None,
    params: DoaSearchStrategy | None = None,
) -> float:
    """Global grid argmax over u, refined by the local search.

    Evaluates the objective on the uniform grid
    ``-1 + grid_step, ..., 1 - grid_step`` (endpoints excluded), takes
    the best cell with ties broken toward smaller u, and hands that
    point to :func:`golden_local_search` as the start.

    The objective is called once with the whole grid when it supports
    array input; otherwise it is evaluated pointwise.
    """
    p = params if params is not None else DoaSearchStrategy(kind="grid_argmax")
    step = p.grid_step if grid_step is None else float(grid_step)
    if not 0.0 < step < 1.0:
        raise ValidationError("grid_step must lie in (0, 1)")
    grid = -1.0 + step * np.arange(1, int(round(2.0 / step)))
    grid = grid[(grid > -1.0) & (grid < 1.0)]
    if grid.size < 3:
        raise ValidationError("grid_step leaves fewer than 3 grid points")
    try:
        vals = np.asarray(objective(grid), dtype=float)
        if vals.shape != grid.shape:
            raise ValueError
    except (TypeError, ValueError):
        vals = np.array([float(objective(u)) for u in grid])
    if not np.all(np.isfinite(vals)):
        k = int(np.argwhere(~np.isfinite(vals))[0][0])
        raise NumericError(f"search objective non-finite at u={grid[k]!r}")
    # argmax returns the first hit on the ascending grid: smallest u wins ties.
    u_best = float(grid[int(np.argmax(vals))])
    local = DoaSearchStrategy(
        kind="golden_local",
        grid_step=step,
        bracket_tol=p.bracket_tol,
        derivative_step=p.derivative_step,
        canonical_golden=p.canonical_golden,
    )
    return golden_local_search(objective, u_best, local)
