# Copyright 2024 The perc_ldp Developers & Contributors

# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at https://mozilla.org/MPL/2.0/.

"""Discrete variational problem for the optimal trajectory.

On an even grid ``x_i = i * beta / m`` a non-decreasing trajectory ``f`` is
scored by ``J(f) = sum_i sigma_i dx`` where

    sigma_i = w_i log(e s_i / w_i) - s_i,    w_i = (f_{i+1} - f_i) / dx,

and ``s_i`` stands for ``x^{r-1}`` on the cell (see :class:`Abscissa`). As
``m`` grows, ``J(f)`` tends to ``I(f, 0, beta) - beta**r / r``.

Since ``sigma_i`` depends on the cell and the increment only, maximizing ``J``
over a value lattice with the obstacle ``f_i >= x_i`` is a longest path
problem, solved exactly by :func:`maximize_trajectory`.
"""

import json
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np
import pandas as pd

from perc_ldp.config import Settings, get_settings
from perc_ldp.exceptions import InfeasibleProblemError
from perc_ldp.model_analytics import (
    DiagonalSegment,
    PowerSegment,
    Trajectory,
    functional_I,
    gamma_r,
    phi,
    validate_alpha,
    validate_r,
)

logger = logging.getLogger(__name__)

MAX_LEVELS = 10**5


class Abscissa(str, Enum):
    """Where ``x^{r-1}`` is evaluated on a cell.

    ``LEFT`` uses the left end ``x_i`` (the first cell, where ``x_0 = 0``,
    uses ``x_1``); ``CELL`` uses the cell average
    ``(x_{i+1}^r - x_i^r) / (r dx)``, under which sampled power laws
    ``c x^r + c'`` have exactly constant ``log(s_i / w_i)``.
    """

    LEFT = "left"
    CELL = "cell"


class EndpointMode(str, Enum):
    FREE = "free"
    FIXED = "fixed"


@dataclass(frozen=True)
class TrajectoryProblem:
    """Constraints of the discrete maximization.

    Attributes:
        alpha: Initial size; the trajectory starts at ``alpha * gamma_r``.
        beta: Right end of the grid.
        r: Activation threshold.
        m: Number of cells.
        cap: Upper bound ``C`` on the values (defaults to the configured cap).
        endpoint: ``None`` for a free endpoint in ``[beta, cap]``, otherwise
            the fixed value ``f_m``.

    Raises:
        InfeasibleProblemError: If ``cap < beta`` or the fixed endpoint lies
            outside ``[beta, cap]``.
    """

    alpha: float
    beta: float
    r: int
    m: int
    cap: Optional[float] = None
    endpoint: Optional[float] = None

    def __post_init__(self):
        validate_r(self.r)
        validate_alpha(self.alpha)
        if not self.beta > 0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if self.m < 2:
            raise ValueError(f"Grid size m must be at least 2, got {self.m}")
        if self.cap is None:
            object.__setattr__(self, "cap", get_settings().cap)
        if self.cap < self.start:
            raise InfeasibleProblemError(
                f"Cap {self.cap} lies below the starting value {self.start}"
            )
        if self.cap < self.beta:
            raise InfeasibleProblemError(f"Cap {self.cap} lies below beta={self.beta}")
        if self.endpoint is not None and not self.beta <= self.endpoint <= self.cap:
            raise InfeasibleProblemError(
                f"Fixed endpoint must lie in [beta, cap] = [{self.beta}, {self.cap}], "
                f"got {self.endpoint}"
            )

    @property
    def start(self) -> float:
        return self.alpha * gamma_r(self.r)

    @property
    def endpoint_mode(self) -> EndpointMode:
        return EndpointMode.FREE if self.endpoint is None else EndpointMode.FIXED

    @property
    def grid(self) -> np.ndarray:
        grid = np.arange(self.m + 1) * (self.beta / self.m)
        grid[-1] = self.beta
        return grid


@dataclass(frozen=True)
class SigmaEvaluation:
    """Per-cell ``sigma_i`` with the cell widths and ``J = sum sigma_i dx_i``."""

    sigma: np.ndarray
    dx: np.ndarray
    total: float

    def to_frame(self, traj: Trajectory) -> pd.DataFrame:
        return pd.DataFrame(
            {"x": traj.grid, "f": traj.values, "sigma": np.append(self.sigma, np.nan)}
        )


@dataclass(frozen=True)
class ResidualReport:
    """Euler-Lagrange residuals over blocks of ``window`` cells.

    Attributes:
        residuals: ``log(s dx / df)`` minus its mean over the valid blocks;
            ``nan`` on flagged blocks.
        flagged: Indices of blocks whose rise is not above ``min_rise`` or
            that touch the diagonal within ``contact_tol``.
        window: Cells per block.
    """

    residuals: np.ndarray
    flagged: np.ndarray
    window: int

    @property
    def max_deviation(self) -> float:
        valid = self.residuals[~np.isnan(self.residuals)]
        return float(np.max(np.abs(valid))) if valid.size else math.nan


def _check_even_grid(traj: Trajectory) -> None:
    dx = np.diff(traj.grid)
    if not np.allclose(dx, dx[0], rtol=1e-9, atol=0.0):
        raise ValueError("Trajectory grid must be evenly spaced")


def _power_weights(left: np.ndarray, right: np.ndarray, r: int, abscissa: Abscissa) -> np.ndarray:
    if abscissa == Abscissa.CELL:
        return (right**r - left**r) / (r * (right - left))
    s = left ** (r - 1)
    zero = left == 0
    s[zero] = right[zero] ** (r - 1)
    return s


def _sigma(w: np.ndarray, s) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    s = np.broadcast_to(np.asarray(s, dtype=float), w.shape)
    out = -s.copy()
    pos = w > 0
    out[pos] = w[pos] * (1.0 + np.log(s[pos]) - np.log(w[pos])) - s[pos]
    return out


def sigma_total(traj: Trajectory, r: int, abscissa: Abscissa = Abscissa.LEFT) -> SigmaEvaluation:
    """Evaluate ``sigma_i`` per cell and ``J = sum_i sigma_i dx_i``.

    Zero-slope cells contribute ``-s_i dx_i``.

    Raises:
        ValueError: If the grid is uneven or the values decrease.
    """
    validate_r(r)
    _check_even_grid(traj)
    if not traj.is_monotone():
        raise ValueError("Trajectory values must be non-decreasing")
    x = traj.grid
    dx = np.diff(x)
    s = _power_weights(x[:-1], x[1:], r, Abscissa(abscissa))
    sigma = _sigma(np.diff(traj.values) / dx, s)
    return SigmaEvaluation(sigma=sigma, dx=dx, total=float(np.sum(sigma * dx)))


def el_residual(
    traj: Trajectory,
    r: int,
    abscissa: Abscissa = Abscissa.CELL,
    window: int = 1,
    min_rise: float = 0.0,
    contact_tol: Optional[float] = None,
) -> ResidualReport:
    """Deviation of ``sigma_w = log(s dx / df)`` from its mean.

    A stationary point of ``J`` has ``sigma_w`` constant on the cells where the
    obstacle is inactive, so near zero residuals certify stationarity.

    Args:
        traj (Trajectory): Trajectory on an even grid.
        r (int): Activation threshold.
        abscissa (Abscissa): Where ``x^{r-1}`` is evaluated.
        window (int): Consecutive cells merged into one block before
            evaluating; the last block may be shorter.
        min_rise (float): Blocks whose rise ``df`` is not above this value are
            flagged and excluded.
        contact_tol (float): If given, blocks with a grid point where
            ``f_i - x_i <= contact_tol`` are flagged and excluded as well.

    Returns:
        ResidualReport: Residuals and flagged blocks.
    """
    validate_r(r)
    _check_even_grid(traj)
    if window < 1:
        raise ValueError(f"Window must be positive, got {window}")
    edges = np.append(np.arange(0, traj.m, window), traj.m)
    x = traj.grid[edges]
    rise = np.diff(traj.values[edges])
    dx = np.diff(x)
    s = _power_weights(x[:-1], x[1:], r, Abscissa(abscissa))
    valid = rise > min_rise
    if contact_tol is not None:
        touching = traj.values - traj.grid <= contact_tol
        # a block owns the points edges[j] .. edges[j + 1]
        for j in range(rise.size):
            if touching[edges[j] : edges[j + 1] + 1].any():
                valid[j] = False
    sigma_w = np.full(rise.shape, np.nan)
    sigma_w[valid] = np.log(s[valid] * dx[valid] / rise[valid])
    residuals = sigma_w - np.mean(sigma_w[valid]) if valid.any() else sigma_w
    flagged = np.flatnonzero(~valid)
    if flagged.size:
        logger.debug("%d of %d blocks flagged", flagged.size, rise.size)
    return ResidualReport(residuals=residuals, flagged=flagged, window=window)


def stationarity_residual(
    problem: TrajectoryProblem,
    levels_per_cell: int = 64,
    blocks: int = 8,
    min_rise: float = 1e-2,
    max_slope: Optional[float] = None,
    settings: Optional[Settings] = None,
) -> tuple[Trajectory, ResidualReport]:
    """Maximize ``J`` on a lattice refined with ``m`` and measure stationarity.

    The maximizer runs with the ``CELL`` convention and ``levels_per_cell``
    value levels per grid cell, so the lattice step is
    ``res = beta / (m levels_per_cell)``. Its output is cut into ``blocks``
    equal blocks; blocks rising by at most ``min_rise`` or coming within
    ``2 res`` of the diagonal are excluded. Quantization moves a block's rise
    by a few ``res``, so the residual shrinks like ``1 / m``.

    Args:
        problem (TrajectoryProblem): Constraints, ``m`` a multiple of ``blocks``.
        levels_per_cell (int): Lattice levels per cell.
        blocks (int): Number of blocks the residual is measured on.
        min_rise (float): Smallest block rise taken into account.
        max_slope (float): Slope cap forwarded to :func:`maximize_trajectory`.
        settings (Settings): Numerical defaults.

    Returns:
        tuple: The maximizer and its :class:`ResidualReport`.
    """
    if levels_per_cell < 1 or blocks < 1:
        raise ValueError("levels_per_cell and blocks must be positive")
    if problem.m % blocks:
        raise ValueError(f"m={problem.m} is not a multiple of blocks={blocks}")
    res = problem.beta / (problem.m * levels_per_cell)
    traj = maximize_trajectory(
        problem, resolution=res, abscissa=Abscissa.CELL, max_slope=max_slope, settings=settings
    )
    report = el_residual(
        traj,
        problem.r,
        abscissa=Abscissa.CELL,
        window=problem.m // blocks,
        min_rise=min_rise,
        contact_tol=2.0 * res,
    )
    logger.info(
        "Stationarity at m=%d: max residual %.3g over %d blocks",
        problem.m,
        report.max_deviation,
        blocks - report.flagged.size,
    )
    return traj, report


def snapped_resolution(
    problem: TrajectoryProblem, resolution: Optional[float] = None, settings: Optional[Settings] = None
) -> float:
    """Lattice step actually used for a requested ``resolution``.

    The step is ``dx / k`` with ``k = max(1, round(dx / resolution))``, so each
    cell spans a whole number of levels. The default request is
    ``1 / lattice_divisor``.
    """
    settings = settings or get_settings()
    if resolution is None:
        resolution = 1.0 / settings.lattice_divisor
    if not resolution > 0:
        raise ValueError(f"Resolution must be positive, got {resolution}")
    h = problem.beta / problem.m
    return h / max(1, round(h / resolution))


def maximize_trajectory(
    problem: TrajectoryProblem,
    resolution: Optional[float] = None,
    abscissa: Abscissa = Abscissa.LEFT,
    max_slope: Optional[float] = None,
    settings: Optional[Settings] = None,
) -> Trajectory:
    """Maximize ``J`` over lattice trajectories by dynamic programming.

    Values live on ``alpha gamma_r + l * res`` for the snapped resolution
    ``res`` (see :func:`snapped_resolution`) and are capped by
    ``min(C, alpha gamma_r + max_slope * beta)``. Feasible trajectories start
    at ``alpha gamma_r``, never decrease, satisfy ``f_i >= x_i``, rise by at
    most ``max_slope * dx`` per cell and end according to the endpoint mode.
    The returned trajectory is optimal among them; ties go to smaller rises.

    Args:
        problem (TrajectoryProblem): Constraints, ``m >= 8``.
        resolution (float): Requested lattice step.
        abscissa (Abscissa): Convention for ``s_i`` in ``sigma_i``.
        max_slope (float): Slope cap, default ``slope_factor * r``.
        settings (Settings): Numerical defaults.

    Returns:
        Trajectory: The maximizer on ``x_i = i beta / m``.

    Raises:
        InfeasibleProblemError: If no lattice trajectory meets the constraints.
    """
    settings = settings or get_settings()
    if problem.m < 8:
        raise ValueError(f"The maximizer needs m >= 8, got {problem.m}")
    r, m, beta, start = problem.r, problem.m, problem.beta, problem.start
    res = snapped_resolution(problem, resolution, settings)
    h = beta / m
    k = round(h / res)
    max_slope = settings.slope_factor * r if max_slope is None else max_slope
    if max_slope < 1:
        raise InfeasibleProblemError(f"Slope cap {max_slope} cannot follow the diagonal")
    jumps = int(math.floor(max_slope * k + 1e-9))
    upper = min(problem.cap, start + max_slope * beta)
    n_levels = int(math.floor((upper - start) / res + 1e-9)) + 1
    if n_levels > MAX_LEVELS:
        raise ValueError(
            f"Resolution {res:.3g} gives {n_levels} levels, more than {MAX_LEVELS}"
        )

    x = problem.grid
    # lowest admissible level at every grid point
    floor_level = np.maximum(np.ceil((x - start) / res - 1e-9), 0).astype(np.int64)
    if floor_level[-1] >= n_levels:
        raise InfeasibleProblemError(f"No lattice level reaches beta={beta} below the cap")
    s = _power_weights(x[:-1], x[1:], r, Abscissa(abscissa))
    rises = np.arange(jumps + 1) / k
    logger.debug(
        "Lattice DP: m=%d, res=%.4g, levels=%d, max jump=%d", m, res, n_levels, jumps
    )

    value = np.full(n_levels, -np.inf)
    value[0] = 0.0
    back = np.zeros((m, n_levels), dtype=np.int32)
    for i in range(m):
        gain = _sigma(rises, s[i]) * h
        best = value + gain[0]
        arg = np.zeros(n_levels, dtype=np.int32)
        for j in range(1, min(jumps, n_levels - 1) + 1):
            cand = value[:-j] + gain[j]
            better = cand > best[j:]
            best[j:][better] = cand[better]
            arg[j:][better] = j
        best[: floor_level[i + 1]] = -np.inf
        value = best
        back[i] = arg

    if problem.endpoint is None:
        end = int(np.argmax(value))
    else:
        end = int(round((problem.endpoint - start) / res))
        if not floor_level[-1] <= end < n_levels:
            raise InfeasibleProblemError(
                f"Fixed endpoint {problem.endpoint} is not reachable on the lattice"
            )
    if not np.isfinite(value[end]):
        raise InfeasibleProblemError("No feasible lattice trajectory meets the constraints")

    levels = np.empty(m + 1, dtype=np.int64)
    levels[m] = end
    for i in range(m - 1, -1, -1):
        levels[i] = levels[i + 1] - back[i, levels[i + 1]]
    return Trajectory(grid=x, values=start + levels * res)


def contact_set(traj: Trajectory, tol: float) -> np.ndarray:
    """Indices where the trajectory is within ``tol`` of the diagonal."""
    return np.flatnonzero(traj.values - traj.grid <= tol)


def contact_runs(traj: Trajectory, tol: float) -> list[tuple[int, int]]:
    """Maximal runs ``(first, last)`` of consecutive contact indices."""
    idx = contact_set(traj, tol)
    if idx.size == 0:
        return []
    breaks = np.flatnonzero(np.diff(idx) > 1)
    firsts = np.append(idx[0], idx[breaks + 1])
    lasts = np.append(idx[breaks], idx[-1])
    return [(int(a), int(b)) for a, b in zip(firsts, lasts)]


@dataclass(frozen=True)
class ClaimCheck:
    """Both sides of one inequality at one parameter point.

    ``margin`` is the right hand side minus the left hand side; strict claims
    hold when it is positive.
    """

    claim: str
    alpha: float
    beta: float
    parameter: float
    multiplier: float
    lhs: float
    rhs: float

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs


@dataclass
class ClaimsReport:
    r: int
    checks: list = field(default_factory=list)

    STRICT = ("diag_coincide", "diag_touch", "first_contact")

    def strict_checks(self) -> list:
        return [c for c in self.checks if c.claim in self.STRICT]

    @property
    def all_hold(self) -> bool:
        return all(c.margin > 0 for c in self.strict_checks())

    @property
    def min_margin(self) -> float:
        return min((c.margin for c in self.strict_checks()), default=math.nan)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [
                {
                    "claim": c.claim,
                    "alpha": c.alpha,
                    "beta": c.beta,
                    "parameter": c.parameter,
                    "multiplier": c.multiplier,
                    "lhs": c.lhs,
                    "rhs": c.rhs,
                    "margin": c.margin,
                }
                for c in self.checks
            ]
        )

    def to_json(self) -> str:
        return json.dumps(
            {
                "r": self.r,
                "all_hold": self.all_hold,
                "min_margin": self.min_margin,
                "checks": self.to_frame().to_dict(orient="records"),
            },
            indent=2,
        )


def _interior(lo: float, hi: float, points: int) -> np.ndarray:
    return lo + (hi - lo) * np.arange(1, points + 1) / (points + 1)


def _power_I(c: float, u: float, v: float, r: int) -> float:
    return functional_I(PowerSegment(c=c, c0=0.0, u=u, v=v), u, v, r)


def _diag_I(u: float, v: float, r: int) -> float:
    return functional_I(DiagonalSegment(u=u, v=v), u, v, r)


def _optimal_I(alpha: float, beta: float, r: int) -> float:
    """``I(f*, 0, beta)`` from the closed forms."""
    g = gamma_r(r)
    eta = min(alpha, beta)
    total = _power_I((eta - alpha * g) / eta**r, 0.0, eta, r)
    if beta > alpha:
        total += _diag_I(alpha, beta, r)
    return total


def verify_diagonal_claims(
    r: int,
    alpha_grid: Sequence[float],
    beta_grid: Sequence[float],
    points: int = 4,
    multipliers: Sequence[float] = (1.0, 1.5, 2.0, 4.0),
) -> ClaimsReport:
    """Evaluate both sides of the three inequalities behind the optimality of ``f*``.

    For every ``(alpha, beta)`` with ``phi_alpha < beta <= 1``:

    - ``diag_coincide``: a power law ``c2 (x^r - b^r) + b`` leaving the diagonal
      at ``b in (alpha gamma_r, beta)`` with ``c2 >= 1 / (r b^{r-1})`` has
      ``I(f, b, beta) < I(x, b, beta)``.
    - ``diag_touch``: ``c1 x^r + alpha gamma_r`` with ``c1`` above
      ``(eta - alpha gamma_r) / eta^r``, ``eta = min(alpha, beta)``, has
      ``I(f, 0, beta) < I(f*, 0, beta)``. At the threshold itself (reported as
      ``touch_limit``) the gap vanishes for ``beta <= alpha``.
    - ``first_contact``: reaching the diagonal early at ``a' in [alpha gamma_r, eta)``
      and following it to ``eta`` gives less than ``I(f*, 0, eta)``.

    Args:
        r (int): Activation threshold.
        alpha_grid, beta_grid: Parameter grids; invalid pairs are skipped.
        points (int): Interior points per sub-grid of ``b`` and ``a'``.
        multipliers: Multiples of the threshold slopes tried for ``c2`` and ``c1``.

    Returns:
        ClaimsReport: One :class:`ClaimCheck` per evaluated inequality.
    """
    validate_r(r)
    g = gamma_r(r)
    report = ClaimsReport(r=r)
    for alpha in alpha_grid:
        phi_alpha = phi(alpha, r)
        for beta in beta_grid:
            if not phi_alpha < beta <= 1.0:
                logger.debug("Skipping alpha=%g, beta=%g outside (phi_alpha, 1]", alpha, beta)
                continue
            start = alpha * g
            eta = min(alpha, beta)

            for b in _interior(start, beta, points):
                if b <= 0:
                    continue
                for mult in multipliers:
                    c2 = mult / (r * b ** (r - 1))
                    report.checks.append(
                        ClaimCheck(
                            "diag_coincide", alpha, beta, b, mult,
                            lhs=_power_I(c2, b, beta, r), rhs=_diag_I(b, beta, r),
                        )
                    )

            if eta > 0:
                rhs = _optimal_I(alpha, beta, r)
                threshold = (eta - start) / eta**r
                for mult in multipliers:
                    lhs = _power_I(threshold * mult, 0.0, beta, r)
                    claim = "touch_limit" if mult == 1.0 else "diag_touch"
                    report.checks.append(
                        ClaimCheck(claim, alpha, beta, threshold, mult, lhs=lhs, rhs=rhs)
                    )

                rhs = _power_I((eta - start) / eta**r, 0.0, eta, r)
                for a_prime in np.append(start, _interior(start, eta, points)):
                    if a_prime <= 0:
                        continue
                    c = (a_prime - start) / a_prime**r
                    lhs = _power_I(c, 0.0, a_prime, r) + _diag_I(a_prime, eta, r)
                    report.checks.append(
                        ClaimCheck("first_contact", alpha, beta, a_prime, 1.0, lhs=lhs, rhs=rhs)
                    )
    logger.info(
        "Checked %d inequalities, minimum strict margin %.3g", len(report.checks), report.min_margin
    )
    return report
