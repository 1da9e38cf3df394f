# Copyright 2024 The perc_ldp Developers & Contributors

# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at https://mozilla.org/MPL/2.0/.

"""Closed-form analytics of r-neighbour bootstrap percolation on G(n, p).

Lengths are measured in units of the critical scale ``t_c``: an initial set of
size ``alpha * a_c`` corresponds to the starting height ``alpha * gamma_r`` of
a trajectory, and reaching ``beta * t_c`` active vertices to hitting the
diagonal at ``x = beta``.

Conventions used throughout:

- ``0 ** 0 == 1`` and ``0 * log(0) == 0`` (see :func:`xlogx`).
- Factorials are evaluated through ``scipy.special.gammaln``.
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional, Sequence, Union

import numpy as np
import pandas as pd
from scipy import integrate, optimize, special

from perc_ldp.config import Settings, get_settings


def xlogx(x: float) -> float:
    """Return ``x * log(x)`` with the continuous extension ``0 * log(0) = 0``."""
    if x < 0:
        raise ValueError(f"xlogx is defined for x >= 0, got {x}")
    return 0.0 if x == 0 else x * math.log(x)


def gamma_r(r: int) -> float:
    """Return ``gamma_r = 1 - 1/r``."""
    return 1.0 - 1.0 / r


def ceil_scale(x: float) -> int:
    """Ceiling of a scaled critical size, ignoring round-off above an integer."""
    return int(math.ceil(round(x, 9)))


def validate_r(r: int) -> None:
    """Check the activation threshold.

    Args:
        r (int): Activation threshold.

    Raises:
        ValueError: If ``r`` is not an integer or ``r < 2``.
    """
    if int(r) != r or r < 2:
        raise ValueError(f"Activation threshold r must be an integer >= 2, got {r}")


def validate_alpha(alpha: float) -> None:
    """Check an initial set size given in units of ``a_c``.

    Args:
        alpha (float): Scaled initial size.

    Raises:
        ValueError: If ``alpha`` is outside ``[0, 1)``.
    """
    if not 0.0 <= alpha < 1.0:
        raise ValueError(f"alpha must lie in [0, 1), got {alpha}")


@dataclass(frozen=True)
class CriticalScales:
    """Critical scales of the model.

    Attributes:
        gamma_r: ``1 - 1/r``.
        t_c: ``((r-1)! / (n p^r)) ** (1/(r-1))``.
        a_c: ``gamma_r * t_c``.
    """

    gamma_r: float
    t_c: float
    a_c: float


@dataclass(frozen=True)
class RegimeDiagnostics:
    """Finite-n view of the hypothesis ``log^{r-1} n << np << n^{gamma_r}``.

    The ratios are informational: parameters outside the window are still
    valid inputs everywhere.
    """

    np: float
    log_n: float
    np_over_log: float
    upper_over_np: float
    p_times_tc: float

    @property
    def in_regime(self) -> bool:
        return self.np_over_log > 1.0 and self.upper_over_np > 1.0


@dataclass(frozen=True)
class ModelParams:
    """The triple ``(n, p, r)`` every computation lives in.

    Raises:
        ValueError: If ``n < r + 1``, ``p`` is not in ``(0, 1)`` or ``r < 2``.
    """

    n: int
    p: float
    r: int

    def __post_init__(self):
        validate_r(self.r)
        if int(self.n) != self.n or self.n < self.r + 1:
            raise ValueError(f"n must be an integer >= r + 1 = {self.r + 1}, got {self.n}")
        if not 0.0 < self.p < 1.0:
            raise ValueError(f"p must lie in (0, 1), got {self.p}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "r", int(self.r))
        object.__setattr__(self, "p", float(self.p))

    @property
    def scales(self) -> CriticalScales:
        return critical_scales(self)

    @property
    def regime(self) -> RegimeDiagnostics:
        return check_regime(self)


class Branch(str, Enum):
    """Which piece of the rate function was evaluated."""

    BELOW_ALPHA = "BelowAlpha"
    ABOVE_ALPHA = "AboveAlpha"
    CLAMPED_AT_ONE = "ClampedAtOne"


@dataclass(frozen=True)
class RatePoint:
    """A point ``(alpha, beta)`` with its rate ``xi`` and the branch used."""

    alpha: float
    beta: float
    r: int
    xi: float
    branch: Branch


@dataclass(frozen=True)
class Trajectory:
    """Values ``f_i`` on a strictly increasing grid ``x_i`` (units of t_c).

    Construction checks the shapes and the grid only: the typical trajectory
    crosses the diagonal, so monotonicity and the obstacle ``f_i >= x_i`` are
    queried through :meth:`is_monotone` and :meth:`satisfies_obstacle`.
    """

    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        grid = np.array(self.grid, dtype=float)
        values = np.array(self.values, dtype=float)
        if grid.ndim != 1 or grid.shape != values.shape:
            raise ValueError(
                f"Grid and values must be 1-D of equal length, got {grid.shape} and {values.shape}"
            )
        if grid.size < 2:
            raise ValueError("A trajectory needs at least two grid points")
        if np.any(np.diff(grid) <= 0):
            raise ValueError("Trajectory grid must be strictly increasing")
        grid.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    @property
    def m(self) -> int:
        """Number of cells."""
        return self.grid.size - 1

    @property
    def slopes(self) -> np.ndarray:
        return np.diff(self.values) / np.diff(self.grid)

    def is_monotone(self) -> bool:
        return bool(np.all(np.diff(self.values) >= 0))

    def satisfies_obstacle(self, tol: float = 0.0) -> bool:
        return bool(np.all(self.values >= self.grid - tol))

    def sup_distance(self, other: "Trajectory") -> float:
        """Sup-norm distance to another trajectory sampled on the same grid."""
        if self.grid.shape != other.grid.shape or not np.allclose(self.grid, other.grid):
            raise ValueError("Trajectories are sampled on different grids")
        return float(np.max(np.abs(self.values - other.values)))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"x": self.grid, "f": self.values})


@dataclass(frozen=True)
class PowerSegment:
    """``f(x) = c * x**r + c0`` on ``[u, v]``."""

    c: float
    c0: float
    u: float
    v: float

    def value(self, x, r: int):
        return self.c * np.power(x, r) + self.c0

    def derivative(self, x: float, r: int) -> float:
        return self.c * r * x ** (r - 1)

    def integral(self, u: float, v: float, r: int) -> float:
        """Closed form ``I(c x^r + c0, u, v) = c (v^r - u^r) log(e / (c r))``."""
        if self.c == 0:
            return 0.0
        if self.c < 0:
            raise ValueError(f"Power segment must be non-decreasing, got c={self.c}")
        return self.c * (v**r - u**r) * (1.0 - math.log(self.c * r))


@dataclass(frozen=True)
class DiagonalSegment:
    """``f(x) = x`` on ``[u, v]``."""

    u: float
    v: float

    def value(self, x, r: int):
        return np.asarray(x, dtype=float)

    def derivative(self, x: float, r: int) -> float:
        return 1.0

    def integral(self, u: float, v: float, r: int) -> float:
        """Closed form ``I(x, u, v) = -(r-2)(v-u) + (r-1) log(v^v / u^u)``."""
        return -(r - 2) * (v - u) + (r - 1) * (xlogx(v) - xlogx(u))


Segment = Union[PowerSegment, DiagonalSegment]


def critical_scales(params: ModelParams) -> CriticalScales:
    """Return ``gamma_r``, ``t_c`` and ``a_c`` for the given parameters."""
    g = gamma_r(params.r)
    log_tc = (special.gammaln(params.r) - math.log(params.n) - params.r * math.log(params.p)) / (
        params.r - 1
    )
    t_c = math.exp(log_tc)
    return CriticalScales(gamma_r=g, t_c=t_c, a_c=g * t_c)


def check_regime(params: ModelParams) -> RegimeDiagnostics:
    """Report where ``params`` sit with respect to ``log^{r-1} n << np << n^{gamma_r}``."""
    np_ = params.n * params.p
    log_n = math.log(params.n)
    t_c = critical_scales(params).t_c
    return RegimeDiagnostics(
        np=np_,
        log_n=log_n,
        np_over_log=np_ / log_n ** (params.r - 1),
        upper_over_np=params.n ** gamma_r(params.r) / np_,
        p_times_tc=params.p * t_c,
    )


def phi(alpha: float, r: int, settings: Optional[Settings] = None) -> float:
    """Solve ``phi - phi**r / r = alpha * gamma_r`` on ``[0, alpha)``.

    The left hand side is strictly increasing on ``[0, 1)``, so bisection on
    ``[0, alpha]`` converges unconditionally.

    Args:
        alpha (float): Initial set size in units of ``a_c``, in ``[0, 1)``.
        r (int): Activation threshold.
        settings (Settings): Tolerance and iteration budget of the bisection.

    Returns:
        float: ``phi_alpha``.
    """
    validate_r(r)
    validate_alpha(alpha)
    if alpha == 0:
        return 0.0
    settings = settings or get_settings()
    target = alpha * gamma_r(r)
    root = optimize.bisect(
        lambda x: x - x**r / r - target,
        0.0,
        alpha,
        xtol=settings.phi_xtol,
        maxiter=settings.phi_maxiter,
    )
    return float(root)


def rate_xi(alpha: float, beta: float, r: int) -> RatePoint:
    """Evaluate the large deviations rate ``xi(alpha, beta)``.

    ``beta > 1`` is evaluated at ``beta = 1`` and reported with the
    :attr:`Branch.CLAMPED_AT_ONE` branch.

    Raises:
        ValueError: If ``alpha`` is outside ``[0, 1)`` or ``beta <= phi_alpha``.
    """
    validate_r(r)
    validate_alpha(alpha)
    phi_alpha = phi(alpha, r)
    if not beta > phi_alpha:
        raise ValueError(
            f"beta must exceed phi_alpha = {phi_alpha:.12g} (rate is 0 there), got {beta}"
        )
    b = min(beta, 1.0)
    g = gamma_r(r)
    if b < alpha:
        branch = Branch.BELOW_ALPHA
        rise = b - alpha * g
        xi = rise * (1.0 + r * math.log(b) - math.log(r) - math.log(rise)) - b**r / r
    else:
        branch = Branch.ABOVE_ALPHA
        xi = (
            alpha / r
            - (r - 2) * (b - alpha)
            + (r - 1) * (xlogx(b) - g * xlogx(alpha))
            - b**r / r
        )
    if beta > 1.0:
        branch = Branch.CLAMPED_AT_ONE
    return RatePoint(alpha=alpha, beta=beta, r=r, xi=xi, branch=branch)


def _check_trajectory_range(alpha: float, beta: float, r: int) -> None:
    validate_r(r)
    validate_alpha(alpha)
    phi_alpha = phi(alpha, r)
    if not phi_alpha < beta <= 1.0:
        raise ValueError(f"beta must lie in (phi_alpha, 1] = ({phi_alpha:.12g}, 1], got {beta}")


def closed_form_segments(alpha: float, beta: float, r: int) -> tuple:
    """Describe the optimal trajectory ``f*`` on ``[0, beta]`` as segments.

    For ``beta <= alpha`` this is a single power law from ``(0, alpha*gamma_r)``
    to ``(beta, beta)``; for ``beta > alpha`` the power law meets the diagonal
    tangentially at ``alpha`` and ``f*`` follows the diagonal up to ``beta``.
    At ``alpha = 0`` the second form degenerates to ``f*(x) = x``.
    """
    _check_trajectory_range(alpha, beta, r)
    g = gamma_r(r)
    if beta <= alpha:
        c = (beta - alpha * g) / beta**r
        return (PowerSegment(c=c, c0=alpha * g, u=0.0, v=beta),)
    if alpha == 0:
        return (DiagonalSegment(u=0.0, v=beta),)
    c = 1.0 / (r * alpha ** (r - 1))
    return (PowerSegment(c=c, c0=alpha * g, u=0.0, v=alpha), DiagonalSegment(u=alpha, v=beta))


def _evaluate_segments(segments: Sequence[Segment], x: np.ndarray, r: int) -> np.ndarray:
    values = np.empty_like(x)
    for k, seg in enumerate(segments):
        last = k == len(segments) - 1
        mask = (x >= seg.u) & ((x <= seg.v) if last else (x < seg.v))
        values[mask] = seg.value(x[mask], r)
    return values


def optimal_trajectory(alpha: float, beta: float, r: int, m: int) -> Trajectory:
    """Sample ``f*`` on the uniform grid ``x_i = i * beta / m``."""
    if m < 2:
        raise ValueError(f"Grid size m must be at least 2, got {m}")
    segments = closed_form_segments(alpha, beta, r)
    grid = np.arange(m + 1) * (beta / m)
    grid[-1] = beta
    return Trajectory(grid=grid, values=_evaluate_segments(segments, grid, r))


def typical_trajectory(alpha: float, r: int, m: int, x_max: float = 1.0) -> Trajectory:
    """Sample the law of large numbers path ``x**r / r + alpha * gamma_r``.

    It meets the diagonal at ``x = phi_alpha``.
    """
    validate_r(r)
    validate_alpha(alpha)
    grid = np.linspace(0.0, x_max, m + 1)
    return Trajectory(grid=grid, values=grid**r / r + alpha * gamma_r(r))


def _trajectory_integral(traj: Trajectory, s: float, t: float, r: int) -> float:
    total = 0.0
    x, f = traj.grid, traj.values
    if s < x[0] - 1e-12 or t > x[-1] + 1e-12:
        raise ValueError(f"[{s}, {t}] is outside the trajectory domain [{x[0]}, {x[-1]}]")
    for i in range(traj.m):
        a, b = max(x[i], s), min(x[i + 1], t)
        if b <= a:
            continue
        w = (f[i + 1] - f[i]) / (x[i + 1] - x[i])
        if w < 0:
            raise ValueError(f"Trajectory decreases on cell {i}")
        if w == 0:
            continue
        # exact integral of w * (1 + (r-1) log x - log w) over [a, b]
        total += w * (
            (1.0 - math.log(w)) * (b - a) + (r - 1) * ((xlogx(b) - b) - (xlogx(a) - a))
        )
    return total


def functional_I(
    f: Union[Trajectory, Segment, Sequence[Segment]], s: float, t: float, r: int
) -> float:
    """Evaluate ``I(f, s, t) = int_s^t f'(x) log(e x^{r-1} / f'(x)) dx``.

    Args:
        f: A sampled :class:`Trajectory` (integrated exactly on its piecewise
            linear interpolant), a closed-form segment, or a sequence of them.
        s (float): Lower limit.
        t (float): Upper limit, ``t >= s``.
        r (int): Activation threshold.

    Returns:
        float: The value of the functional. Zero-slope stretches contribute 0.
    """
    validate_r(r)
    if t < s:
        raise ValueError(f"Integration limits must satisfy s <= t, got s={s}, t={t}")
    if t == s:
        return 0.0
    if isinstance(f, Trajectory):
        return _trajectory_integral(f, s, t, r)
    segments = (f,) if isinstance(f, (PowerSegment, DiagonalSegment)) else tuple(f)
    total = 0.0
    for seg in segments:
        a, b = max(seg.u, s), min(seg.v, t)
        if b > a:
            total += seg.integral(a, b, r)
    return total


def _lagrangian_density(w: float, x: float, r: int) -> float:
    if w <= 0:
        return 0.0
    return w * (1.0 + (r - 1) * math.log(x) - math.log(w))


def functional_I_quad(
    derivative: Callable[[float], float],
    s: float,
    t: float,
    r: int,
    breakpoints: Sequence[float] = (),
) -> float:
    """Adaptive quadrature of ``I(f, s, t)`` given ``f'``.

    Args:
        derivative: ``f'`` as a callable.
        s, t: Integration limits.
        r: Activation threshold.
        breakpoints: Points in ``(s, t)`` where ``f'`` is not smooth.
    """
    validate_r(r)
    if t <= s:
        return 0.0
    points = [b for b in breakpoints if s < b < t] or None
    value, _ = integrate.quad(
        lambda x: _lagrangian_density(derivative(x), x, r),
        s,
        t,
        points=points,
        epsabs=1e-13,
        epsrel=1e-12,
        limit=200,
    )
    return value


def xi_via_integral(alpha: float, beta: float, r: int) -> float:
    """Return ``I(f*, 0, beta) - beta**r / r`` by quadrature along ``f*``.

    Agrees with :func:`rate_xi` to quadrature accuracy; ``beta > 1`` is clamped
    to 1 in the same way.
    """
    validate_r(r)
    validate_alpha(alpha)
    if not beta > phi(alpha, r):
        raise ValueError(f"beta must exceed phi_alpha, got {beta}")
    b = min(beta, 1.0)
    total = 0.0
    for seg in closed_form_segments(alpha, b, r):
        total += functional_I_quad(lambda x, seg=seg: seg.derivative(x, r), seg.u, seg.v, r)
    return total - b**r / r


def clt_moments(alpha: float, params: ModelParams) -> tuple[float, float]:
    """Mean and variance of ``|A*|`` in the subcritical central limit theorem.

    Returns:
        tuple: ``(phi_alpha * t_c, (phi^r / r) (1 - phi^{r-1})^{-2} t_c)``.
    """
    validate_alpha(alpha)
    r = params.r
    t_c = critical_scales(params).t_c
    phi_alpha = phi(alpha, r)
    mu = phi_alpha * t_c
    sigma2 = (phi_alpha**r / r) / (1.0 - phi_alpha ** (r - 1)) ** 2 * t_c
    return mu, sigma2
