# Copyright 2024 The perc_ldp Developers & Contributors

# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at https://mozilla.org/MPL/2.0/.

"""Exact distribution of the final size through a forward dynamic program.

The DP propagates the law of ``S(t)`` restricted to runs that have not
stopped yet, using the same thinned binomial transitions as
:mod:`perc_ldp.binomial_chain`. At step ``t`` the mass sitting at
``S = t - a`` is absorbed into ``P(|A*| = t)``.

The alive mass is renormalized after every step and its logarithm kept
separately, so survival probabilities far below the float range are still
reported through ``log_survival``.
"""

import json
import logging
import math
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np
import pandas as pd
from scipy import stats
from tqdm import tqdm

from perc_ldp.binomial_chain import ChainParams
from perc_ldp.config import Settings, get_settings
from perc_ldp.exceptions import StateSpaceTooLargeError
from perc_ldp.model_analytics import (
    ModelParams,
    ceil_scale,
    critical_scales,
    gamma_r,
    phi,
    rate_xi,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SurvivalTable:
    """Exact law of ``|A*|`` up to the horizon.

    Attributes:
        params: Chain parameters the table was computed for.
        cap: Largest value of ``S`` kept in the state space.
        dist: ``dist[k] = P(|A*| = k)`` for ``k = 0 .. horizon``.
        survival: ``survival[t] = P(|A*| >= t)`` for ``t = 0 .. horizon + 1``.
        log_survival: Natural logarithm of ``survival``, accurate below
            the float range.
        mass_censored: Mass not absorbed by the horizon (alive at the horizon
            or pushed above the cap).
        mass_over_cap: Part of ``mass_censored`` that left the state space.
        mass_truncated: Binomial tail mass dropped by the per-step cutoff.
    """

    params: ChainParams
    cap: int
    dist: np.ndarray
    survival: np.ndarray
    log_survival: np.ndarray
    mass_censored: float
    mass_over_cap: float
    mass_truncated: float

    def survival_at(self, t: int) -> float:
        return float(self.survival[self._index(t)])

    def log_survival_at(self, t: int) -> float:
        return float(self.log_survival[self._index(t)])

    def _index(self, t: int) -> int:
        if t < 0:
            raise ValueError(f"t must be non-negative, got {t}")
        if t > self.params.horizon + 1:
            raise ValueError(f"t={t} lies beyond horizon + 1 = {self.params.horizon + 1}")
        return int(t)

    def total_mass(self) -> float:
        return float(self.dist.sum() + self.mass_censored)

    def to_frame(self) -> pd.DataFrame:
        t = np.arange(self.survival.size)
        dist = np.append(self.dist, np.nan)
        return pd.DataFrame(
            {"t": t, "survival": self.survival, "log_survival": self.log_survival, "dist": dist}
        )

    def to_csv(self, path: str) -> None:
        self.to_frame().to_csv(path, index=False, float_format="%.17g")

    def to_json(self) -> str:
        return json.dumps(
            {
                "params": self.params.to_dict(),
                "cap": self.cap,
                "mass_censored": self.mass_censored,
                "mass_over_cap": self.mass_over_cap,
                "mass_truncated": self.mass_truncated,
                "dist": self.dist.tolist(),
                "survival": self.survival.tolist(),
                "log_survival": self.log_survival.tolist(),
            },
            indent=2,
        )


@dataclass(frozen=True)
class ExponentPoint:
    """Finite-n exponent ``log P(a, t) / t_c`` at one point of a sweep."""

    n: int
    p: float
    t_c: float
    a: int
    t: int
    log_survival: float
    exponent: float
    xi: float
    mass_censored: float


def truncated_cap(params: ChainParams, c: float) -> int:
    """Return the state cap ``min(n - a, ceil(c * t_c))`` on ``S``."""
    if not c > 0:
        raise ValueError(f"Cap multiplier must be positive, got {c}")
    t_c = critical_scales(params.model).t_c
    return int(min(params.model.n - params.a, ceil_scale(c * t_c)))


def _check_state_space(horizon: int, cap: int, limit: int) -> None:
    states = horizon * (cap + 1)
    if states > limit:
        suggested = max(limit // max(horizon, 1) - 1, 0)
        raise StateSpaceTooLargeError(states, limit, suggested)


def _jump_bound(trials: int, q: float, cutoff: float) -> int:
    """Jump cut-off ``k`` with ``P(Bin(trials, q) > k) <= cutoff``.

    Starts ten standard deviations above the mean and doubles until the tail
    is small enough.
    """
    mean = trials * q
    k = min(trials, int(math.ceil(mean + 10.0 * math.sqrt(mean) + 20.0)))
    while k < trials and stats.binom.sf(k, trials, q) > cutoff:
        k = min(trials, 2 * k)
    return k


def exact_distribution(
    params: ChainParams,
    cap: Optional[float] = None,
    settings: Optional[Settings] = None,
    progress: bool = False,
) -> SurvivalTable:
    """Compute the exact law of ``|A*|`` for the binomial chain.

    Args:
        params (ChainParams): Model, initial size and horizon.
        cap (float): Cap multiplier ``c``; ``S`` is kept in ``0 .. ceil(c t_c)``.
            Defaults to the configured ``C``.
        settings (Settings): Numerical defaults.
        progress (bool): Show a progress bar over the steps.

    Returns:
        SurvivalTable: Distribution, survival and censored mass.

    Raises:
        StateSpaceTooLargeError: If ``horizon * (cap + 1)`` exceeds the guard.
    """
    settings = settings or get_settings()
    n, p, r = params.model.n, params.model.p, params.model.r
    a, horizon = params.a, params.horizon
    s_cap = truncated_cap(params, settings.cap if cap is None else cap)
    _check_state_space(horizon, s_cap, settings.dp_state_limit)

    dist = np.zeros(horizon + 1)
    log_survival = np.full(horizon + 2, -np.inf)
    log_survival[0] = 0.0
    if a == 0:
        dist[0] = 1.0
        return _table(params, s_cap, dist, log_survival, 0.0, 0.0, 0.0)

    q_table = params.thinning_table()
    alive = np.zeros(s_cap + 1)
    alive[0] = 1.0
    log_scale = 0.0
    over_cap = 0.0
    truncated = 0.0
    # censored mass is certainly alive while t <= cap + a + 1
    over_horizon = s_cap + a + 1

    steps = range(1, horizon + 1)
    if progress:
        steps = tqdm(steps, desc="exact dp")
    for t in steps:
        q = q_table[t - 1]
        scale = math.exp(log_scale)
        if q > 0:
            nonzero = np.flatnonzero(alive)
            lo, hi = nonzero[0], nonzero[-1]
            src = np.arange(lo, hi + 1)
            n_src = n - a - src
            k_max = _jump_bound(n - a - lo, q, settings.pmf_cutoff)
            jumps = np.arange(k_max + 1)
            pmf = stats.binom.pmf(jumps[None, :], n_src[:, None], q)
            weights = alive[lo : hi + 1, None] * pmf
            truncated += scale * float(alive[lo : hi + 1] @ stats.binom.sf(k_max, n_src, q))
            target = src[:, None] + jumps[None, :]
            inside = target <= s_cap
            over_cap += scale * float(weights[~inside].sum())
            alive = np.bincount(target[inside], weights=weights[inside], minlength=s_cap + 1)
        absorbed = t - a
        if 0 <= absorbed <= s_cap:
            dist[t] = scale * alive[absorbed]
            alive[absorbed] = 0.0
        remaining = float(alive.sum())
        if remaining > 0:
            log_scale += math.log(remaining)
            alive /= remaining
            log_alive = log_scale
        else:
            log_alive = -np.inf
        log_over = math.log(over_cap) if over_cap > 0 and t + 1 <= over_horizon else -np.inf
        log_survival[t + 1] = np.logaddexp(log_alive, log_over)
        if remaining == 0:
            logger.debug("All mass absorbed or censored after step %d", t)
            for u in range(t + 2, horizon + 2):
                log_survival[u] = math.log(over_cap) if over_cap > 0 and u <= over_horizon else -np.inf
            break

    alive_at_horizon = math.exp(log_scale) if remaining > 0 else 0.0
    return _table(
        params,
        s_cap,
        dist,
        log_survival,
        alive_at_horizon + over_cap,
        over_cap,
        truncated,
    )


def _table(params, s_cap, dist, log_survival, censored, over_cap, truncated) -> SurvivalTable:
    # t <= a survives with certainty
    log_survival[: min(params.a, params.horizon + 1) + 1] = 0.0
    survival = np.exp(log_survival)
    for arr in (dist, survival, log_survival):
        arr.setflags(write=False)
    table = SurvivalTable(
        params=params,
        cap=s_cap,
        dist=dist,
        survival=survival,
        log_survival=log_survival,
        mass_censored=float(censored),
        mass_over_cap=float(over_cap),
        mass_truncated=float(truncated),
    )
    logger.debug(
        "DP finished: censored=%.3g over_cap=%.3g truncated=%.3g",
        table.mass_censored,
        table.mass_over_cap,
        table.mass_truncated,
    )
    return table


def paired_model(n: int, r: int, kappa: Optional[float] = None) -> ModelParams:
    """Model with ``np = n**kappa``; ``kappa`` defaults to ``gamma_r / 2``.

    This sits in the log-middle of the window ``1 << np << n^{gamma_r}``.
    """
    kappa = gamma_r(r) / 2.0 if kappa is None else kappa
    if not 0 < kappa < gamma_r(r):
        raise ValueError(f"kappa must lie in (0, gamma_r) = (0, {gamma_r(r)}), got {kappa}")
    return ModelParams(n=n, p=n ** (kappa - 1.0), r=r)


def empirical_exponent(
    alpha: float,
    beta: float,
    r: int,
    n_sequence: Iterable[int],
    kappa: Optional[float] = None,
    cap: Optional[float] = None,
    progress: bool = False,
) -> list[ExponentPoint]:
    """Finite-n exponents ``t_c^{-1} log P(a, t)`` along an increasing ``n`` sequence.

    For each ``n`` the model is :func:`paired_model`, ``a = max(round(alpha a_c), r)``
    and ``t = round(beta t_c)``.

    Returns:
        list of ExponentPoint: One point per ``n``, with the limiting rate in ``xi``.

    Raises:
        StateSpaceTooLargeError: Propagated from :func:`exact_distribution`;
            points computed before the failure are attached as ``partial``.
    """
    xi = rate_xi(alpha, beta, r).xi if beta > phi(alpha, r) else 0.0
    points = []
    previous = 0
    for n in n_sequence:
        if n <= previous:
            raise ValueError("n_sequence must be strictly increasing")
        previous = n
        model = paired_model(n, r, kappa)
        scales = critical_scales(model)
        a = min(max(round(alpha * scales.a_c), r), n)
        t = min(round(beta * scales.t_c), n)
        params = ChainParams(model=model, a=a, horizon=max(t, a))
        logger.info("Exact DP at n=%d (t_c=%.4g, a=%d, t=%d)", n, scales.t_c, a, t)
        try:
            table = exact_distribution(params, cap=cap, progress=progress)
        except StateSpaceTooLargeError as e:
            e.partial = points
            raise
        log_p = table.log_survival_at(t)
        points.append(
            ExponentPoint(
                n=n,
                p=model.p,
                t_c=scales.t_c,
                a=a,
                t=t,
                log_survival=log_p,
                exponent=log_p / scales.t_c,
                xi=xi,
                mass_censored=table.mass_censored,
            )
        )
    return points
