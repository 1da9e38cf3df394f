# Copyright 2024 The perc_ldp Developers & Contributors

# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at https://mozilla.org/MPL/2.0/.

"""Binomial chain representation of bootstrap percolation.

Vertices are explored one at a time. After ``t`` steps every inactive vertex
has been exposed to ``t`` used vertices and is active iff it has at least
``r`` edges to them, so the number ``S(t)`` of newly activated vertices is
``Bin(n - a, pi(t))`` with ``pi(t) = P(Bin(t, p) >= r)``. The process stops
at ``t* = min{t >= 0 : S(t) + a = t}`` and ``|A*| = t*``.

The chain is simulated by thinning: a vertex still inactive after step
``t - 1`` is activated at step ``t`` with probability
``(pi(t) - pi(t-1)) / (1 - pi(t-1))``, which reproduces the binomial
marginals and independent increments exactly.
"""

import json
import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import pandas as pd
from scipy import special, stats

from perc_ldp.config import get_settings
from perc_ldp.model_analytics import ModelParams, ceil_scale, critical_scales
from perc_ldp.rng import resolve_seed, run_blocks

logger = logging.getLogger(__name__)


def pi_at(t, p: float, r: int):
    """Return ``pi(t) = P(Bin(t, p) >= r)`` (scalar or array ``t``)."""
    t = np.asarray(t)
    if np.any(t < 0):
        raise ValueError("Step t must be non-negative")
    value = stats.binom.sf(r - 1, t, p)
    return float(value) if value.ndim == 0 else value


def thinning_probability(t, p: float, r: int):
    """Per-step activation probability of a still inactive vertex.

    Equals ``(pi(t) - pi(t-1)) / (1 - pi(t-1))``, evaluated as
    ``p * P(Bin(t-1, p) = r-1) / P(Bin(t-1, p) <= r-1)`` to avoid the
    cancellation of the difference. Zero for ``t < r``.
    """
    t = np.asarray(t)
    if np.any(t < 1):
        raise ValueError("Thinning probabilities are defined for t >= 1")
    with np.errstate(divide="ignore", invalid="ignore"):
        log_ratio = stats.binom.logpmf(r - 1, t - 1, p) - stats.binom.logcdf(r - 1, t - 1, p)
        q = p * np.exp(log_ratio)
    # once the lower tail underflows the conditional law sits on r-1 successes
    q = np.where(np.isfinite(log_ratio), q, np.where(t - 1 >= r - 1, p, 0.0))
    q = np.clip(q, 0.0, 1.0)
    return float(q) if q.ndim == 0 else q


def pi_ratio(t, p: float, r: int):
    """Return ``pi(t) * r! / (p t)**r``, which tends to 1 when ``p t << 1``."""
    t = np.asarray(t, dtype=float)
    if np.any(t < r):
        raise ValueError(f"pi_ratio needs t >= r = {r}")
    value = np.exp(stats.binom.logsf(r - 1, t, p) + special.gammaln(r + 1) - r * np.log(p * t))
    return float(value) if value.ndim == 0 else value


@dataclass(frozen=True)
class ChainParams:
    """A model together with the initial set size ``a`` and the step horizon.

    The horizon defaults to ``min(n, ceil(C * t_c) + a)`` with the cap ``C``
    taken from :func:`perc_ldp.config.get_settings`.
    """

    model: ModelParams
    a: int
    horizon: Optional[int] = None

    def __post_init__(self):
        n = self.model.n
        if int(self.a) != self.a or not 0 <= self.a <= n:
            raise ValueError(f"Initial set size a must be an integer in [0, {n}], got {self.a}")
        object.__setattr__(self, "a", int(self.a))
        if self.horizon is None:
            t_c = critical_scales(self.model).t_c
            horizon = min(n, ceil_scale(get_settings().cap * t_c) + self.a)
            object.__setattr__(self, "horizon", int(horizon))
        if not self.a <= self.horizon <= n:
            raise ValueError(f"Horizon must lie in [a, n] = [{self.a}, {n}], got {self.horizon}")
        object.__setattr__(self, "horizon", int(self.horizon))

    @classmethod
    def from_alpha(cls, model: ModelParams, alpha: float, horizon: Optional[int] = None):
        """Build the parameters for an initial set of size ``ceil(alpha * a_c)``."""
        if alpha < 0:
            raise ValueError(f"alpha must be non-negative, got {alpha}")
        a = min(model.n, ceil_scale(alpha * critical_scales(model).a_c))
        return cls(model=model, a=a, horizon=horizon)

    def with_horizon(self, horizon: int) -> "ChainParams":
        return ChainParams(model=self.model, a=self.a, horizon=horizon)

    def thinning_table(self) -> np.ndarray:
        """Thinning probabilities for steps ``1 .. horizon`` (index ``t - 1``)."""
        if self.horizon == 0:
            return np.empty(0)
        return np.atleast_1d(
            thinning_probability(np.arange(1, self.horizon + 1), self.model.p, self.model.r)
        )

    def to_dict(self) -> dict:
        return {
            "n": self.model.n,
            "p": self.model.p,
            "r": self.model.r,
            "a": self.a,
            "horizon": self.horizon,
        }


@dataclass(frozen=True)
class ChainTrace:
    """One realization ``S(0) .. S(T)`` of the chain.

    Attributes:
        s_values: Cumulative activation counts, ``s_values[0] == 0``.
        t_star: Stopping time, ``None`` if the run was censored at the horizon.
        a: Initial set size.
    """

    s_values: np.ndarray
    t_star: Optional[int]
    a: int

    @property
    def censored(self) -> bool:
        return self.t_star is None

    @property
    def final_size(self) -> Optional[int]:
        return self.t_star

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"t": np.arange(self.s_values.size), "S_t": self.s_values})

    def to_csv(self, path: str) -> None:
        self.to_frame().to_csv(path, index=False)


@dataclass(frozen=True)
class McEstimate:
    """Monte Carlo proportion with its binomial standard error."""

    p_hat: float
    stderr: float
    runs: int
    seed: Optional[int] = None
    params: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(
            {
                "p_hat": self.p_hat,
                "stderr": self.stderr,
                "runs": self.runs,
                "seed": self.seed,
                "params": self.params,
            },
            indent=2,
        )


@dataclass(frozen=True)
class MomentsEstimate:
    """Sample moments of the final size over the uncensored runs."""

    mean: float
    variance: float
    mean_stderr: float
    variance_stderr: float
    runs: int
    censored: int


def simulate_chain(params: ChainParams, seed: Optional[int] = None) -> ChainTrace:
    """Run the chain once until ``t*`` or the horizon.

    Args:
        params (ChainParams): Model, initial size and horizon.
        seed (int): Seed of the generator; identical seeds give identical traces.

    Returns:
        ChainTrace: The trajectory of ``S``.
    """
    rng = np.random.default_rng(seed)
    n, a = params.model.n, params.a
    if a == 0:
        return ChainTrace(s_values=np.zeros(1, dtype=np.int64), t_star=0, a=0)
    q = params.thinning_table()
    s_values = [0]
    s = 0
    for t in range(1, params.horizon + 1):
        s += int(rng.binomial(n - a - s, q[t - 1]))
        s_values.append(s)
        if s + a == t:
            return ChainTrace(s_values=np.array(s_values, dtype=np.int64), t_star=t, a=a)
    logger.debug("Chain censored at horizon %d", params.horizon)
    return ChainTrace(s_values=np.array(s_values, dtype=np.int64), t_star=None, a=a)


def _final_size_block(rng: np.random.Generator, size: int, n: int, a: int, q: np.ndarray):
    t_star = np.full(size, -1, dtype=np.int64)
    if a == 0:
        t_star[:] = 0
        return t_star
    s = np.zeros(size, dtype=np.int64)
    alive = np.arange(size)
    for t in range(1, q.size + 1):
        s[alive] += rng.binomial(n - a - s[alive], q[t - 1])
        stopped = s[alive] + a == t
        if stopped.any():
            t_star[alive[stopped]] = t
            alive = alive[~stopped]
            if alive.size == 0:
                break
    return t_star


def chain_final_sizes(
    params: ChainParams,
    runs: int,
    seed: Optional[int] = None,
    threads: int = 1,
    progress: bool = False,
) -> np.ndarray:
    """Stopping times of ``runs`` independent chains.

    Runs are simulated in seeded blocks (see :mod:`perc_ldp.rng`), so the
    result depends on ``seed`` and the configured block size only.

    Returns:
        numpy.ndarray: ``t*`` per run, ``-1`` for runs censored at the horizon.
    """
    seed = resolve_seed(seed)
    q = params.thinning_table()
    logger.info(
        "Simulating %d chains with n=%d, p=%g, r=%d, a=%d, horizon=%d",
        runs,
        params.model.n,
        params.model.p,
        params.model.r,
        params.a,
        params.horizon,
    )
    return run_blocks(
        _final_size_block,
        runs,
        seed,
        get_settings().block_size,
        threads=threads,
        progress=progress,
        args=(params.model.n, params.a, q),
    )


def fraction_at_least(final_sizes: np.ndarray, threshold: int, horizon: int) -> McEstimate:
    """Share of runs with ``t* >= threshold``.

    A run censored at ``horizon`` satisfied ``S(s) + a > s`` up to the horizon,
    so it counts whenever ``threshold <= horizon + 1``.

    Raises:
        ValueError: If censored runs cannot be decided for ``threshold``.
    """
    final_sizes = np.asarray(final_sizes)
    runs = final_sizes.size
    if runs == 0:
        raise ValueError("No runs to estimate from")
    censored = final_sizes < 0
    if censored.any() and threshold > horizon + 1:
        raise ValueError(
            f"{int(censored.sum())} runs were censored at horizon {horizon}, "
            f"which cannot decide t* >= {threshold}"
        )
    hits = np.count_nonzero(censored | (final_sizes >= threshold))
    p_hat = hits / runs
    return McEstimate(p_hat=p_hat, stderr=math.sqrt(p_hat * (1.0 - p_hat) / runs), runs=runs)


def survival_mc(
    params: ChainParams,
    t_target: int,
    runs: int,
    seed: Optional[int] = None,
    threads: int = 1,
    progress: bool = False,
) -> McEstimate:
    """Monte Carlo estimate of ``P(a, t) = P(|A*| >= t)``.

    Chains are only followed up to step ``t_target - 1``: a run still alive
    there has ``t* >= t_target``.
    """
    if runs < 1:
        raise ValueError(f"Number of runs must be positive, got {runs}")
    seed = resolve_seed(seed)
    if t_target <= params.a:
        return McEstimate(p_hat=1.0, stderr=0.0, runs=runs, seed=seed, params=params.to_dict())
    horizon = min(t_target - 1, params.model.n)
    sizes = chain_final_sizes(params.with_horizon(horizon), runs, seed, threads, progress)
    estimate = fraction_at_least(sizes, t_target, horizon)
    return McEstimate(
        p_hat=estimate.p_hat,
        stderr=estimate.stderr,
        runs=runs,
        seed=seed,
        params={**params.to_dict(), "t_target": t_target},
    )


def final_size_moments(
    params: ChainParams,
    runs: int,
    seed: Optional[int] = None,
    threads: int = 1,
    progress: bool = False,
) -> MomentsEstimate:
    """Sample mean and variance of ``t*`` for comparison with the CLT moments.

    Censored runs are excluded from the moments and counted separately.
    """
    sizes = chain_final_sizes(params, runs, seed, threads, progress)
    estimate = summarize_final_sizes(sizes)
    if estimate.censored:
        logger.warning(
            "%d of %d runs censored at horizon %d", estimate.censored, runs, params.horizon
        )
    return estimate


def summarize_final_sizes(final_sizes: np.ndarray) -> MomentsEstimate:
    """Moments of the uncensored entries of a :func:`chain_final_sizes` result."""
    final_sizes = np.asarray(final_sizes)
    runs = final_sizes.size
    done = final_sizes[final_sizes >= 0].astype(float)
    censored = int(runs - done.size)
    k = done.size
    if k == 0:
        return MomentsEstimate(math.nan, math.nan, math.nan, math.nan, runs, censored)
    mean = float(done.mean())
    variance = float(done.var(ddof=1)) if k > 1 else 0.0
    mean_stderr = math.sqrt(variance / k)
    variance_stderr = variance * math.sqrt(2.0 / (k - 1)) if k > 1 else 0.0
    return MomentsEstimate(mean, variance, mean_stderr, variance_stderr, runs, censored)


def _marginal_block(rng: np.random.Generator, size: int, n: int, a: int, q: np.ndarray):
    s = np.zeros(size, dtype=np.int64)
    for qt in q:
        s += rng.binomial(n - a - s, qt)
    return s


def sample_marginal(
    params: ChainParams,
    t: int,
    runs: int,
    seed: Optional[int] = None,
    threads: int = 1,
) -> np.ndarray:
    """Samples of ``S(t)`` from the chain run without stopping.

    Their law is ``Bin(n - a, pi(t))``.
    """
    if t < 0:
        raise ValueError(f"Step t must be non-negative, got {t}")
    seed = resolve_seed(seed)
    q = (
        np.atleast_1d(thinning_probability(np.arange(1, t + 1), params.model.p, params.model.r))
        if t
        else np.empty(0)
    )
    return run_blocks(
        _marginal_block,
        runs,
        seed,
        get_settings().block_size,
        threads=threads,
        args=(params.model.n, params.a, q),
    )
