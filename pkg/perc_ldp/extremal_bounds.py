# Copyright 2024 The perc_ldp Developers & Contributors

# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at https://mozilla.org/MPL/2.0/.

"""Lower bounds on the size of minimal contagious sets.

With ``p = (gamma_r^2 / vartheta)^{gamma_r} ((r-1)! / n)^{1/r}`` one has
``t_c = vartheta / gamma_r^2`` and ``xi(0, 1) t_c = -r vartheta``. A first moment
argument then shows that G(n, p) has no contagious set smaller than
``t_delta = (1 - delta) r vartheta / log(n / vartheta)``, asymptotically.
"""

import itertools
import json
import logging
import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np
from scipy import special
from tqdm import tqdm

from perc_ldp.binomial_chain import ChainParams
from perc_ldp.config import get_settings
from perc_ldp.exact_dp import exact_distribution
from perc_ldp.exceptions import EnumerationLimitError
from perc_ldp.graph_bootstrap import Graph, percolate, sample_gnp
from perc_ldp.model_analytics import ModelParams, ceil_scale, gamma_r, validate_r

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ContagiousBoundReport:
    """Quantities of the first moment bound.

    ``o1_term`` is the asymptotic correction inside ``nu``; it is set to 0
    and the report is a finite-n evaluation of the leading terms only.
    """

    r: int
    n: int
    vartheta: float
    p: float
    delta: float
    t_c: float
    t_delta: float
    nu: float
    o1_term: float = 0.0

    @property
    def bound(self) -> float:
        """The lower bound candidate ``t_delta``."""
        return self.t_delta

    def to_json(self) -> str:
        return json.dumps({**asdict(self), "bound": self.bound}, indent=2)


@dataclass(frozen=True)
class FirstMomentReport:
    """Log expected number of size ``k`` sets whose closure reaches ``t_c``.

    Attributes:
        log_bound: ``t_delta log(n e / t_delta) - r vartheta``, the asymptotic bound.
        k: Integer set size ``floor(t_delta)`` used at finite n.
        t: Target size ``ceil(t_c)``.
        log_binomial: ``log C(n, k)``.
        log_survival: ``log P(k, t)`` from the exact DP.
        log_expected: ``log_binomial + log_survival``.
        mass_censored: Censored mass of the DP.
    """

    bound: ContagiousBoundReport
    log_bound: float
    k: int
    t: int
    log_binomial: float
    log_survival: float
    log_expected: float
    mass_censored: float

    def to_json(self) -> str:
        data = asdict(self)
        data["bound"] = asdict(self.bound)
        return json.dumps(data, indent=2)


@dataclass(frozen=True)
class ContagiousSetResult:
    """Outcome of the exhaustive search.

    Attributes:
        size: ``m(G, r)``, or ``None`` if no contagious set exists within the
            size limit.
        witness: A contagious set of that size (lexicographically first).
        subsets_checked: Number of subsets percolated.
    """

    size: Optional[int]
    witness: tuple
    subsets_checked: int


def corollary_bound(r: int, n: int, vartheta: float, delta: float) -> ContagiousBoundReport:
    """Evaluate the contagious set lower bound for G(n, p) at scale ``vartheta``.

    Args:
        r (int): Activation threshold.
        n (int): Number of vertices.
        vartheta (float): Scale parameter, ``1 < vartheta < n``.
        delta (float): Slack in ``[0, 1)``; ``delta = 0`` gives the leading term.

    Returns:
        ContagiousBoundReport: ``p``, ``t_c``, ``t_delta`` and the margin ``nu``.
    """
    validate_r(r)
    if not 1 < vartheta < n:
        raise ValueError(f"vartheta must lie in (1, n) = (1, {n}), got {vartheta}")
    if not 0 <= delta < 1:
        raise ValueError(f"delta must lie in [0, 1), got {delta}")
    g = gamma_r(r)
    log_p = g * math.log(g**2 / vartheta) + (special.gammaln(r) - math.log(n)) / r
    p = math.exp(log_p)
    # validates p < 1
    ModelParams(n=n, p=p, r=r)
    log_ratio = math.log(n / vartheta)
    t_delta = (1 - delta) * r * vartheta / log_ratio
    nu = 1 - (1 - delta) * math.log(n * math.e / t_delta) / log_ratio
    return ContagiousBoundReport(
        r=r,
        n=int(n),
        vartheta=float(vartheta),
        p=p,
        delta=float(delta),
        t_c=vartheta / g**2,
        t_delta=t_delta,
        nu=nu,
    )


def first_moment(
    r: int, n: int, vartheta: float, delta: float, cap: Optional[float] = None
) -> FirstMomentReport:
    """Compare the asymptotic first moment bound with its finite-n value.

    The finite-n value replaces ``exp(-r vartheta)`` by the exact chain
    probability ``P(k, ceil(t_c))`` with ``k = floor(t_delta)``.

    Raises:
        ValueError: If ``t_delta >= n``.
        StateSpaceTooLargeError: Propagated from the exact DP.
    """
    report = corollary_bound(r, n, vartheta, delta)
    if report.t_delta >= n:
        raise ValueError(f"t_delta={report.t_delta:.6g} is not below n={n}")
    log_bound = report.t_delta * math.log(n * math.e / report.t_delta) - r * vartheta
    k = int(math.floor(report.t_delta))
    t = min(ceil_scale(report.t_c), n)
    log_binomial = float(special.gammaln(n + 1) - special.gammaln(k + 1) - special.gammaln(n - k + 1))
    params = ChainParams(model=ModelParams(n=n, p=report.p, r=r), a=k, horizon=max(t, k))
    table = exact_distribution(params, cap=cap)
    log_survival = table.log_survival_at(t)
    return FirstMomentReport(
        bound=report,
        log_bound=log_bound,
        k=k,
        t=t,
        log_binomial=log_binomial,
        log_survival=log_survival,
        log_expected=log_binomial + log_survival,
        mass_censored=table.mass_censored,
    )


def min_contagious_bruteforce(
    graph: Graph, r: int, size_limit: Optional[int] = None, progress: bool = False
) -> ContagiousSetResult:
    """Find ``m(G, r)`` by percolating every subset in increasing size.

    Subsets of each size are visited in lexicographic order and the search
    stops at the first contagious one.

    Raises:
        EnumerationLimitError: If the subsets up to ``size_limit`` exceed the
            configured guard.
    """
    validate_r(r)
    n = graph.n
    size_limit = n if size_limit is None else min(size_limit, n)
    first = min(r, n)
    total = sum(math.comb(n, s) for s in range(first, size_limit + 1))
    limit = get_settings().subset_limit
    if total > limit:
        raise EnumerationLimitError(total, limit)

    checked = 0
    sizes = range(first, size_limit + 1)
    if progress:
        sizes = tqdm(sizes, desc="subset size")
    for size in sizes:
        logger.debug("Trying %d subsets of size %d", math.comb(n, size), size)
        for subset in itertools.combinations(range(n), size):
            checked += 1
            if percolate(graph, subset, r).is_contagious:
                return ContagiousSetResult(size=size, witness=subset, subsets_checked=checked)
    return ContagiousSetResult(size=None, witness=(), subsets_checked=checked)


def verify_minimal(graph: Graph, witness, r: int) -> bool:
    """Check that ``witness`` is contagious and no smaller set is."""
    if not percolate(graph, witness, r).is_contagious:
        return False
    size = len(witness)
    if size == 0:
        return True
    return not any(
        percolate(graph, subset, r).is_contagious
        for subset in itertools.combinations(range(graph.n), size - 1)
    )


@dataclass(frozen=True)
class BoundSanityReport:
    """Brute-force ``m(G, r)`` on sampled graphs next to the first moment bound.

    Attributes:
        bound: The bound evaluated at the sampled ``(n, p)``.
        seed: Master seed of the graph streams.
        size_limit: Largest subset size searched.
        sizes: ``m(G, r)`` per graph, ``None`` when it exceeds ``size_limit``.
        reference: ``max(r, floor(t_delta))``, the size every graph should reach.
    """

    bound: ContagiousBoundReport
    seed: int
    size_limit: int
    sizes: tuple
    reference: int

    @property
    def lower_limits(self) -> list[int]:
        """Certified lower limits on ``m(G, r)``; a failed search gives ``size_limit + 1``."""
        return [self.size_limit + 1 if size is None else size for size in self.sizes]

    @property
    def below_reference(self) -> int:
        """Number of graphs whose contagious set is smaller than ``reference``."""
        return sum(limit < self.reference for limit in self.lower_limits)

    def to_json(self) -> str:
        data = {
            "bound": asdict(self.bound),
            "seed": self.seed,
            "size_limit": self.size_limit,
            "sizes": list(self.sizes),
            "reference": self.reference,
            "below_reference": self.below_reference,
        }
        return json.dumps(data, indent=2)


def bound_sanity(
    r: int,
    n: int,
    vartheta: float,
    delta: float,
    samples: int,
    seed: int,
    size_limit: Optional[int] = None,
    progress: bool = False,
) -> BoundSanityReport:
    """Search minimal contagious sets of ``G(n, p)`` at the bound's ``p``.

    Graph ``i`` is drawn from the ``i``-th child of ``SeedSequence(seed)``.
    Graphs where the exhaustive search hits ``size_limit`` are reported with
    ``None``. Nothing is asserted; the report counts graphs below the bound.

    Args:
        r (int): Activation threshold.
        n (int): Number of vertices, small enough for the exhaustive search.
        vartheta (float): Scale parameter, ``1 < vartheta < n``.
        delta (float): Slack in ``[0, 1)``.
        samples (int): Number of sampled graphs.
        seed (int): Master seed.
        size_limit (int): Largest subset size searched (default: ``n``).
        progress (bool): Show a progress bar over the graphs.

    Returns:
        BoundSanityReport: Sizes next to ``max(r, floor(t_delta))``.

    Raises:
        EnumerationLimitError: If one search exceeds the subset guard.
    """
    if samples < 1:
        raise ValueError(f"Number of samples must be positive, got {samples}")
    report = corollary_bound(r, n, vartheta, delta)
    limit = n if size_limit is None else min(size_limit, n)
    reference = max(r, int(math.floor(report.t_delta)))
    children = np.random.SeedSequence(seed).spawn(samples)
    if progress:
        children = tqdm(children, desc="graphs")
    sizes = []
    for child in children:
        graph = sample_gnp(n, report.p, seed=np.random.default_rng(child))
        sizes.append(min_contagious_bruteforce(graph, r, size_limit=limit).size)
    logger.info("Sampled m(G, r) %s against reference %d", sizes, reference)
    return BoundSanityReport(
        bound=report, seed=int(seed), size_limit=limit, sizes=tuple(sizes), reference=reference
    )
