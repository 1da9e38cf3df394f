# Copyright 2024 The perc_ldp Developers & Contributors

# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at https://mozilla.org/MPL/2.0/.

"""Reproducible random streams for block-parallel Monte Carlo.

A batch of ``runs`` is cut into blocks of a fixed size. Block ``j`` draws from
``default_rng(SeedSequence(seed).spawn(n_blocks)[j])`` so its stream depends on
``(seed, j)`` only. Blocks are evaluated sequentially or through joblib and
concatenated in block order, which makes the result independent of the number
of workers.
"""

import logging
from typing import Callable, Optional, Sequence

import numpy as np
from joblib import Parallel, delayed
from tqdm import tqdm

logger = logging.getLogger(__name__)


def block_sizes(runs: int, block_size: int) -> list[int]:
    """Split ``runs`` into consecutive blocks of at most ``block_size``."""
    if runs < 0:
        raise ValueError(f"Number of runs must be non-negative, got {runs}")
    if block_size < 1:
        raise ValueError(f"Block size must be positive, got {block_size}")
    full, rest = divmod(runs, block_size)
    return [block_size] * full + ([rest] if rest else [])


def run_blocks(
    func: Callable[..., np.ndarray],
    runs: int,
    seed: int,
    block_size: int,
    threads: int = 1,
    progress: bool = False,
    args: Sequence = (),
) -> np.ndarray:
    """Evaluate ``func(rng, size, *args)`` over seeded blocks and concatenate.

    Args:
        func: Picklable callable returning a 1-D array of ``size`` results.
        runs: Total number of runs.
        seed: Master seed.
        block_size: Runs per block. Part of the reproducibility contract.
        threads: Number of joblib workers (1 runs in-process).
        progress: Show a tqdm progress bar over blocks.
        args: Extra positional arguments forwarded to ``func``.

    Returns:
        numpy.ndarray: The ``runs`` results in block order.
    """
    sizes = block_sizes(runs, block_size)
    if not sizes:
        return np.empty(0, dtype=np.int64)
    children = np.random.SeedSequence(seed).spawn(len(sizes))
    logger.debug("Running %d runs in %d blocks on %d worker(s)", runs, len(sizes), threads)
    jobs = zip(children, sizes)
    if progress:
        jobs = tqdm(jobs, total=len(sizes), desc="blocks")
    if threads > 1:
        parts = Parallel(n_jobs=threads)(
            delayed(_run_block)(func, child, size, args) for child, size in jobs
        )
    else:
        parts = [_run_block(func, child, size, args) for child, size in jobs]
    return np.concatenate(parts)


def _run_block(func, child: np.random.SeedSequence, size: int, args: Sequence) -> np.ndarray:
    return np.asarray(func(np.random.default_rng(child), size, *args))


def resolve_seed(seed: Optional[int], fallback: Optional[int] = None) -> int:
    """Return ``seed``, else ``fallback``, else fresh OS entropy (logged)."""
    if seed is not None:
        return int(seed)
    if fallback is not None:
        return int(fallback)
    fresh = int(np.random.SeedSequence().entropy % (2**63))
    logger.info("No seed given, using fresh entropy %d", fresh)
    return fresh
