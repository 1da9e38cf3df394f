# Copyright 2024 The perc_ldp Developers & Contributors

# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at https://mozilla.org/MPL/2.0/.

"""Direct simulation of r-neighbour bootstrap percolation on G(n, p)."""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import networkx as nx
import numpy as np

from perc_ldp.config import get_settings
from perc_ldp.model_analytics import ModelParams
from perc_ldp.rng import resolve_seed, run_blocks

logger = logging.getLogger(__name__)

INITIAL = 0
NEVER = -1


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph on ``0 .. n-1`` in compressed sparse row form.

    ``indices[indptr[v]:indptr[v + 1]]`` are the neighbours of ``v`` in
    increasing order. Use :meth:`from_edges` rather than the constructor.
    """

    n: int
    indptr: np.ndarray
    indices: np.ndarray

    @classmethod
    def from_edges(cls, n: int, edges) -> "Graph":
        """Build a graph from ``(u, v)`` pairs; duplicate pairs are merged.

        Raises:
            ValueError: On self-loops or vertex ids outside ``[0, n)``.
        """
        if n < 0:
            raise ValueError(f"Vertex count must be non-negative, got {n}")
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if edges.size and (edges.min() < 0 or edges.max() >= n):
            raise ValueError(f"Vertex ids must lie in [0, {n})")
        if np.any(edges[:, 0] == edges[:, 1]):
            raise ValueError("Self-loops are not allowed")
        pairs = np.unique(np.sort(edges, axis=1), axis=0) if edges.size else edges
        src = np.concatenate([pairs[:, 0], pairs[:, 1]])
        dst = np.concatenate([pairs[:, 1], pairs[:, 0]])
        order = np.lexsort((dst, src))
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
        return cls(n=int(n), indptr=indptr, indices=dst[order])

    @classmethod
    def from_networkx(cls, graph: nx.Graph) -> "Graph":
        """Convert a networkx graph, relabelling its nodes ``0 .. n-1`` in node order."""
        labelled = nx.convert_node_labels_to_integers(graph)
        return cls.from_edges(labelled.number_of_nodes(), list(labelled.edges()))

    def to_networkx(self) -> nx.Graph:
        graph = nx.Graph()
        graph.add_nodes_from(range(self.n))
        graph.add_edges_from(self.edges().tolist())
        return graph

    @property
    def edge_count(self) -> int:
        return int(self.indices.size // 2)

    def degree(self, v: Optional[int] = None):
        degrees = np.diff(self.indptr)
        return degrees if v is None else int(degrees[v])

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v] : self.indptr[v + 1]]

    def edges(self) -> np.ndarray:
        """Edges as an ``(E, 2)`` array with ``u < v``."""
        src = np.repeat(np.arange(self.n), self.degree())
        keep = src < self.indices
        return np.column_stack([src[keep], self.indices[keep]])

    def write_edgelist(self, path: str) -> None:
        """Write the ``n=<n>`` header followed by one ``u v`` line per edge."""
        with open(path, "w") as f:
            f.write(f"n={self.n}\n")
            for u, v in self.edges():
                f.write(f"{u} {v}\n")

    @classmethod
    def read_edgelist(cls, path: str) -> "Graph":
        with open(path, "r") as f:
            lines = [line.strip() for line in f if line.strip() and not line.startswith("#")]
        if not lines or not lines[0].startswith("n="):
            raise ValueError(f"{path}: edge list must start with an 'n=<n>' header")
        n = int(lines[0][2:])
        edges = []
        for line in lines[1:]:
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(f"{path}: malformed edge line {line!r}")
            edges.append((int(parts[0]), int(parts[1])))
        return cls.from_edges(n, edges)


@dataclass(frozen=True)
class PercolationResult:
    """Fixpoint of the bootstrap process.

    Attributes:
        rounds: Number of synchronous rounds until nothing changes.
        activation_round: Per vertex, ``0`` for initial vertices, ``k`` for
            vertices activated in round ``k`` and ``-1`` for vertices never
            activated.
    """

    rounds: int
    activation_round: np.ndarray

    @property
    def active_final(self) -> np.ndarray:
        return np.flatnonzero(self.activation_round != NEVER)

    @property
    def final_size(self) -> int:
        return int(np.count_nonzero(self.activation_round != NEVER))

    @property
    def is_contagious(self) -> bool:
        return bool(np.all(self.activation_round != NEVER))


def _pair_from_index(k: np.ndarray):
    # row-major enumeration of pairs w < v: k = v(v-1)/2 + w
    v = np.floor((1.0 + np.sqrt(1.0 + 8.0 * k)) / 2.0).astype(np.int64)
    w = k - v * (v - 1) // 2
    low = w < 0
    v[low] -= 1
    w[low] = k[low] - v[low] * (v[low] - 1) // 2
    high = w >= v
    v[high] += 1
    w[high] = k[high] - v[high] * (v[high] - 1) // 2
    return w, v


def sample_gnp(n: int, p: float, seed: Union[int, np.random.Generator, None] = None) -> Graph:
    """Sample ``G(n, p)`` by geometric skipping over the ``n(n-1)/2`` pairs.

    Args:
        n (int): Number of vertices.
        p (float): Edge probability in ``[0, 1]``.
        seed: Seed or generator.

    Returns:
        Graph: The sampled graph, in expected ``O(n + n^2 p)`` time.
    """
    if n < 0 or not 0.0 <= p <= 1.0:
        raise ValueError(f"Invalid G(n, p) parameters n={n}, p={p}")
    pairs = n * (n - 1) // 2
    if p == 0.0 or pairs == 0:
        return Graph.from_edges(n, np.empty((0, 2), dtype=np.int64))
    if p == 1.0:
        k = np.arange(pairs, dtype=np.int64)
    else:
        rng = np.random.default_rng(seed)
        mean = pairs * p
        chunk = int(mean + 5.0 * np.sqrt(mean) + 16)
        parts = []
        last = -1
        while last < pairs:
            steps = np.cumsum(rng.geometric(p, size=chunk)) + last
            parts.append(steps)
            last = int(steps[-1])
        k = np.concatenate(parts)
        k = k[k < pairs]
    w, v = _pair_from_index(k)
    return Graph.from_edges(n, np.column_stack([w, v]))


def _initial_rounds(graph: Graph, initial) -> np.ndarray:
    initial = np.unique(np.asarray(initial, dtype=np.int64))
    if initial.size and (initial[0] < 0 or initial[-1] >= graph.n):
        raise ValueError(f"Initial vertices must lie in [0, {graph.n})")
    activation_round = np.full(graph.n, NEVER, dtype=np.int64)
    activation_round[initial] = INITIAL
    return activation_round


def _gather_neighbors(graph: Graph, wave: np.ndarray) -> np.ndarray:
    starts = graph.indptr[wave]
    lengths = graph.indptr[wave + 1] - starts
    total = int(lengths.sum())
    offsets = np.repeat(starts - np.cumsum(lengths) + lengths, lengths) + np.arange(total)
    return graph.indices[offsets]


def percolate(
    graph: Graph,
    initial: Sequence[int],
    r: int,
    rng: Optional[np.random.Generator] = None,
) -> PercolationResult:
    """Run r-neighbour bootstrap percolation to its fixpoint.

    Every vertex keeps a counter of active neighbours; a vertex whose counter
    reaches ``r`` joins the next wave. Each active vertex is processed once,
    so the work is ``O(n + edges)``.

    Args:
        graph (Graph): The graph.
        initial: Initially active vertices.
        r (int): Activation threshold.
        rng (numpy.random.Generator): If given, the vertices of each wave are
            processed one by one in a random order instead of as a batch.

    Returns:
        PercolationResult: Activation rounds and the final active set.
    """
    if r < 1:
        raise ValueError(f"Threshold r must be positive, got {r}")
    activation_round = _initial_rounds(graph, initial)
    marks = np.zeros(graph.n, dtype=np.int64)
    wave = np.flatnonzero(activation_round == INITIAL)
    rounds = 0
    while wave.size:
        if rng is None:
            nbrs = _gather_neighbors(graph, wave)
            np.add.at(marks, nbrs, 1)
            candidates = np.unique(nbrs)
            fresh = candidates[(marks[candidates] >= r) & (activation_round[candidates] == NEVER)]
        else:
            fresh = []
            for v in rng.permutation(wave):
                for w in graph.neighbors(v):
                    marks[w] += 1
                    if marks[w] == r and activation_round[w] == NEVER:
                        fresh.append(w)
            fresh = np.asarray(fresh, dtype=np.int64)
        if fresh.size == 0:
            break
        rounds += 1
        activation_round[fresh] = rounds
        wave = fresh
    activation_round.setflags(write=False)
    return PercolationResult(rounds=rounds, activation_round=activation_round)


def verify_closure(graph: Graph, initial: Sequence[int], result: PercolationResult, r: int) -> bool:
    """Check that ``result`` is the bootstrap fixpoint of ``initial``.

    Every initial vertex must be active, every other active vertex must have at
    least ``r`` neighbours activated in earlier rounds, and every inactive
    vertex fewer than ``r`` active neighbours.
    """
    rounds = result.activation_round
    initial = np.unique(np.asarray(initial, dtype=np.int64))
    if not np.array_equal(np.flatnonzero(rounds == INITIAL), initial):
        return False
    rows = np.repeat(np.arange(graph.n), graph.degree())
    nbr_rounds = rounds[graph.indices]
    active_nbrs = np.bincount(rows, weights=(nbr_rounds != NEVER).astype(float), minlength=graph.n)
    earlier = (nbr_rounds != NEVER) & (nbr_rounds < rounds[rows])
    earlier_nbrs = np.bincount(rows, weights=earlier.astype(float), minlength=graph.n)
    activated = rounds > INITIAL
    inactive = rounds == NEVER
    return bool(np.all(earlier_nbrs[activated] >= r) and np.all(active_nbrs[inactive] < r))


def _final_size_block(
    rng: np.random.Generator, size: int, n: int, p: float, r: int, a: int, random_initial: bool
) -> np.ndarray:
    sizes = np.empty(size, dtype=np.int64)
    for i in range(size):
        graph = sample_gnp(n, p, rng)
        initial = rng.choice(n, size=a, replace=False) if random_initial else np.arange(a)
        sizes[i] = percolate(graph, initial, r).final_size
    return sizes


def final_size_samples(
    model: ModelParams,
    a: int,
    runs: int,
    seed: Optional[int] = None,
    threads: int = 1,
    progress: bool = False,
    random_initial: bool = False,
) -> np.ndarray:
    """Final sizes ``|A*|`` over ``runs`` fresh graph samples.

    The initial set is ``{0, ..., a-1}`` unless ``random_initial`` is set;
    both give the same law since G(n, p) is vertex transitive in distribution.
    """
    if not 0 <= a <= model.n:
        raise ValueError(f"Initial set size a must lie in [0, {model.n}], got {a}")
    seed = resolve_seed(seed)
    logger.info(
        "Percolating %d samples of G(%d, %g) with r=%d, a=%d", runs, model.n, model.p, model.r, a
    )
    return run_blocks(
        _final_size_block,
        runs,
        seed,
        get_settings().block_size,
        threads=threads,
        progress=progress,
        args=(model.n, model.p, model.r, a, random_initial),
    )
