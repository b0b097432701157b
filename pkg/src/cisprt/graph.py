"""Communication graphs: construction, Laplacian and spectral connectivity."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Optional

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial.distance import pdist, squareform

# lambda_2 > CONNECTIVITY_RTOL * lambda_N counts as connected
CONNECTIVITY_RTOL = 1e-9
MAX_RESAMPLES = 10_000


class GraphError(ValueError):
    pass


class SpectrumError(RuntimeError):
    pass


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph on agents ``0..n_agents-1``.

    ``meta`` carries generation parameters (radius, seed) for serialization.
    """

    n_agents: int
    edges: frozenset
    positions: Optional[np.ndarray] = field(default=None, compare=False, repr=False)
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.n_agents < 1:
            raise GraphError(f"n_agents must be >= 1, got {self.n_agents}")
        canon = set()
        for i, j in self.edges:
            i, j = int(i), int(j)
            if i == j:
                raise GraphError(f"self-loop at vertex {i}")
            if not (0 <= i < self.n_agents and 0 <= j < self.n_agents):
                raise GraphError(f"edge ({i}, {j}) out of range for n={self.n_agents}")
            canon.add((min(i, j), max(i, j)))
        object.__setattr__(self, "edges", frozenset(canon))

    @classmethod
    def from_edges(cls, n_agents: int, edges: Iterable, **meta) -> "Graph":
        return cls(n_agents, frozenset(tuple(e) for e in edges), meta=dict(meta))

    @classmethod
    def from_adjacency(cls, adj) -> "Graph":
        adj = np.asarray(adj)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise GraphError("adjacency must be square")
        if not np.array_equal(adj, adj.T):
            raise GraphError("adjacency must be symmetric")
        if np.any(np.diag(adj) != 0):
            raise GraphError("adjacency must have zero diagonal")
        i, j = np.nonzero(np.triu(adj, 1))
        return cls(adj.shape[0], frozenset(zip(i.tolist(), j.tolist())))

    @classmethod
    def path(cls, n: int) -> "Graph":
        return cls.from_edges(n, [(i, i + 1) for i in range(n - 1)])

    @classmethod
    def complete(cls, n: int) -> "Graph":
        return cls.from_edges(n, [(i, j) for i in range(n) for j in range(i + 1, n)])

    @cached_property
    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.n_agents, self.n_agents))
        for i, j in self.edges:
            a[i, j] = a[j, i] = 1.0
        a.setflags(write=False)
        return a

    @property
    def degrees(self) -> np.ndarray:
        return self.adjacency.sum(axis=1)

    def neighbors(self, i: int) -> list[int]:
        return np.flatnonzero(self.adjacency[i]).tolist()

    def with_edge(self, i: int, j: int) -> "Graph":
        return Graph(self.n_agents, self.edges | {(min(i, j), max(i, j))})

    @cached_property
    def spectrum(self) -> "LaplacianSpectrum":
        return spectrum(self)

    def to_edgelist(self, path) -> None:
        """Write ``# {json header}`` followed by one ``i j`` pair per line."""
        header = {"n": self.n_agents, **self.meta}
        lines = ["# " + json.dumps(header, sort_keys=True)]
        lines += [f"{i} {j}" for i, j in sorted(self.edges)]
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def from_edgelist(cls, path) -> "Graph":
        text = Path(path).read_text().splitlines()
        if not text or not text[0].startswith("#"):
            raise GraphError(f"{path}: missing JSON header line")
        header = json.loads(text[0][1:])
        n = int(header.pop("n"))
        edges = [tuple(int(x) for x in ln.split()) for ln in text[1:] if ln.strip()]
        return cls.from_edges(n, edges, **header)


@dataclass(frozen=True)
class LaplacianSpectrum:
    eigenvalues: np.ndarray

    @property
    def fiedler(self) -> float:
        return float(self.eigenvalues[1]) if len(self.eigenvalues) > 1 else 0.0

    @property
    def lambda_max(self) -> float:
        return float(self.eigenvalues[-1])


def laplacian(g: Graph) -> np.ndarray:
    a = np.array(g.adjacency)
    return np.diag(a.sum(axis=1)) - a


def spectrum(g: Graph) -> LaplacianSpectrum:
    """Sorted Laplacian eigenvalues from a dense symmetric solver.

    Values within ``1e-12 * max(1, lambda_N)`` of zero are snapped to 0.
    """
    try:
        ev = np.linalg.eigvalsh(laplacian(g))
    except np.linalg.LinAlgError as exc:
        raise SpectrumError(f"eigensolver failed: {exc}") from exc
    ev = np.sort(ev)
    ev[np.abs(ev) <= 1e-12 * max(1.0, ev[-1])] = 0.0
    ev.setflags(write=False)
    return LaplacianSpectrum(ev)


def is_connected_traversal(g: Graph) -> bool:
    if g.n_agents == 1:
        return True
    n_comp, _ = connected_components(csr_matrix(g.adjacency), directed=False)
    return n_comp == 1


def is_connected_spectral(g: Graph) -> bool:
    if g.n_agents == 1:
        return True
    sp = g.spectrum
    return sp.lambda_max > 0 and sp.fiedler > CONNECTIVITY_RTOL * sp.lambda_max


def is_connected(g: Graph) -> bool:
    # the traversal answer wins if the spectral test is fooled by round-off
    return is_connected_traversal(g)


def random_geometric(n: int, radius: float, seed=None, max_resamples: int = MAX_RESAMPLES) -> Graph:
    """Connected planar random geometric graph on the unit square.

    All coordinates are redrawn until the graph is connected; edges join
    pairs at Euclidean distance ``<= radius``.
    """
    if n < 1:
        raise GraphError(f"n must be >= 1, got {n}")
    if radius <= 0:
        raise GraphError(f"radius must be positive, got {radius}")
    rng = np.random.default_rng(seed)
    for attempt in range(1, max_resamples + 1):
        pos = rng.random((n, 2))
        if n == 1:
            adj = np.zeros((1, 1))
        else:
            adj = (squareform(pdist(pos)) <= radius).astype(float)
            np.fill_diagonal(adj, 0.0)
        g = Graph.from_adjacency(adj)
        if is_connected_traversal(g):
            return Graph(n, g.edges, positions=pos, meta={"radius": radius, "seed": seed, "attempts": attempt})
    raise GraphError(
        f"no connected graph after {max_resamples} draws (n={n}, radius={radius}); radius too small"
    )
