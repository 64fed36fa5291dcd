"""Weighted undirected graphs: builders, normalisation, edge-list serialisation."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

__all__ = [
    "WeightedGraph",
    "GraphFormatError",
    "build_grid_1d",
    "build_grid_2d",
    "build_knn",
    "normalize_degree",
    "scale_weights",
    "write_edge_list",
    "read_edge_list",
]


class GraphFormatError(ValueError):
    """Raised when an edge-list file violates the on-disk format."""


@dataclass(frozen=True)
class WeightedGraph:
    """Immutable symmetric weighted graph over 0-based contiguous node indices.

    Adjacency is stored per node as parallel arrays (sorted neighbor ids,
    matching edge weights).  Symmetry, absence of self-loops/duplicates and
    nonzero weights are enforced at construction; instances are safe to share
    across worker threads.
    """

    n_nodes: int
    neighbors: tuple[np.ndarray, ...]
    weights: tuple[np.ndarray, ...]

    @classmethod
    def from_edges(cls, n_nodes: int, edges: Iterable[tuple[int, int, float]]) -> "WeightedGraph":
        """Build from undirected edges (i, j, w); each pair listed once."""
        if n_nodes < 1:
            raise ValueError(f"graph needs at least one node, got {n_nodes}")
        adj: list[dict[int, float]] = [{} for _ in range(n_nodes)]
        for i, j, w in edges:
            if not (0 <= i < n_nodes and 0 <= j < n_nodes):
                raise ValueError(f"edge ({i}, {j}) out of range for {n_nodes} nodes")
            if i == j:
                raise ValueError(f"self-loop at node {i}")
            if not math.isfinite(w) or w == 0.0:
                raise ValueError(f"edge ({i}, {j}) has invalid weight {w!r}")
            if j in adj[i]:
                raise ValueError(f"duplicate edge ({i}, {j})")
            adj[i][j] = w
            adj[j][i] = w
        neighbors = []
        weights = []
        for nbrs in adj:
            idx = np.array(sorted(nbrs), dtype=np.int64)
            neighbors.append(idx)
            weights.append(np.array([nbrs[int(k)] for k in idx], dtype=np.float64))
        return cls(n_nodes, tuple(neighbors), tuple(weights))

    # -- queries ---------------------------------------------------------

    def degree(self, i: int) -> int:
        return len(self.neighbors[i])

    @property
    def degrees(self) -> np.ndarray:
        return np.array([len(nbrs) for nbrs in self.neighbors], dtype=np.int64)

    @property
    def n_edges(self) -> int:
        return sum(len(nbrs) for nbrs in self.neighbors) // 2

    def edge_weight(self, i: int, j: int) -> float:
        """Weight of edge (i, j); 0.0 if absent."""
        nbrs = self.neighbors[i]
        pos = int(np.searchsorted(nbrs, j))
        if pos < len(nbrs) and nbrs[pos] == j:
            return float(self.weights[i][pos])
        return 0.0

    def edges(self) -> Iterator[tuple[int, int, float]]:
        """Yield undirected edges once each, with i < j, in sorted order."""
        for i in range(self.n_nodes):
            nbrs = self.neighbors[i]
            wts = self.weights[i]
            for j, w in zip(nbrs, wts):
                if i < j:
                    yield i, int(j), float(w)

    def to_dense(self) -> np.ndarray:
        """Dense symmetric adjacency matrix W."""
        w = np.zeros((self.n_nodes, self.n_nodes))
        for i in range(self.n_nodes):
            w[i, self.neighbors[i]] = self.weights[i]
        return w

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, WeightedGraph):
            return NotImplemented
        return self.n_nodes == other.n_nodes and all(
            np.array_equal(a, b) for a, b in zip(self.neighbors, other.neighbors)
        ) and all(np.array_equal(a, b) for a, b in zip(self.weights, other.weights))


# -- builders ------------------------------------------------------------


def build_grid_1d(n: int) -> WeightedGraph:
    """Path graph on n nodes, unit weights."""
    if n < 1:
        raise ValueError(f"grid size must be >= 1, got {n}")
    return WeightedGraph.from_edges(n, ((i, i + 1, 1.0) for i in range(n - 1)))


def build_grid_2d(nx: int, ny: int) -> WeightedGraph:
    """nx-by-ny grid, row-major node order, 4-neighborhood, unit weights."""
    if nx < 1 or ny < 1:
        raise ValueError(f"grid dimensions must be >= 1, got ({nx}, {ny})")
    edges = []
    for y in range(ny):
        for x in range(nx):
            i = y * nx + x
            if x + 1 < nx:
                edges.append((i, i + 1, 1.0))
            if y + 1 < ny:
                edges.append((i, i + nx, 1.0))
    return WeightedGraph.from_edges(nx * ny, edges)


def build_knn(points: Sequence[Sequence[float]], k: int) -> WeightedGraph:
    """Exact Euclidean k-nearest-neighbor graph, symmetrized by union.

    Directed k-NN edges get weight 1 and are merged (i->j or j->i implies the
    undirected edge).  Distance ties break toward the lower node index so
    repeated runs produce identical graphs.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2:
        raise ValueError("points must be a 2-d array-like")
    n = len(pts)
    if not 1 <= k < n:
        raise ValueError(f"k must satisfy 1 <= k < n_points, got k={k}, n={n}")
    d2 = np.square(pts[:, None, :] - pts[None, :, :]).sum(axis=2)
    off_diag = ~np.eye(n, dtype=bool)
    if np.any(d2[off_diag] == 0.0):
        dup = np.argwhere((d2 == 0.0) & off_diag)[0]
        raise ValueError(f"duplicate points {dup[0]} and {dup[1]} make k-NN ambiguous")
    pairs: set[tuple[int, int]] = set()
    for i in range(n):
        order = np.lexsort((np.arange(n), d2[i]))  # distance, then index
        picked = [int(j) for j in order if j != i][:k]
        for j in picked:
            pairs.add((min(i, j), max(i, j)))
    return WeightedGraph.from_edges(n, ((i, j, 1.0) for i, j in sorted(pairs)))


# -- weight transforms ---------------------------------------------------


def normalize_degree(g: WeightedGraph) -> WeightedGraph:
    """Replace every edge weight by 1/sqrt(d_i * d_j)."""
    deg = g.degrees
    edges = [(i, j, 1.0 / math.sqrt(deg[i] * deg[j])) for i, j, _ in g.edges()]
    return WeightedGraph.from_edges(g.n_nodes, edges)


def scale_weights(g: WeightedGraph, s: float) -> WeightedGraph:
    """Multiply every edge weight by the scalar s (s = 0 is rejected)."""
    if not math.isfinite(s):
        raise ValueError(f"scale must be finite, got {s!r}")
    if s == 0.0:
        raise ValueError("scale of 0 would erase all edges")
    return WeightedGraph.from_edges(g.n_nodes, ((i, j, w * s) for i, j, w in g.edges()))


# -- edge-list text format ------------------------------------------------
#
# Line 1: "N M".  Then M lines "i j w" with i < j, each undirected edge once.
# Weights use repr() so parsing recovers the exact float64 value.


def write_edge_list(g: WeightedGraph) -> str:
    lines = [f"{g.n_nodes} {g.n_edges}"]
    lines.extend(f"{i} {j} {w!r}" for i, j, w in g.edges())
    return "\n".join(lines) + "\n"


def read_edge_list(text: str) -> WeightedGraph:
    lines = [ln for ln in (raw.strip() for raw in text.splitlines()) if ln]
    if not lines:
        raise GraphFormatError("empty edge-list document")
    head = lines[0].split()
    if len(head) != 2:
        raise GraphFormatError(f"header must be 'N M', got {lines[0]!r}")
    try:
        n, m = int(head[0]), int(head[1])
    except ValueError as exc:
        raise GraphFormatError(f"non-integer header {lines[0]!r}") from exc
    if len(lines) - 1 != m:
        raise GraphFormatError(f"header promises {m} edges, found {len(lines) - 1}")
    edges = []
    seen: set[tuple[int, int]] = set()
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) != 3:
            raise GraphFormatError(f"edge line must be 'i j w', got {ln!r}")
        try:
            i, j, w = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError as exc:
            raise GraphFormatError(f"malformed edge line {ln!r}") from exc
        if i == j:
            raise GraphFormatError(f"self-loop at node {i}")
        if not i < j:
            raise GraphFormatError(f"edges must have i < j, got {ln!r}")
        if j >= n:
            raise GraphFormatError(f"node {j} out of range for N={n}")
        if (i, j) in seen:
            raise GraphFormatError(f"duplicate edge ({i}, {j})")
        seen.add((i, j))
        edges.append((i, j, w))
    return WeightedGraph.from_edges(n, edges)
