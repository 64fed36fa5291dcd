"""Terminating random walks with exact prefix probabilities.

Walk lengths are geometric: before every hop the walker halts with
probability p_halt, otherwise it moves to a uniformly random neighbor.
Each (master_seed, node, walk_index) triple owns an independent Philox
stream, so sampling is reproducible bit-for-bit under any parallel schedule.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import WeightedGraph

__all__ = ["Walk", "walk_rng", "sample_walk", "prefix_probability", "edge_weight_product"]

_MASK64 = (1 << 64) - 1
# Second key word; distinguishes this stream family from any other Philox use.
_STREAM_TAG = 0x67726673747265616D  # "grfstream"


def walk_rng(master_seed: int, node: int, walk_index: int) -> np.random.Generator:
    """Independent counter-based stream for one (seed, node, walk) triple.

    The identifiers go into the high words of the Philox counter, so streams
    can never overlap however many values a single walk consumes.
    """
    key = np.array([master_seed & _MASK64, ((master_seed >> 64) ^ _STREAM_TAG) & _MASK64],
                   dtype=np.uint64)
    counter = np.array([0, 0, walk_index & _MASK64, node & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(counter=counter, key=key))


@dataclass(frozen=True)
class Walk:
    """One sampled walk: visited nodes plus the bookkeeping its estimator needs.

    nodes has length hops + 1 (a zero-hop walk is just the start node);
    per_hop_degree[t] is the degree of the node the t-th hop departed from.
    """

    nodes: tuple[int, ...]
    p_halt: float
    per_hop_degree: tuple[int, ...]

    @property
    def hops(self) -> int:
        return len(self.nodes) - 1


def sample_walk(
    g: WeightedGraph,
    start: int,
    p_halt: float,
    rng: np.random.Generator,
    max_hops: int | None = None,
) -> Walk:
    """Sample one terminating walk from `start`.

    The halt check precedes each hop, so zero-hop walks occur with
    probability p_halt.  A node without neighbors forces a halt.  max_hops
    truncates the walk; callers use it to skip hops whose coefficients are
    all zero anyway.
    """
    if not 0.0 < p_halt <= 1.0:
        raise ValueError(f"p_halt must lie in (0, 1], got {p_halt}")
    nodes = [start]
    degs: list[int] = []
    cur = start
    while max_hops is None or len(degs) < max_hops:
        nbrs = g.neighbors[cur]
        deg = len(nbrs)
        if deg == 0:
            break
        if rng.random() < p_halt:
            break
        cur = int(nbrs[int(rng.random() * deg)])
        nodes.append(cur)
        degs.append(deg)
    return Walk(nodes=tuple(nodes), p_halt=p_halt, per_hop_degree=tuple(degs))


def prefix_probability(w: Walk, hops: int) -> float:
    """Probability that a fresh walk starts with this walk's first `hops` hops.

    That is prod_t (1 - p_halt) / degree over the first `hops` departures; the
    terminal halt is deliberately not included, because the prefix-subwalk
    indicator the estimator relies on has exactly this product as its
    expectation.  hops = 0 gives 1.
    """
    if hops < 0 or hops > w.hops:
        raise IndexError(f"hops {hops} out of range for a {w.hops}-hop walk")
    p = 1.0
    for t in range(hops):
        p *= (1.0 - w.p_halt) / w.per_hop_degree[t]
    return p


def edge_weight_product(g: WeightedGraph, w: Walk, hops: int) -> float:
    """Product of the weights of the first `hops` traversed edges (empty product = 1)."""
    if hops < 0 or hops > w.hops:
        raise IndexError(f"hops {hops} out of range for a {w.hops}-hop walk")
    out = 1.0
    for t in range(1, hops + 1):
        out *= g.edge_weight(w.nodes[t - 1], w.nodes[t])
    return out
