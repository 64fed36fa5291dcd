"""Shared graph/series generators for the test suite."""

from __future__ import annotations

import numpy as np

from grfmask import CoefficientSeries, WeightedGraph, normalize_degree


def cycle_graph(n: int, weight: float = 1.0) -> WeightedGraph:
    edges = [(i, (i + 1) % n, weight) for i in range(n - 1)]
    edges.append((0, n - 1, weight))
    return WeightedGraph.from_edges(n, edges)


def random_graph(
    rng: np.random.Generator,
    n: int,
    p_edge: float = 0.4,
    normalized: bool = True,
    weight_lo: float = 0.05,
    weight_hi: float = 0.35,
    signed: bool = False,
) -> WeightedGraph:
    """Erdos-Renyi-style graph with bounded weights (kernel series stay tame)."""
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < p_edge:
                w = rng.uniform(weight_lo, weight_hi)
                if signed and rng.random() < 0.5:
                    w = -w
                edges.append((i, j, w))
    g = WeightedGraph.from_edges(n, edges)
    if normalized:
        g = normalize_degree(g)
    return g


def random_square_series(rng: np.random.Generator, max_half_len: int = 4) -> CoefficientSeries:
    """A random kernel series that is exactly the self-convolution of a finite series."""
    half = [rng.uniform(0.4, 1.2)] + list(rng.uniform(-0.6, 0.6, size=int(rng.integers(0, max_half_len))))
    full = np.convolve(half, half)
    return CoefficientSeries.of(full)


def derive_seed(*entropy: int) -> int:
    """Per-(trial, side) master seeds for independent walk ensembles."""
    mask = (1 << 64) - 1
    return int(np.random.SeedSequence(entropy=[e & mask for e in entropy]).generate_state(1, np.uint64)[0])
