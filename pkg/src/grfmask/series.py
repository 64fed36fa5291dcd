"""Finite coefficient series for power-series node kernels and their features.

A kernel is parameterised by coefficients (alpha_k) of adjacency powers; its
feature factorisation uses the deconvolution (f_k) whose self-convolution
reproduces alpha.  All series here are finite: index k beyond the stored
length means a zero coefficient.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

from .graph import WeightedGraph

__all__ = [
    "CoefficientSeries",
    "DeconvolutionError",
    "deconvolve",
    "convolve",
    "heat_coefficients",
    "c_constant",
]


class DeconvolutionError(ValueError):
    """Raised when a series has no real deconvolution (leading term <= 0)."""


@dataclass(frozen=True)
class CoefficientSeries:
    """Finite real coefficient sequence; coeffs[k] weights the k-th adjacency power."""

    coeffs: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.coeffs) == 0:
            raise ValueError("series must hold at least the order-0 coefficient")
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
        if not all(math.isfinite(c) for c in self.coeffs):
            raise ValueError("series coefficients must be finite")

    @property
    def i_max(self) -> int:
        return len(self.coeffs) - 1

    def __len__(self) -> int:
        return len(self.coeffs)

    def __getitem__(self, k: int) -> float:
        return self.coeffs[k]

    def __iter__(self) -> Iterator[float]:
        return iter(self.coeffs)

    def as_array(self) -> np.ndarray:
        return np.array(self.coeffs, dtype=np.float64)

    @classmethod
    def of(cls, values: Iterable[float]) -> "CoefficientSeries":
        return cls(tuple(values))


def deconvolve(alpha: CoefficientSeries) -> CoefficientSeries:
    """Series f with sum_{p=0..k} f_p f_{k-p} = alpha_k for every k <= i_max.

    f_0 takes the positive root sqrt(alpha_0); a global sign flip of f leaves
    the induced kernel unchanged, so fixing the sign keeps results
    deterministic.  Output length equals the input length.
    """
    a = alpha.coeffs
    if a[0] <= 0.0:
        raise DeconvolutionError(f"no real deconvolution: leading coefficient {a[0]!r} <= 0")
    f = [math.sqrt(a[0])]
    for k in range(1, len(a)):
        cross = sum(f[p] * f[k - p] for p in range(1, k))
        f.append((a[k] - cross) / (2.0 * f[0]))
    return CoefficientSeries.of(f)


def convolve(f1: CoefficientSeries, f2: CoefficientSeries, i_max: int | None = None) -> CoefficientSeries:
    """Discrete convolution, entry k = sum_p f1_p * f2_{k-p}.

    By default the output is truncated to the larger input i_max, which makes
    convolve(deconvolve(a), deconvolve(a)) an exact round trip.  Pass i_max
    explicitly (e.g. f1.i_max + f2.i_max) for the untruncated product, the
    series whose kernel equals the product of the factors' feature matrices.
    """
    if i_max is None:
        i_max = max(f1.i_max, f2.i_max)
    if i_max < 0:
        raise ValueError(f"i_max must be >= 0, got {i_max}")
    out = []
    for k in range(i_max + 1):
        lo = max(0, k - f2.i_max)
        hi = min(k, f1.i_max)
        out.append(sum(f1[p] * f2[k - p] for p in range(lo, hi + 1)))
    return CoefficientSeries.of(out)


def heat_coefficients(beta: float, i_max: int) -> CoefficientSeries:
    """Heat-kernel series alpha_k = beta^k / k! up to i_max."""
    if i_max < 0:
        raise ValueError(f"i_max must be >= 0, got {i_max}")
    return CoefficientSeries.of(beta**k / math.factorial(k) for k in range(i_max + 1))


def c_constant(f: CoefficientSeries, g: WeightedGraph, p_halt: float) -> float:
    """Worst-case walk load sum_k |f_k| * B^k with B = max |w_ij| d_i / (1 - p_halt).

    B maximises over both orientations of every edge (the degree factor is the
    departure node's).  An edgeless graph has B = 0, so only |f_0| survives.
    The truncation at i_max keeps the sum finite for any graph.
    """
    if not 0.0 < p_halt < 1.0:
        raise ValueError(f"p_halt must lie in (0, 1), got {p_halt}")
    b = 0.0
    for i, j, w in g.edges():
        load = abs(w) * max(g.degree(i), g.degree(j))
        b = max(b, load)
    b /= 1.0 - p_halt
    total = 0.0
    power = 1.0  # B^0, also covering the edgeless 0^0 = 1 convention
    for fk in f:
        total += abs(fk) * power
        power *= b
    return total
