"""Exact dense reference computations: kernels, features, attention oracles.

Everything here is brute force on dense matrices and serves as ground truth
for the stochastic estimators.  Dense matrices are plain float64 numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import WeightedGraph
from .series import CoefficientSeries

__all__ = [
    "EPS_D",
    "DEFAULT_DENSE_LIMIT",
    "DegenerateNormalizationError",
    "NumericalFailureError",
    "PdCheck",
    "dense_kernel",
    "dense_features",
    "check_positive_definite",
    "softmax_attention",
    "explicit_masked_attention",
    "write_matrix_csv",
    "read_matrix_csv",
]

# Attention row normalizers below this magnitude are treated as degenerate.
# Stochastic masks can drive a row's attention mass to (near) zero; dividing
# through silently would poison downstream comparisons.
EPS_D = 1e-6

# Dense paths refuse larger graphs unless the caller raises the limit.
DEFAULT_DENSE_LIMIT = 2048


class DegenerateNormalizationError(ValueError):
    """An attention row normalizer fell below EPS_D in magnitude."""


class NumericalFailureError(RuntimeError):
    """An iterative numerical routine failed to converge."""


def _accumulate_power_series(g: WeightedGraph, coeffs: CoefficientSeries) -> np.ndarray:
    """sum_k coeffs[k] * W^k with every power kept exactly symmetric.

    Each power is re-symmetrised as (P + P.T) / 2; the two float variants of
    a mirrored entry average to bitwise-identical values, so the output passes
    an exact (not tolerance) symmetry check.
    """
    w = g.to_dense()
    n = g.n_nodes
    out = np.zeros((n, n))
    power = np.eye(n)
    for k, c in enumerate(coeffs):
        if k > 0:
            power = power @ w
            power = (power + power.T) / 2.0
        if c != 0.0:
            out += c * power
    return out


def dense_kernel(g: WeightedGraph, alpha: CoefficientSeries) -> np.ndarray:
    """Exact N-by-N kernel sum_k alpha_k W^k."""
    return _accumulate_power_series(g, alpha)


def dense_features(g: WeightedGraph, f: CoefficientSeries) -> np.ndarray:
    """Exact N-by-N feature matrix sum_k f_k W^k (row i is node i's feature)."""
    return _accumulate_power_series(g, f)


@dataclass(frozen=True)
class PdCheck:
    """Positive-definiteness verdict for a kernel series on a graph."""

    positive_definite: bool
    min_value: float


def _jacobi_eigenvalues(a: np.ndarray, tol: float = 1e-10, max_sweeps: int = 100) -> np.ndarray:
    """Eigenvalues of a symmetric matrix by cyclic Jacobi rotations."""
    a = np.array(a, dtype=np.float64)
    n = a.shape[0]
    if n == 1:
        return np.array([a[0, 0]])
    off_mask = ~np.eye(n, dtype=bool)
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(a[off_mask] ** 2))
        if off <= tol:
            return np.sort(np.diag(a))
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:  # theta**2 would overflow; use its limit
                    t = 0.5 / theta
                else:
                    t = 1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0))
                    if theta < 0.0:
                        t = -t
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                rp = a[:, p].copy()
                rq = a[:, q].copy()
                a[:, p] = c * rp - s * rq
                a[:, q] = s * rp + c * rq
                rp = a[p, :].copy()
                rq = a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                a[p, q] = 0.0
                a[q, p] = 0.0
    raise NumericalFailureError(f"Jacobi sweep cap ({max_sweeps}) hit before off-norm <= {tol}")


def check_positive_definite(
    g: WeightedGraph, alpha: CoefficientSeries, dense_limit: int = DEFAULT_DENSE_LIMIT
) -> PdCheck:
    """Whether sum_k alpha_k lambda^k > 0 for every adjacency eigenvalue lambda.

    Reports the minimum polynomial value but never repairs a failing series.
    """
    if g.n_nodes > dense_limit:
        raise ValueError(f"graph has {g.n_nodes} nodes, dense limit is {dense_limit}")
    eigenvalues = _jacobi_eigenvalues(g.to_dense())
    coeffs = alpha.as_array()
    min_value = np.inf
    for lam in eigenvalues:
        acc = 0.0
        for c in coeffs[::-1]:  # Horner
            acc = acc * lam + c
        min_value = min(min_value, acc)
    return PdCheck(positive_definite=bool(min_value > 0.0), min_value=float(min_value))


# -- attention oracles ----------------------------------------------------


def _check_qkv(q: np.ndarray, k: np.ndarray, v: np.ndarray) -> None:
    if q.ndim != 2 or k.ndim != 2 or v.ndim != 2:
        raise ValueError("Q, K, V must be 2-d matrices")
    if not (q.shape == k.shape and q.shape[0] == v.shape[0]):
        raise ValueError(f"shape mismatch: Q {q.shape}, K {k.shape}, V {v.shape}")


def softmax_attention(q: np.ndarray, k: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Full-rank softmax attention D^-1 A V with A_ij = exp(q_i . k_j).

    Row-wise max subtraction keeps the exponentials finite; no 1/sqrt(d)
    scaling is applied.
    """
    q = np.asarray(q, dtype=np.float64)
    k = np.asarray(k, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    _check_qkv(q, k, v)
    scores = q @ k.T
    scores -= scores.max(axis=1, keepdims=True)
    a = np.exp(scores)
    return (a @ v) / a.sum(axis=1, keepdims=True)


def explicit_masked_attention(
    q: np.ndarray,
    k: np.ndarray,
    v: np.ndarray,
    mask: np.ndarray,
    kind: str = "softmax",
    feature_map: str | None = None,
) -> np.ndarray:
    """Masked attention D^-1 (M * A) V with D the row sums of M * A.

    kind="softmax" scores with exp(q_i . k_j); kind="linear" scores with
    phi(q_i) . phi(k_j) for the named feature map.  Any row whose normalizer
    magnitude falls below EPS_D raises DegenerateNormalizationError: this op
    is the oracle, and a silently divided near-zero row would defeat it.
    """
    q = np.asarray(q, dtype=np.float64)
    k = np.asarray(k, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    mask = np.asarray(mask, dtype=np.float64)
    _check_qkv(q, k, v)
    n = q.shape[0]
    if mask.shape != (n, n):
        raise ValueError(f"mask must be {n}x{n}, got {mask.shape}")
    if kind == "softmax":
        scores = q @ k.T
        shift = scores.max(axis=1, keepdims=True)
        a = np.exp(scores - shift)
        masked = mask * a
        sums = masked.sum(axis=1)
        # True |normalizer| is e^shift * |sums|; compare in log space.
        with np.errstate(divide="ignore"):
            log_mag = shift[:, 0] + np.log(np.abs(sums))
        if np.any(log_mag < np.log(EPS_D)):
            bad = int(np.argmin(log_mag))
            raise DegenerateNormalizationError(f"row {bad} normalizer below {EPS_D}")
        return (masked @ v) / sums[:, None]
    if kind == "linear":
        from .attention import feature_map as apply_map

        qf = apply_map(q, feature_map or "relu")
        kf = apply_map(k, feature_map or "relu")
        masked = mask * (qf @ kf.T)
        sums = masked.sum(axis=1)
        if np.any(np.abs(sums) < EPS_D):
            bad = int(np.argmin(np.abs(sums)))
            raise DegenerateNormalizationError(f"row {bad} normalizer below {EPS_D}")
        return (masked @ v) / sums[:, None]
    raise ValueError(f"unknown attention kind {kind!r}")


# -- CSV interchange -------------------------------------------------------
#
# One header line "rows,cols", then one comma-separated line per row with
# 17 significant digits, enough to round-trip float64 exactly.


def write_matrix_csv(m: np.ndarray) -> str:
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError("only 2-d matrices are serialisable")
    lines = [f"{m.shape[0]},{m.shape[1]}"]
    lines.extend(",".join(f"{x:.17g}" for x in row) for row in m)
    return "\n".join(lines) + "\n"


def read_matrix_csv(text: str) -> np.ndarray:
    lines = [ln for ln in (raw.strip() for raw in text.splitlines()) if ln]
    if not lines:
        raise ValueError("empty matrix document")
    head = lines[0].split(",")
    if len(head) != 2:
        raise ValueError(f"matrix header must be 'rows,cols', got {lines[0]!r}")
    rows, cols = int(head[0]), int(head[1])
    if len(lines) - 1 != rows:
        raise ValueError(f"expected {rows} rows, found {len(lines) - 1}")
    out = np.empty((rows, cols))
    for r, ln in enumerate(lines[1:]):
        vals = ln.split(",")
        if len(vals) != cols:
            raise ValueError(f"row {r} has {len(vals)} entries, expected {cols}")
        out[r] = [float(x) for x in vals]
    return out
