"""Linear attention variants: unmasked, implicitly masked, GRF-masked, asymmetric.

The masked variants never materialise the attention matrix or the mask.  They
exploit the identity (dot of outer products = product of dots): the combined
query feature vec(phi(q_i) (x) g_i) never exists in memory, and the
contraction runs over the graph-feature axis instead.  Numerator and
normalizer share one pass by extending V with a ones column.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .graph import WeightedGraph
from .grf import GrfSet, SparseVector
from .oracle import EPS_D
from .series import CoefficientSeries
from .walks import sample_walk, walk_rng

__all__ = [
    "FEATURE_MAPS",
    "feature_map",
    "AttentionOutput",
    "linear_attention_unmasked",
    "masked_linear_attention_dense",
    "masked_linear_attention_grf",
    "masked_attention_asymmetric",
]


def _relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def _elu_plus_one(x: np.ndarray) -> np.ndarray:
    # elu(x) + 1: strictly positive, smooth at 0.
    return np.where(x > 0.0, x + 1.0, np.exp(np.minimum(x, 0.0)))


FEATURE_MAPS = {"relu": _relu, "elu-plus-one": _elu_plus_one}


def feature_map(x: np.ndarray, kind: str) -> np.ndarray:
    """Apply the named query/key nonlinearity elementwise (output dim = input dim)."""
    try:
        fn = FEATURE_MAPS[kind]
    except KeyError:
        raise ValueError(f"unknown feature map {kind!r}, expected one of {sorted(FEATURE_MAPS)}")
    return fn(np.asarray(x, dtype=np.float64))


@dataclass(frozen=True)
class AttentionOutput:
    """Attention values plus the row normalizers that produced them.

    Rows whose normalizer magnitude is below EPS_D are zero-filled and listed
    in degenerate_rows rather than divided through.  mac_count records the
    multiply-accumulate operations the masked contraction executed (0 for
    paths that are not instrumented).
    """

    values: np.ndarray
    row_normalizers: np.ndarray
    degenerate_rows: tuple[int, ...] = ()
    mac_count: int = 0


def _finalize(numer: np.ndarray, denom: np.ndarray, mac_count: int = 0) -> AttentionOutput:
    bad = np.abs(denom) < EPS_D
    values = np.zeros_like(numer)
    good = ~bad
    values[good] = numer[good] / denom[good, None]
    return AttentionOutput(
        values=values,
        row_normalizers=denom.copy(),
        degenerate_rows=tuple(int(i) for i in np.flatnonzero(bad)),
        mac_count=mac_count,
    )


def _check_qkv(q: np.ndarray, k: np.ndarray, v: np.ndarray) -> None:
    if q.ndim != 2 or k.ndim != 2 or v.ndim != 2:
        raise ValueError("Q, K, V must be 2-d matrices")
    if not (q.shape == k.shape and q.shape[0] == v.shape[0]):
        raise ValueError(f"shape mismatch: Q {q.shape}, K {k.shape}, V {v.shape}")


def linear_attention_unmasked(
    q: np.ndarray, k: np.ndarray, v: np.ndarray, kind: str = "relu"
) -> AttentionOutput:
    """Low-rank attention PhiQ (PhiK^T V) with normalizer PhiQ (PhiK^T 1)."""
    q = np.asarray(q, dtype=np.float64)
    k = np.asarray(k, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    _check_qkv(q, k, v)
    qf = feature_map(q, kind)
    kf = feature_map(k, kind)
    kv = kf.T @ v
    ksum = kf.sum(axis=0)
    numer = qf @ kv
    denom = qf @ ksum
    return _finalize(numer, denom)


def masked_linear_attention_dense(
    q: np.ndarray,
    k: np.ndarray,
    v: np.ndarray,
    phi_g: np.ndarray,
    kind: str = "relu",
) -> AttentionOutput:
    """Implicitly masked linear attention with dense graph features.

    Row i of phi_g is node i's graph feature; the effective mask is the Gram
    matrix phi_g phi_g^T but is never formed.  Cost is O(N^2 m d).
    """
    q = np.asarray(q, dtype=np.float64)
    k = np.asarray(k, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    phi_g = np.asarray(phi_g, dtype=np.float64)
    _check_qkv(q, k, v)
    n = q.shape[0]
    if phi_g.shape != (n, n):
        raise ValueError(f"graph features must be {n}x{n}, got {phi_g.shape}")
    qf = feature_map(q, kind)
    kf = feature_map(k, kind)
    vext = np.concatenate([v, np.ones((n, 1))], axis=1)
    m, d1 = qf.shape[1], vext.shape[1]
    # key side: B[l] = sum_j phi_g[j, l] * (phi(k_j) outer [v_j, 1])
    outer = (kf[:, :, None] * vext[:, None, :]).reshape(n, m * d1)
    b = phi_g.T @ outer
    # query side: row i = phi(q_i)^T (sum_l phi_g[i, l] * B[l])
    comb = (phi_g @ b).reshape(n, m, d1)
    rows = np.einsum("imd,im->id", comb, qf)
    return _finalize(rows[:, :-1], rows[:, -1])


def _sparse_masked_contraction(
    qf: np.ndarray,
    kf: np.ndarray,
    vext: np.ndarray,
    query_feats: tuple[SparseVector, ...],
    key_feats: tuple[SparseVector, ...],
) -> tuple[np.ndarray, np.ndarray, int]:
    """Masked low-rank contraction over sparse graph features, counting MACs.

    Work is proportional to the features' support sizes, never to N^2.  The
    per-row reduction order is fixed (ascending coordinate), so results are
    identical under any parallel row schedule.
    """
    n = qf.shape[0]
    m, d1 = qf.shape[1], vext.shape[1]
    macs = 0
    b = np.zeros((n, m, d1))
    for j, sv in enumerate(key_feats):
        if sv.nnz == 0:
            continue
        b[sv.indices] += sv.values[:, None, None] * (kf[j][:, None] * vext[j][None, :])
        macs += sv.nnz * m * d1
    rows = np.empty((n, d1))
    for i, sv in enumerate(query_feats):
        if sv.nnz:
            comb = np.tensordot(sv.values, b[sv.indices], axes=1)
            macs += sv.nnz * m * d1
        else:
            comb = np.zeros((m, d1))
        rows[i] = qf[i] @ comb
        macs += m * d1
    return rows[:, :-1], rows[:, -1], macs


def masked_linear_attention_grf(
    q: np.ndarray,
    k: np.ndarray,
    v: np.ndarray,
    grfs: GrfSet,
    kind: str = "relu",
    key_grfs: GrfSet | None = None,
) -> AttentionOutput:
    """GRF-masked linear attention; O(N) for support sizes independent of N.

    By default one feature set serves both the query and key sides, exactly
    as sampled attention runs in practice.  Validation of unbiasedness may
    pass an independently drawn key_grfs, which removes the shared-ensemble
    coupling on the mask diagonal.
    """
    q = np.asarray(q, dtype=np.float64)
    k = np.asarray(k, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    _check_qkv(q, k, v)
    n = q.shape[0]
    if grfs.n_nodes != n:
        raise ValueError(f"GRF set covers {grfs.n_nodes} nodes, inputs have {n} rows")
    key_side = key_grfs if key_grfs is not None else grfs
    if key_side.n_nodes != n:
        raise ValueError(f"key-side GRF set covers {key_side.n_nodes} nodes, inputs have {n} rows")
    qf = feature_map(q, kind)
    kf = feature_map(k, kind)
    vext = np.concatenate([v, np.ones((n, 1))], axis=1)
    numer, denom, macs = _sparse_masked_contraction(
        qf, kf, vext, grfs.features, key_side.features
    )
    return _finalize(numer, denom, mac_count=macs)


def masked_attention_asymmetric(
    q: np.ndarray,
    k: np.ndarray,
    v: np.ndarray,
    g: WeightedGraph,
    f_alpha: CoefficientSeries,
    p_halt: float,
    n_walks: int,
    master_seed: int,
    kind: str = "relu",
) -> AttentionOutput:
    """Masked attention via direct walk enumeration, no sparse algebra at all.

    The key-side feature series is the identity (delta at length 0), so the
    mask estimate reduces to the query-side feature matrix and each walk
    prefix contributes straight to the output: score x f_len x (edge-weight
    product) / (prefix probability), times the endpoint's value row.  The
    coefficient series here plays the role of the kernel coefficients
    themselves.
    """
    q = np.asarray(q, dtype=np.float64)
    k = np.asarray(k, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    _check_qkv(q, k, v)
    if g.n_nodes != q.shape[0]:
        raise ValueError(f"graph has {g.n_nodes} nodes, inputs have {q.shape[0]} rows")
    if n_walks < 1:
        raise ValueError(f"need at least one walk, got {n_walks}")
    if not 0.0 < p_halt < 1.0:
        raise ValueError(f"p_halt must lie in (0, 1), got {p_halt}")
    qf = feature_map(q, kind)
    kf = feature_map(k, kind)
    n, d = v.shape
    coeffs = f_alpha.coeffs
    i_max = f_alpha.i_max
    numer = np.zeros((n, d))
    denom = np.zeros(n)
    for i in range(n):
        acc = np.zeros(d)
        s = 0.0
        for w_idx in range(n_walks):
            rng = walk_rng(master_seed, i, w_idx)
            walk = sample_walk(g, i, p_halt, rng, max_hops=i_max)
            if coeffs[0] != 0.0:
                val = coeffs[0] * float(qf[i] @ kf[i])
                acc += val * v[i]
                s += val
            ratio = 1.0
            for t in range(1, walk.hops + 1):
                prev, cur = walk.nodes[t - 1], walk.nodes[t]
                ratio *= g.edge_weight(prev, cur) * walk.per_hop_degree[t - 1] / (1.0 - p_halt)
                if coeffs[t] == 0.0:
                    continue
                val = coeffs[t] * ratio * float(qf[i] @ kf[cur])
                acc += val * v[cur]
                s += val
        numer[i] = acc / n_walks
        denom[i] = s / n_walks
    return _finalize(numer, denom)
