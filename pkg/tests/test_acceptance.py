"""Acceptance suite: one test per release criterion, one printed line each.

Run with `pytest tests/test_acceptance.py -v -s` to see the pass lines and
measured runtimes.  Every tolerance is fixed here, not configurable.
"""

import json
import math
import time

import numpy as np
import pytest

from grfmask import (
    CoefficientSeries,
    WeightedGraph,
    build_adhoc_feature,
    build_grf,
    build_grf_set,
    build_grid_1d,
    convolve,
    deconvolve,
    dense_features,
    dense_kernel,
    empirical_concentration,
    empirical_sparsity,
    explicit_masked_attention,
    feature_map,
    flop_experiment,
    gram_entry,
    heat_coefficients,
    masked_attention_asymmetric,
    masked_linear_attention_dense,
    masked_linear_attention_grf,
    min_walkers,
    normalize_degree,
    sparsity_bound,
)
from grfmask.cli import main as cli_main

from conftest import cycle_graph, derive_seed, random_graph

S = CoefficientSeries.of


def _announce(num, ok, detail, elapsed, budget):
    status = "PASS" if ok else "FAIL"
    print(f"[{status}] criterion {num}: {detail} ({elapsed:.1f}s / budget {budget:.0f}s)")
    assert ok, f"criterion {num}: {detail}"
    assert elapsed < budget, f"criterion {num} overran its {budget:.0f}s budget: {elapsed:.1f}s"


def test_criterion_1_oracle_factorization():
    # Feature factorisation: for kernels in the estimator's family (finite
    # feature series, so alpha is an exact self-convolution), the feature
    # Gram reproduces the kernel to 1e-10.
    start = time.perf_counter()
    rng = np.random.default_rng(101)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(2, 33))
        g = random_graph(rng, n, p_edge=float(rng.uniform(0.1, 0.6)),
                         normalized=bool(rng.integers(2)))
        half = np.concatenate([[rng.uniform(0.4, 1.2)], rng.uniform(-0.6, 0.6, int(rng.integers(0, 4)))])
        alpha = S(np.convolve(half, half))
        f = deconvolve(alpha)
        phi = dense_features(g, f)
        dev = np.abs(phi @ phi.T - dense_kernel(g, alpha)).max()
        worst = max(worst, dev)
    _announce(1, worst <= 1e-10, f"max factorization deviation {worst:.2e} <= 1e-10",
              time.perf_counter() - start, 30)


def test_criterion_2_implicit_masking_equivalence():
    start = time.perf_counter()
    rng = np.random.default_rng(202)
    worst = 0.0
    for idx in range(100):
        kind = "relu" if idx % 2 == 0 else "elu-plus-one"
        n, d = int(rng.integers(2, 17)), int(rng.integers(1, 9))
        g = random_graph(rng, n, p_edge=0.4)
        if kind == "relu":
            f = S(np.concatenate([[rng.uniform(0.6, 1.4)], rng.uniform(0.05, 0.4, 3)]))
        else:
            f = S(np.concatenate([[rng.uniform(0.6, 1.4)], rng.uniform(-0.4, 0.4, 3)]))
        q, k, v = rng.standard_normal((3, n, d))
        if kind == "relu":
            q, k = np.abs(q) + 0.1, np.abs(k) + 0.1
        phi = dense_features(g, f)
        out = masked_linear_attention_dense(q, k, v, phi, kind)
        expect = explicit_masked_attention(q, k, v, phi @ phi.T, kind="linear", feature_map=kind)
        assert not out.degenerate_rows
        worst = max(worst, float(np.abs(out.values - expect).max()))
    _announce(2, worst <= 1e-10, f"max implicit-vs-explicit deviation {worst:.2e} <= 1e-10",
              time.perf_counter() - start, 30)


def test_criterion_3_densification_equivalence():
    start = time.perf_counter()
    rng = np.random.default_rng(303)
    worst_grf = 0.0
    for _ in range(50):
        n, d = int(rng.integers(3, 17)), int(rng.integers(1, 6))
        g = random_graph(rng, n, p_edge=0.4)
        f = deconvolve(heat_coefficients(float(rng.uniform(0.5, 1.5)), 3))
        grfs = build_grf_set(g, f, 0.5, int(rng.integers(2, 24)), master_seed=int(rng.integers(10_000)))
        q, k, v = rng.standard_normal((3, n, d))
        sparse_out = masked_linear_attention_grf(q, k, v, grfs, "elu-plus-one")
        dense_out = masked_linear_attention_dense(q, k, v, grfs.densify(), "elu-plus-one")
        assert sparse_out.degenerate_rows == dense_out.degenerate_rows
        worst_grf = max(worst_grf, float(np.abs(sparse_out.values - dense_out.values).max()))
    worst_asym = 0.0
    for _ in range(50):
        n, d = int(rng.integers(3, 13)), int(rng.integers(1, 6))
        g = random_graph(rng, n, p_edge=0.4)
        alpha = S(np.concatenate([[1.0], rng.uniform(0.1, 0.8, 2)]))
        q, k, v = rng.standard_normal((3, n, d))
        seed = int(rng.integers(10_000))
        n_walks = int(rng.integers(2, 16))
        out = masked_attention_asymmetric(q, k, v, g, alpha, 0.5, n_walks, seed, "elu-plus-one")
        mask = build_grf_set(g, alpha, 0.5, n_walks, seed, variant="asymmetric-f1").densify()
        qf, kf = feature_map(q, "elu-plus-one"), feature_map(k, "elu-plus-one")
        masked_scores = (qf @ kf.T) * mask
        direct = (masked_scores @ v) / masked_scores.sum(axis=1, keepdims=True)
        worst_asym = max(worst_asym, float(np.abs(out.values - direct).max()))
    ok = worst_grf <= 1e-10 and worst_asym <= 1e-10
    _announce(3, ok, f"max deviation grf {worst_grf:.2e}, asymmetric {worst_asym:.2e} <= 1e-10",
              time.perf_counter() - start, 60)


def test_criterion_4_gram_unbiasedness():
    start = time.perf_counter()
    reps, n_walks, p_halt = 200, 100, 0.5
    alpha = heat_coefficients(1.0, 4)
    f = deconvolve(alpha)
    graphs = [
        normalize_degree(cycle_graph(4)),
        random_graph(np.random.default_rng(404), 8, p_edge=0.45, normalized=True),
    ]
    total = within = 0
    for g_idx, g in enumerate(graphs):
        n = g.n_nodes
        phi = dense_features(g, f)
        ref = phi @ phi.T
        ests = np.empty((reps, n, n))
        for r in range(reps):
            side_a = [build_grf(g, i, f, p_halt, n_walks, derive_seed(404, g_idx, r, 0)) for i in range(n)]
            side_b = [build_grf(g, i, f, p_halt, n_walks, derive_seed(404, g_idx, r, 1)) for i in range(n)]
            for i in range(n):
                for j in range(n):
                    ests[r, i, j] = gram_entry(side_a[i], side_b[j])
        mean = ests.mean(axis=0)
        se = ests.std(axis=0, ddof=1) / math.sqrt(reps)
        within += int(np.count_nonzero(np.abs(mean - ref) <= 4 * se))
        total += n * n
    frac = within / total
    _announce(4, frac >= 0.99, f"{within}/{total} entries within 4 SE (fraction {frac:.4f} >= 0.99)",
              time.perf_counter() - start, 120)


def test_criterion_5_concentration_bound_validation():
    start = time.perf_counter()
    g = normalize_degree(cycle_graph(4))
    alpha = heat_coefficients(1.0, 4)
    t_grid = [0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0]
    report = empirical_concentration(g, alpha, 0.5, 10, (0, 1), t_grid, 10_000, seed=505)
    ok = report.all_within() and len(report.t_grid) == 10
    _announce(5, ok, f"empirical exceedance within bound + 3 sigma at all 10 grid points (c={report.c:.3f})",
              time.perf_counter() - start, 120)


def test_criterion_6_sparsity_bound_validation():
    start = time.perf_counter()
    g = normalize_degree(build_grid_1d(1024))
    f = deconvolve(heat_coefficients(1.0, 20))
    n_walks, p_halt, delta, trials = 4, 0.5, 0.05, 10_000
    b = sparsity_bound(n_walks, p_halt, delta) / n_walks
    assert b == pytest.approx(6.29, abs=0.01)
    report = empirical_sparsity(g, f, p_halt, n_walks, delta, trials, seed=606)
    ok = report.passed()
    _announce(
        6, ok,
        f"fraction with nnz > 1 + n*b: {report.fraction_exceeding:.5f} <= {report.limit:.5f} (b={b:.3f})",
        time.perf_counter() - start, 60,
    )


def test_criterion_7_flop_scaling():
    start = time.perf_counter()
    sizes = [256, 512, 1024, 2048]
    f = deconvolve(heat_coefficients(1.0, 3))
    report = flop_experiment(sizes, 4, 0.5, 8, 8, f, seeds=list(range(10)))
    soft = report.means("softmax")
    lin = report.means("linear")
    grf = report.means("grf-masked")
    x = np.array(sizes, dtype=float)
    y = np.array([grf[n] for n in sizes])
    coef = np.polyfit(x, y, 1)
    resid = y - np.polyval(coef, x)
    r2 = 1 - (resid**2).sum() / ((y - y.mean()) ** 2).sum()
    grf_ratios = [grf[b] / grf[a] for a, b in zip(sizes, sizes[1:])]
    soft_ratios = [soft[b] / soft[a] for a, b in zip(sizes, sizes[1:])]
    ok = (
        r2 >= 0.99
        and all(1.8 <= r <= 2.3 for r in grf_ratios)
        and all(3.6 <= r <= 4.4 for r in soft_ratios)
        and all(soft[n] > grf[n] > lin[n] for n in sizes if n >= 512)
    )
    _announce(
        7, ok,
        f"R^2={r2:.6f}, grf ratios {['%.2f' % r for r in grf_ratios]}, "
        f"softmax ratios {['%.2f' % r for r in soft_ratios]}, ordering holds",
        time.perf_counter() - start, 120,
    )


def test_criterion_8_adhoc_estimator_bias():
    # On the weighted pair the symmetric Gram is identically zero for both
    # estimators (their supports never overlap), so the discriminating
    # quantity is the mask entry itself: the key-side-identity Gram, i.e.
    # the feature coordinate.  Its target is the kernel entry 0.3.
    start = time.perf_counter()
    g = WeightedGraph.from_edges(2, [(0, 1, 0.3)])
    f = S([0.0, 1.0])
    p_halt = 0.5
    target = dense_kernel(g, f)[0, 1]
    assert target == pytest.approx(0.3)
    ensembles = 20_000
    grf_vals = np.empty(ensembles)
    adhoc_vals = np.empty(ensembles)
    for r in range(ensembles):
        grf_vals[r] = build_grf(g, 0, f, p_halt, 1, derive_seed(808, r)).to_dense()[1]
        adhoc_vals[r] = build_adhoc_feature(g, 0, f, p_halt, 1, derive_seed(808, r)).to_dense()[1]
    z_grf = abs(grf_vals.mean() - target) / (grf_vals.std(ddof=1) / math.sqrt(ensembles))
    z_adhoc = abs(adhoc_vals.mean() - target) / (adhoc_vals.std(ddof=1) / math.sqrt(ensembles))
    ok = z_adhoc > 5.0 and z_grf <= 5.0
    _announce(8, ok, f"ad-hoc z={z_adhoc:.1f} > 5, grf z={z_grf:.2f} <= 5",
              time.perf_counter() - start, 60)


def test_criterion_9_derived_spot_values():
    start = time.perf_counter()
    checks = [
        abs(sparsity_bound(4, 0.5, 0.05) - 25.18) <= 0.01,
        min_walkers(0.5, 0.1, 1.0) == 95,
        np.allclose(deconvolve(S([1, 1, 0.5])).as_array(), [1.0, 0.5, 0.125], atol=1e-12),
    ]
    _announce(9, all(checks), "sparsity_bound(4,0.5,0.05)=25.18, min_walkers(0.5,0.1,1)=95, "
              "deconvolve([1,1,0.5])=[1,0.5,0.125]", time.perf_counter() - start, 1)


def test_criterion_10_cli_determinism_across_threads(tmp_path):
    start = time.perf_counter()
    heat = [1.0, 1.0, 0.5, 1 / 6, 1 / 24]
    rng = np.random.default_rng(909)
    from grfmask import write_matrix_csv

    for name in ("q", "k", "v"):
        (tmp_path / f"{name}.csv").write_text(write_matrix_csv(rng.standard_normal((16, 4))))
    configs = {
        "oracle": {"graph": {"grid2d": [3, 3], "normalize": True}, "series": {"alpha": heat}},
        "estimate": {
            "graph": {"grid2d": [3, 3], "normalize": True},
            "series": {"alpha": heat},
            "sampling": {"n_walks": 30, "p_halt": 0.5, "seed": 12},
        },
        "attention": {
            "variant": "grf-masked",
            "kind": "elu-plus-one",
            "q_file": str(tmp_path / "q.csv"),
            "k_file": str(tmp_path / "k.csv"),
            "v_file": str(tmp_path / "v.csv"),
            "graph": {"grid1d": 16, "normalize": True},
            "series": {"alpha": heat},
            "sampling": {"n_walks": 8, "p_halt": 0.5, "seed": 4},
        },
        "validate-bounds": {
            "graph": {"grid2d": [2, 2], "normalize": True},
            "series": {"alpha": heat},
            "sampling": {"n_walks": 8, "p_halt": 0.5, "seed": 21},
            "node_pair": [0, 1],
            "t_grid": [0.5, 1.0, 2.0, 4.0, 8.0],
            "trials": 800,
            "sparsity": {"graph": {"grid1d": 256, "normalize": True}, "delta": 0.05, "trials": 500},
        },
        "flops": {
            "sizes": [64, 128],
            "n_walks": 4,
            "p_halt": 0.5,
            "d": 8,
            "m": 8,
            "series": {"alpha": heat},
            "seeds": 3,
        },
    }
    mismatches = []
    for command, doc in configs.items():
        cfg = tmp_path / f"{command}.json"
        cfg.write_text(json.dumps(doc, indent=2))
        outputs = {}
        for threads in (1, 4):
            out_dir = tmp_path / f"{command}-t{threads}"
            code = cli_main(
                [command, "--config", str(cfg), "--out-dir", str(out_dir), "--threads", str(threads)]
            )
            assert code == 0, f"{command} failed at threads={threads}"
            outputs[threads] = {p.name: p.read_bytes() for p in sorted(out_dir.iterdir())}
        if outputs[1] != outputs[4]:
            mismatches.append(command)
    for run_idx in (1, 2):
        out = tmp_path / f"gen-{run_idx}.txt"
        assert cli_main(["gen-graph", "--grid2d", "4", "4", "--normalize", "-o", str(out)]) == 0
    if (tmp_path / "gen-1.txt").read_bytes() != (tmp_path / "gen-2.txt").read_bytes():
        mismatches.append("gen-graph")
    _announce(10, not mismatches, f"all commands byte-identical at threads 1 vs 4 {sorted(configs) + ['gen-graph']}",
              time.perf_counter() - start, 120)
