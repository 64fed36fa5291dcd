"""Command-line surface wiring configs to the library and emitting artifacts.

Exit codes: 0 success, 2 config/usage, 3 series failure, 4 shape or file I/O,
5 validation failure.  All randomness flows from config seed fields, so any
command re-run with the same config produces byte-identical outputs at any
thread count.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any

import numpy as np

from . import analysis, attention, oracle
from .config import ConfigError, build_graph_from_config, load_config, resolve_series
from .graph import GraphFormatError, build_grid_1d, build_grid_2d, build_knn, normalize_degree, scale_weights, write_edge_list
from .grf import build_grf_set
from .parallel import resolve_threads
from .series import CoefficientSeries, DeconvolutionError, deconvolve

EXIT_CONFIG = 2
EXIT_SERIES = 3
EXIT_IO = 4
EXIT_VALIDATION = 5


class CommandFailure(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _dump_json(path: Path, doc: dict[str, Any]) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _read_matrix_file(path: str) -> np.ndarray:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise CommandFailure(EXIT_IO, f"cannot read {path}: {exc}") from exc
    try:
        return oracle.read_matrix_csv(text)
    except ValueError as exc:
        raise CommandFailure(EXIT_IO, f"bad matrix file {path}: {exc}") from exc


def _build_graph(spec: dict[str, Any]):
    try:
        return build_graph_from_config(spec)
    except (OSError, GraphFormatError) as exc:
        raise CommandFailure(EXIT_IO, f"cannot load graph: {exc}") from exc
    except ValueError as exc:
        raise CommandFailure(EXIT_CONFIG, f"bad graph spec: {exc}") from exc


def _resolve_series(spec: dict[str, Any]):
    try:
        return resolve_series(spec)
    except DeconvolutionError as exc:
        raise CommandFailure(EXIT_SERIES, str(exc)) from exc


# -- commands ---------------------------------------------------------------


def cmd_gen_graph(args: argparse.Namespace) -> int:
    try:
        if args.grid1d is not None:
            g = build_grid_1d(args.grid1d)
        elif args.grid2d is not None:
            g = build_grid_2d(args.grid2d[0], args.grid2d[1])
        else:
            pts_path, k = args.knn
            from .config import _read_points

            try:
                pts = _read_points(pts_path)
            except OSError as exc:
                raise CommandFailure(EXIT_IO, f"cannot read points file: {exc}") from exc
            g = build_knn(pts, int(k))
        if args.normalize:
            g = normalize_degree(g)
        if args.scale is not None:
            g = scale_weights(g, args.scale)
    except CommandFailure:
        raise
    except ValueError as exc:
        raise CommandFailure(EXIT_CONFIG, f"invalid builder parameters: {exc}") from exc
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(write_edge_list(g))
    print(f"{g.n_nodes} {g.n_edges}")
    return 0


def cmd_oracle(args: argparse.Namespace) -> int:
    cfg = load_config(args.config, "oracle")
    out_dir = _out_dir(args)
    g = _build_graph(cfg["graph"])
    alpha, f = _resolve_series(cfg["series"])
    dense_limit = cfg.get("dense_limit", oracle.DEFAULT_DENSE_LIMIT)
    if g.n_nodes > dense_limit:
        raise CommandFailure(EXIT_CONFIG, f"graph exceeds dense limit {dense_limit}")
    kernel = oracle.dense_kernel(g, alpha)
    features = oracle.dense_features(g, f)
    pd = oracle.check_positive_definite(g, alpha, dense_limit=dense_limit)
    (out_dir / "kernel.csv").write_text(oracle.write_matrix_csv(kernel))
    (out_dir / "features.csv").write_text(oracle.write_matrix_csv(features))
    _dump_json(
        out_dir / "pd_report.json",
        {
            "config": cfg,
            "positive_definite": pd.positive_definite,
            "min_value": pd.min_value,
        },
    )
    print(f"kernel {kernel.shape[0]}x{kernel.shape[1]} positive_definite={pd.positive_definite}")
    return 0


def cmd_estimate(args: argparse.Namespace) -> int:
    cfg = load_config(args.config, "estimate")
    out_dir = _out_dir(args)
    threads = resolve_threads(args.threads)
    g = _build_graph(cfg["graph"])
    alpha, f = _resolve_series(cfg["series"])
    samp = cfg["sampling"]
    variant = samp.get("variant", "symmetric")
    series_for_walks = CoefficientSeries.of(cfg["series"]["alpha"]) if variant == "asymmetric-f1" else f
    grfs = build_grf_set(
        g, series_for_walks, samp["p_halt"], samp["n_walks"], samp["seed"], variant=variant, threads=threads
    )
    dense = grfs.densify()
    estimate = dense if variant == "asymmetric-f1" else dense @ dense.T
    (out_dir / "gram_estimate.csv").write_text(oracle.write_matrix_csv(estimate))
    report: dict[str, Any] = {"config": cfg, "variant": variant}
    dense_limit = cfg.get("dense_limit", oracle.DEFAULT_DENSE_LIMIT)
    if g.n_nodes <= dense_limit:
        if variant == "asymmetric-f1":
            reference = oracle.dense_kernel(g, series_for_walks)
        else:
            phi = oracle.dense_features(g, f)
            reference = phi @ phi.T
        err = np.abs(estimate - reference)
        report["max_abs_error"] = float(err.max())
        report["mean_abs_error"] = float(err.mean())
    _dump_json(out_dir / "estimate_report.json", report)
    print(f"gram estimate {estimate.shape[0]}x{estimate.shape[1]} written")
    return 0


def cmd_attention(args: argparse.Namespace) -> int:
    cfg = load_config(args.config, "attention")
    out_dir = _out_dir(args)
    threads = resolve_threads(args.threads)
    q = _read_matrix_file(cfg["q_file"])
    k = _read_matrix_file(cfg["k_file"])
    v = _read_matrix_file(cfg["v_file"])
    variant = cfg["variant"]
    kind = cfg["kind"]
    report: dict[str, Any] = {"config": cfg, "variant": variant}
    try:
        if variant == "unmasked":
            out = attention.linear_attention_unmasked(q, k, v, kind)
        elif variant == "dense-masked":
            g, (alpha, f) = _require_graph_series(cfg)
            phi = oracle.dense_features(g, f)
            out = attention.masked_linear_attention_dense(q, k, v, phi, kind)
            explicit = oracle.explicit_masked_attention(
                q, k, v, phi @ phi.T, kind="linear", feature_map=kind
            )
            report["max_deviation_vs_explicit"] = float(np.abs(out.values - explicit).max())
        elif variant == "grf-masked":
            g, (alpha, f) = _require_graph_series(cfg)
            samp = _require_sampling(cfg)
            grfs = build_grf_set(
                g, f, samp["p_halt"], samp["n_walks"], samp["seed"],
                variant="symmetric", threads=threads,
            )
            out = attention.masked_linear_attention_grf(q, k, v, grfs, kind)
        else:  # asymmetric
            g, _ = _require_graph_series(cfg)
            if "alpha" not in cfg["series"]:
                raise CommandFailure(
                    EXIT_CONFIG, "asymmetric attention requires the series given as alpha"
                )
            samp = _require_sampling(cfg)
            out = attention.masked_attention_asymmetric(
                q, k, v, g, CoefficientSeries.of(cfg["series"]["alpha"]),
                samp["p_halt"], samp["n_walks"], samp["seed"], kind,
            )
    except CommandFailure:
        raise
    except oracle.DegenerateNormalizationError as exc:
        raise CommandFailure(EXIT_VALIDATION, f"explicit oracle degenerate: {exc}") from exc
    except ValueError as exc:
        raise CommandFailure(EXIT_IO, f"attention inputs rejected: {exc}") from exc
    (out_dir / "attention_out.csv").write_text(oracle.write_matrix_csv(out.values))
    report["degenerate_rows"] = list(out.degenerate_rows)
    _dump_json(out_dir / "attention_report.json", report)
    print(f"attention output {out.values.shape[0]}x{out.values.shape[1]} written")
    return 0


def _require_graph_series(cfg: dict[str, Any]):
    if "graph" not in cfg or "series" not in cfg:
        raise CommandFailure(EXIT_CONFIG, "this variant requires graph and series blocks")
    return _build_graph(cfg["graph"]), _resolve_series(cfg["series"])


def _require_sampling(cfg: dict[str, Any]) -> dict[str, Any]:
    if "sampling" not in cfg:
        raise CommandFailure(EXIT_CONFIG, "this variant requires a sampling block")
    return cfg["sampling"]


def cmd_validate_bounds(args: argparse.Namespace) -> int:
    cfg = load_config(args.config, "validate-bounds")
    out_dir = _out_dir(args)
    threads = resolve_threads(args.threads)
    g = _build_graph(cfg["graph"])
    alpha = CoefficientSeries.of(cfg["series"]["alpha"])
    samp = cfg["sampling"]
    try:
        report = analysis.empirical_concentration(
            g,
            alpha,
            samp["p_halt"],
            samp["n_walks"],
            (cfg["node_pair"][0], cfg["node_pair"][1]),
            cfg["t_grid"],
            cfg["trials"],
            samp["seed"],
            c_scale=cfg.get("c_scale", 1.0),
            threads=threads,
        )
    except DeconvolutionError as exc:
        raise CommandFailure(EXIT_SERIES, str(exc)) from exc
    except ValueError as exc:
        raise CommandFailure(EXIT_CONFIG, str(exc)) from exc
    (out_dir / "bounds.csv").write_text(report.to_csv())
    doc: dict[str, Any] = {
        "config": cfg,
        "c": report.c,
        "rows": [
            {"t": t, "empirical": e, "bound": b, "bound_raw": r}
            for t, e, b, r in zip(report.t_grid, report.empirical, report.bound, report.bound_raw)
        ],
        "concentration_ok": report.all_within(),
    }
    ok = report.all_within()
    if "sparsity" in cfg:
        sp = cfg["sparsity"]
        sp_graph = _build_graph(sp["graph"]) if "graph" in sp else g
        f = _resolve_series(cfg["series"])[1]
        sp_report = analysis.empirical_sparsity(
            sp_graph,
            f,
            sp.get("p_halt", samp["p_halt"]),
            sp.get("n_walks", samp["n_walks"]),
            sp["delta"],
            sp["trials"],
            sp.get("seed", samp["seed"]),
            threads=threads,
        )
        doc["sparsity"] = {
            "bound_nnz": sp_report.bound_nnz,
            "fraction_exceeding": sp_report.fraction_exceeding,
            "limit": sp_report.limit,
            "ok": sp_report.passed(),
        }
        ok = ok and sp_report.passed()
    doc["ok"] = ok
    _dump_json(out_dir / "bounds_report.json", doc)
    print(f"bounds validation {'passed' if ok else 'FAILED'}")
    return 0 if ok else EXIT_VALIDATION


def cmd_flops(args: argparse.Namespace) -> int:
    cfg = load_config(args.config, "flops")
    out_dir = _out_dir(args)
    threads = resolve_threads(args.threads)
    _, f = _resolve_series(cfg["series"])
    seeds = cfg["seeds"]
    if isinstance(seeds, int):
        seeds = list(range(seeds))
    try:
        report = analysis.flop_experiment(
            cfg["sizes"],
            cfg["n_walks"],
            cfg["p_halt"],
            cfg["d"],
            cfg["m"],
            f,
            seeds,
            threads=threads,
        )
    except ValueError as exc:
        raise CommandFailure(EXIT_CONFIG, str(exc)) from exc
    (out_dir / "flops.csv").write_text(report.to_csv())
    _dump_json(
        out_dir / "flops_report.json",
        {
            "config": cfg,
            "model": report.model,
            "rows": [
                {"variant": var, "n_nodes": n, "flops_mean": mean, "flops_std": std, "seeds": s}
                for var, n, mean, std, s in report.rows
            ],
        },
    )
    print(f"flop curves for {len(cfg['sizes'])} sizes written")
    return 0


# -- wiring ------------------------------------------------------------------


def _out_dir(args: argparse.Namespace) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="JSON experiment config")
    parser.add_argument("--out-dir", default=".", help="directory for output artifacts")
    parser.add_argument(
        "--threads", type=int, default=None,
        help="worker threads (default: GRFMASK_THREADS or 1); results are identical at any count",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="grfmask", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen-graph", help="write an edge-list graph file")
    group = gen.add_mutually_exclusive_group(required=True)
    group.add_argument("--grid1d", type=int, metavar="N")
    group.add_argument("--grid2d", type=int, nargs=2, metavar=("NX", "NY"))
    group.add_argument("--knn", nargs=2, metavar=("POINTS_FILE", "K"))
    gen.add_argument("--normalize", action="store_true", help="degree-normalize edge weights")
    gen.add_argument("--scale", type=float, default=None, help="scale all weights")
    gen.add_argument("-o", "--out", required=True, help="output edge-list path")
    gen.set_defaults(fn=cmd_gen_graph)

    for name, fn in [
        ("oracle", cmd_oracle),
        ("estimate", cmd_estimate),
        ("attention", cmd_attention),
        ("validate-bounds", cmd_validate_bounds),
        ("flops", cmd_flops),
    ]:
        p = sub.add_parser(name)
        _add_common(p)
        p.set_defaults(fn=fn)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except CommandFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DeconvolutionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SERIES
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
