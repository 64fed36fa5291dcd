"""JSON experiment configs: schemas, validation, and loaders.

Every config is schema-checked before any computation runs; unknown keys are
rejected so typos fail loudly instead of silently using defaults.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import jsonschema

from .graph import (
    WeightedGraph,
    build_grid_1d,
    build_grid_2d,
    build_knn,
    normalize_degree,
    read_edge_list,
    scale_weights,
)
from .series import CoefficientSeries, deconvolve

__all__ = ["ConfigError", "load_config", "build_graph_from_config", "resolve_series"]


class ConfigError(ValueError):
    """Config document missing, unparsable, or schema-invalid."""


_GRAPH = {
    "type": "object",
    "properties": {
        "grid1d": {"type": "integer", "minimum": 1},
        "grid2d": {
            "type": "array",
            "items": {"type": "integer", "minimum": 1},
            "minItems": 2,
            "maxItems": 2,
        },
        "knn": {
            "type": "object",
            "properties": {
                "points_file": {"type": "string"},
                "k": {"type": "integer", "minimum": 1},
            },
            "required": ["points_file", "k"],
            "additionalProperties": False,
        },
        "file": {"type": "string"},
        "normalize": {"type": "boolean"},
        "scale": {"type": "number"},
    },
    "additionalProperties": False,
    "oneOf": [
        {"required": ["grid1d"]},
        {"required": ["grid2d"]},
        {"required": ["knn"]},
        {"required": ["file"]},
    ],
}

_SERIES = {
    "type": "object",
    "properties": {
        "alpha": {"type": "array", "items": {"type": "number"}, "minItems": 1},
        "f": {"type": "array", "items": {"type": "number"}, "minItems": 1},
    },
    "additionalProperties": False,
    "oneOf": [{"required": ["alpha"]}, {"required": ["f"]}],
}

_P_HALT = {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1}

_SAMPLING = {
    "type": "object",
    "properties": {
        "n_walks": {"type": "integer", "minimum": 1},
        "p_halt": _P_HALT,
        "seed": {"type": "integer"},
        "variant": {"enum": ["symmetric", "asymmetric-f1", "adhoc"]},
    },
    "required": ["n_walks", "p_halt", "seed"],
    "additionalProperties": False,
}

SCHEMAS: dict[str, dict[str, Any]] = {
    "oracle": {
        "type": "object",
        "properties": {
            "graph": _GRAPH,
            "series": _SERIES,
            "dense_limit": {"type": "integer", "minimum": 1},
        },
        "required": ["graph", "series"],
        "additionalProperties": False,
    },
    "estimate": {
        "type": "object",
        "properties": {
            "graph": _GRAPH,
            "series": _SERIES,
            "sampling": _SAMPLING,
            "dense_limit": {"type": "integer", "minimum": 1},
        },
        "required": ["graph", "series", "sampling"],
        "additionalProperties": False,
    },
    "attention": {
        "type": "object",
        "properties": {
            "variant": {"enum": ["unmasked", "dense-masked", "grf-masked", "asymmetric"]},
            "kind": {"enum": ["relu", "elu-plus-one"]},
            "q_file": {"type": "string"},
            "k_file": {"type": "string"},
            "v_file": {"type": "string"},
            "graph": _GRAPH,
            "series": _SERIES,
            "sampling": _SAMPLING,
        },
        "required": ["variant", "kind", "q_file", "k_file", "v_file"],
        "additionalProperties": False,
    },
    "validate-bounds": {
        "type": "object",
        "properties": {
            "graph": _GRAPH,
            "series": {
                "type": "object",
                "properties": {"alpha": {"type": "array", "items": {"type": "number"}, "minItems": 1}},
                "required": ["alpha"],
                "additionalProperties": False,
            },
            "sampling": _SAMPLING,
            "node_pair": {
                "type": "array",
                "items": {"type": "integer", "minimum": 0},
                "minItems": 2,
                "maxItems": 2,
            },
            "t_grid": {
                "type": "array",
                "items": {"type": "number", "exclusiveMinimum": 0},
                "minItems": 1,
            },
            "trials": {"type": "integer", "minimum": 1},
            "c_scale": {"type": "number", "exclusiveMinimum": 0},
            "sparsity": {
                "type": "object",
                "properties": {
                    "graph": _GRAPH,
                    "n_walks": {"type": "integer", "minimum": 1},
                    "p_halt": _P_HALT,
                    "delta": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                    "trials": {"type": "integer", "minimum": 1},
                    "seed": {"type": "integer"},
                },
                "required": ["delta", "trials"],
                "additionalProperties": False,
            },
        },
        "required": ["graph", "series", "sampling", "node_pair", "t_grid", "trials"],
        "additionalProperties": False,
    },
    "flops": {
        "type": "object",
        "properties": {
            "sizes": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
            "n_walks": {"type": "integer", "minimum": 1},
            "p_halt": _P_HALT,
            "d": {"type": "integer", "minimum": 1},
            "m": {"type": "integer", "minimum": 1},
            "series": _SERIES,
            "seeds": {
                "anyOf": [
                    {"type": "integer", "minimum": 1},
                    {"type": "array", "items": {"type": "integer"}, "minItems": 1},
                ]
            },
        },
        "required": ["sizes", "n_walks", "p_halt", "d", "m", "series", "seeds"],
        "additionalProperties": False,
    },
}


def load_config(path: str | Path, command: str) -> dict[str, Any]:
    """Read and schema-validate the JSON config for one command."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    try:
        jsonschema.validate(doc, SCHEMAS[command])
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"config {path} rejected: {exc.message}") from exc
    return doc


def build_graph_from_config(spec: dict[str, Any]) -> WeightedGraph:
    """Materialise the graph a config's graph block describes."""
    if "grid1d" in spec:
        g = build_grid_1d(spec["grid1d"])
    elif "grid2d" in spec:
        g = build_grid_2d(*spec["grid2d"])
    elif "knn" in spec:
        pts = _read_points(spec["knn"]["points_file"])
        g = build_knn(pts, spec["knn"]["k"])
    else:
        g = read_edge_list(Path(spec["file"]).read_text())
    if spec.get("normalize"):
        g = normalize_degree(g)
    if "scale" in spec:
        g = scale_weights(g, spec["scale"])
    return g


def _read_points(path: str) -> list[list[float]]:
    rows = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line:
            continue
        parts = line.replace(",", " ").split()
        if len(parts) != 3:
            raise ValueError(f"point line must hold 3 coordinates, got {line!r}")
        rows.append([float(x) for x in parts])
    return rows


def resolve_series(spec: dict[str, Any]) -> tuple[CoefficientSeries, CoefficientSeries]:
    """Return (alpha, f) from a series block holding either one.

    Given alpha, f is its deconvolution; given f, alpha is the square of the
    feature series at full length (the kernel those features induce).
    """
    from .series import convolve

    if "alpha" in spec:
        alpha = CoefficientSeries.of(spec["alpha"])
        return alpha, deconvolve(alpha)
    f = CoefficientSeries.of(spec["f"])
    return convolve(f, f, i_max=2 * f.i_max), f
