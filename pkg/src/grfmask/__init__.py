"""Topological masking of linear attention with graph random features.

Exact dense oracles for power-series graph node kernels, importance-sampled
random-walk feature estimators, O(N) masked attention, and executable
validation of the concentration, sparsity and FLOP-scaling guarantees.
"""

from .analysis import (
    BoundReport,
    FlopReport,
    SparsityReport,
    concentration_bound,
    empirical_concentration,
    empirical_sparsity,
    flop_experiment,
    min_walkers,
    sparsity_bound,
)
from .attention import (
    AttentionOutput,
    feature_map,
    linear_attention_unmasked,
    masked_attention_asymmetric,
    masked_linear_attention_dense,
    masked_linear_attention_grf,
)
from .graph import (
    WeightedGraph,
    build_grid_1d,
    build_grid_2d,
    build_knn,
    normalize_degree,
    read_edge_list,
    scale_weights,
    write_edge_list,
)
from .grf import GrfSet, SparseVector, build_adhoc_feature, build_grf, build_grf_set, gram_entry
from .oracle import (
    DegenerateNormalizationError,
    PdCheck,
    check_positive_definite,
    dense_features,
    dense_kernel,
    explicit_masked_attention,
    read_matrix_csv,
    softmax_attention,
    write_matrix_csv,
)
from .series import CoefficientSeries, DeconvolutionError, c_constant, convolve, deconvolve, heat_coefficients
from .walks import Walk, edge_weight_product, prefix_probability, sample_walk, walk_rng

__version__ = "0.1.0"
