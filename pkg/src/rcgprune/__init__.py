"""Joint feature and prototype pruning for kNN classification.

The package reduces a labeled tabular dataset along both of its axes:
rows (prototypes kept for a nearest-neighbor classifier) and columns
(features spanning the representation space).  Candidate reductions are
scored by the relative certainty gain (RCG) of a symmetrized kNN graph,
and accepted only when the gain passes a chi-square or epsilon-margin
significance test.
"""

from .data_model import (
    Dataset,
    FeatureKind,
    FeatureMask,
    InstanceMask,
    NoiseSpec,
    KFoldScheme,
    HoldoutScheme,
    DataError,
    DegenerateClassDistribution,
    load_csv,
    save_csv,
    inject_label_noise,
    split,
)
from .metric import DistanceSpec, distance, pairwise_matrix
from .knn_graph import NeighborhoodGraph, build_graph
from .uncertainty import (
    RcgValue,
    SignificanceSpec,
    UncertaintyState,
    chi_square_quantile,
    compute_state,
    quadratic_entropy,
    prior_uncertainty,
    significantly_greater,
    update_state_after_removal,
)
from .reduction import (
    AlgorithmConfig,
    ReductionTrace,
    TraceStep,
    cnn_baseline,
    fsrcg,
    fsps_rcg,
    psrcg,
    rnn_baseline,
    run_reduction,
)
from .evaluation import EvalResult, FoldResult, compare_table, knn_classify, run_experiment

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "FeatureKind",
    "FeatureMask",
    "InstanceMask",
    "NoiseSpec",
    "KFoldScheme",
    "HoldoutScheme",
    "DataError",
    "DegenerateClassDistribution",
    "load_csv",
    "save_csv",
    "inject_label_noise",
    "split",
    "DistanceSpec",
    "distance",
    "pairwise_matrix",
    "NeighborhoodGraph",
    "build_graph",
    "RcgValue",
    "SignificanceSpec",
    "UncertaintyState",
    "chi_square_quantile",
    "compute_state",
    "quadratic_entropy",
    "prior_uncertainty",
    "significantly_greater",
    "update_state_after_removal",
    "AlgorithmConfig",
    "ReductionTrace",
    "TraceStep",
    "cnn_baseline",
    "fsrcg",
    "fsps_rcg",
    "psrcg",
    "rnn_baseline",
    "run_reduction",
    "EvalResult",
    "FoldResult",
    "compare_table",
    "knn_classify",
    "run_experiment",
    "__version__",
]
