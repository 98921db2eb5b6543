"""Time-varying K-means clustering of longitudinal panels with VAR(P) centroids."""

__version__ = "0.1.0"

from .data_io import load_panel, minmax_normalize, write_panel
from .diagnostics import (
    TransitionMatrix,
    membership_shares,
    switch_counts,
    transition_matrix,
    unit_trajectory,
)
from .errors import CarClustError
from .estimator import (
    FitConfig,
    FitResult,
    InitStrategy,
    fit,
    fit_multistart,
    objective,
    update_centroids,
    update_coefficients,
    update_partition,
)
from .panel import (
    CentroidSequence,
    LongitudinalPanel,
    PartitionSequence,
    VarCoefficients,
    cluster_sizes,
    empirical_centroids,
)
from .report import build_report, read_report, write_report
from .selection import CHReport, between_scatter, ch_index, select_g, within_scatter
from .synthetic import SyntheticSpec, generate_panel, separated_spec

__all__ = [
    "CHReport",
    "CarClustError",
    "CentroidSequence",
    "FitConfig",
    "FitResult",
    "InitStrategy",
    "LongitudinalPanel",
    "PartitionSequence",
    "SyntheticSpec",
    "TransitionMatrix",
    "VarCoefficients",
    "between_scatter",
    "build_report",
    "ch_index",
    "cluster_sizes",
    "empirical_centroids",
    "fit",
    "fit_multistart",
    "generate_panel",
    "load_panel",
    "membership_shares",
    "minmax_normalize",
    "objective",
    "read_report",
    "select_g",
    "separated_spec",
    "switch_counts",
    "transition_matrix",
    "unit_trajectory",
    "update_centroids",
    "update_coefficients",
    "update_partition",
    "within_scatter",
    "write_panel",
    "write_report",
]
