"""Two-sample testing on metric measure spaces via medoid distance rows."""

__version__ = "0.1.0"

from .metric_core import (
    BallProcessPath,
    DistanceMatrix,
    empirical_ball_process,
    line_distances,
    medoid_index,
    moment_diagnostic,
    pairwise_distances,
    row_distances,
)
from .tree_space import (
    GeodesicResult,
    PhyloTree,
    bhv_distance,
    gtp_geodesic,
    parse_newick,
    permute_leaves,
    random_tree,
    write_newick,
)
from .gauss_space import GaussianParam, hellinger_distance, reciprocal_isometry
from .two_sample import (
    TestResult,
    energy_permutation_test,
    energy_statistic,
    ks_critical,
    ks_row_test,
    ks_statistic,
    split_half_self_test,
)
from .sim_harness import PowerStudyConfig, PowerTable, run_power_study, run_tree_power_study

__all__ = [name for name in dir() if not name.startswith("_")]
