"""Local online matching on large bipartite random graphs.

The package simulates greedy and minimal-residual online matching both by
exploring a fixed bipartite graph and by building the graph jointly with
the matching through uniform half-edge pairing (the bipartite configuration
model), and approximates the resulting matching coverage by integrating the
fluid limit of the availability measures.
"""

from .degrees import (
    DegreeSample,
    DistributionSpec,
    GraphicalCheck,
    bipartite_gale_ryser,
    graphical_check,
    sample_conditioned,
)
from .errors import (
    BipmatchError,
    ConditioningFailed,
    DegenerateMeasure,
    EmptyNeighborhood,
    GraphFormatError,
    HalfEdgeImbalance,
    InvalidParameter,
    StepTooLarge,
)
from .graphs import BipartiteMultigraph, pair_uniform
from .harness import (
    ExperimentSpec,
    OdeSimReport,
    Stats,
    StreamingStats,
    make_triangular_graph,
    ode_vs_sim_report,
    run_convergence,
    run_experiment,
    run_sweep,
    run_topology,
    run_topology_comparison,
)
from .hydro import (
    HydroResult,
    HydroState,
    MatchKernel,
    coverage_estimate,
    integrate,
    kernel_pmf,
    rhs,
)
from .matching import (
    CoupledRunResult,
    Criterion,
    ExplorationChain,
    JointChain,
    RunRecord,
    coupled_pair_run,
    explore_match,
    joint_construct,
    select_match,
)
from .measures import PointMeasure

__version__ = "0.1.0"

__all__ = [
    "BipartiteMultigraph",
    "BipmatchError",
    "ConditioningFailed",
    "CoupledRunResult",
    "Criterion",
    "DegenerateMeasure",
    "DegreeSample",
    "DistributionSpec",
    "EmptyNeighborhood",
    "ExperimentSpec",
    "ExplorationChain",
    "GraphFormatError",
    "GraphicalCheck",
    "HalfEdgeImbalance",
    "HydroResult",
    "HydroState",
    "InvalidParameter",
    "JointChain",
    "MatchKernel",
    "OdeSimReport",
    "PointMeasure",
    "RunRecord",
    "Stats",
    "StepTooLarge",
    "StreamingStats",
    "bipartite_gale_ryser",
    "coupled_pair_run",
    "coverage_estimate",
    "explore_match",
    "graphical_check",
    "integrate",
    "joint_construct",
    "kernel_pmf",
    "make_triangular_graph",
    "ode_vs_sim_report",
    "pair_uniform",
    "rhs",
    "run_convergence",
    "run_experiment",
    "run_sweep",
    "run_topology",
    "run_topology_comparison",
    "sample_conditioned",
    "select_match",
]
