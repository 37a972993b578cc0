"""Wardrop equilibria under risk aversion and certified cost-ratio bounds.

The package computes risk-neutral and risk-averse equilibria on
single-commodity networks with stochastic edge latencies, builds the
recursive worst-case instance families that make the known bounds tight,
and checks observed cost ratios against topological and functional
bounds.
"""

from .analysis import (
    AlternatingPath,
    AlternatingPathNotFound,
    BoundKind,
    BoundReport,
    EdgePartition,
    check_bound,
    compute_kappa,
    compute_pra,
    estimate_smoothness_mu,
    find_alternating_path,
    partition_edges,
    smoothness_mu_at_flow,
    verify_structural_properties,
    vertex_bound_gap_below_two,
    vertex_bound_gap_ratio,
)
from .functions import Affine, Constant, LatencyFn, PiecewiseLinear, Polynomial
from .instances import (
    OracleFlows,
    RecursiveFamilySpec,
    Variant,
    build_braess,
    build_domino_with_ears,
    build_recursive,
    closed_form_check,
    recursive_edge_tags,
    reinterpret_as_meanstdev,
)
from .network import (
    Edge,
    GraphStructureError,
    NetworkInstance,
    PathCapExceeded,
    PathFlow,
    RiskModel,
    enumerate_paths,
    induced_edge_flow,
    mean_path_latency,
    path_cost,
    path_variance,
    social_cost,
    with_edge_functions,
    with_gamma,
    with_risk_model,
)
from .solver import (
    EquilibriumResult,
    SolverConfig,
    StepRule,
    beckmann_potential,
    brute_force_equilibrium,
    result_from_paths,
    solve_rawe_meanstdev,
    solve_rawe_meanvar,
    solve_rnwe,
    vi_residual,
)

__version__ = "0.1.0"

__all__ = [
    "Affine",
    "AlternatingPath",
    "AlternatingPathNotFound",
    "BoundKind",
    "BoundReport",
    "Constant",
    "Edge",
    "EdgePartition",
    "EquilibriumResult",
    "GraphStructureError",
    "LatencyFn",
    "NetworkInstance",
    "OracleFlows",
    "PathCapExceeded",
    "PathFlow",
    "PiecewiseLinear",
    "Polynomial",
    "RecursiveFamilySpec",
    "RiskModel",
    "SolverConfig",
    "StepRule",
    "Variant",
    "beckmann_potential",
    "brute_force_equilibrium",
    "build_braess",
    "build_domino_with_ears",
    "build_recursive",
    "check_bound",
    "closed_form_check",
    "compute_kappa",
    "compute_pra",
    "enumerate_paths",
    "estimate_smoothness_mu",
    "find_alternating_path",
    "induced_edge_flow",
    "mean_path_latency",
    "partition_edges",
    "path_cost",
    "path_variance",
    "recursive_edge_tags",
    "reinterpret_as_meanstdev",
    "result_from_paths",
    "smoothness_mu_at_flow",
    "social_cost",
    "solve_rawe_meanstdev",
    "solve_rawe_meanvar",
    "solve_rnwe",
    "verify_structural_properties",
    "vertex_bound_gap_below_two",
    "vertex_bound_gap_ratio",
    "vi_residual",
    "with_edge_functions",
    "with_gamma",
    "with_risk_model",
]
