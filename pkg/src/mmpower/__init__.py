"""Globally optimal power allocation for Gaussian interference networks.

Strategies: throughput maximization, global-energy-efficiency maximization,
and power-minimal allocation at near-maximal throughput, all solved to
certified global optimality via mixed-monotonic branch-and-bound and a
successive-incumbent-transcending scheme.
"""

from .boxes import (
    Box,
    DegenerateBoxError,
    MMPair,
    NumericalDomainError,
    bisect,
    lower_bound_min,
    mm_contract_violations,
    upper_bound_max,
)
from .bb_max import SolverConfig, Solution, Status, maximize
from .harness import (
    InstanceMetrics,
    SweepConfig,
    SweepRecord,
    brute_force_grid,
    dbm_to_watt,
    parse_sweep_config,
    run_sweep,
    solve_instance,
    solve_strategies,
)
from .network import (
    BuiltProblem,
    InterferenceNetwork,
    PowerModel,
    ProblemKind,
    ProblemSpec,
    build_problem,
    gee,
    gee_mm,
    load_network,
    loads_network,
    merged_constraint_mm,
    qos_constraint_mm,
    rate,
    rate_mm,
    save_network,
    dumps_network,
    sinr,
    sum_rate,
    sum_rate_mm,
)
from .scenario import (
    Deployment,
    GenerationError,
    ScenarioParams,
    generate,
    noise_power_w,
    pathloss_db,
    rng_for,
)
from .sit_min import SitConfig, minimize_sit, reduce_box_powersum

__all__ = [
    "Box",
    "BuiltProblem",
    "DegenerateBoxError",
    "Deployment",
    "GenerationError",
    "InstanceMetrics",
    "InterferenceNetwork",
    "MMPair",
    "NumericalDomainError",
    "PowerModel",
    "ProblemKind",
    "ProblemSpec",
    "ScenarioParams",
    "SitConfig",
    "Solution",
    "SolverConfig",
    "Status",
    "SweepConfig",
    "SweepRecord",
    "bisect",
    "brute_force_grid",
    "build_problem",
    "dbm_to_watt",
    "dumps_network",
    "gee",
    "gee_mm",
    "generate",
    "load_network",
    "loads_network",
    "lower_bound_min",
    "maximize",
    "merged_constraint_mm",
    "minimize_sit",
    "mm_contract_violations",
    "noise_power_w",
    "parse_sweep_config",
    "pathloss_db",
    "qos_constraint_mm",
    "rate",
    "rate_mm",
    "reduce_box_powersum",
    "rng_for",
    "run_sweep",
    "save_network",
    "sinr",
    "solve_instance",
    "solve_strategies",
    "sum_rate",
    "sum_rate_mm",
    "upper_bound_max",
]
