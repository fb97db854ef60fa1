"""Mean-field games of optimal stopping with common noise.

Solver for two-population entry/exit games over a finite scenario tree: the
best response of each population is a linear program over occupation measures
(with an independent dynamic-programming oracle), and equilibria are
approximated by fictitious play.  Shipped with an electricity-market instance
where conventional producers choose when to exit and renewable producers when
to enter under carbon-price uncertainty.
"""

from .config import RunConfig, config_hash, load_config, setting1, setting2
from .fictitious_play import FPState, average, average_profile, lpfp
from .lp_core import (
    LPProblem,
    MeanFieldProfile,
    OccupationPair,
    RewardTables,
    StoppingRule,
    assemble_constraints,
    best_response_dp,
    best_response_lp,
    constraint_residual,
    evaluate_gamma,
    forward_occupation,
    load_external_solution,
    set_objective,
    write_problem,
)
from .market import (
    DemandModel,
    PricePair,
    SupplySpec,
    clearing_price,
    conventional_supply,
    demand_peak_offpeak,
    gain,
    renewable_supply,
    utilization,
)
from .model import (
    ElectricityModel,
    build_model,
    build_reward_tables,
    exploitability,
)
from .reporting import (
    RunReport,
    deterministic_baseline,
    emit,
    max_path,
    min_path,
    run_experiment,
)
from .scenario_tree import (
    CommonNoiseTree,
    ScenarioSpec,
    TrajectoryNode,
    build_tree,
    carbon_at,
    path_probability,
    posterior,
)
from .state_chains import (
    DiffusionParams,
    GridChain,
    build_chain,
    grid_step,
    initial_distribution,
    marginal_law,
)

__version__ = "0.1.0"
