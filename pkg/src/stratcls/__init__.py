"""Strategic responses of agents to classifiers over causal feature graphs."""
from .agent import CostModel, EffortProfile, Scenario, beta_of, cost, is_beta_desirable
from .complete_info import best_response, check_l1_desirability, check_lp_desirability
from .errors import Infeasible, StratClsError
from .graph import CausalGraph, Edge, Feature, contribution_matrix, delta_x, path_oracle
from .incomplete_info import (
    ContributionBelief,
    GaussianPrior,
    belief_model1,
    belief_model2_linear,
    best_response_chance_l1,
    best_response_chance_l2,
    chance_margin,
    feasibility,
    feasibility_psd,
)

__version__ = "0.1.0"

__all__ = [
    "CausalGraph", "ContributionBelief", "CostModel", "Edge", "EffortProfile", "Feature",
    "GaussianPrior", "Infeasible", "Scenario", "StratClsError", "belief_model1",
    "belief_model2_linear", "best_response", "best_response_chance_l1", "best_response_chance_l2",
    "beta_of", "chance_margin", "check_l1_desirability", "check_lp_desirability",
    "contribution_matrix", "cost", "delta_x", "feasibility", "feasibility_psd",
    "is_beta_desirable", "path_oracle",
]
