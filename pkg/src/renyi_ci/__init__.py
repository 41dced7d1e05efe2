"""Bounds on the Renyi common information of finite-alphabet sources."""

from renyi_ci.prob_core import (
    Channel,
    Dist,
    JointDist,
    conditional_entropy,
    entropy,
    joint_entropy,
    one_shot_converse_gap,
    renyi_divergence,
    variational_renyi,
)
from renyi_ci.config import SolverConfig
from renyi_ci.coupling import (
    CouplingProblem,
    CouplingSolution,
    independent_coupling,
    mixed_cross_entropy_max,
    oracle_2x2_max,
    support_feasible,
    transport_lp_min,
)
from renyi_ci.bounds import (
    BoundResult,
    Decomposition,
    check_condition_star,
    gamma_lb_objective,
    gamma_ub_objective,
    induced_joint,
    optimize_bound,
    sweep_s,
    wyner_objective,
)
from renyi_ci import dsbs

__version__ = "0.1.0"

__all__ = [
    "BoundResult",
    "Channel",
    "CouplingProblem",
    "CouplingSolution",
    "Decomposition",
    "Dist",
    "JointDist",
    "SolverConfig",
    "check_condition_star",
    "conditional_entropy",
    "dsbs",
    "entropy",
    "gamma_lb_objective",
    "gamma_ub_objective",
    "independent_coupling",
    "induced_joint",
    "joint_entropy",
    "mixed_cross_entropy_max",
    "one_shot_converse_gap",
    "optimize_bound",
    "oracle_2x2_max",
    "renyi_divergence",
    "support_feasible",
    "sweep_s",
    "transport_lp_min",
    "variational_renyi",
    "wyner_objective",
]
