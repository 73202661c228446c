"""Laboratory for the networked social-distancing game.

Exact contagion probabilities and equilibrium analysis on small graphs,
protocol-faithful session simulation with bot agents, the statistical
post-analysis toolkit, and a live multiplayer websocket service.
"""

from .contagion import (
    OutcomeDistribution,
    expected_payoff,
    expected_payoffs,
    infection_probabilities,
    infection_probability,
    outcome_distribution,
    two_terminal_reliability,
    welfare,
)
from .equilibrium import (
    EquilibriumReport,
    RegionTable,
    best_response,
    enumerate_efficient,
    enumerate_equilibria,
    solve,
    sweep_alpha,
)
from .model import (
    DistancingProfile,
    GameParams,
    Network,
    NodeRole,
    builtin_network,
    network_from_json,
    node_roles,
    params_from_json,
)
from .policies import (
    AgentPolicy,
    Observation,
    always_distance,
    logit_response,
    never_distance,
    policy_decide,
    static_equilibrium,
)
from .session_log import Decision, Part, SessionLog
from .simulation import (
    RoundOutcome,
    SessionConfig,
    assign_positions,
    compute_payment,
    run_session_sim,
    sample_round,
    score_round,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
