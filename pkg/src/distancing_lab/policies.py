"""Bot decision policies for simulated participants.

Four kinds: the two constants, a fixed-equilibrium player, and a logit
(quantal) responder with risk adjustment, altruism weighting, and a static
belief about how likely each other agent is to distance.

The logit responder scores each action by an exact expectation over the
2^(n-1) opponent profiles drawn from the belief.  Own utility is the
certainty equivalent of the round lottery under power utility
u(x) = (x + shift)^r (shift makes every outcome nonnegative), mapped back
to points, so risk attitudes change preferences without rescaling the
logit temperature; r = 1 recovers plain expected points.  Other agents'
utilities enter as expected points.  Action utilities mix the two with
weight w: U = (1 - w) * own + w * mean(others), and the distancing
probability is sigmoid(precision * (U_yes - U_no)); precision 0 means a
fair coin.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

from .contagion import infection_probabilities, realized_points
from .equilibrium import enumerate_equilibria
from .model import DistancingProfile, GameParams, Network
from .session_log import Decision, Part

POLICY_KINDS = (
    "always_distance",
    "never_distance",
    "static_equilibrium",
    "logit_response",
)


@dataclass(frozen=True)
class AgentPolicy:
    kind: str
    precision: float = 1.0  # logit precision (0 = uniform coin)
    risk_exponent: float = 1.0  # power-utility exponent, in (0, 1.5]
    altruism: float = 0.0  # weight on other agents' expected points
    belief: float = 0.0  # believed distancing rate of each other agent
    equilibrium_index: int = 0  # which equilibrium a static player uses

    def __post_init__(self) -> None:
        if self.kind not in POLICY_KINDS:
            raise ValueError(f"unknown policy kind {self.kind!r}")
        if self.precision < 0:
            raise ValueError("precision must be >= 0")
        if not (0 < self.risk_exponent <= 1.5):
            raise ValueError("risk_exponent must be in (0, 1.5]")
        if not (0 <= self.altruism <= 1):
            raise ValueError("altruism must be in [0, 1]")
        if not (0 <= self.belief <= 1):
            raise ValueError("belief must be in [0, 1]")
        if self.equilibrium_index < 0:
            raise ValueError("equilibrium_index must be >= 0")

    def to_json_dict(self) -> dict:
        doc: dict = {"kind": self.kind}
        if self.kind == "logit_response":
            doc.update(
                precision=self.precision,
                risk_exponent=self.risk_exponent,
                altruism=self.altruism,
                belief=self.belief,
            )
        if self.kind == "static_equilibrium":
            doc["equilibrium_index"] = self.equilibrium_index
        return doc


def policy_from_json(doc: dict) -> AgentPolicy:
    return AgentPolicy(
        kind=doc["kind"],
        precision=float(doc.get("precision", 1.0)),
        risk_exponent=float(doc.get("risk_exponent", 1.0)),
        altruism=float(doc.get("altruism", 0.0)),
        belief=float(doc.get("belief", 0.0)),
        equilibrium_index=int(doc.get("equilibrium_index", 0)),
    )


def always_distance() -> AgentPolicy:
    return AgentPolicy("always_distance")


def never_distance() -> AgentPolicy:
    return AgentPolicy("never_distance")


def static_equilibrium(index: int = 0) -> AgentPolicy:
    return AgentPolicy("static_equilibrium", equilibrium_index=index)


def logit_response(
    precision: float,
    risk_exponent: float = 1.0,
    altruism: float = 0.0,
    belief: float = 0.0,
) -> AgentPolicy:
    return AgentPolicy(
        "logit_response",
        precision=precision,
        risk_exponent=risk_exponent,
        altruism=altruism,
        belief=belief,
    )


@dataclass(frozen=True)
class Observation:
    """What one participant can see when deciding.

    Holds only her own position and history; other agents' decisions and
    outcomes are never observable.
    """

    net: Network
    params: GameParams
    part: Part
    position: int
    round_in_part: int
    history: tuple[tuple[Decision, bool, float], ...] = ()


@lru_cache(maxsize=256)
def selected_equilibrium(
    net: Network, params: GameParams, index: int = 0
) -> DistancingProfile:
    """Equilibrium a static player commits to (lexicographically ordered)."""
    equilibria = enumerate_equilibria(net, params)
    if not equilibria:
        raise ValueError("no pure-strategy equilibrium to select")
    if index >= len(equilibria):
        raise ValueError(
            f"equilibrium index {index} out of range ({len(equilibria)} found)"
        )
    return equilibria[index]


def _sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


@lru_cache(maxsize=4096)
def _action_utility(
    net: Network,
    params: GameParams,
    i: int,
    distance: bool,
    risk_exponent: float,
    altruism: float,
    belief: float,
) -> float:
    n = net.node_count
    others = [v for v in range(n) if v != i]
    shift = max(params.c, params.fine)
    healthy = realized_points(distance, False, params) + shift
    sick = realized_points(distance, True, params) + shift
    total = 0.0
    for combo in itertools.product((False, True), repeat=n - 1):
        weight = 1.0
        for chosen in combo:
            weight *= belief if chosen else 1.0 - belief
        if weight == 0.0:
            continue
        bits = [False] * n
        bits[i] = distance
        for v, chosen in zip(others, combo):
            bits[v] = chosen
        probs = infection_probabilities(
            net, DistancingProfile(tuple(bits)), params
        )
        eu = (1.0 - probs[i]) * healthy**risk_exponent + probs[
            i
        ] * sick**risk_exponent
        own = eu ** (1.0 / risk_exponent) - shift  # certainty equivalent
        others_points = [
            (1.0 - probs[v]) * params.b
            - (params.c if bits[v] else params.fine)
            for v in others
        ]
        blended = (1.0 - altruism) * own + altruism * (
            sum(others_points) / len(others_points) if others_points else 0.0
        )
        total += weight * blended
    return total


def logit_distance_probability(
    policy: AgentPolicy, net: Network, params: GameParams, position: int
) -> float:
    u_yes = _action_utility(
        net,
        params,
        position,
        True,
        policy.risk_exponent,
        policy.altruism,
        policy.belief,
    )
    u_no = _action_utility(
        net,
        params,
        position,
        False,
        policy.risk_exponent,
        policy.altruism,
        policy.belief,
    )
    return _sigmoid(policy.precision * (u_yes - u_no))


def policy_decide(policy: AgentPolicy, observation: Observation, rng) -> bool:
    """True when the policy distances this round."""
    if policy.kind == "always_distance":
        return True
    if policy.kind == "never_distance":
        return False
    if policy.kind == "static_equilibrium":
        profile = selected_equilibrium(
            observation.net, observation.params, policy.equilibrium_index
        )
        return profile[observation.position]
    if policy.kind == "logit_response":
        p = logit_distance_probability(
            policy, observation.net, observation.params, observation.position
        )
        return bool(rng.random() < p)
    raise ValueError(f"unknown policy kind {policy.kind!r}")
