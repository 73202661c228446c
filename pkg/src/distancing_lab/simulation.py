"""Protocol-faithful round execution and multi-round session simulation.

A session is 20 baseline rounds plus 20 intervention rounds played by a
fixed group whose positions are reshuffled every round.  All randomness
flows from one seeded generator per session, in a documented draw order,
so a (config, seed) pair reproduces the session log byte for byte.

Per-round draw order: position permutation, then one policy draw per bot
seat in seat order, then the patient-zero node, then either the gamma coin
(distancing patient zero) or one Bernoulli per participating edge in
sorted edge order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from typing import Sequence

import numpy as np

from .contagion import realized_points
from .model import (
    DistancingProfile,
    GameParams,
    Network,
    builtin_network,
    network_from_json,
)
from .policies import AgentPolicy, Observation, policy_decide, policy_from_json
from .session_log import Decision, Part, SessionLog

TIMEOUT_PENALTY = 200.0


@dataclass(frozen=True)
class RoundOutcome:
    """Everything that happened in one round, seat-indexed."""

    round_index: int
    part: Part
    positions: tuple[int, ...]  # seat -> node
    decisions: tuple[Decision, ...]
    patient_zero: int  # seat
    coin: bool | None  # present iff the patient zero distanced
    infected: frozenset[int]  # seats
    points: tuple[float, ...]


def assign_positions(rng, participants: Sequence, net: Network) -> tuple[int, ...]:
    """Uniform random bijection from participants (seats) to nodes."""
    if len(participants) != net.node_count:
        raise ValueError(
            f"{len(participants)} participants for {net.node_count} nodes"
        )
    return tuple(int(v) for v in rng.permutation(net.node_count))


def decision_points(decision: Decision, infected: bool, params: GameParams) -> float:
    """Score-table entry: a timeout scores as No plus the 200-point penalty."""
    points = realized_points(decision.distanced, infected, params)
    if decision is Decision.TIMEOUT:
        points -= TIMEOUT_PENALTY
    return points


def score_round(outcome: RoundOutcome, params: GameParams) -> tuple[float, ...]:
    return tuple(
        decision_points(outcome.decisions[seat], seat in outcome.infected, params)
        for seat in range(len(outcome.decisions))
    )


def _spread(net: Network, open_nodes: frozenset[int], start: int, rng, alpha: float):
    """Open participating edges in sorted order, return reached node set."""
    edges = [
        (u, v) for u, v in net.edge_list if u in open_nodes and v in open_nodes
    ]
    open_edges = [e for e in edges if rng.random() < alpha]
    seen = {start}
    frontier = [start]
    while frontier:
        nxt = []
        for u in frontier:
            for a, b in open_edges:
                other = b if a == u else (a if b == u else None)
                if other is not None and other not in seen:
                    seen.add(other)
                    nxt.append(other)
        frontier = nxt
    return seen


def sample_round(
    rng,
    net: Network,
    decisions: Sequence[Decision],
    params: GameParams,
    round_index: int = 1,
    part: Part = Part.BASELINE,
    positions: Sequence[int] | None = None,
) -> RoundOutcome:
    """Draw one round: patient zero, coin or edge openings, spread, scores.

    ``decisions`` is seat-indexed; ``positions`` maps seats to nodes and
    defaults to the identity.  A timeout counts as No for contagion.
    """
    if len(decisions) != net.node_count:
        raise ValueError("need one decision per seat")
    if positions is None:
        positions = tuple(range(net.node_count))
    else:
        positions = tuple(positions)
        if sorted(positions) != list(range(net.node_count)):
            raise ValueError("positions must be a bijection onto nodes")
    node_to_seat = {node: seat for seat, node in enumerate(positions)}
    distancing_nodes = {
        positions[seat] for seat, d in enumerate(decisions) if d.distanced
    }

    zero_node = int(rng.integers(net.node_count))
    coin: bool | None = None
    if zero_node in distancing_nodes:
        coin = bool(rng.random() < params.gamma)
        infected_nodes = {zero_node} if coin else set()
    else:
        open_nodes = frozenset(range(net.node_count)) - frozenset(distancing_nodes)
        infected_nodes = _spread(net, open_nodes, zero_node, rng, params.alpha)

    infected_seats = frozenset(node_to_seat[v] for v in infected_nodes)
    decisions = tuple(decisions)
    points = tuple(
        decision_points(decisions[seat], seat in infected_seats, params)
        for seat in range(net.node_count)
    )
    return RoundOutcome(
        round_index=round_index,
        part=part,
        positions=positions,
        decisions=decisions,
        patient_zero=node_to_seat[zero_node],
        coin=coin,
        infected=infected_seats,
        points=points,
    )


def simulate_infection_frequencies(
    rng,
    net: Network,
    profile: DistancingProfile,
    params: GameParams,
    rounds: int,
) -> np.ndarray:
    """Per-node infection frequencies over many sampled rounds.

    Vectorized but distribution-identical to the contagion step of
    :func:`sample_round`: uniform patient zero, gamma coin for distancing
    patient zeros, independent alpha-openings among non-distancing nodes.
    Reachability is precomputed per edge subset with a plain BFS.
    """
    n = net.node_count
    open_nodes = frozenset(v for v in range(n) if not profile[v])
    edges = [
        (u, v) for u, v in net.edge_list if u in open_nodes and v in open_nodes
    ]
    m = len(edges)
    if m > 22:
        raise ValueError("too many participating edges for the mask table")

    adjacency: dict[int, list[tuple[int, int]]] = {v: [] for v in range(n)}
    for idx, (u, v) in enumerate(edges):
        adjacency[u].append((v, idx))
        adjacency[v].append((u, idx))

    def reach_bits(mask: int, start: int) -> int:
        seen = 1 << start
        stack = [start]
        while stack:
            u = stack.pop()
            for other, idx in adjacency[u]:
                if mask >> idx & 1 and not seen >> other & 1:
                    seen |= 1 << other
                    stack.append(other)
        return seen

    reach = {
        (mask, z): reach_bits(mask, z)
        for mask in range(1 << m)
        for z in open_nodes
    }

    zeros = rng.integers(0, n, size=rounds)
    coins = rng.random(rounds) < params.gamma
    if m:
        bits = rng.random((rounds, m)) < params.alpha
        masks = bits @ (1 << np.arange(m))
    else:
        masks = np.zeros(rounds, dtype=int)

    counts = np.zeros(n, dtype=np.int64)
    distancing = np.array([profile[v] for v in range(n)])
    zero_is_distancing = distancing[zeros]
    # distancing patient zeros: infected alone iff the coin lands heads
    hit = zeros[zero_is_distancing & coins]
    np.add.at(counts, hit, 1)
    # non-distancing patient zeros: everyone in their percolation component
    spread_zeros = zeros[~zero_is_distancing]
    spread_masks = masks[~zero_is_distancing]
    combo = spread_masks * n + spread_zeros
    combo_counts = np.bincount(combo, minlength=(1 << m) * n)
    for key, hits in enumerate(combo_counts):
        if hits:
            bitset = reach[(key // n, key % n)]
            for v in range(n):
                if bitset >> v & 1:
                    counts[v] += hits
    return counts / rounds


@dataclass(frozen=True)
class SessionConfig:
    """Scenario definition for one session."""

    network_name: str = "star"
    alpha: float = 0.65
    intervention: str = "fine"  # "fine" or "nudge"
    b: float = 100.0
    c: float = 35.0
    gamma: float = 0.5
    fine: float = 15.0
    rounds_per_part: int = 20
    conversion: float = 115.0  # points per dollar
    participation_fee: float = 1.0
    payment_rounds: int = 4
    history_window: int = 5
    decision_seconds: float = 20.0
    review_seconds: float = 15.0
    instructions_seconds: float = 0.0  # lobby-to-round pause on the server
    briefing_seconds: float = 15.0  # intervention briefing duration
    network_json: dict | None = None  # overrides network_name when set

    def __post_init__(self) -> None:
        if self.intervention not in ("fine", "nudge"):
            raise ValueError("intervention must be 'fine' or 'nudge'")
        if not (0 <= self.alpha <= 1):
            raise ValueError("alpha must be in [0, 1]")
        if self.rounds_per_part < 1:
            raise ValueError("rounds_per_part must be >= 1")
        if self.payment_rounds < 1 or self.payment_rounds > self.rounds_per_part:
            raise ValueError("payment_rounds must be in [1, rounds_per_part]")
        if self.conversion <= 0:
            raise ValueError("conversion must be positive")
        self.network()  # validates the topology
        self.params_for(Part.INTERVENTION)  # validates payoff parameters

    def network(self) -> Network:
        if self.network_json is not None:
            return network_from_json(self.network_json)
        return builtin_network(self.network_name)

    def params_for(self, part: Part) -> GameParams:
        fine = (
            self.fine
            if part is Part.INTERVENTION and self.intervention == "fine"
            else 0.0
        )
        return GameParams(
            b=self.b, c=self.c, gamma=self.gamma, alpha=self.alpha, fine=fine
        )

    @property
    def total_rounds(self) -> int:
        return 2 * self.rounds_per_part

    def part_of_round(self, round_index: int) -> Part:
        return (
            Part.BASELINE
            if round_index <= self.rounds_per_part
            else Part.INTERVENTION
        )

    def to_json_dict(self) -> dict:
        doc = {
            "network_name": self.network_name,
            "network": self.network().to_json_dict(),
            "alpha": self.alpha,
            "intervention": self.intervention,
            "b": self.b,
            "c": self.c,
            "gamma": self.gamma,
            "fine": self.fine,
            "rounds_per_part": self.rounds_per_part,
            "conversion": self.conversion,
            "participation_fee": self.participation_fee,
            "payment_rounds": self.payment_rounds,
            "history_window": self.history_window,
            "decision_seconds": self.decision_seconds,
            "review_seconds": self.review_seconds,
            "instructions_seconds": self.instructions_seconds,
            "briefing_seconds": self.briefing_seconds,
        }
        return doc


def config_from_json(doc: dict) -> SessionConfig:
    defaults = SessionConfig()
    network_name = doc.get("network_name", defaults.network_name)
    network_json = doc.get("network")
    if network_json is not None:
        try:
            if network_from_json(network_json) == builtin_network(network_name):
                network_json = None  # redundant copy of the builtin topology
        except ValueError:
            pass
    return SessionConfig(
        network_name=network_name,
        alpha=float(doc.get("alpha", defaults.alpha)),
        intervention=doc.get("intervention", defaults.intervention),
        b=float(doc.get("b", defaults.b)),
        c=float(doc.get("c", defaults.c)),
        gamma=float(doc.get("gamma", defaults.gamma)),
        fine=float(doc.get("fine", defaults.fine)),
        rounds_per_part=int(doc.get("rounds_per_part", defaults.rounds_per_part)),
        conversion=float(doc.get("conversion", defaults.conversion)),
        participation_fee=float(
            doc.get("participation_fee", defaults.participation_fee)
        ),
        payment_rounds=int(doc.get("payment_rounds", defaults.payment_rounds)),
        history_window=int(doc.get("history_window", defaults.history_window)),
        decision_seconds=float(
            doc.get("decision_seconds", defaults.decision_seconds)
        ),
        review_seconds=float(doc.get("review_seconds", defaults.review_seconds)),
        instructions_seconds=float(
            doc.get("instructions_seconds", defaults.instructions_seconds)
        ),
        briefing_seconds=float(
            doc.get("briefing_seconds", defaults.briefing_seconds)
        ),
        network_json=network_json,
    )


def cents(amount: float) -> float:
    """Round to whole cents, ties away from zero (260/115 -> 2.26)."""
    return float(Decimal(repr(amount)).quantize(Decimal("0.01"), ROUND_HALF_UP))


@dataclass(frozen=True)
class PaymentBreakdown:
    seat: int
    disqualified: bool
    fee: float
    part_rounds: tuple[tuple[int, ...], ...]  # drawn rounds (1-based in part)
    part_points: tuple[float, ...]
    part_bonus: tuple[float, ...]
    total: float

    def to_json_dict(self) -> dict:
        return {
            "seat": self.seat,
            "disqualified": self.disqualified,
            "fee": self.fee,
            "part_rounds": [list(r) for r in self.part_rounds],
            "part_points": list(self.part_points),
            "part_bonus": list(self.part_bonus),
            "total": self.total,
        }


def compute_payment(
    log: SessionLog,
    rng,
    conversion: float | None = None,
    fee: float | None = None,
) -> list[PaymentBreakdown]:
    """Dollar earnings per seat from a completed session log.

    Per part, ``payment_rounds`` rounds are drawn uniformly without
    replacement (seat-major, baseline first); each part's bonus is the
    drawn points divided by the conversion rate, rounded to cents and
    clamped below at $0.00.  Disqualified seats earn $0 total.
    """
    config = log.config
    if len(log.round_records()) != 2 * config["rounds_per_part"]:
        raise ValueError("payment requires a completed session log")
    conversion = config["conversion"] if conversion is None else conversion
    fee = config["participation_fee"] if fee is None else fee
    rounds_per_part = config["rounds_per_part"]
    draw_count = config.get("payment_rounds", 4)
    points = log.points_by_seat_and_part()
    disqualified = log.disqualified_seats()
    out = []
    for seat in range(log.seat_count):
        part_rounds = []
        part_points = []
        part_bonus = []
        for part in (Part.BASELINE, Part.INTERVENTION):
            drawn = sorted(
                int(r) + 1
                for r in rng.choice(rounds_per_part, size=draw_count, replace=False)
            )
            series = points.get((seat, part), [])
            if len(series) != rounds_per_part:
                raise ValueError(
                    f"seat {seat} has {len(series)} {part.value} rounds, "
                    f"expected {rounds_per_part}"
                )
            total_points = sum(series[r - 1] for r in drawn)
            part_rounds.append(tuple(drawn))
            part_points.append(total_points)
            part_bonus.append(max(0.0, cents(total_points / conversion)))
        dq = seat in disqualified
        total = 0.0 if dq else cents(fee + sum(part_bonus))
        out.append(
            PaymentBreakdown(
                seat=seat,
                disqualified=dq,
                fee=fee,
                part_rounds=tuple(part_rounds),
                part_points=tuple(part_points),
                part_bonus=tuple(part_bonus),
                total=total,
            )
        )
    return out


@dataclass
class _SeatState:
    policy: AgentPolicy
    history: list[tuple[Decision, bool, float]] = field(default_factory=list)


def run_session_sim(
    config: SessionConfig,
    policies: Sequence[AgentPolicy],
    seed: int,
    session_id: str | None = None,
) -> SessionLog:
    """Simulate a full session of bot participants; deterministic in seed."""
    net = config.network()
    if len(policies) != net.node_count:
        raise ValueError(
            f"need {net.node_count} policies, got {len(policies)}"
        )
    rng = np.random.default_rng(seed)
    log = SessionLog()
    log.append(
        {
            "event": "header",
            "schema": 1,
            "session_id": session_id or f"sim-{seed}",
            "seed": seed,
            "config": config.to_json_dict(),
        }
    )
    seats = [_SeatState(policy) for policy in policies]
    for seat, state in enumerate(seats):
        log.append(
            {
                "event": "join",
                "seat": seat,
                "name": f"bot-{seat}",
                "kind": "bot",
                "policy": state.policy.to_json_dict(),
            }
        )

    for round_index in range(1, config.total_rounds + 1):
        part = config.part_of_round(round_index)
        params = config.params_for(part)
        if part is Part.INTERVENTION and (
            round_index == config.rounds_per_part + 1
        ):
            log.append(
                {
                    "event": "intervention",
                    "kind": config.intervention,
                    "round": round_index,
                }
            )
        positions = assign_positions(rng, range(net.node_count), net)
        log.append(
            {
                "event": "round_start",
                "round": round_index,
                "part": part.value,
                "positions": list(positions),
            }
        )
        decisions = []
        for seat, state in enumerate(seats):
            observation = Observation(
                net=net,
                params=params,
                part=part,
                position=positions[seat],
                round_in_part=(round_index - 1) % config.rounds_per_part + 1,
                history=tuple(state.history[-config.history_window :]),
            )
            choice = (
                Decision.YES
                if policy_decide(state.policy, observation, rng)
                else Decision.NO
            )
            decisions.append(choice)
            log.append(
                {
                    "event": "decision",
                    "round": round_index,
                    "seat": seat,
                    "choice": choice.value,
                    "source": "policy",
                }
            )
        outcome = sample_round(
            rng,
            net,
            decisions,
            params,
            round_index=round_index,
            part=part,
            positions=positions,
        )
        log.append(
            {
                "event": "round_outcome",
                "round": round_index,
                "part": part.value,
                "patient_zero": outcome.patient_zero,
                "coin": outcome.coin,
                "infected": sorted(outcome.infected),
                "points": list(outcome.points),
            }
        )
        for seat, state in enumerate(seats):
            state.history.append(
                (
                    decisions[seat],
                    seat in outcome.infected,
                    outcome.points[seat],
                )
            )

    payments = compute_payment(log, rng)
    log.append(
        {"event": "payment", "seats": [p.to_json_dict() for p in payments]}
    )
    log.append({"event": "end"})
    return log


def replay_session(log: SessionLog) -> SessionLog:
    """Re-run a simulated session from its header; must match bit-exactly."""
    config = config_from_json(log.config)
    policies = [policy_from_json(e["policy"]) for e in log.roster()]
    rebuilt = run_session_sim(
        config, policies, log.seed, session_id=log.session_id
    )
    if rebuilt.to_jsonl() != log.to_jsonl():
        raise ValueError("replay diverged from the recorded log")
    return rebuilt
