"""Exact contagion probabilities, outcome distributions, payoffs, welfare.

The contagion process: one patient zero is drawn uniformly from the n
nodes.  A distancing patient zero is infected with probability gamma and
never transmits.  A non-distancing patient zero is infected for sure and
the infection spreads over the subgraph induced by non-distancing nodes,
each edge independently open with probability alpha.

Everything here is computed exactly by enumerating the open-edge subsets
of the participating subgraph (at most ``2**MAX_PARTICIPATING_EDGES``
terms).  Probabilities are double precision; documented tolerance 1e-12.
All functions are pure over immutable inputs.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from .model import DistancingProfile, GameParams, Network, check_profile

# Refuse exhaustive enumeration beyond this many participating edges.
MAX_PARTICIPATING_EDGES = 20

# Cache subset sweeps only while the table stays small.
_CACHE_EDGE_LIMIT = 14


def _participating_edges(
    net: Network, open_nodes: frozenset[int]
) -> tuple[tuple[int, int], ...]:
    return tuple(
        (u, v) for u, v in net.edge_list if u in open_nodes and v in open_nodes
    )


def _check_edge_budget(edges: tuple[tuple[int, int], ...]) -> None:
    if len(edges) > MAX_PARTICIPATING_EDGES:
        raise ValueError(
            f"{len(edges)} participating edges exceeds the exact-enumeration "
            f"limit of {MAX_PARTICIPATING_EDGES}"
        )


def _reach_for_mask(
    n: int, edges: tuple[tuple[int, int], ...], mask: int
) -> tuple[int, ...]:
    """Component bitmask of every node when `mask` selects the open edges."""
    parent = list(range(n))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for idx, (u, v) in enumerate(edges):
        if mask >> idx & 1:
            ru, rv = find(u), find(v)
            if ru != rv:
                parent[ru] = rv
    comp_bits: dict[int, int] = {}
    for v in range(n):
        comp_bits.setdefault(find(v), 0)
        comp_bits[find(v)] |= 1 << v
    return tuple(comp_bits[find(v)] for v in range(n))


def _sweep(
    n: int, edges: tuple[tuple[int, int], ...]
) -> list[tuple[int, tuple[int, ...]]]:
    """(#open edges, reach bitmask per node) for every open-edge subset."""
    return [
        (bin(mask).count("1"), _reach_for_mask(n, edges, mask))
        for mask in range(1 << len(edges))
    ]


@lru_cache(maxsize=256)
def _sweep_cached(n: int, edges: tuple[tuple[int, int], ...]):
    return _sweep(n, edges)


def _subset_sweep(n: int, edges: tuple[tuple[int, int], ...]):
    if len(edges) <= _CACHE_EDGE_LIMIT:
        return _sweep_cached(n, edges)
    return _sweep(n, edges)


def _mask_weights(m: int, alpha: float) -> list[float]:
    """Probability weight alpha^k (1-alpha)^(m-k) indexed by open count k."""
    return [alpha**k * (1.0 - alpha) ** (m - k) for k in range(m + 1)]


def two_terminal_reliability(
    net: Network,
    open_nodes: frozenset[int] | set[int],
    source: int,
    target: int,
    alpha: float,
) -> float:
    """P[target reachable from source] under independent alpha-open edges.

    Only edges with both endpoints in ``open_nodes`` participate.  Exact:
    sums over all open-edge subsets.
    """
    open_nodes = frozenset(open_nodes)
    if source not in open_nodes:
        raise ValueError(f"source {source} not in open_nodes")
    if target not in open_nodes:
        raise ValueError(f"target {target} not in open_nodes")
    if not (0 <= alpha <= 1):
        raise ValueError("alpha must be in [0, 1]")
    if source == target:
        return 1.0
    edges = _participating_edges(net, open_nodes)
    _check_edge_budget(edges)
    weights = _mask_weights(len(edges), alpha)
    total = 0.0
    for count, reach in _subset_sweep(net.node_count, edges):
        if reach[source] >> target & 1:
            total += weights[count]
    return total


def infection_probabilities(
    net: Network, profile: DistancingProfile, params: GameParams
) -> tuple[float, ...]:
    """Probability that each node ends the round infected.

    A distancing node is infected only as patient zero, with probability
    gamma/n regardless of topology or the rest of the profile.
    """
    check_profile(net, profile)
    n = net.node_count
    open_nodes = frozenset(v for v in range(n) if not profile[v])
    edges = _participating_edges(net, open_nodes)
    _check_edge_budget(edges)
    probs = [params.gamma / n if profile[v] else 0.0 for v in range(n)]
    if open_nodes:
        weights = _mask_weights(len(edges), params.alpha)
        acc = [0.0] * n
        for count, reach in _subset_sweep(n, edges):
            w = weights[count]
            for j in open_nodes:
                bits = reach[j]
                for i in open_nodes:
                    if bits >> i & 1:
                        acc[i] += w
        for i in open_nodes:
            probs[i] = acc[i] / n
    return tuple(probs)


def infection_probability(
    net: Network, profile: DistancingProfile, i: int, params: GameParams
) -> float:
    if not (0 <= i < net.node_count):
        raise ValueError(f"node {i} out of range")
    return infection_probabilities(net, profile, params)[i]


@dataclass(frozen=True)
class OutcomeDistribution:
    """Exact joint distribution over final infection sets.

    Each entry pairs an infection set (boolean vector over nodes) with its
    probability; probabilities sum to 1 within 1e-12.
    """

    entries: tuple[tuple[tuple[bool, ...], float], ...]

    def total_probability(self) -> float:
        return sum(p for _, p in self.entries)

    def marginals(self) -> tuple[float, ...]:
        n = len(self.entries[0][0])
        acc = [0.0] * n
        for infected, p in self.entries:
            for v in range(n):
                if infected[v]:
                    acc[v] += p
        return tuple(acc)


def outcome_distribution(
    net: Network, profile: DistancingProfile, params: GameParams
) -> OutcomeDistribution:
    """Joint distribution of the final infection set.

    Marginalizes the uniform patient-zero draw, the gamma coin for a
    distancing patient zero, and the independent alpha-openings of edges
    among non-distancing nodes.
    """
    check_profile(net, profile)
    n = net.node_count
    open_nodes = frozenset(v for v in range(n) if not profile[v])
    edges = _participating_edges(net, open_nodes)
    _check_edge_budget(edges)
    mass: dict[int, float] = {}
    one_over_n = 1.0 / n

    for z in range(n):
        if profile[z]:
            mass[1 << z] = mass.get(1 << z, 0.0) + params.gamma * one_over_n
            mass[0] = mass.get(0, 0.0) + (1.0 - params.gamma) * one_over_n

    if open_nodes:
        weights = _mask_weights(len(edges), params.alpha)
        for count, reach in _subset_sweep(n, edges):
            w = weights[count] * one_over_n
            for z in open_nodes:
                bits = reach[z]
                mass[bits] = mass.get(bits, 0.0) + w

    entries = tuple(
        (tuple(bool(bits >> v & 1) for v in range(n)), p)
        for bits, p in sorted(mass.items())
        if p > 0.0
    )
    return OutcomeDistribution(entries)


def realized_points(distancing: bool, infected: bool, params: GameParams) -> float:
    """Points for one agent given her choice and final infection status."""
    benefit = 0.0 if infected else params.b
    charge = params.c if distancing else params.fine
    return benefit - charge


def expected_payoff(
    net: Network, profile: DistancingProfile, i: int, params: GameParams
) -> float:
    """Expected points of agent i under the profile."""
    p = infection_probability(net, profile, i, params)
    if profile[i]:
        return (1.0 - p) * params.b - params.c
    return (1.0 - p) * params.b - params.fine


def expected_payoffs(
    net: Network, profile: DistancingProfile, params: GameParams
) -> tuple[float, ...]:
    probs = infection_probabilities(net, profile, params)
    return tuple(
        (1.0 - probs[i]) * params.b - (params.c if profile[i] else params.fine)
        for i in range(net.node_count)
    )


def welfare(net: Network, profile: DistancingProfile, params: GameParams) -> float:
    """Sum of expected payoffs over all agents."""
    return sum(expected_payoffs(net, profile, params))
