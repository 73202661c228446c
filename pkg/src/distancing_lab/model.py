"""Domain types for the networked social-distancing game.

A game instance is an undirected, unweighted network plus a parameter
bundle ``(b, c, gamma, alpha, fine)``.  A strategy profile is the set of
nodes that pay the distancing cost.  All types are immutable and safe to
share across threads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Iterable

# Display letters used on the experiment interface for 5-node networks.
DEFAULT_LABELS = ("P", "E", "C", "M", "Q")


def _normalize_edge(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class Network:
    """Undirected, unweighted graph on ``node_count`` labeled nodes.

    Edges are stored as a frozenset of ``(low, high)`` index pairs; no
    self-loops or duplicates.  Use :meth:`from_edges` to build one from an
    arbitrary edge iterable.
    """

    node_count: int
    edges: frozenset[tuple[int, int]]
    labels: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        if self.node_count < 1:
            raise ValueError("node_count must be positive")
        for u, v in self.edges:
            if u == v:
                raise ValueError(f"self-loop on node {u}")
            if not (u < v):
                raise ValueError(f"edge ({u}, {v}) not normalized as (low, high)")
            if not (0 <= u < self.node_count and 0 <= v < self.node_count):
                raise ValueError(f"edge ({u}, {v}) out of range")
        if self.labels is not None and len(self.labels) != self.node_count:
            raise ValueError("labels length must equal node_count")

    @classmethod
    def from_edges(
        cls,
        node_count: int,
        edges: Iterable[tuple[int, int]],
        labels: Iterable[str] | None = None,
    ) -> "Network":
        normalized = frozenset(_normalize_edge(u, v) for u, v in edges)
        return cls(
            node_count,
            normalized,
            tuple(labels) if labels is not None else None,
        )

    @classmethod
    def complete(cls, node_count: int = 5) -> "Network":
        edges = [
            (u, v) for u in range(node_count) for v in range(u + 1, node_count)
        ]
        labels = DEFAULT_LABELS if node_count == len(DEFAULT_LABELS) else None
        return cls.from_edges(node_count, edges, labels)

    @classmethod
    def star(cls, node_count: int = 5) -> "Network":
        """Star with node 0 as the hub."""
        if node_count < 2:
            raise ValueError("star needs at least 2 nodes")
        edges = [(0, v) for v in range(1, node_count)]
        labels = DEFAULT_LABELS if node_count == len(DEFAULT_LABELS) else None
        return cls.from_edges(node_count, edges, labels)

    @cached_property
    def edge_list(self) -> tuple[tuple[int, int], ...]:
        return tuple(sorted(self.edges))

    @cached_property
    def adjacency(self) -> tuple[tuple[int, ...], ...]:
        neigh: list[list[int]] = [[] for _ in range(self.node_count)]
        for u, v in self.edge_list:
            neigh[u].append(v)
            neigh[v].append(u)
        return tuple(tuple(sorted(ns)) for ns in neigh)

    def degree(self, node: int) -> int:
        return len(self.adjacency[node])

    def label(self, node: int) -> str:
        if self.labels is not None:
            return self.labels[node]
        return str(node)

    def to_json_dict(self) -> dict:
        doc: dict = {
            "node_count": self.node_count,
            "edges": [list(e) for e in self.edge_list],
        }
        if self.labels is not None:
            doc["labels"] = list(self.labels)
        return doc


def network_from_json(doc: str | dict) -> Network:
    """Load a network from a JSON document.

    Schema: ``{"node_count": int, "edges": [[u, v], ...],
    "labels": [str, ...]?}``.
    """
    if isinstance(doc, str):
        doc = json.loads(doc)
    return Network.from_edges(
        int(doc["node_count"]),
        [(int(u), int(v)) for u, v in doc["edges"]],
        doc.get("labels"),
    )


class NodeRole(Enum):
    CLOSE_KNIT = "close-knit"
    SUPERSPREADER = "superspreader"
    PERIPHERAL = "peripheral"
    OTHER = "other"


def node_roles(net: Network) -> tuple[NodeRole, ...]:
    """Role of each node: close-knit on complete graphs, hub/arm on stars.

    Any graph that is neither complete nor a star maps every node to
    ``OTHER``; the max-degree node counts as a superspreader only when the
    graph is exactly a star.
    """
    n = net.node_count
    if len(net.edges) == n * (n - 1) // 2 and n >= 2:
        return tuple(NodeRole.CLOSE_KNIT for _ in range(n))
    if n >= 3 and len(net.edges) == n - 1:
        hubs = [v for v in range(n) if net.degree(v) == n - 1]
        if len(hubs) == 1 and all(
            net.degree(v) == 1 for v in range(n) if v != hubs[0]
        ):
            return tuple(
                NodeRole.SUPERSPREADER if v == hubs[0] else NodeRole.PERIPHERAL
                for v in range(n)
            )
    return tuple(NodeRole.OTHER for _ in range(n))


@dataclass(frozen=True)
class GameParams:
    """Payoff and contagion parameters.

    ``b``: benefit when healthy; ``c``: distancing cost; ``gamma``:
    infection probability of a distancing patient zero; ``alpha``:
    per-edge transmission probability; ``fine``: penalty charged to
    non-distancing agents.
    """

    b: float = 100.0
    c: float = 35.0
    gamma: float = 0.5
    alpha: float = 0.65
    fine: float = 0.0

    def __post_init__(self) -> None:
        if not (0 < self.c < self.b):
            raise ValueError("need 0 < c < b")
        if not (0 < self.gamma < 1):
            raise ValueError("gamma must be in (0, 1)")
        if not (0 <= self.alpha <= 1):
            raise ValueError("alpha must be in [0, 1]")
        if self.fine < 0:
            raise ValueError("fine must be >= 0")

    def with_alpha(self, alpha: float) -> "GameParams":
        return GameParams(self.b, self.c, self.gamma, alpha, self.fine)

    def with_fine(self, fine: float) -> "GameParams":
        return GameParams(self.b, self.c, self.gamma, self.alpha, fine)

    def to_json_dict(self) -> dict:
        return {
            "b": self.b,
            "c": self.c,
            "gamma": self.gamma,
            "alpha": self.alpha,
            "fine": self.fine,
        }


def params_from_json(doc: str | dict) -> GameParams:
    """Load parameters from a JSON document; missing keys take defaults."""
    if isinstance(doc, str):
        doc = json.loads(doc)
    defaults = GameParams()
    return GameParams(
        b=float(doc.get("b", defaults.b)),
        c=float(doc.get("c", defaults.c)),
        gamma=float(doc.get("gamma", defaults.gamma)),
        alpha=float(doc.get("alpha", defaults.alpha)),
        fine=float(doc.get("fine", defaults.fine)),
    )


@dataclass(frozen=True)
class DistancingProfile:
    """Which nodes practice distancing (True means the node pays c)."""

    distancing: tuple[bool, ...]

    @classmethod
    def from_set(cls, nodes: Iterable[int], node_count: int) -> "DistancingProfile":
        chosen = set(nodes)
        bad = [v for v in chosen if not (0 <= v < node_count)]
        if bad:
            raise ValueError(f"nodes out of range: {bad}")
        return cls(tuple(v in chosen for v in range(node_count)))

    @classmethod
    def none(cls, node_count: int) -> "DistancingProfile":
        return cls((False,) * node_count)

    @classmethod
    def all(cls, node_count: int) -> "DistancingProfile":
        return cls((True,) * node_count)

    def __len__(self) -> int:
        return len(self.distancing)

    def __getitem__(self, node: int) -> bool:
        return self.distancing[node]

    @property
    def size(self) -> int:
        return sum(self.distancing)

    def as_set(self) -> frozenset[int]:
        return frozenset(v for v, d in enumerate(self.distancing) if d)

    def with_node(self, node: int, value: bool) -> "DistancingProfile":
        updated = list(self.distancing)
        updated[node] = value
        return DistancingProfile(tuple(updated))


def check_profile(net: Network, profile: DistancingProfile) -> None:
    if len(profile) != net.node_count:
        raise ValueError(
            f"profile length {len(profile)} != node count {net.node_count}"
        )


BUILTIN_NETWORKS = {
    "star": Network.star,
    "complete": Network.complete,
}


def builtin_network(name: str, node_count: int = 5) -> Network:
    try:
        factory = BUILTIN_NETWORKS[name]
    except KeyError:
        raise ValueError(
            f"unknown network {name!r}; choices: {sorted(BUILTIN_NETWORKS)}"
        ) from None
    return factory(node_count)
