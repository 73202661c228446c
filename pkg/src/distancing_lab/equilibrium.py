"""Pure-strategy equilibrium and efficiency analysis by exhaustive search.

All 2^n distancing profiles are scored with the exact contagion engine;
a profile is an equilibrium when no agent has a strictly profitable
unilateral deviation, and efficient when it maximizes total expected
points (ties within ``WELFARE_TIE_TOL``).  ``sweep_alpha`` repeats the
search over a contagion-rate grid and localizes region boundaries at
midpoints between adjacent grid cells.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
from collections import Counter
from dataclasses import dataclass

from .contagion import expected_payoffs, infection_probability, welfare
from .model import (
    DistancingProfile,
    GameParams,
    Network,
    NodeRole,
    check_profile,
    node_roles,
)

MAX_SOLVER_NODES = 20

# Payoffs are O(100) points and probabilities exact to 1e-12.
WELFARE_TIE_TOL = 1e-9


def _check_size(net: Network) -> None:
    if net.node_count > MAX_SOLVER_NODES:
        raise ValueError(
            f"exhaustive solver limited to {MAX_SOLVER_NODES} nodes, "
            f"got {net.node_count}"
        )


def _profile_key(profile: DistancingProfile) -> list[int]:
    return sorted(profile.as_set())


def _all_profiles(n: int) -> list[DistancingProfile]:
    """Every profile, lexicographic over sorted distancing-node sets."""
    profiles = [
        DistancingProfile(bits)
        for bits in itertools.product((False, True), repeat=n)
    ]
    profiles.sort(key=_profile_key)
    return profiles


def distancing_payoff(net: Network, params: GameParams) -> float:
    """Expected points of any distancing agent: (1 - gamma/n)b - c."""
    return (1.0 - params.gamma / net.node_count) * params.b - params.c


def best_response(
    net: Network, profile: DistancingProfile, i: int, params: GameParams
) -> bool:
    """True iff distancing is (weakly) optimal for i against the others.

    Agent i's own entry in ``profile`` is ignored.  Ties resolve toward
    distancing.
    """
    check_profile(net, profile)
    stay = distancing_payoff(net, params)
    p_exposed = infection_probability(net, profile.with_node(i, False), i, params)
    leave = (1.0 - p_exposed) * params.b - params.fine
    return stay >= leave


def _payoff_table(
    net: Network, params: GameParams, profiles: list[DistancingProfile]
) -> dict[tuple[bool, ...], tuple[float, ...]]:
    return {
        prof.distancing: expected_payoffs(net, prof, params) for prof in profiles
    }


def is_equilibrium(
    net: Network, profile: DistancingProfile, params: GameParams
) -> bool:
    """No agent has a strictly profitable unilateral deviation."""
    check_profile(net, profile)
    payoffs = expected_payoffs(net, profile, params)
    for i in range(net.node_count):
        flipped = profile.with_node(i, not profile[i])
        deviation = expected_payoffs(net, flipped, params)[i]
        if deviation > payoffs[i]:
            return False
    return True


def enumerate_equilibria(
    net: Network, params: GameParams
) -> list[DistancingProfile]:
    """All pure-strategy Nash equilibria.

    Deterministic order: lexicographic over the sorted list of distancing
    nodes, so {} < {0} < {0, 1} < {1, 2, 3, 4}.
    """
    _check_size(net)
    profiles = _all_profiles(net.node_count)
    table = _payoff_table(net, params, profiles)
    out: list[DistancingProfile] = []
    for prof in profiles:
        payoffs = table[prof.distancing]
        stable = True
        for i in range(net.node_count):
            flipped = prof.with_node(i, not prof[i])
            if table[flipped.distancing][i] > payoffs[i]:
                stable = False
                break
        if stable:
            out.append(prof)
    return out


def enumerate_efficient(
    net: Network, params: GameParams
) -> list[DistancingProfile]:
    """All welfare-maximizing profiles (ties within WELFARE_TIE_TOL)."""
    _check_size(net)
    profiles = _all_profiles(net.node_count)
    totals = [sum(expected_payoffs(net, prof, params)) for prof in profiles]
    best = max(totals)
    return [
        prof
        for prof, total in zip(profiles, totals)
        if total >= best - WELFARE_TIE_TOL
    ]


@dataclass(frozen=True)
class EquilibriumReport:
    net: Network
    params: GameParams
    equilibria: tuple[DistancingProfile, ...]
    efficient: tuple[DistancingProfile, ...]
    equilibrium_welfare: tuple[float, ...]
    efficient_welfare: tuple[float, ...]

    def to_json_dict(self) -> dict:
        return {
            "network": self.net.to_json_dict(),
            "params": self.params.to_json_dict(),
            "equilibria": [
                {
                    "distancing_nodes": sorted(p.as_set()),
                    "pattern": profile_pattern(self.net, p),
                    "welfare": w,
                }
                for p, w in zip(self.equilibria, self.equilibrium_welfare)
            ],
            "efficient": [
                {
                    "distancing_nodes": sorted(p.as_set()),
                    "pattern": profile_pattern(self.net, p),
                    "welfare": w,
                }
                for p, w in zip(self.efficient, self.efficient_welfare)
            ],
        }


def solve(net: Network, params: GameParams) -> EquilibriumReport:
    equilibria = tuple(enumerate_equilibria(net, params))
    efficient = tuple(enumerate_efficient(net, params))
    return EquilibriumReport(
        net=net,
        params=params,
        equilibria=equilibria,
        efficient=efficient,
        equilibrium_welfare=tuple(welfare(net, p, params) for p in equilibria),
        efficient_welfare=tuple(welfare(net, p, params) for p in efficient),
    )


def profile_pattern(net: Network, profile: DistancingProfile) -> str:
    """Compact role-based label for a profile.

    Complete networks report the distancing count ("0".."n"); stars report
    hub membership plus the peripheral count ("none", "S", "2P", "S+3P");
    other topologies fall back to the count.
    """
    roles = node_roles(net)
    chosen = profile.as_set()
    if all(r is NodeRole.CLOSE_KNIT for r in roles):
        return str(len(chosen))
    if NodeRole.SUPERSPREADER in roles:
        hub = roles.index(NodeRole.SUPERSPREADER)
        parts = []
        if hub in chosen:
            parts.append("S")
        n_peri = len(chosen - {hub})
        if n_peri:
            parts.append(f"{n_peri}P")
        return "+".join(parts) if parts else "none"
    return str(len(chosen))


def _summary(net: Network, profiles: list[DistancingProfile]) -> tuple[tuple[str, int], ...]:
    counts = Counter(profile_pattern(net, p) for p in profiles)
    return tuple(sorted(counts.items()))


@dataclass(frozen=True)
class RegionRow:
    alpha: float
    equilibrium_patterns: tuple[tuple[str, int], ...]
    efficient_patterns: tuple[tuple[str, int], ...]


@dataclass(frozen=True)
class BoundaryEstimate:
    alpha: float  # midpoint between the adjacent grid cells
    kind: str  # "equilibrium" or "efficient"
    before: tuple[tuple[str, int], ...]
    after: tuple[tuple[str, int], ...]


@dataclass(frozen=True)
class RegionTable:
    """Per-alpha equilibrium/efficiency summaries for one network."""

    network_name: str
    rows: tuple[RegionRow, ...]
    boundaries: tuple[BoundaryEstimate, ...]

    @property
    def alphas(self) -> tuple[float, ...]:
        return tuple(row.alpha for row in self.rows)

    def first_alpha_with_equilibrium(self, pattern: str) -> float | None:
        for row in self.rows:
            if any(name == pattern for name, _ in row.equilibrium_patterns):
                return row.alpha
        return None

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["alpha", "equilibrium_patterns", "efficient_patterns"])
        for row in self.rows:
            writer.writerow(
                [
                    f"{row.alpha:.10g}",
                    _patterns_to_str(row.equilibrium_patterns),
                    _patterns_to_str(row.efficient_patterns),
                ]
            )
        return buf.getvalue()

    def to_json_dict(self) -> dict:
        return {
            "network": self.network_name,
            "rows": [
                {
                    "alpha": row.alpha,
                    "equilibria": [
                        {"pattern": name, "count": k}
                        for name, k in row.equilibrium_patterns
                    ],
                    "efficient": [
                        {"pattern": name, "count": k}
                        for name, k in row.efficient_patterns
                    ],
                }
                for row in self.rows
            ],
            "boundaries": [
                {
                    "alpha": b.alpha,
                    "kind": b.kind,
                    "before": _patterns_to_str(b.before),
                    "after": _patterns_to_str(b.after),
                }
                for b in self.boundaries
            ],
        }


def _patterns_to_str(patterns: tuple[tuple[str, int], ...]) -> str:
    return "|".join(
        name if count == 1 else f"{name}x{count}" for name, count in patterns
    )


def sweep_alpha(
    net: Network,
    params_template: GameParams,
    grid: list[float] | tuple[float, ...],
    network_name: str = "",
) -> RegionTable:
    """Equilibrium/efficiency summaries per grid point plus boundaries."""
    if len(grid) == 0:
        raise ValueError("alpha grid must be non-empty")
    grid = list(grid)
    if any(not (0 <= a <= 1) for a in grid):
        raise ValueError("grid values must lie in [0, 1]")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("grid must be strictly increasing")
    rows = []
    for alpha in grid:
        params = params_template.with_alpha(alpha)
        rows.append(
            RegionRow(
                alpha=alpha,
                equilibrium_patterns=_summary(net, enumerate_equilibria(net, params)),
                efficient_patterns=_summary(net, enumerate_efficient(net, params)),
            )
        )
    boundaries = []
    for prev, cur in zip(rows, rows[1:]):
        mid = (prev.alpha + cur.alpha) / 2.0
        if prev.equilibrium_patterns != cur.equilibrium_patterns:
            boundaries.append(
                BoundaryEstimate(
                    mid, "equilibrium", prev.equilibrium_patterns, cur.equilibrium_patterns
                )
            )
        if prev.efficient_patterns != cur.efficient_patterns:
            boundaries.append(
                BoundaryEstimate(
                    mid, "efficient", prev.efficient_patterns, cur.efficient_patterns
                )
            )
    return RegionTable(
        network_name=network_name, rows=tuple(rows), boundaries=tuple(boundaries)
    )


def alpha_grid(step: float) -> list[float]:
    """Uniform grid over [0, 1] with the given step (endpoints included)."""
    if not (0 < step <= 1):
        raise ValueError("step must be in (0, 1]")
    count = round(1.0 / step)
    if abs(count * step - 1.0) > 1e-9:
        raise ValueError("step must divide 1 evenly")
    return [i * step for i in range(count + 1)]


def render_region_chart(table: RegionTable, width: int = 72) -> str:
    """ASCII chart of equilibrium/efficient regions over the alpha grid.

    One band per outcome pattern; a filled cell means the pattern is
    present at that alpha.
    """
    alphas = table.alphas
    lo, hi = alphas[0], alphas[-1]
    span = (hi - lo) or 1.0

    def column(alpha: float) -> int:
        return min(width - 1, int((alpha - lo) / span * (width - 1) + 0.5))

    def bands(kind: str) -> list[str]:
        names: list[str] = []
        for row in table.rows:
            patterns = (
                row.equilibrium_patterns
                if kind == "equilibrium"
                else row.efficient_patterns
            )
            for name, _ in patterns:
                if name not in names:
                    names.append(name)
        label_w = max((len(n) for n in names), default=4) + 2
        lines = [f"{kind} (alpha {lo:.3g}..{hi:.3g})"]
        for name in names:
            cells = [" "] * width
            for row in table.rows:
                patterns = (
                    row.equilibrium_patterns
                    if kind == "equilibrium"
                    else row.efficient_patterns
                )
                if any(p == name for p, _ in patterns):
                    cells[column(row.alpha)] = "#"
            lines.append(f"  {name.ljust(label_w)}|{''.join(cells)}|")
        return lines

    out = bands("equilibrium") + [""] + bands("efficient")
    return "\n".join(out)


def region_table_json(table: RegionTable) -> str:
    return json.dumps(table.to_json_dict(), indent=2, sort_keys=True)
