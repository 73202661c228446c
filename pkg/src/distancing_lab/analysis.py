"""Post-experimental statistics over session logs.

Covers group-level aggregation of distancing decisions, individual
convergence detection, a sup-Wald single-break test on round series, and
the nonparametric (Mann-Whitney U, Wilcoxon signed-rank) and parametric
(unpaired Welch / paired Student t) two-sample tests, with exact
enumeration branches for small samples.

All tests return a :class:`TestResult`; alternatives are ``two-sided`` or
``greater`` (sample1 tends larger / differences tend positive).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy import stats as sps

from .model import NodeRole, node_roles
from .session_log import Decision, Part, SessionLog

ALTERNATIVES = ("two-sided", "greater")

MW_EXACT_LIMIT = 12  # pooled size up to which the exact branch runs
WSR_EXACT_LIMIT = 15  # nonzero pairs up to which the exact branch runs


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    alternative: str
    n1: int
    n2: int
    method: str

    def __post_init__(self) -> None:
        if not (0.0 <= self.p_value <= 1.0):
            raise ValueError(f"p value {self.p_value} outside [0, 1]")


def _check_alternative(alternative: str) -> None:
    if alternative not in ALTERNATIVES:
        raise ValueError(f"alternative must be one of {ALTERNATIVES}")


def _average_ranks(values: Sequence[float]) -> list[float]:
    order = sorted(range(len(values)), key=lambda k: values[k])
    ranks = [0.0] * len(values)
    pos = 0
    while pos < len(order):
        end = pos
        while (
            end + 1 < len(order)
            and values[order[end + 1]] == values[order[pos]]
        ):
            end += 1
        avg = (pos + end) / 2.0 + 1.0
        for k in range(pos, end + 1):
            ranks[order[k]] = avg
        pos = end + 1
    return ranks


def _tie_counts(values: Sequence[float]) -> list[int]:
    return [
        len(list(group)) for _, group in itertools.groupby(sorted(values))
    ]


def mann_whitney_u(
    sample1: Sequence[float],
    sample2: Sequence[float],
    alternative: str = "two-sided",
) -> TestResult:
    """Mann-Whitney U test for unmatched samples.

    ``greater`` means sample1 is stochastically larger.  Exact p by
    enumerating every group assignment of the pooled values when
    n1 + n2 <= 12; otherwise the normal approximation with tie and
    continuity corrections.
    """
    _check_alternative(alternative)
    x, y = list(sample1), list(sample2)
    if not x or not y:
        raise ValueError("samples must be non-empty")
    n1, n2 = len(x), len(y)
    pooled = x + y
    ranks = _average_ranks(pooled)
    u1 = sum(ranks[:n1]) - n1 * (n1 + 1) / 2.0
    mean_u = n1 * n2 / 2.0

    if n1 + n2 <= MW_EXACT_LIMIT:
        total = math.comb(n1 + n2, n1)
        hits = 0
        for idx in itertools.combinations(range(n1 + n2), n1):
            r1 = sum(ranks[k] for k in idx)
            u_perm = r1 - n1 * (n1 + 1) / 2.0
            if alternative == "greater":
                hits += u_perm >= u1 - 1e-12
            else:
                hits += abs(u_perm - mean_u) >= abs(u1 - mean_u) - 1e-12
        return TestResult(u1, hits / total, alternative, n1, n2, "mw-exact")

    n = n1 + n2
    tie_term = sum(t**3 - t for t in _tie_counts(pooled))
    variance = n1 * n2 / 12.0 * ((n + 1) - tie_term / (n * (n - 1)))
    if variance <= 0:
        return TestResult(u1, 1.0, alternative, n1, n2, "mw-normal")
    sd = math.sqrt(variance)
    if alternative == "greater":
        z = (u1 - mean_u - 0.5) / sd
        p = sps.norm.sf(z)
    else:
        z = (abs(u1 - mean_u) - 0.5) / sd
        p = min(1.0, 2.0 * sps.norm.sf(z))
    return TestResult(u1, float(p), alternative, n1, n2, "mw-normal")


def wilcoxon_signed_rank(
    pairs: Sequence[tuple[float, float]],
    alternative: str = "two-sided",
) -> TestResult:
    """Wilcoxon signed-rank test for matched pairs.

    ``greater`` means the first elements tend to exceed the second.  Zero
    differences are dropped.  Exact p by enumerating the 2^m sign
    assignments when m <= 15 nonzero pairs; otherwise the normal
    approximation with tie and continuity corrections.
    """
    _check_alternative(alternative)
    diffs = [float(a) - float(b) for a, b in pairs]
    nonzero = [d for d in diffs if d != 0.0]
    if not nonzero:
        raise ValueError("all differences are zero")
    m = len(nonzero)
    ranks = _average_ranks([abs(d) for d in nonzero])
    w_plus = sum(r for d, r in zip(nonzero, ranks) if d > 0)
    mean_w = m * (m + 1) / 4.0

    if m <= WSR_EXACT_LIMIT:
        hits = 0
        for signs in itertools.product((False, True), repeat=m):
            w = sum(r for positive, r in zip(signs, ranks) if positive)
            if alternative == "greater":
                hits += w >= w_plus - 1e-12
            else:
                hits += abs(w - mean_w) >= abs(w_plus - mean_w) - 1e-12
        return TestResult(
            w_plus, hits / 2**m, alternative, m, m, "wsr-exact"
        )

    tie_term = sum(t**3 - t for t in _tie_counts([abs(d) for d in nonzero]))
    variance = m * (m + 1) * (2 * m + 1) / 24.0 - tie_term / 48.0
    if variance <= 0:
        return TestResult(w_plus, 1.0, alternative, m, m, "wsr-normal")
    sd = math.sqrt(variance)
    if alternative == "greater":
        z = (w_plus - mean_w - 0.5) / sd
        p = sps.norm.sf(z)
    else:
        z = (abs(w_plus - mean_w) - 0.5) / sd
        p = min(1.0, 2.0 * sps.norm.sf(z))
    return TestResult(w_plus, float(p), alternative, m, m, "wsr-normal")


def t_tests(
    sample1: Sequence[float],
    sample2: Sequence[float],
    paired: bool = False,
    alternative: str = "two-sided",
) -> TestResult:
    """Student t (paired) or Welch t (unpaired) test."""
    _check_alternative(alternative)
    x = np.asarray(sample1, dtype=float)
    y = np.asarray(sample2, dtype=float)
    if x.size == 0 or y.size == 0:
        raise ValueError("samples must be non-empty")
    if paired:
        if x.size != y.size:
            raise ValueError("paired test requires equal lengths")
        d = x - y
        n = d.size
        if n < 2:
            raise ValueError("paired test requires at least 2 pairs")
        sd = d.std(ddof=1)
        if sd == 0.0:
            if d.mean() == 0.0:
                return TestResult(0.0, 1.0, alternative, n, n, "t-paired")
            raise ValueError("degenerate variance with nonzero mean difference")
        t = d.mean() / (sd / math.sqrt(n))
        df = n - 1
        method = "t-paired"
    else:
        n1, n2 = x.size, y.size
        if n1 < 2 or n2 < 2:
            raise ValueError("unpaired test requires at least 2 per sample")
        v1, v2 = x.var(ddof=1), y.var(ddof=1)
        if v1 == 0.0 and v2 == 0.0:
            if x.mean() == y.mean():
                return TestResult(0.0, 1.0, alternative, n1, n2, "t-welch")
            raise ValueError("degenerate variance with unequal means")
        se2 = v1 / n1 + v2 / n2
        t = (x.mean() - y.mean()) / math.sqrt(se2)
        df = se2**2 / (
            (v1 / n1) ** 2 / (n1 - 1) + (v2 / n2) ** 2 / (n2 - 1)
        )
        method = "t-welch"
    if alternative == "greater":
        p = sps.t.sf(t, df)
    else:
        p = min(1.0, 2.0 * sps.t.sf(abs(t), df))
    n2_out = y.size
    return TestResult(float(t), float(p), alternative, x.size, n2_out, method)


# ---- structural break -------------------------------------------------


@dataclass(frozen=True)
class BreakResult:
    break_round: int | None  # first round of the post-break regime
    statistic: float
    p_value: float
    candidate_rounds: tuple[int, ...]
    candidate_stats: tuple[float, ...]


def _segment_rss(t: np.ndarray, y: np.ndarray) -> float:
    """Residual sum of squares of an intercept-plus-slope fit."""
    tc = t - t.mean()
    yc = y - y.mean()
    sxx = float(tc @ tc)
    if sxx == 0.0:
        return float(yc @ yc)
    beta = float(tc @ yc) / sxx
    resid = yc - beta * tc
    return float(resid @ resid)


def _sup_wald(
    y: np.ndarray, candidates: Sequence[int], tol: float
) -> tuple[float, int]:
    """Max Wald statistic for an intercept-and-slope break, and its round.

    ``tol`` floors residual sums that are zero up to float noise; it must
    scale with the series variance so the statistic stays invariant under
    affine rescaling.
    """
    t = np.arange(1, y.size + 1, dtype=float)
    rss_pooled = _segment_rss(t, y)
    best_stat, best_round = -math.inf, candidates[0]
    k = 2  # parameters per regime
    for tau in candidates:
        left = slice(0, tau - 1)
        right = slice(tau - 1, y.size)
        rss_split = _segment_rss(t[left], y[left]) + _segment_rss(
            t[right], y[right]
        )
        denom_df = y.size - 2 * k
        if rss_split <= tol:
            stat = math.inf if rss_pooled > tol else 0.0
        else:
            stat = ((rss_pooled - rss_split) / k) / (rss_split / denom_df)
        if stat > best_stat:
            best_stat, best_round = stat, tau
    return best_stat, best_round


def sup_wald_break(
    series: Sequence[float],
    trim: int = 4,
    n_permutations: int = 999,
    rng=None,
) -> BreakResult:
    """Single structural break in a round series, located by sup-Wald.

    Fits distancing level on the round number with one intercept-and-slope
    break; the break round is the argmax of the Wald statistic over
    candidates that leave at least ``trim`` rounds on each side.  The p
    value comes from ``n_permutations`` random permutations of the series
    (seeded generator, default seed 0), so no asymptotic critical values
    are involved.
    """
    y = np.asarray(series, dtype=float)
    if y.size < 10:
        raise ValueError("series too short for break detection")
    if trim < 2:
        raise ValueError("trim must be >= 2")
    candidates = list(range(trim + 1, y.size - trim + 2))
    if not candidates:
        raise ValueError("trimming leaves no candidate breaks")
    t = np.arange(1, y.size + 1, dtype=float)
    # scale-proportional zero floor keeps affine invariance intact
    total_variation = float(((y - y.mean()) ** 2).sum())
    tol = 1e-12 * total_variation
    if _segment_rss(t, y) <= tol:
        # an exact linear trend has nothing to break
        return BreakResult(None, 0.0, 1.0, tuple(candidates), (0.0,) * len(candidates))

    stats_by_tau = []
    for tau in candidates:
        stat, _ = _sup_wald(y, [tau], tol)
        stats_by_tau.append(stat)
    observed, break_round = _sup_wald(y, candidates, tol)

    if rng is None:
        rng = np.random.default_rng(0)
    exceed = 0
    for _ in range(n_permutations):
        permuted = rng.permutation(y)
        stat, _ = _sup_wald(permuted, candidates, tol)
        if stat >= observed:
            exceed += 1
    p = (1 + exceed) / (n_permutations + 1)
    return BreakResult(
        break_round, observed, p, tuple(candidates), tuple(stats_by_tau)
    )


# ---- convergence ------------------------------------------------------

CONSTANT = "constant"
ROLE_COMPLEMENT = "role-complement"
ROLE_ALTERNATING = "role-alternating"
ALL_PATTERNS = (CONSTANT, ROLE_COMPLEMENT, ROLE_ALTERNATING)
STAR_ROLES = (NodeRole.SUPERSPREADER, NodeRole.PERIPHERAL)


@dataclass(frozen=True)
class ConvergenceResult:
    converged: bool
    round: int | None
    pattern: str | None


def _deviations(
    decisions: Sequence[bool],
    roles: Sequence[NodeRole],
    pattern: str,
    base_action: bool,
) -> list[bool]:
    devs = []
    prev_peripheral: bool | None = None
    for decision, role in zip(decisions, roles):
        if pattern == CONSTANT:
            devs.append(decision != base_action)
            continue
        if role not in STAR_ROLES:
            raise ValueError(
                f"pattern {pattern} needs superspreader/peripheral roles"
            )
        if role is NodeRole.SUPERSPREADER:
            devs.append(decision != base_action)
        elif pattern == ROLE_COMPLEMENT:
            devs.append(decision == base_action)
        else:  # strict flip relative to her previous peripheral action
            devs.append(
                prev_peripheral is not None and decision == prev_peripheral
            )
        if role is NodeRole.PERIPHERAL:
            prev_peripheral = decision
    return devs


def _earliest_round(devs: list[bool], k: int, a: int) -> int | None:
    n_rounds = len(devs)
    runs = []  # (start index, length) of maximal deviation runs
    i = 0
    while i < n_rounds:
        if devs[i]:
            j = i
            while j + 1 < n_rounds and devs[j + 1]:
                j += 1
            runs.append((i, j - i + 1))
            i = j + 1
        else:
            i += 1
    for n in range(k, n_rounds + 1):
        if any(devs[n - k : n]):
            continue
        if all(length <= a for start, length in runs if start >= n):
            return n
    return None


def detect_convergence(
    decisions: Sequence[bool],
    roles: Sequence[NodeRole],
    k: int = 4,
    a: int = 2,
    patterns: Sequence[str] = (CONSTANT,),
) -> ConvergenceResult:
    """Earliest round at which a subject has settled on a strategy.

    A subject converges to a strategy by round n when she used it for the
    k rounds ending at n and every later run of consecutive deviations has
    length at most ``a`` (runs touching the end of the series included).
    Candidate strategies are the requested patterns with either base
    action; at the same round, constant beats role-complement beats
    role-alternating, and a yes base action beats a no one.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if a < 0:
        raise ValueError("a must be >= 0")
    if len(decisions) != len(roles):
        raise ValueError("decisions and roles must align")
    unknown = [p for p in patterns if p not in ALL_PATTERNS]
    if unknown:
        raise ValueError(f"unknown patterns: {unknown}")
    best: tuple[int, int] | None = None  # (round, priority)
    best_pattern: str | None = None
    priority = 0
    for pattern in ALL_PATTERNS:
        if pattern not in patterns:
            continue
        for base_action in (True, False):
            devs = _deviations(decisions, roles, pattern, base_action)
            round_n = _earliest_round(devs, k, a)
            if round_n is not None:
                key = (round_n, priority)
                if best is None or key < best:
                    best = key
                    best_pattern = (
                        f"{pattern}:{'yes' if base_action else 'no'}"
                    )
            priority += 1
    if best is None:
        return ConvergenceResult(False, None, None)
    return ConvergenceResult(True, best[0], best_pattern)


# ---- panels -----------------------------------------------------------


@dataclass(frozen=True)
class Treatment:
    network: str
    alpha: float
    intervention: str

    def label(self) -> str:
        return f"{self.network}/a={self.alpha:g}/{self.intervention}"


@dataclass(frozen=True)
class SubjectSeries:
    subject_id: str
    group_id: str
    treatment: Treatment
    decisions: tuple[bool, ...]  # distanced that round? (timeout counts No)
    roles: tuple[NodeRole, ...]


@dataclass(frozen=True)
class DecisionPanel:
    subjects: tuple[SubjectSeries, ...]
    rounds_per_part: int = 20

    @property
    def total_rounds(self) -> int:
        return 2 * self.rounds_per_part

    def groups(self) -> dict[str, list[SubjectSeries]]:
        by_group: dict[str, list[SubjectSeries]] = {}
        for subject in self.subjects:
            by_group.setdefault(subject.group_id, []).append(subject)
        return by_group

    def part_slice(self, part: Part) -> slice:
        if part is Part.BASELINE:
            return slice(0, self.rounds_per_part)
        return slice(self.rounds_per_part, self.total_rounds)


def panel_from_logs(logs: Iterable[SessionLog]) -> DecisionPanel:
    """One panel subject per seat, one group per session log."""
    subjects = []
    rounds_per_part = None
    for log in logs:
        config = log.config
        rounds_per_part = config["rounds_per_part"]
        net = log.network()
        roles = node_roles(net)
        treatment = Treatment(
            network=config.get("network_name", "custom"),
            alpha=config["alpha"],
            intervention=config["intervention"],
        )
        records = log.round_records()
        for seat in range(log.seat_count):
            subjects.append(
                SubjectSeries(
                    subject_id=f"{log.session_id}/s{seat}",
                    group_id=log.session_id,
                    treatment=treatment,
                    decisions=tuple(
                        rec.decisions[seat] is Decision.YES for rec in records
                    ),
                    roles=tuple(roles[rec.positions[seat]] for rec in records),
                )
            )
    if rounds_per_part is None:
        raise ValueError("no logs supplied")
    return DecisionPanel(tuple(subjects), rounds_per_part)


def panel_from_csv(text: str, rounds_per_part: int = 20) -> DecisionPanel:
    """Rebuild a panel from the exported decision matrix CSV."""
    import csv
    import io

    rows = list(csv.DictReader(io.StringIO(text)))
    if not rows:
        raise ValueError("decision CSV is empty")
    by_subject: dict[tuple[str, int], list[dict]] = {}
    for row in rows:
        by_subject.setdefault(
            (row["session_id"], int(row["seat"])), []
        ).append(row)
    subjects = []
    for (session_id, seat), entries in sorted(by_subject.items()):
        entries.sort(key=lambda r: int(r["round"]))
        subjects.append(
            SubjectSeries(
                subject_id=f"{session_id}/s{seat}",
                group_id=session_id,
                treatment=Treatment(
                    network=entries[0]["network"],
                    alpha=float(entries[0]["alpha"]),
                    intervention=entries[0]["intervention"],
                ),
                decisions=tuple(r["decision"] == "yes" for r in entries),
                roles=tuple(NodeRole(r["role"]) for r in entries),
            )
        )
    return DecisionPanel(tuple(subjects), rounds_per_part)


def aggregate_group_distancing(
    panel: DecisionPanel, window: Sequence[int]
) -> dict[tuple[str, Part], float]:
    """Mean distancing per group and part over part-relative rounds.

    ``window`` uses 1-based rounds within a part (e.g. range(11, 21) for
    the last 10 rounds of each part).
    """
    window = sorted(set(window))
    if not window:
        raise ValueError("window must be non-empty")
    if window[0] < 1 or window[-1] > panel.rounds_per_part:
        raise ValueError("window outside the rounds of a part")
    out: dict[tuple[str, Part], float] = {}
    for group_id, members in panel.groups().items():
        for part in (Part.BASELINE, Part.INTERVENTION):
            offset = 0 if part is Part.BASELINE else panel.rounds_per_part
            values = [
                float(subject.decisions[offset + r - 1])
                for subject in members
                for r in window
            ]
            out[(group_id, part)] = float(np.mean(values))
    return out


def group_role_distancing(
    panel: DecisionPanel,
    role: NodeRole,
    part: Part,
    window: Sequence[int],
) -> dict[str, float]:
    """Mean distancing per group over rounds where subjects held a role."""
    out: dict[str, float] = {}
    for group_id, members in panel.groups().items():
        offset = 0 if part is Part.BASELINE else panel.rounds_per_part
        values = [
            float(subject.decisions[offset + r - 1])
            for subject in members
            for r in window
            if subject.roles[offset + r - 1] is role
        ]
        if values:
            out[group_id] = float(np.mean(values))
    return out


def per_round_mean_series(panel: DecisionPanel) -> np.ndarray:
    """Mean distancing per session round across all subjects (length 40)."""
    matrix = np.array(
        [[float(d) for d in s.decisions] for s in panel.subjects]
    )
    return matrix.mean(axis=0)


@dataclass(frozen=True)
class ConvergenceEntry:
    subject_id: str
    group_id: str
    treatment: Treatment
    part: Part
    converged: bool
    round: int | None
    pattern: str | None


@dataclass(frozen=True)
class ConvergenceReport:
    entries: tuple[ConvergenceEntry, ...]
    rounds_per_part: int

    def share_converged_by_round(
        self, part: Part | None = None
    ) -> tuple[float, ...]:
        entries = [
            e for e in self.entries if part is None or e.part is part
        ]
        if not entries:
            raise ValueError("no convergence entries selected")
        shares = []
        for t in range(1, self.rounds_per_part + 1):
            done = sum(
                1 for e in entries if e.converged and e.round is not None and e.round <= t
            )
            shares.append(done / len(entries))
        return tuple(shares)


def convergence_report(
    panel: DecisionPanel, k: int = 4, a: int = 2
) -> ConvergenceReport:
    """Per subject and part, the earliest stable strategy.

    Star treatments allow all three patterns; other networks only the
    constant one.
    """
    entries = []
    for subject in panel.subjects:
        star = all(r in STAR_ROLES for r in subject.roles)
        patterns = ALL_PATTERNS if star else (CONSTANT,)
        for part in (Part.BASELINE, Part.INTERVENTION):
            span = panel.part_slice(part)
            result = detect_convergence(
                subject.decisions[span], subject.roles[span], k, a, patterns
            )
            entries.append(
                ConvergenceEntry(
                    subject_id=subject.subject_id,
                    group_id=subject.group_id,
                    treatment=subject.treatment,
                    part=part,
                    converged=result.converged,
                    round=result.round,
                    pattern=result.pattern,
                )
            )
    return ConvergenceReport(tuple(entries), panel.rounds_per_part)


# ---- report battery ---------------------------------------------------


@dataclass(frozen=True)
class BatteryRow:
    hypothesis: str
    samples: str
    test: str
    n1: int
    n2: int
    delta_mean: float
    p_value: float

    def to_json_dict(self) -> dict:
        return {
            "hypothesis": self.hypothesis,
            "samples": self.samples,
            "test": self.test,
            "n1": self.n1,
            "n2": self.n2,
            "delta_mean": self.delta_mean,
            "p_value": self.p_value,
        }


def _row(hypothesis: str, samples: str, result: TestResult, delta: float) -> BatteryRow:
    return BatteryRow(
        hypothesis=hypothesis,
        samples=samples,
        test=result.method,
        n1=result.n1,
        n2=result.n2,
        delta_mean=delta,
        p_value=result.p_value,
    )


def standard_battery(
    panel: DecisionPanel, window: Sequence[int] | None = None
) -> list[BatteryRow]:
    """Group-level hypothesis tests over whatever treatments are present.

    Matched comparisons (within the same groups) use the signed-rank test;
    comparisons across treatments use the Mann-Whitney U test.  The
    default window is the last 10 rounds of each part.
    """
    if window is None:
        window = range(panel.rounds_per_part - 9, panel.rounds_per_part + 1)
    window = list(window)
    levels = aggregate_group_distancing(panel, window)
    treatments = {
        group_id: members[0].treatment
        for group_id, members in panel.groups().items()
    }
    rows: list[BatteryRow] = []

    def level(group_id: str, part: Part) -> float:
        return levels[(group_id, part)]

    fine_groups = sorted(
        g for g, t in treatments.items() if t.intervention == "fine"
    )
    nudge_groups = sorted(
        g for g, t in treatments.items() if t.intervention == "nudge"
    )
    for label, group_ids in (("fine", fine_groups), ("nudge", nudge_groups)):
        pairs = [
            (level(g, Part.INTERVENTION), level(g, Part.BASELINE))
            for g in group_ids
        ]
        nonzero = [p for p in pairs if p[0] != p[1]]
        if len(pairs) >= 2 and nonzero:
            result = wilcoxon_signed_rank(pairs, "greater")
            delta = float(np.mean([a - b for a, b in pairs]))
            rows.append(
                _row(
                    f"{label} raises distancing (intervention vs baseline)",
                    f"{label} groups, both parts",
                    result,
                    delta,
                )
            )

    if fine_groups and nudge_groups:
        fine_levels = [level(g, Part.INTERVENTION) for g in fine_groups]
        nudge_levels = [level(g, Part.INTERVENTION) for g in nudge_groups]
        result = mann_whitney_u(fine_levels, nudge_levels, "greater")
        rows.append(
            _row(
                "fine raises distancing more than nudge",
                "intervention part, fine vs nudge groups",
                result,
                float(np.mean(fine_levels) - np.mean(nudge_levels)),
            )
        )

    star_groups = sorted(
        g for g, t in treatments.items() if t.network == "star"
    )
    if star_groups:
        hub = group_role_distancing(
            panel, NodeRole.SUPERSPREADER, Part.BASELINE, window
        )
        arm = group_role_distancing(
            panel, NodeRole.PERIPHERAL, Part.BASELINE, window
        )
        shared = [g for g in star_groups if g in hub and g in arm]
        pairs = [(hub[g], arm[g]) for g in shared]
        nonzero = [p for p in pairs if p[0] != p[1]]
        if len(pairs) >= 2 and nonzero:
            result = wilcoxon_signed_rank(pairs, "greater")
            rows.append(
                _row(
                    "superspreaders distance more than peripherals",
                    "star groups, baseline",
                    result,
                    float(np.mean([a - b for a, b in pairs])),
                )
            )

    high = sorted(g for g, t in treatments.items() if t.alpha > 0.5)
    low = sorted(g for g, t in treatments.items() if t.alpha <= 0.5)
    if high and low:
        for part in (Part.BASELINE, Part.INTERVENTION):
            high_levels = [level(g, part) for g in high]
            low_levels = [level(g, part) for g in low]
            result = mann_whitney_u(high_levels, low_levels, "greater")
            rows.append(
                _row(
                    "high contagion raises distancing",
                    f"{part.value}, high vs low alpha groups",
                    result,
                    float(np.mean(high_levels) - np.mean(low_levels)),
                )
            )
    return rows


def battery_table(rows: Sequence[BatteryRow]) -> str:
    """Plain-text table: hypothesis, samples, test, n, delta, p."""
    if not rows:
        return "(no testable comparisons in the supplied logs)"
    headers = ["hypothesis", "samples", "test", "n", "d-mean", "p-val"]
    cells = [
        [
            row.hypothesis,
            row.samples,
            row.test,
            f"{row.n1}/{row.n2}",
            f"{row.delta_mean:+.3f}",
            f"{row.p_value:.4g}",
        ]
        for row in rows
    ]
    widths = [
        max(len(headers[col]), max(len(r[col]) for r in cells))
        for col in range(len(headers))
    ]
    lines = [
        "  ".join(h.ljust(w) for h, w in zip(headers, widths)),
        "  ".join("-" * w for w in widths),
    ]
    for r in cells:
        lines.append("  ".join(v.ljust(w) for v, w in zip(r, widths)))
    return "\n".join(lines)
