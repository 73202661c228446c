import itertools

import numpy as np
import pytest

from distancing_lab.equilibrium import (
    alpha_grid,
    best_response,
    enumerate_efficient,
    enumerate_equilibria,
    is_equilibrium,
    profile_pattern,
    render_region_chart,
    solve,
    sweep_alpha,
    welfare,
)
from distancing_lab.model import DistancingProfile, GameParams, Network

STAR = Network.star(5)
K5 = Network.complete(5)
HIGH = GameParams(alpha=0.65)
LOW = GameParams(alpha=0.15)


def sets(profiles):
    return {p.as_set() for p in profiles}


class TestBestResponse:
    def test_star_hub_against_nobody_distancing(self):
        assert best_response(STAR, DistancingProfile.none(5), 0, HIGH) is True

    def test_star_peripheral_against_distancing_hub(self):
        # the unique high-contagion equilibrium has only the hub distancing,
        # so a peripheral's best response against it is No
        profile = DistancingProfile.from_set({0}, 5)
        assert best_response(STAR, profile, 3, HIGH) is False

    def test_alpha_zero_nobody_distances(self):
        params = GameParams(alpha=0.0)
        for net in (STAR, K5):
            for i in range(5):
                assert best_response(net, DistancingProfile.none(5), i, params) is False

    def test_own_entry_is_ignored(self):
        with_self = DistancingProfile.from_set({0, 3}, 5)
        without_self = DistancingProfile.from_set({0}, 5)
        assert best_response(STAR, with_self, 3, HIGH) == best_response(
            STAR, without_self, 3, HIGH
        )

    def test_monotone_in_fine(self):
        rng = np.random.default_rng(31)
        fines = [0.0, 5.0, 15.0, 40.0, 100.0]
        for _ in range(20):
            net = STAR if rng.random() < 0.5 else K5
            others = DistancingProfile.from_set(
                {v for v in range(5) if rng.random() < 0.5}, 5
            )
            i = int(rng.integers(0, 5))
            alpha = float(rng.uniform(0, 1))
            answers = [
                best_response(net, others, i, GameParams(alpha=alpha, fine=f))
                for f in fines
            ]
            # once distancing becomes a best response it stays one
            assert answers == sorted(answers)


class TestEnumeration:
    def test_k5_low_contagion_unique_empty_equilibrium(self):
        assert sets(enumerate_equilibria(K5, LOW)) == {frozenset()}

    def test_k5_high_contagion_all_size_three(self):
        expected = {
            frozenset(combo) for combo in itertools.combinations(range(5), 3)
        }
        assert sets(enumerate_equilibria(K5, HIGH)) == expected

    def test_star_high_contagion_unique_hub(self):
        assert sets(enumerate_equilibria(STAR, HIGH)) == {frozenset({0})}

    def test_star_low_contagion_empty(self):
        assert sets(enumerate_equilibria(STAR, LOW)) == {frozenset()}

    def test_star_alpha_080_has_three_peripheral_equilibrium(self):
        found = sets(enumerate_equilibria(STAR, GameParams(alpha=0.80)))
        three_peripheral = {
            frozenset(combo) for combo in itertools.combinations(range(1, 5), 3)
        }
        assert three_peripheral <= found
        assert frozenset({0}) in found

    def test_k5_efficient_sets(self):
        assert sets(enumerate_efficient(K5, LOW)) == {
            frozenset(c) for c in itertools.combinations(range(5), 2)
        }
        assert sets(enumerate_efficient(K5, HIGH)) == {
            frozenset(c) for c in itertools.combinations(range(5), 4)
        }

    def test_star_efficient_hub_only(self):
        assert sets(enumerate_efficient(STAR, HIGH)) == {frozenset({0})}
        assert sets(enumerate_efficient(STAR, LOW)) == {frozenset({0})}

    def test_deterministic_set_lexicographic_order(self):
        profiles = enumerate_equilibria(K5, HIGH)
        keys = [sorted(p.as_set()) for p in profiles]
        assert keys == sorted(keys)
        assert keys[0] == [0, 1, 2]

    def test_size_guard(self):
        with pytest.raises(ValueError):
            enumerate_equilibria(Network.from_edges(21, []), HIGH)


class TestSolverInvariants:
    @pytest.mark.parametrize("alpha", [0.15, 0.4, 0.65, 0.9])
    @pytest.mark.parametrize("name", ["star", "complete"])
    def test_exhaustive_best_response_consistency(self, name, alpha):
        net = STAR if name == "star" else K5
        params = GameParams(alpha=alpha)
        equilibria = sets(enumerate_equilibria(net, params))
        for bits in itertools.product((False, True), repeat=5):
            profile = DistancingProfile(bits)
            stable = is_equilibrium(net, profile, params)
            assert stable == (profile.as_set() in equilibria)
            if stable:
                # at generic parameters each action agrees with the
                # tie-toward-distancing best response
                for i in range(5):
                    assert best_response(net, profile, i, params) == profile[i]

    def test_efficient_welfare_dominates_equilibria(self):
        for net in (STAR, K5):
            for params in (LOW, HIGH, GameParams(alpha=0.8, fine=15.0)):
                best = max(
                    welfare(net, p, params) for p in enumerate_efficient(net, params)
                )
                for p in enumerate_equilibria(net, params):
                    assert welfare(net, p, params) <= best + 1e-9

    def test_symmetry_closure_on_k5(self):
        rng = np.random.default_rng(13)
        for params in (LOW, HIGH):
            eq = sets(enumerate_equilibria(K5, params))
            eff = sets(enumerate_efficient(K5, params))
            for _ in range(10):
                perm = list(rng.permutation(5))
                assert {frozenset(perm[v] for v in s) for s in eq} == eq
                assert {frozenset(perm[v] for v in s) for s in eff} == eff

    def test_overwhelming_fine_forces_full_distancing(self):
        params = GameParams(alpha=0.4, fine=1000.0)
        for net in (STAR, K5):
            assert sets(enumerate_equilibria(net, params)) == {frozenset(range(5))}


class TestSweep:
    def test_rejects_bad_grids(self):
        with pytest.raises(ValueError):
            sweep_alpha(STAR, HIGH, [])
        with pytest.raises(ValueError):
            sweep_alpha(STAR, HIGH, [0.2, 0.1])
        with pytest.raises(ValueError):
            sweep_alpha(STAR, HIGH, [0.5, 1.5])

    def test_singleton_grid_equals_direct_enumeration(self):
        table = sweep_alpha(STAR, HIGH, [0.65])
        report = solve(STAR, HIGH)
        row = table.rows[0]
        assert row.equilibrium_patterns == (("S", 1),)
        assert row.efficient_patterns == (("S", 1),)
        assert profile_pattern(STAR, report.equilibria[0]) == "S"

    def test_reproduces_reference_alphas(self):
        table = sweep_alpha(K5, GameParams(), [0.15, 0.65], network_name="complete")
        assert table.rows[0].equilibrium_patterns == (("0", 1),)
        assert table.rows[0].efficient_patterns == (("2", 10),)
        assert table.rows[1].equilibrium_patterns == (("3", 10),)
        assert table.rows[1].efficient_patterns == (("4", 5),)

    def test_star_three_peripheral_boundary_near_072(self):
        table = sweep_alpha(STAR, GameParams(), alpha_grid(0.005))
        first = table.first_alpha_with_equilibrium("3P")
        assert first is not None
        assert abs(first - 0.72) <= 0.005 + 1e-9
        # the boundary midpoint between adjacent cells sits at 0.7225
        eq_mids = [b.alpha for b in table.boundaries if b.kind == "equilibrium"]
        assert any(abs(m - 0.7225) < 1e-9 for m in eq_mids)

    def test_overwhelming_fine_at_every_grid_point(self):
        table = sweep_alpha(STAR, GameParams(fine=1000.0), alpha_grid(0.25))
        for row in table.rows:
            assert row.equilibrium_patterns == (("S+4P", 1),)

    def test_csv_and_chart_render(self):
        table = sweep_alpha(STAR, GameParams(), [0.1, 0.5, 0.9], network_name="star")
        csv_text = table.to_csv()
        assert csv_text.splitlines()[0] == "alpha,equilibrium_patterns,efficient_patterns"
        assert len(csv_text.splitlines()) == 4
        chart = render_region_chart(table)
        assert "equilibrium" in chart and "efficient" in chart
        doc = table.to_json_dict()
        assert doc["network"] == "star"
        assert len(doc["rows"]) == 3
