"""Simulation harness: sincere generation, protester/bill selection, injection."""

import numpy as np
import pytest

from robustirt import (
    ModelState,
    Party,
    SimulationSpec,
    Vote,
    inject_protests,
    run_simulation,
    synthetic_truth,
)
from robustirt.simulate import (
    generate_sincere,
    select_protest_bills,
    select_protesters,
)


class TestSyntheticTruth:
    def test_shapes_and_party_structure(self):
        truth = synthetic_truth(100, 60, seed=0)
        assert truth.theta.shape == (100, 1)
        assert truth.alpha.shape == (60,)
        assert truth.beta.shape == (60, 1)
        assert truth.gamma == {}
        # First half sits on the negative side, second half positive.
        assert np.mean(truth.theta[:50, 0]) < -0.5
        assert np.mean(truth.theta[50:, 0]) > 0.5

    def test_position_spread_matches_mixture(self):
        truth = synthetic_truth(2000, 10, seed=1)
        dem = truth.theta[:1000, 0]
        assert np.mean(dem) == pytest.approx(-0.8, abs=0.05)
        assert np.std(dem) == pytest.approx(0.3, abs=0.05)

    def test_deterministic(self):
        a = synthetic_truth(50, 40, seed=9)
        b = synthetic_truth(50, 40, seed=9)
        np.testing.assert_array_equal(a.theta, b.theta)
        np.testing.assert_array_equal(a.beta, b.beta)

    def test_multidimensional(self):
        truth = synthetic_truth(30, 20, k=3, seed=2)
        assert truth.theta.shape == (30, 3)
        assert truth.beta.shape == (20, 3)


class TestGenerateSincere:
    def test_fifty_fifty_under_null(self):
        truth = ModelState(np.zeros((100, 1)), np.zeros(1000), np.zeros((1000, 1)))
        data = generate_sincere(truth, seed=0)
        n = data.votes.size
        share = (data.votes == Vote.YEA).mean()
        assert abs(share - 0.5) < 3 * np.sqrt(0.25 / n)

    def test_large_intercept_all_yea(self):
        truth = ModelState(np.zeros((100, 1)), np.full(100, 6.0), np.zeros((100, 1)))
        data = generate_sincere(truth, seed=0)
        assert not (data.votes == Vote.NAY).any()

    def test_deterministic_and_row_streams(self):
        truth = synthetic_truth(20, 30, seed=3)
        a = generate_sincere(truth, seed=5)
        b = generate_sincere(truth, seed=5)
        np.testing.assert_array_equal(a.votes, b.votes)
        # Each row draws from its own (seed, row) stream, so a truth sharing
        # row 0 reproduces row 0 regardless of what the other rows contain.
        other = ModelState(
            np.vstack([truth.theta[0:1], -truth.theta[1:]]), truth.alpha, truth.beta
        )
        c = generate_sincere(other, seed=5)
        np.testing.assert_array_equal(c.votes[0], a.votes[0])

    def test_missing_rate(self):
        truth = synthetic_truth(50, 200, seed=1)
        data = generate_sincere(truth, seed=2, missing_rate=0.2)
        share = (data.votes == Vote.MISSING).mean()
        assert share == pytest.approx(0.2, abs=0.02)


class TestSelectProtesters:
    def test_zero_gives_empty(self):
        truth = synthetic_truth(40, 10, seed=0)
        assert select_protesters(truth, 0, Party.DEM, seed=0) == []

    def test_extreme_decile_membership(self, rng):
        theta = np.concatenate([-rng.uniform(0.1, 3.0, 100), rng.uniform(0.1, 3.0, 100)])
        truth = ModelState(theta.reshape(-1, 1), np.zeros(5), np.ones((5, 1)))
        chosen = select_protesters(truth, 4, Party.DEM, seed=7)
        assert len(chosen) == len(set(chosen)) == 4
        most_negative = set(np.argsort(theta)[:10].tolist())
        assert set(chosen) <= most_negative

    def test_deterministic(self):
        truth = synthetic_truth(100, 10, seed=0)
        a = select_protesters(truth, 4, Party.DEM, seed=3)
        assert a == select_protesters(truth, 4, Party.DEM, seed=3)

    def test_requires_side_members(self):
        truth = ModelState(np.full((5, 1), 1.0), np.zeros(2), np.ones((2, 1)))
        with pytest.raises(ValueError):
            select_protesters(truth, 1, Party.DEM, seed=0)


class TestSelectProtestBills:
    def test_all_bills(self):
        truth = synthetic_truth(10, 8, seed=0)
        assert sorted(select_protest_bills(truth, 8, seed=0)) == list(range(8))

    def test_top_quartile_membership(self):
        beta = np.array([0.1, 0.2, 5.0, 6.0]).reshape(-1, 1)
        truth = ModelState(np.zeros((3, 1)), np.zeros(4), beta)
        chosen = select_protest_bills(truth, 1, seed=0)
        assert chosen[0] in (2, 3)

    def test_deterministic(self):
        truth = synthetic_truth(10, 40, seed=0)
        assert select_protest_bills(truth, 5, seed=2) == select_protest_bills(
            truth, 5, seed=2
        )


class TestInjectProtests:
    def test_empty_protesters_no_change(self):
        truth = synthetic_truth(10, 12, seed=0)
        data = generate_sincere(truth, seed=0)
        out = inject_protests(data, [], [], truth=truth)
        np.testing.assert_array_equal(out.data.votes, data.votes)
        assert out.protest_cells == []

    def test_flip_count_four_by_eighty(self):
        truth = synthetic_truth(395, 1455, seed=0)
        sim = run_simulation(
            SimulationSpec(truth=truth, n_protesters=4, protest_votes_per_protester=80,
                           seed=0)
        )
        assert len(sim.protest_cells) == 4 * 80 == 320
        assert len(set(sim.protest_cells)) == 320

    def test_double_flip_is_involution(self):
        truth = synthetic_truth(20, 30, seed=1)
        data = generate_sincere(truth, seed=1)
        cells_bills = [2, 5, 9]
        once = inject_protests(data, [0, 3], cells_bills, truth=truth)
        twice = inject_protests(once.data, [0, 3], cells_bills, truth=truth)
        np.testing.assert_array_equal(twice.data.votes, data.votes)

    def test_flipped_cells_are_negated(self):
        truth = synthetic_truth(20, 30, seed=1)
        data = generate_sincere(truth, seed=1)
        out = inject_protests(data, [1], [4, 7], truth=truth)
        for i, j in out.protest_cells:
            a, b = int(data.votes[i, j]), int(out.data.votes[i, j])
            assert {a, b} == {int(Vote.YEA), int(Vote.NAY)}

    def test_missing_cell_rejected(self):
        truth = synthetic_truth(5, 5, seed=0)
        data = generate_sincere(truth, seed=0)
        data.votes[0, 0] = np.int8(Vote.MISSING)
        with pytest.raises(ValueError):
            inject_protests(data, [0], [0], truth=truth)


class TestRunSimulation:
    def test_zero_protest_equals_sincere(self):
        truth = synthetic_truth(30, 40, seed=2)
        sim = run_simulation(SimulationSpec(truth=truth, seed=2))
        sincere = generate_sincere(truth, seed=2)
        np.testing.assert_array_equal(sim.data.votes, sincere.votes)

    def test_protest_cells_land_on_observed_high_slope_bills(self):
        truth = synthetic_truth(100, 200, seed=3)
        sim = run_simulation(
            SimulationSpec(truth=truth, n_protesters=3, protest_votes_per_protester=10,
                           seed=3, missing_rate=0.1)
        )
        magnitude = np.abs(truth.beta[:, 0])
        quartile_floor = np.quantile(magnitude, 0.75)
        sincere = generate_sincere(truth, seed=3, missing_rate=0.1)
        for i, j in sim.protest_cells:
            assert magnitude[j] >= quartile_floor * (1 - 1e-12)
            assert int(sincere.votes[i, j]) != int(Vote.MISSING)

    def test_deterministic_end_to_end(self):
        truth = synthetic_truth(50, 60, seed=4)
        spec = SimulationSpec(truth=truth, n_protesters=2,
                              protest_votes_per_protester=5, seed=4)
        a = run_simulation(spec)
        b = run_simulation(spec)
        np.testing.assert_array_equal(a.data.votes, b.data.votes)
        assert a.protest_cells == b.protest_cells

    def test_spec_validation(self):
        truth = synthetic_truth(10, 10, seed=0)
        with pytest.raises(ValueError):
            SimulationSpec(truth=truth, n_protesters=-1)
        with pytest.raises(ValueError):
            SimulationSpec(truth=truth, protest_votes_per_protester=11)
        with pytest.raises(ValueError):
            SimulationSpec(truth=truth, missing_rate=1.0)
        with pytest.raises(ValueError):
            SimulationSpec(truth=truth, n_protesters=6)
