"""Identification transforms: standardization, sign anchoring, alignment."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from robustirt import (
    AnchorSpec,
    Hyperparams,
    IdentificationError,
    LegislatorMeta,
    ModelState,
    Party,
    penalized_log_posterior,
    procrustes_align,
    sign_anchor,
    standardize,
)
from robustirt.model import linear_predictor_matrix

from conftest import make_matrix

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def _random_state(rng, i=6, j=5, k=2, with_gamma=True):
    gamma = {(1, 2): 4.0, (0, 0): -3.5} if with_gamma else {}
    return ModelState(
        rng.standard_normal((i, k)) * 2 + 0.7,
        rng.standard_normal(j),
        rng.standard_normal((j, k)),
        gamma,
    )


class TestStandardize:
    def test_already_standard_unchanged(self):
        state = ModelState(np.array([[-1.0], [1.0]]), np.array([0.3]), np.array([[0.9]]))
        out = standardize(state)
        np.testing.assert_allclose(out.theta, state.theta, atol=1e-12)
        np.testing.assert_allclose(out.alpha, state.alpha, atol=1e-12)
        np.testing.assert_allclose(out.beta, state.beta, atol=1e-12)

    def test_two_four_example(self):
        # {2, 4} has mean 3 and population variance 1, so positions map to
        # {-1, +1}, slopes are unchanged, and intercepts absorb 3 * beta.
        state = ModelState(np.array([[2.0], [4.0]]), np.array([0.5]), np.array([[1.2]]))
        out = standardize(state)
        np.testing.assert_allclose(out.theta, [[-1.0], [1.0]], atol=1e-12)
        np.testing.assert_allclose(out.beta, [[1.2]], atol=1e-12)
        np.testing.assert_allclose(out.alpha, [0.5 + 3 * 1.2], atol=1e-12)
        np.testing.assert_allclose(
            linear_predictor_matrix(out), linear_predictor_matrix(state), atol=1e-10
        )

    @given(seeds)
    @settings(max_examples=25, deadline=None)
    def test_constraints_and_predictor_preservation(self, seed):
        rng = np.random.default_rng(seed)
        state = _random_state(rng)
        out = standardize(state)
        i_count = out.theta.shape[0]
        assert np.linalg.norm(out.theta.sum(axis=0)) < 1e-10
        cov = out.theta.T @ out.theta / i_count
        assert np.linalg.norm(cov - np.eye(2)) < 1e-10
        np.testing.assert_allclose(
            linear_predictor_matrix(out), linear_predictor_matrix(state), atol=1e-10
        )
        assert out.gamma == state.gamma

    @given(seeds)
    @settings(max_examples=25, deadline=None)
    def test_idempotent(self, seed):
        rng = np.random.default_rng(seed)
        once = standardize(_random_state(rng))
        twice = standardize(once)
        np.testing.assert_allclose(twice.theta, once.theta, atol=1e-10)
        np.testing.assert_allclose(twice.alpha, once.alpha, atol=1e-10)
        np.testing.assert_allclose(twice.beta, once.beta, atol=1e-10)

    def test_singular_covariance_raises(self):
        theta = np.array([[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]])
        state = ModelState(theta, np.zeros(2), np.zeros((2, 2)))
        with pytest.raises(IdentificationError):
            standardize(state)

    def test_single_legislator_raises(self):
        state = ModelState(np.array([[1.0]]), np.zeros(1), np.zeros((1, 1)))
        with pytest.raises(IdentificationError):
            standardize(state)


def _roster(parties):
    return [LegislatorMeta(id=f"L{i}", party=p) for i, p in enumerate(parties)]


class TestSignAnchor:
    def test_negative_party_mean_flips(self):
        state = ModelState(np.array([[0.5], [-0.8], [-0.8]]), np.array([0.1]),
                           np.array([[1.0]]), {(0, 0): 4.0})
        roster = _roster([Party.DEM, Party.REP, Party.REP])
        out = sign_anchor(state, AnchorSpec.party_positive(Party.REP), roster)
        np.testing.assert_allclose(out.theta, -state.theta)
        np.testing.assert_allclose(out.beta, -state.beta)
        np.testing.assert_allclose(out.alpha, state.alpha)
        assert out.gamma == state.gamma

    def test_positive_party_mean_no_op(self):
        state = ModelState(np.array([[-0.5], [0.8], [0.8]]), np.array([0.1]),
                           np.array([[1.0]]))
        roster = _roster([Party.DEM, Party.REP, Party.REP])
        out = sign_anchor(state, AnchorSpec.party_positive(Party.REP), roster)
        np.testing.assert_allclose(out.theta, state.theta)

    def test_legislator_anchor(self):
        state = ModelState(np.array([[-0.5], [0.8]]), np.array([0.1]), np.array([[1.0]]))
        roster = _roster([Party.DEM, Party.REP])
        out = sign_anchor(state, AnchorSpec.legislator_positive("L0"), roster)
        np.testing.assert_allclose(out.theta, -state.theta)

    def test_likelihood_invariant(self, rng):
        data = make_matrix(rng.integers(-1, 2, size=(3, 4)).astype(np.int8))
        state = ModelState(rng.standard_normal((3, 1)), rng.standard_normal(4),
                           rng.standard_normal((4, 1)), {(2, 1): 3.3})
        roster = _roster([Party.DEM, Party.REP, Party.REP])
        out = sign_anchor(state, AnchorSpec.party_positive(Party.DEM), roster)
        hp = Hyperparams()
        assert penalized_log_posterior(out, data, hp) == pytest.approx(
            penalized_log_posterior(state, data, hp), abs=1e-12
        )

    def test_opposite_anchors_restore(self):
        state = ModelState(np.array([[-0.5], [0.8]]), np.array([0.1]), np.array([[1.0]]))
        roster = _roster([Party.DEM, Party.REP])
        flipped = sign_anchor(state, AnchorSpec.legislator_positive("L0"), roster)
        back = sign_anchor(flipped, AnchorSpec.legislator_positive("L1"), roster)
        np.testing.assert_allclose(back.theta, state.theta, atol=1e-12)
        np.testing.assert_allclose(back.beta, state.beta, atol=1e-12)

    def test_missing_anchor_raises(self):
        state = ModelState(np.array([[1.0], [2.0]]), np.zeros(1), np.ones((1, 1)))
        roster = _roster([None, None])
        with pytest.raises(IdentificationError):
            sign_anchor(state, AnchorSpec.party_positive(Party.REP), roster)
        with pytest.raises(IdentificationError):
            sign_anchor(state, AnchorSpec.legislator_positive("nope"), roster)

    def test_multidimensional_rejected(self):
        state = ModelState(np.ones((2, 2)), np.zeros(1), np.ones((1, 2)))
        with pytest.raises(IdentificationError):
            sign_anchor(state, AnchorSpec.party_positive(Party.REP), _roster([Party.REP, None]))


class TestProcrustes:
    def test_self_alignment_identity(self, rng):
        state = _random_state(rng, with_gamma=False)
        out = procrustes_align(state, state.theta)
        np.testing.assert_allclose(out.theta, state.theta, atol=1e-10)

    def test_recovers_known_rotation(self, rng):
        state = _random_state(rng, with_gamma=False)
        a = np.pi / 6
        rot = np.array([[np.cos(a), -np.sin(a)], [np.sin(a), np.cos(a)]])
        reference = state.theta @ rot
        out = procrustes_align(state, reference)
        assert np.linalg.norm(out.theta - reference) < 1e-10
        np.testing.assert_allclose(
            linear_predictor_matrix(out), linear_predictor_matrix(state), atol=1e-10
        )

    @given(seeds)
    @settings(max_examples=25, deadline=None)
    def test_rotation_is_orthogonal_and_predictors_preserved(self, seed):
        rng = np.random.default_rng(seed)
        state = _random_state(rng)
        reference = rng.standard_normal(state.theta.shape)
        out = procrustes_align(state, reference)
        # Recover the applied map from the two position matrices.
        rot, *_ = np.linalg.lstsq(state.theta, out.theta, rcond=None)
        np.testing.assert_allclose(rot.T @ rot, np.eye(2), atol=1e-8)
        np.testing.assert_allclose(
            linear_predictor_matrix(out), linear_predictor_matrix(state), atol=1e-10
        )

    def test_rank_deficient_falls_back(self):
        state = ModelState(np.ones((3, 2)), np.zeros(2), np.ones((2, 2)))
        with pytest.warns(UserWarning, match="rank-deficient"):
            out = procrustes_align(state, np.zeros((3, 2)))
        np.testing.assert_allclose(out.theta, state.theta)

    def test_shape_mismatch(self):
        state = ModelState(np.ones((3, 1)), np.zeros(1), np.ones((1, 1)))
        with pytest.raises(ValueError):
            procrustes_align(state, np.zeros((4, 1)))
