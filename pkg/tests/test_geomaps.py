"""Tests for the vector and covariance embeddings."""

import numpy as np
import pytest
from pydantic import ValidationError

from errors import ConditioningError, ShapeError
from lie.algebra import conjugate_features, group_element, hat, make_algebra
from lie.geomaps import (
    FourMomentum,
    SpdMatrix,
    block_embed,
    edge_features,
    embed_velocity_covariance,
    lorentz_group_sample,
    lorentz_lift,
    minkowski_metric,
    orthogonal_lift,
    pairwise_invariant,
    skew_extract,
    spd_exp,
    spd_log,
    stabilize,
)
from lie.linalg import matrix_exp


def _rotation(rng):
    return matrix_exp(hat(rng.normal(size=3), make_algebra("so3")))


def _spd(rng, n=3):
    A = rng.normal(size=(n, n))
    return A @ A.T + n * np.eye(n)


class TestFourMomentum:
    def test_rejects_wrong_length(self):
        with pytest.raises(ValidationError):
            FourMomentum(p=[1.0, 2.0, 3.0])

    def test_rejects_non_finite(self):
        with pytest.raises(ValidationError):
            FourMomentum(p=[np.inf, 0.0, 0.0, 0.0])


class TestLorentzLift:
    def test_layout(self):
        p = np.array([5.0, 1.0, 2.0, 3.0])
        lifted = lorentz_lift(p)
        assert np.array_equal(lifted[:4, 4], p)
        assert np.array_equal(lifted[4, :4], p @ minkowski_metric())
        assert lifted[4, 4] == 0.0

    def test_conjugation_matches_boost(self, rng):
        element = lorentz_group_sample(0.5, rng)
        p = rng.normal(size=4)
        G = block_embed(element.g)
        G_inv = block_embed(element.g_inv)
        assert np.allclose(G @ lorentz_lift(p) @ G_inv, lorentz_lift(element.g @ p), atol=1e-10)

    def test_invariant_is_scaled_minkowski_product(self, rng):
        p = rng.normal(size=4)
        q = rng.normal(size=4)
        dot = float(p @ minkowski_metric() @ q)
        assert pairwise_invariant(p, q) == pytest.approx(float(stabilize(20.0 * dot)))

    def test_invariant_under_boosts(self, rng):
        element = lorentz_group_sample(0.5, rng)
        p = rng.normal(size=4)
        q = rng.normal(size=4)
        moved = pairwise_invariant(element.g @ p, element.g @ q)
        assert moved == pytest.approx(pairwise_invariant(p, q), rel=1e-9, abs=1e-12)

    def test_edge_features(self):
        p = np.array([2.0, 1.0, 0.0, 0.0])
        self_term, pair_term = edge_features(p, p)
        assert self_term == pair_term == pytest.approx(float(stabilize(60.0)))

    def test_unknown_signature(self):
        with pytest.raises(ValueError):
            minkowski_metric("++++")


class TestOrthogonalLift:
    def test_conjugation_matches_rotation(self, rng):
        R = _rotation(rng)
        v = rng.normal(size=3)
        G = block_embed(R)
        assert np.allclose(G @ orthogonal_lift(v) @ G.T, orthogonal_lift(R @ v), atol=1e-12)

    def test_rejects_matrix(self):
        with pytest.raises(ShapeError):
            orthogonal_lift(np.eye(2))


class TestSpdMaps:
    def test_log_exp_roundtrip(self, rng):
        C = _spd(rng)
        assert np.allclose(spd_exp(spd_log(C)).C, C, atol=1e-10)

    def test_log_of_identity(self):
        assert np.allclose(spd_log(np.eye(3)), 0.0)

    def test_log_commutes_with_congruence(self, rng):
        R = _rotation(rng)
        C = _spd(rng)
        assert np.allclose(spd_log(R @ C @ R.T), R @ spd_log(C) @ R.T, atol=1e-10)

    def test_log_rejects_indefinite(self):
        with pytest.raises(ConditioningError):
            spd_log(np.diag([1.0, -1.0, 2.0]))

    def test_log_rejects_ill_conditioned(self):
        with pytest.raises(ConditioningError):
            spd_log(np.diag([1.0, 1e-14, 1.0]))

    def test_spd_matrix_validates(self):
        with pytest.raises(ValidationError):
            SpdMatrix(C=np.diag([1.0, 0.0]))
        assert SpdMatrix(C=np.eye(2)).C.shape == (2, 2)


class TestSkewExtract:
    def test_recovers_vector(self, so3, rng):
        v = rng.normal(size=3)
        assert np.allclose(skew_extract(hat(v, so3)), v)

    def test_ignores_symmetric_part(self, rng):
        S = _spd(rng)
        assert np.allclose(skew_extract(S), 0.0)

    def test_rotation_equivariant(self, rng):
        R = _rotation(rng)
        A = rng.normal(size=(3, 3))
        assert np.allclose(skew_extract(R @ A @ R.T), R @ skew_extract(A), atol=1e-12)


class TestStabilize:
    def test_odd_and_zero_preserving(self):
        z = np.array([-3.0, 0.0, 2.5])
        assert np.allclose(stabilize(-z), -stabilize(z))
        assert stabilize(0.0) == 0.0

    def test_monotone(self):
        z = np.linspace(-100, 100, 101)
        assert np.all(np.diff(stabilize(z)) > 0)


class TestEmbedVelocityCovariance:
    def test_shape(self, rng):
        assert embed_velocity_covariance(rng.normal(size=3), _spd(rng)).shape == (9, 2)

    def test_congruence_becomes_adjoint_action(self, gl3, rng):
        R = _rotation(rng)
        v = rng.normal(size=3)
        C = _spd(rng)
        moved = embed_velocity_covariance(R @ v, R @ C @ R.T)
        expected = conjugate_features(embed_velocity_covariance(v, C), group_element(gl3, R, R.T))
        assert np.allclose(moved, expected, atol=1e-10)

    def test_raw_covariance_channel(self, gl3, rng):
        C = _spd(rng)
        features = embed_velocity_covariance(np.zeros(3), C, use_log=False)
        assert np.allclose(hat(features[:, 1], gl3), C)
