"""Tests for the ReLN layer toolbox."""

import numpy as np
import pytest
from pydantic import ValidationError

from errors import ShapeError
from lie.algebra import conjugate_features, sample_group
from lie.forms import form_for_model
from network import layers as L
from tests.helpers import assert_close, relative_deviation


def numeric_gradient(fn, value, h=1e-6):
    """Central differences of a scalar function with respect to every entry of ``value``."""
    grad = np.zeros_like(value)
    for index in np.ndindex(value.shape):
        original = value[index]
        value[index] = original + h
        plus = fn()
        value[index] = original - h
        minus = fn()
        value[index] = original
        grad[index] = (plus - minus) / (2 * h)
    return grad


class TestAlgFeature:
    def test_accepts_matching_k(self, sp4, features):
        feature = L.AlgFeature(data=features(sp4, 2), algebra=sp4)
        assert feature.data.shape == (2, sp4.K, 3)

    def test_rejects_wrong_k(self, sp4):
        with pytest.raises(ValidationError):
            L.AlgFeature(data=np.zeros((2, 5, 3)), algebra=sp4)

    def test_rejects_nan(self, sp4):
        data = np.zeros((1, sp4.K, 1))
        data[0, 0, 0] = np.nan
        with pytest.raises(ValidationError):
            L.AlgFeature(data=data, algebra=sp4)


class TestLinear:
    def test_mixes_channels(self):
        x = np.zeros((1, 3, 2))
        x[0, :, 0] = [1.0, 0.0, 0.0]
        x[0, :, 1] = [0.0, 1.0, 0.0]
        W = np.array([[1.0, 2.0, 0.0], [1.0, 0.0, -1.0]])
        y = L.linear_forward(x, W)
        assert np.allclose(y[0, :, 0], [1.0, 1.0, 0.0])
        assert np.allclose(y[0, :, 1], [2.0, 0.0, 0.0])
        assert np.allclose(y[0, :, 2], [0.0, -1.0, 0.0])

    def test_channel_mismatch(self, so3, features):
        with pytest.raises(ShapeError):
            L.linear_forward(features(so3, 2, channels=3), np.eye(2))

    def test_backward_matches_finite_differences(self, sp4, features, rng):
        x = features(sp4, 2, channels=3)
        W = rng.normal(size=(3, 4))
        R = rng.normal(size=(2, sp4.K, 4))
        grad_x, grad_W = L.linear_backward(x, W, R)
        assert_close(grad_W, numeric_gradient(lambda: np.sum(L.linear_forward(x, W) * R), W), 1e-7)
        assert_close(grad_x, numeric_gradient(lambda: np.sum(L.linear_forward(x, W) * R), x), 1e-7)

    def test_backward_over_set_axis(self, so3, features, rng):
        x = features(so3, 2, 3, channels=3)
        W = rng.normal(size=(3, 2))
        R = rng.normal(size=(2, 3, so3.K, 2))
        grad_x, grad_W = L.linear_backward(x, W, R)
        per_sample = [L.linear_backward(x[i], W, R[i]) for i in range(2)]
        assert_close(grad_W, sum(g for _, g in per_sample), 1e-12)
        assert_close(grad_x, np.stack([g for g, _ in per_sample]), 1e-12)


class TestRelu:
    def test_positive_gate_adds_direction(self, so3, features):
        x = features(so3, 1, channels=2)
        y = L.relu_forward(x, np.eye(2), np.eye(3))
        norms = np.sum(x * x, axis=-2)
        assert np.allclose(y, x + norms[:, None, :] * x)

    def test_negative_gate_is_identity(self, so3, features):
        x = features(so3, 1, channels=2)
        assert np.allclose(L.relu_forward(x, -np.eye(2), np.eye(3)), x)

    def test_leaky_mixes_identity_and_rectified(self, sp4, features, rng):
        form = form_for_model(sp4)
        x = features(sp4, 2)
        U = rng.normal(size=(3, 3))
        rectified = L.relu_forward(x, U, form)
        assert np.allclose(L.relu_forward(x, U, form, alpha=0.3), 0.3 * x + 0.7 * rectified)

    def test_gates_are_invariant(self, algebra, features, rng):
        form = form_for_model(algebra)
        element = sample_group(algebra, 0.5, rng)
        x = features(algebra, 2)
        U = rng.normal(size=(3, 3))
        _, s = L.relu_gates(x, U, form)
        _, s_moved = L.relu_gates(conjugate_features(x, element), U, form)
        assert_close(s_moved, s, 1e-9)

    def test_rejects_non_square_direction_map(self, so3, features):
        with pytest.raises(ShapeError):
            L.relu_gates(features(so3, 1, channels=2), np.zeros((2, 3)), np.eye(3))

    @pytest.mark.parametrize("alpha", [0.0, 0.2])
    def test_backward_matches_finite_differences(self, sp4, features, rng, alpha):
        form = form_for_model(sp4)
        x = features(sp4, 2, scale=0.5)
        U = rng.normal(size=(3, 3))
        R = rng.normal(size=x.shape)
        grad_x, grad_U = L.relu_backward(x, U, form, alpha, R)
        assert_close(grad_U, numeric_gradient(lambda: np.sum(L.relu_forward(x, U, form, alpha) * R), U), 1e-6)
        assert_close(grad_x, numeric_gradient(lambda: np.sum(L.relu_forward(x, U, form, alpha) * R), x), 1e-6)


class TestBracket:
    def test_equal_maps_cancel(self, sp4, features):
        x = features(sp4, 2)
        W = np.eye(3)
        assert np.allclose(L.bracket_forward(x, W, W, sp4), x)

    def test_so3_is_cross_product(self, so3, features, rng):
        x = features(so3, 1, channels=2)
        Wa = rng.normal(size=(2, 2))
        Wb = rng.normal(size=(2, 2))
        y = L.bracket_forward(x, Wa, Wb, so3)
        u = L.linear_forward(x, Wa)
        v = L.linear_forward(x, Wb)
        for c in range(2):
            assert np.allclose(y[0, :, c], x[0, :, c] + np.cross(u[0, :, c], v[0, :, c]))

    def test_rejects_mismatched_maps(self, so3, features):
        with pytest.raises(ShapeError):
            L.bracket_forward(features(so3, 1, channels=2), np.eye(2), np.eye(3)[:2], so3)

    def test_backward_matches_finite_differences(self, gl3, features, rng):
        x = features(gl3, 2, channels=2, scale=0.5)
        Wa = rng.normal(size=(2, 2))
        Wb = rng.normal(size=(2, 2))
        R = rng.normal(size=x.shape)

        def loss():
            return np.sum(L.bracket_forward(x, Wa, Wb, gl3) * R)

        grad_x, grad_Wa, grad_Wb = L.bracket_backward(x, Wa, Wb, gl3, R)
        assert_close(grad_Wa, numeric_gradient(loss, Wa), 1e-7)
        assert_close(grad_Wb, numeric_gradient(loss, Wb), 1e-7)
        assert_close(grad_x, numeric_gradient(loss, x), 1e-7)


class TestEquivariance:
    """Every layer commutes with the adjoint action of random group elements."""

    TRIALS = 100

    def test_layers_commute_with_adjoint(self, algebra, features, rng):
        form = form_for_model(algebra)
        worst = dict.fromkeys(("linear", "relu", "leaky_relu", "bracket", "gate", "readout"), 0.0)
        for _ in range(self.TRIALS):
            element = sample_group(algebra, 0.5, rng)
            x = features(algebra, 2, scale=0.5)
            moved = conjugate_features(x, element)
            W, U, Wa, Wb = (rng.normal(0.0, 1.0 / np.sqrt(3), size=(3, 3)) for _ in range(4))
            cases = {
                "linear": lambda z: L.linear_forward(z, W),
                "relu": lambda z: L.relu_forward(z, U, form),
                "leaky_relu": lambda z: L.relu_forward(z, U, form, 0.2),
                "bracket": lambda z: L.bracket_forward(z, Wa, Wb, algebra),
            }
            for name, layer in cases.items():
                deviation = relative_deviation(layer(moved), conjugate_features(layer(x), element))
                worst[name] = max(worst[name], deviation)
            gate = relative_deviation(L.relu_gates(moved, U, form)[1], L.relu_gates(x, U, form)[1])
            readout = relative_deviation(L.invariant_forward(moved, form), L.invariant_forward(x, form))
            worst["gate"] = max(worst["gate"], gate)
            worst["readout"] = max(worst["readout"], readout)
        assert max(worst.values()) <= 1e-9, worst

    def test_pool_selection_is_stable(self, algebra, features, rng):
        """Confident argmax choices survive conjugation, and then the pooled output is equivariant."""
        form = form_for_model(algebra)
        for _ in range(self.TRIALS):
            element = sample_group(algebra, 0.5, rng)
            x = features(algebra, 2, 4, scale=0.5)
            Wd = rng.normal(0.0, 1.0 / np.sqrt(3), size=(3, 3))
            moved = conjugate_features(x, element)
            scores = np.sort(L.pool_scores(x, Wd, form), axis=-2)
            confident = scores[..., -1, :] - scores[..., -2, :] > 1e-6
            same = L.pool_select(moved, Wd, form) == L.pool_select(x, Wd, form)
            assert np.all(same | ~confident)
            if np.all(confident):
                expected = conjugate_features(L.pool_forward(x, Wd, form), element)
                assert relative_deviation(L.pool_forward(moved, Wd, form), expected) <= 1e-9


class TestPool:
    def test_selects_highest_score(self):
        # Under the identity Gram and Wd = I the score is the squared norm
        x = np.zeros((1, 3, 3, 1))
        x[0, 0, :, 0] = [1.0, 0.0, 0.0]
        x[0, 1, :, 0] = [0.0, 3.0, 0.0]
        x[0, 2, :, 0] = [0.0, 0.0, 2.0]
        y = L.pool_forward(x, np.eye(1), np.eye(3))
        assert y.shape == (1, 3, 1)
        assert np.allclose(y[0, :, 0], [0.0, 3.0, 0.0])

    def test_ties_go_to_lowest_index(self):
        x = np.ones((1, 2, 3, 1))
        assert L.pool_select(x, np.eye(1), np.eye(3))[0, 0] == 0

    def test_per_channel_selection(self):
        x = np.zeros((1, 2, 3, 2))
        x[0, 0, 0, 0] = 5.0
        x[0, 1, 0, 1] = 5.0
        assert list(L.pool_select(x, np.eye(2), np.eye(3))[0]) == [0, 1]

    def test_requires_set_axis(self, so3, features):
        with pytest.raises(ShapeError):
            L.pool_scores(features(so3, channels=1), np.eye(1), np.eye(3))

    def test_empty_set_rejected(self):
        with pytest.raises(ShapeError):
            L.pool_scores(np.zeros((1, 0, 3, 1)), np.eye(1), np.eye(3))

    def test_equivariant_and_permutation_invariant(self, algebra, features, rng):
        form = form_for_model(algebra)
        element = sample_group(algebra, 0.5, rng)
        x = features(algebra, 2, 5)
        Wd = rng.normal(size=(3, 3))
        y = L.pool_forward(x, Wd, form)
        moved = L.pool_forward(conjugate_features(x, element), Wd, form)
        assert_close(moved, conjugate_features(y, element), 1e-8)
        permuted = x[:, rng.permutation(5)]
        assert np.array_equal(L.pool_forward(permuted, Wd, form), y)

    def test_backward_routes_to_selected_element(self, sp4, features, rng):
        form = form_for_model(sp4)
        x = features(sp4, 2, 4)
        Wd = rng.normal(size=(3, 3))
        grad_out = rng.normal(size=(2, sp4.K, 3))
        grad_x, grad_Wd = L.pool_backward(x, Wd, form, grad_out)
        index = L.pool_select(x, Wd, form)
        assert np.array_equal(grad_Wd, np.zeros_like(Wd))
        for b in range(2):
            for c in range(3):
                for n in range(4):
                    expected = grad_out[b, :, c] if n == index[b, c] else 0.0
                    assert np.allclose(grad_x[b, n, :, c], expected)


class TestInvariantReadout:
    def test_value(self):
        x = np.array([[[1.0], [2.0], [2.0]]])
        assert L.invariant_forward(x, np.eye(3))[0, 0] == pytest.approx(9.0)

    def test_backward(self, sp4, features, rng):
        form = form_for_model(sp4)
        x = features(sp4, 2)
        R = rng.normal(size=(2, 3))
        expected = numeric_gradient(lambda: np.sum(L.invariant_forward(x, form) * R), x)
        assert_close(L.invariant_backward(x, form, R), expected, 1e-6)


class TestDense:
    def test_forward(self):
        h = np.array([[1.0, 2.0]])
        W = np.array([[1.0], [-1.0]])
        assert L.dense_forward(h, W, np.array([0.5]))[0, 0] == pytest.approx(-0.5)

    def test_width_mismatch(self):
        with pytest.raises(ShapeError):
            L.dense_forward(np.zeros((1, 3)), np.zeros((2, 1)), np.zeros(1))

    def test_backward(self, rng):
        h = rng.normal(size=(4, 3))
        W = rng.normal(size=(3, 2))
        b = rng.normal(size=2)
        R = rng.normal(size=(4, 2))
        grad_h, grad_W, grad_b = L.dense_backward(h, W, R)
        assert_close(grad_W, numeric_gradient(lambda: np.sum(L.dense_forward(h, W, b) * R), W), 1e-8)
        assert_close(grad_b, numeric_gradient(lambda: np.sum(L.dense_forward(h, W, b) * R), b), 1e-8)
        assert_close(grad_h, numeric_gradient(lambda: np.sum(L.dense_forward(h, W, b) * R), h), 1e-8)
