"""Tests for algebra bases, hat/vee and the adjoint action."""

import numpy as np
import pytest

from errors import AlgebraError, ConditioningError, NotInSpanError, ShapeError
from lie.algebra import (
    ad_matrix,
    algebra_from_flag,
    bracket,
    compose,
    conjugate_features,
    exp_element,
    group_element,
    hat,
    identity_element,
    make_algebra,
    sample_algebra,
    sample_group,
    sample_group_or_identity,
    structure_constants,
    vee,
)
from lie.rng import make_rng
from tests.helpers import assert_close


class TestMakeAlgebra:
    @pytest.mark.parametrize(
        ("name", "n", "size", "K"),
        [("so3", None, 3, 3), ("sl2", None, 2, 3), ("sl3", None, 3, 8), ("sp4", None, 4, 10), ("so13", None, 4, 6), ("gln", 4, 4, 16)],
    )
    def test_dimensions(self, name, n, size, K):
        basis = make_algebra(name, n)
        assert basis.n == size
        assert basis.K == K
        assert basis.basis.shape == (K, size, size)

    def test_unknown_name(self):
        with pytest.raises(AlgebraError):
            make_algebra("e8")

    def test_gln_requires_n(self):
        with pytest.raises(AlgebraError):
            make_algebra("gln", 1)

    def test_tables_are_read_only(self, so3):
        with pytest.raises(ValueError):
            so3.structure[0, 0, 0] = 1.0

    def test_sl_elements_are_traceless(self):
        for name in ("sl2", "sl3"):
            assert np.allclose(np.trace(make_algebra(name).basis, axis1=1, axis2=2), 0.0)

    def test_sp4_elements_are_hamiltonian(self, sp4):
        J = sp4.metric
        for E in sp4.basis:
            assert np.allclose(E.T @ J + J @ E, 0.0)

    def test_so13_preserves_minkowski_metric(self):
        basis = make_algebra("so13")
        eta = basis.metric
        for E in basis.basis:
            assert np.allclose(E.T @ eta + eta @ E, 0.0)


class TestAlgebraFromFlag:
    def test_gl_spelling(self):
        basis = algebra_from_flag("gl3")
        assert basis.name == "gln"
        assert basis.n == 3
        assert basis.label == "gl3"

    def test_named(self):
        assert algebra_from_flag("SP4").name == "sp4"
        assert algebra_from_flag("sl2").K == 3

    def test_rejects_garbage(self):
        with pytest.raises(AlgebraError):
            algebra_from_flag("gl")


class TestHatVee:
    def test_so3_hat_is_cross_product(self, so3, rng):
        v = rng.normal(size=3)
        w = rng.normal(size=3)
        assert np.allclose(hat(v, so3) @ w, np.cross(v, w))

    def test_roundtrip(self, algebra, rng):
        x = sample_algebra(algebra, 1.0, rng, size=20)
        assert np.max(np.abs(vee(hat(x, algebra), algebra) - x)) <= 1e-12

    def test_vee_rejects_matrix_outside_span(self, so3):
        with pytest.raises(NotInSpanError) as excinfo:
            vee(np.eye(3), so3)
        assert excinfo.value.residual > excinfo.value.tolerance

    def test_hat_wrong_length(self, so3):
        with pytest.raises(ShapeError):
            hat(np.zeros(4), so3)


class TestStructureConstants:
    def test_so3_bracket_table(self, so3):
        c = structure_constants(so3)
        # [e1, e2] = e3 and cyclic permutations
        assert c[0, 1, 2] == pytest.approx(1.0)
        assert c[1, 2, 0] == pytest.approx(1.0)
        assert c[2, 0, 1] == pytest.approx(1.0)

    def test_antisymmetric(self, algebra):
        c = structure_constants(algebra)
        assert np.allclose(c, -np.swapaxes(c, 0, 1))

    def test_matches_matrix_bracket(self, algebra, rng):
        x = sample_algebra(algebra, 1.0, rng)
        y = sample_algebra(algebra, 1.0, rng)
        expected = vee(bracket(hat(x, algebra), hat(y, algebra)), algebra)
        assert np.allclose(ad_matrix(x, algebra) @ y, expected, atol=1e-12)


class TestGroupElements:
    def test_identity(self, sp4):
        element = identity_element(sp4)
        assert np.array_equal(element.adj_vec, np.eye(sp4.K))

    def test_adjoint_matches_conjugation(self, algebra, rng):
        element = sample_group(algebra, 0.5, rng)
        x = sample_algebra(algebra, 1.0, rng)
        expected = vee(element.g @ hat(x, algebra) @ element.g_inv, algebra)
        assert_close(element.adj_vec @ x, expected, 1e-12)

    def test_composition_is_homomorphic(self, algebra, rng):
        a = sample_group(algebra, 0.5, rng)
        b = sample_group(algebra, 0.5, rng)
        assert_close(compose(algebra, a, b).adj_vec, a.adj_vec @ b.adj_vec, 1e-9)

    def test_exp_element_inverse(self, gl3, rng):
        element = exp_element(sample_algebra(gl3, 0.5, rng), gl3)
        assert np.allclose(element.g @ element.g_inv, np.eye(3), atol=1e-12)

    def test_zero_sigma_gives_identity(self, gl3, rng):
        assert np.array_equal(sample_group_or_identity(gl3, 0.0, rng).g, np.eye(3))

    def test_non_positive_sigma_rejected(self, gl3, rng):
        with pytest.raises(ValueError):
            sample_algebra(gl3, 0.0, rng)

    def test_ill_conditioned_samples_give_up(self, gl3):
        # sigma this large never yields condition number <= 1e6
        with pytest.raises(ConditioningError):
            sample_group(gl3, 50.0, make_rng(0))

    def test_group_element_from_matrices(self, so3):
        theta = 0.3
        R = np.array([[np.cos(theta), -np.sin(theta), 0.0], [np.sin(theta), np.cos(theta), 0.0], [0.0, 0.0, 1.0]])
        element = group_element(so3, R, R.T)
        # Ad_R on so3 coordinates is R itself
        assert np.allclose(element.adj_vec, R, atol=1e-12)

    def test_conjugate_features_acts_per_channel(self, sp4, rng):
        element = sample_group(sp4, 0.5, rng)
        x = rng.normal(size=(2, sp4.K, 3))
        moved = conjugate_features(x, element)
        assert np.allclose(moved[1, :, 2], element.adj_vec @ x[1, :, 2])


class TestRng:
    def test_streams_are_reproducible(self):
        assert np.array_equal(make_rng(5, "data").normal(size=4), make_rng(5, "data").normal(size=4))

    def test_streams_differ(self):
        assert not np.array_equal(make_rng(5, "data").normal(size=4), make_rng(5, "init").normal(size=4))

    def test_index_splits_stream(self):
        assert not np.array_equal(make_rng(5, "shuffle", 0).normal(size=4), make_rng(5, "shuffle", 1).normal(size=4))
