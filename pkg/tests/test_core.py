import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from riemann_newton.core import (
    CurvatureSign,
    ManifoldDescriptor,
    TangentOperator,
    banach_invert,
    gram_schmidt,
    lu_checked,
    operator_norm,
    solve_checked,
)
from riemann_newton.errors import BasePointError, SingularOperatorError
from riemann_newton.manifolds import SPD, Euclidean, Sphere


def op(matrix, n=None):
    matrix = np.asarray(matrix, dtype=float)
    m = Euclidean(matrix.shape[0])
    p = m.zero_vector(None)
    return TangentOperator(p, matrix, m.frame(p), m)


def test_descriptor_validates_dimensions():
    with pytest.raises(ValueError):
        ManifoldDescriptor(3, 2, lambda p: 1.0, CurvatureSign.FLAT)
    d = Sphere(3).descriptor
    assert (d.intrinsic_dim, d.ambient_dim) == (2, 3)
    assert d.curvature_sign is CurvatureSign.NONNEGATIVE
    assert d.injectivity_radius_fn(np.array([0.0, 0.0, 1.0])) == pytest.approx(math.pi)


def test_inner_flat_orthogonal():
    m = Euclidean(2)
    assert m.inner(np.zeros(2), np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 0.0


def test_inner_with_zero_vector_vanishes():
    m = Sphere(3)
    p = np.array([0.0, 0.0, 1.0])
    assert m.inner(p, m.zero_vector(p), np.array([1.0, 2.0, 0.0])) == 0.0


def test_spd_inner_at_identity():
    m = SPD(2)
    assert m.inner(np.eye(2), np.eye(2), np.eye(2)) == pytest.approx(2.0)


def test_inner_rejects_vector_from_other_base():
    m = Sphere(3)
    p = np.array([1.0, 0.0, 0.0])
    v_at_q = np.array([1.0, 0.0, 0.0])  # tangent at (0,1,0), not at p
    with pytest.raises(BasePointError):
        m.inner(p, v_at_q, v_at_q)


def test_gram_schmidt_drops_dependent_candidates():
    basis = gram_schmidt([np.array([1.0, 1.0]), np.array([2.0, 2.0]), np.array([0.0, 1.0])], np.dot)
    assert len(basis) == 2
    assert np.allclose(np.array(basis) @ np.array(basis).T, np.eye(2))


@pytest.mark.parametrize(
    "matrix, expected",
    [(np.eye(3), 1.0), (np.zeros((2, 2)), 0.0), (np.diag([3.0, 0.5]), 3.0)],
)
def test_operator_norm_examples(matrix, expected):
    assert operator_norm(op(matrix)) == pytest.approx(expected)


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, (3, 3), elements=st.floats(-10, 10)))
def test_operator_norm_is_sup_over_unit_vectors(matrix):
    A = op(matrix)
    rng = np.random.default_rng(0)
    vs = rng.standard_normal((200, 3))
    vs /= np.linalg.norm(vs, axis=1)[:, None]
    sampled = np.linalg.norm(vs @ matrix.T, axis=1).max()
    assert sampled <= operator_norm(A) * (1 + 1e-12) + 1e-12
    assert operator_norm(A) == pytest.approx(np.linalg.svd(matrix, compute_uv=False).max(), abs=1e-12)


def test_banach_identity():
    inv, bound = banach_invert(op(np.eye(2)))
    assert np.allclose(inv.matrix, np.eye(2))
    assert bound == pytest.approx(1.0)


def test_banach_half_identity_equality_case():
    inv, bound = banach_invert(op(0.5 * np.eye(2)))
    assert np.allclose(inv.matrix, 2.0 * np.eye(2))
    assert inv.norm() == pytest.approx(2.0)
    assert bound == pytest.approx(2.0)


def test_banach_far_from_identity_has_no_bound():
    inv, bound = banach_invert(op(np.diag([4.0, 1.0])))
    assert bound is None
    assert np.allclose(inv.matrix, np.diag([0.25, 1.0]))


def test_banach_rank_deficient_is_singular():
    with pytest.raises(SingularOperatorError):
        banach_invert(op(np.diag([1.0, 1e-15])))


@settings(max_examples=100, deadline=None)
@given(arrays(np.float64, (3, 3), elements=st.floats(-0.3, 0.3)))
def test_banach_bound_holds_near_identity(perturbation):
    B = op(np.eye(3) + perturbation)
    inv, bound = banach_invert(B)
    defect = np.linalg.norm(perturbation, 2)
    if defect < 1.0:
        assert bound == pytest.approx(1.0 / (1.0 - defect))
        assert inv.norm() <= bound * (1 + 1e-12)


def test_lu_checked_rejects_zero_and_nonfinite():
    with pytest.raises(SingularOperatorError):
        lu_checked(np.zeros((2, 2)))
    with pytest.raises(SingularOperatorError):
        lu_checked(np.array([[1.0, np.nan], [0.0, 1.0]]))


def test_singular_error_carries_condition():
    with pytest.raises(SingularOperatorError) as info:
        solve_checked(np.array([[1.0, 1.0], [1.0, 1.0 + 1e-14]]), np.ones(2))
    assert info.value.condition > 1e12


def test_operator_composition_and_apply():
    A = op([[1.0, 2.0], [0.0, 1.0]])
    B = op([[0.0, 1.0], [1.0, 0.0]])
    assert np.allclose((A @ B).matrix, A.matrix @ B.matrix)
    assert np.allclose(A @ np.array([1.0, 1.0]), [3.0, 1.0])


def test_operator_shape_checked():
    m = Euclidean(2)
    with pytest.raises(ValueError):
        TangentOperator(np.zeros(2), np.eye(3), m.frame(np.zeros(2)), m)
