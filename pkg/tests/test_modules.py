import numpy as np
import pytest
from hypothesis import given

from conftest import algebras, seeds
from pimsner_lab.algebra import AlgElement, BlockMatrix, ScalarAlgebra
from pimsner_lab.errors import StructuralError
from pimsner_lab.modules import (ModOperator, ModuleSpace, direct_sum_space, direct_sum_vector, inner, operator_norm,
                                 rank_one)


def _projective(A, m, rng):
    from pimsner_lab.correspondence import random_fgp_corr
    return random_fgp_corr(A, m, rng, free=False).space


def test_orthonormal_basis(c6):
    E = ModuleSpace.free(c6, 2)
    e1, e2 = E.basis_vector(0), E.basis_vector(1)
    assert inner(e1, e2).allclose(AlgElement.zero(c6))
    assert inner(e1, e1).allclose(AlgElement.identity(c6))


def test_inner_coordinate_formula(c6, rng):
    E = ModuleSpace.free(c6, 2)
    a, b = AlgElement.random(c6, rng), AlgElement.random(c6, rng)
    e1 = E.basis_vector(0)
    assert inner(e1 * a, e1 * b).allclose(a.adjoint() * b)


def test_rank_one_examples(rng):
    C = ScalarAlgebra((1,))
    one = ModuleSpace.free(C, 1).basis_vector(0)
    assert rank_one(one, one).allclose(ModOperator.identity(ModuleSpace.free(C, 1)))
    A = ScalarAlgebra((2, 1))
    E = ModuleSpace.free(A, 3)
    x, y = E.random_vector(rng), E.basis_vector(0)
    z = E.basis_vector(1) * AlgElement.random(A, rng)
    assert rank_one(x, y)(z).norm() < 1e-14


def test_rank_one_composition(rng):
    A = ScalarAlgebra((2, 1))
    E = ModuleSpace.free(A, 2)
    x, y, u, v = (E.random_vector(rng) for _ in range(4))
    comp = rank_one(x, y) @ rank_one(u, v)
    for _ in range(20):
        z = E.random_vector(rng)
        expect = x * (inner(y, u) * inner(v, z))
        assert comp(z).dist(expect) < 1e-9


def test_operator_norms(rng, c6):
    E = ModuleSpace.free(c6, 3)
    assert operator_norm(ModOperator.identity(E)) == pytest.approx(1.0)
    assert operator_norm(ModOperator.zero(E, E)) == 0.0
    x = E.random_vector(rng)
    x = x * (1.0 / x.norm())
    assert operator_norm(rank_one(x, x)) == pytest.approx(1.0, abs=1e-12)


def test_rejects_non_projection(c6):
    with pytest.raises(StructuralError):
        ModuleSpace(c6, 1, BlockMatrix.from_element(2 * AlgElement.identity(c6)))


def test_vector_outside_range(rng):
    A = ScalarAlgebra((2,))
    P = _projective(A, 2, rng)
    if P.is_free:
        pytest.skip("random draw gave a free module")
    with pytest.raises(StructuralError):
        P.vector([AlgElement.random(A, rng), AlgElement.random(A, rng)])


@given(algebras(), seeds)
def test_cauchy_schwarz(A, seed):
    rng = np.random.default_rng(seed)
    E = _projective(A, 2, rng)
    x, y = E.random_vector(rng), E.random_vector(rng)
    assert inner(x, y).norm() <= x.norm() * y.norm() + 1e-9


def test_cauchy_schwarz_seeded_pairs():
    rng = np.random.default_rng(7)
    A = ScalarAlgebra((1, 2, 3))
    E = ModuleSpace.free(A, 2)
    for _ in range(200):
        x, y = E.random_vector(rng), E.random_vector(rng)
        assert inner(x, y).norm() <= x.norm() * y.norm() + 1e-9


@given(algebras(), seeds)
def test_projection_is_selfadjoint_for_inner(A, seed):
    rng = np.random.default_rng(seed)
    E = _projective(A, 2, rng)
    F = ModuleSpace.free(A, 2)
    x, y = F.random_vector(rng), F.random_vector(rng)
    Px = F.vector(E.project(x.mat))
    Py = F.vector(E.project(y.mat))
    assert inner(Px, y).allclose(inner(x, Py), atol=1e-10)


@given(algebras(), seeds)
def test_direct_sum_inner(A, seed):
    rng = np.random.default_rng(seed)
    H, K = ModuleSpace.free(A, 1), _projective(A, 2, rng)
    S = direct_sum_space(H, K)
    x1, x2 = H.random_vector(rng), H.random_vector(rng)
    y1, y2 = K.random_vector(rng), K.random_vector(rng)
    s1, s2 = direct_sum_vector(S, x1, y1), direct_sum_vector(S, x2, y2)
    assert inner(s1, s2).allclose(inner(x1, x2) + inner(y1, y2), atol=1e-12)
    assert s1.norm() ** 2 <= x1.norm() ** 2 + y1.norm() ** 2 + 1e-10


@given(algebras(), seeds)
def test_adjoint_operator(A, seed):
    rng = np.random.default_rng(seed)
    E = ModuleSpace.free(A, 2)
    T = ModOperator(E, E, BlockMatrix.from_entries(A, [[AlgElement.random(A, rng) for _ in range(2)] for _ in range(2)]))
    x, y = E.random_vector(rng), E.random_vector(rng)
    assert inner(T(x), y).allclose(inner(x, T.adjoint()(y)), atol=1e-10)
