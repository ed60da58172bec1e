import numpy as np
import pytest
from hypothesis import given

from conftest import algebras, seeds
from pimsner_lab.algebra import (AlgElement, Automorphism, BlockMatrix, ScalarAlgebra, apply_automorphism, op_norm,
                                 require_odd, sqrt_positive)
from pimsner_lab.errors import ArgumentError, PositivityError, StructuralError


def test_norm_examples(c6):
    assert op_norm(AlgElement.identity(c6)) == pytest.approx(1.0)
    assert op_norm(AlgElement.zero(c6)) == 0.0
    assert op_norm(AlgElement.indicator(c6, [0, 3])) == pytest.approx(1.0)


def test_sqrt_examples(c6):
    p = AlgElement.indicator(c6, [1, 2])
    assert sqrt_positive(p).allclose(p)
    assert sqrt_positive(4 * AlgElement.identity(c6)).allclose(2 * AlgElement.identity(c6))
    A = ScalarAlgebra((2,))
    a = AlgElement.from_blocks(A, [np.diag([1.0, 4.0])])
    assert sqrt_positive(a).allclose(AlgElement.from_blocks(A, [np.diag([1.0, 2.0])]))


def test_sqrt_rejects_non_positive(c6):
    with pytest.raises(PositivityError):
        sqrt_positive(AlgElement.diagonal(c6, [1, -1, 0, 0, 0, 0]))


def test_shift_moves_points(c6):
    alpha = Automorphism.cyclic_shift(c6)
    a = AlgElement.random(c6, np.random.default_rng(0))
    assert apply_automorphism(Automorphism.identity(c6), a).allclose(a)
    assert apply_automorphism(alpha, AlgElement.indicator(c6, [0])).allclose(AlgElement.indicator(c6, [1]))
    assert alpha.power(6).is_identity()
    assert apply_automorphism(alpha.power(6), a).allclose(a)


def test_automorphism_needs_matching_blocks():
    A = ScalarAlgebra((1, 2))
    with pytest.raises(StructuralError):
        Automorphism(A, [1, 0], [np.eye(1), np.eye(2)])


def test_block_major_layout_roundtrip():
    A = ScalarAlgebra((2, 1, 2))
    a = AlgElement.random(A, np.random.default_rng(3))
    assert AlgElement.from_flat(A, a.flat()).allclose(a)
    assert [b.shape for b in a.blocks()] == [(2, 2), (1, 1), (2, 2)]


def test_require_odd():
    require_odd(5)
    for bad in (0, 4, -3):
        with pytest.raises(ArgumentError):
            require_odd(bad)


@given(algebras(), seeds)
def test_cstar_identities(A, seed):
    rng = np.random.default_rng(seed)
    a, b = AlgElement.random(A, rng), AlgElement.random(A, rng)
    assert (a * b).norm() <= a.norm() * b.norm() + 1e-10
    assert (a.adjoint() * a).norm() == pytest.approx(a.norm() ** 2, abs=1e-10 * max(1, a.norm() ** 2))


def test_cstar_identities_seeded_pairs():
    rng = np.random.default_rng(2024)
    for _ in range(200):
        A = ScalarAlgebra(tuple(int(n) for n in rng.integers(1, 4, size=rng.integers(1, 4))))
        a, b = AlgElement.random(A, rng), AlgElement.random(A, rng)
        assert (a * b).norm() <= a.norm() * b.norm() + 1e-10
        assert abs((a.adjoint() * a).norm() - a.norm() ** 2) <= 1e-10 * max(1.0, a.norm() ** 2)


@given(algebras(), seeds)
def test_sqrt_scaling(A, seed):
    a = AlgElement.random_positive_contraction(A, np.random.default_rng(seed))
    for t in (0.0, 1.0, 4.0):
        assert (t * a).sqrt().allclose(np.sqrt(t) * a.sqrt(), atol=1e-9)


@given(algebras(), seeds)
def test_automorphisms_are_isometric(A, seed):
    from pimsner_lab.correspondence import random_automorphism
    rng = np.random.default_rng(seed)
    alpha = random_automorphism(A, rng)
    a = AlgElement.random(A, rng)
    assert alpha(a).norm() == pytest.approx(a.norm(), abs=1e-10)
    assert alpha.inverse()(alpha(a)).allclose(a)
    assert alpha(a * a.adjoint()).allclose(alpha(a) * alpha(a).adjoint())


@given(algebras(), seeds)
def test_blockmatrix_adjoint_and_product(A, seed):
    rng = np.random.default_rng(seed)
    entries = [[AlgElement.random(A, rng) for _ in range(2)] for _ in range(3)]
    M = BlockMatrix.from_entries(A, entries)
    x = BlockMatrix.from_entries(A, [[AlgElement.random(A, rng)] for _ in range(2)])
    assert (M @ x).entry(1, 0).allclose(entries[1][0] * x.entry(0, 0) + entries[1][1] * x.entry(1, 0))
    assert M.adjoint().entry(1, 2).allclose(entries[2][1].adjoint())
    assert (M.adjoint() @ M).norm() == pytest.approx(M.norm() ** 2, rel=1e-9)
