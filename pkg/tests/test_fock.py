import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import algebras, seeds
from pimsner_lab.algebra import AlgElement, Automorphism, ScalarAlgebra
from pimsner_lab.correspondence import (TensorPowerCache, crossed_product_corr, random_fgp_corr,
                                        random_twisted_free_corr, twisted_free_corr)
from pimsner_lab.errors import ArgumentError, DegenerateOperatorError
from pimsner_lab.fock import (Band, DpAlgebra, DpElement, DpTerm, FockTruncation, GradedOperator, Tensor, band_product, bump_fraction,
                              bump, compression_norm_sweep, creation, phi_compression, phi_operator_reference,
                              quasicentral_check, toeplitz_defects, vacuum)
from pimsner_lab.modules import inner, rank_one
from pimsner_lab.suites import relation_suite


@pytest.fixture
def fgp(rng):
    return random_fgp_corr(ScalarAlgebra((2, 1)), 2, rng)


def test_creation_on_vacuum(fgp, rng):
    tr = FockTruncation(fgp, 4)
    x = Tensor(fgp.space.random_vector(rng), 1)
    out = creation(x, tr).apply(vacuum(fgp.algebra))
    assert set(out) == {1}
    assert out[1].allclose(x.vec, atol=1e-14)


def test_orthogonal_creations(rng):
    H = twisted_free_corr([Automorphism.identity(ScalarAlgebra((2,)))] * 2)
    tr = FockTruncation(H, 4)
    x, y = Tensor(H.space.basis_vector(0), 1), Tensor(H.space.basis_vector(1), 1)
    assert (creation(x, tr).adjoint() @ creation(y, tr)).norm() < 1e-12


def test_bimodularity(fgp, rng):
    tr = FockTruncation(fgp, 4)
    A = fgp.algebra
    x = Tensor(fgp.space.random_vector(rng), 1)
    a, b = AlgElement.random(A, rng), AlgElement.random(A, rng)
    lhs = creation(Tensor(fgp.act(a, x.vec * b), 1), tr)
    rhs = GradedOperator.left_multiplier(tr, a) @ creation(x, tr) @ GradedOperator.left_multiplier(tr, b)
    assert lhs.dist(rhs) <= 1e-10


def test_creation_past_cutoff(fgp, rng):
    tr = FockTruncation(fgp, 2)
    with pytest.raises(DegenerateOperatorError):
        creation(Tensor(tr.degree(2).space.random_vector(rng), 2), tr)


def test_band_examples(fgp, rng):
    tr = FockTruncation(fgp, 4)
    A = fgp.algebra
    one = vacuum(A)
    assert band_product(one, one, tr).allclose(GradedOperator.identity(tr), atol=1e-14)
    H2 = tr.degree(2)
    x, y = Tensor(fgp.space.random_vector(rng), 1), Tensor(H2.space.random_vector(rng), 2)
    B = band_product(x, y, tr)
    assert B.block(-1, 2).allclose(rank_one(x.vec, y.vec).mat, atol=1e-14)
    cache = tr.cache
    for _ in range(20):
        z = fgp.space.random_vector(rng)
        yz = cache.tensor(y.vec, 2, z, 1)
        got = B.apply(Tensor(yz, 3))[2]
        expect = cache.tensor(x.vec, 1, fgp.act(inner(y.vec, y.vec), z), 1)
        assert got.dist(expect) <= 1e-9


def test_band_realizations_agree(fgp, rng):
    cache = TensorPowerCache(fgp)
    tr = FockTruncation(cache, 5)
    A = fgp.algebra
    x, y = Tensor(fgp.space.random_vector(rng), 1), Tensor(cache.get(2).space.random_vector(rng), 2)
    a, b = AlgElement.random(A, rng), AlgElement.random(A, rng)
    formal = Band.single(cache, x, y, left=a, right=b).at(5)
    direct = band_product(x, y, tr, left=a, right=b)
    via_creation = (GradedOperator.left_multiplier(tr, a) @ creation(x, tr) @ creation(y, tr).adjoint()
                    @ GradedOperator.left_multiplier(tr, b))
    assert formal.dist(direct) < 1e-12
    assert formal.dist(via_creation) < 1e-10


def _coefs(e: DpElement) -> dict[int, complex]:
    return {t.k: t.coef for t in e.terms}


def test_bump_values():
    assert [bump(5, k) for k in range(5)] == [0.0, 0.5, 1.0, 0.5, 0.0]
    assert bump(5, 7) == 0.0
    for p in range(3, 40, 2):
        assert bump(p, 0) == 0.0 and bump(p, (p - 1) // 2) == 1.0
    for bad in (4, 1):
        with pytest.raises(ArgumentError):
            bump(bad, 0)


def test_bump_symmetry():
    for p in range(3, 100, 2):
        assert all(bump(p, k) == bump(p, p - 1 - k) for k in range(p))


def test_bump_partition_identity():
    for p in range(3, 100, 2):
        h = (p - 1) // 2
        for k in range(p):
            assert bump_fraction(p, k) + bump_fraction(p, (h + k) % p) == 1, (p, k)


def test_bump_partition_sums_by_half():
    for p in range(3, 100, 2):
        h = (p - 1) // 2
        assert all(bump_fraction(p, k) + bump_fraction(p, h + k) == 1 for k in range(h + 1))
        assert all(bump_fraction(p, k) + bump_fraction(p, (h + k) % p) == 1 - Fraction(1, h) for k in range(h + 1, p))


def test_phi_coefficients(c6):
    cache = TensorPowerCache(crossed_product_corr(Automorphism.cyclic_shift(c6)))
    one = vacuum(c6)
    c = _coefs(phi_compression(Band.single(cache, one, one), 5))
    assert [c.get(k, 0.0) for k in range(5)] == [0.0, 0.5, 1.0, 0.5, 0.0]
    z = Tensor(cache.word([0]), 1)
    c = _coefs(phi_compression(Band.single(cache, z, z), 9))
    for k, v in c.items():
        assert v == bump(9, k + 1)
    c = _coefs(phi_compression(Band.single(cache, z, one), 9))
    for k in range(8):
        v = c.get(k, 0.0)
        assert v == pytest.approx(math.sqrt(bump(9, k + 1) * bump(9, k)))
        assert abs(v - bump(9, k + 1)) <= math.sqrt(2 / 8) + 1e-12


def test_phi_matches_operator_compression(fgp, rng):
    cache = TensorPowerCache(fgp)
    A = fgp.algebra
    T = Band.single(cache, Tensor(fgp.space.random_vector(rng), 1), vacuum(A), left=AlgElement.random(A, rng))
    T = T + Band.single(cache, Tensor(cache.get(2).space.random_vector(rng), 2), Tensor(fgp.space.random_vector(rng), 1))
    for p in (3, 5):
        assert phi_compression(T, p).operator().dist(phi_operator_reference(T, p)) < 1e-10


def test_quasicentral_examples(rng):
    A = ScalarAlgebra.commutative(2)
    fgp = random_fgp_corr(A, 2, rng)
    r = quasicentral_check(fgp, 3, 0)
    assert r.defect == 0.0 and r.unit_is_identity
    H = twisted_free_corr([Automorphism.identity(A), Automorphism.cyclic_shift(A)])
    assert quasicentral_check(H, 3, 2).defect <= 1e-10
    small = quasicentral_check(H, 3, 1)
    assert small.defect > 0 and small.covered_defect <= 1e-10


def test_sweep_examples(c6):
    H = crossed_product_corr(Automorphism.cyclic_shift(c6))
    cache = TensorPowerCache(H)
    one = vacuum(c6)
    s = compression_norm_sweep(Band.single(cache, one, one), range(1, 7))
    assert all(v == pytest.approx(1.0) for _, v in s.values)
    x = Tensor(cache.word([0]), 1)
    s = compression_norm_sweep(lambda q: creation(x, FockTruncation(cache, q)), range(2, 8))
    assert all(v == pytest.approx(1.0) for _, v in s.values)
    a = AlgElement.indicator(c6, [0, 3])
    T = Band.single(cache, x, one, left=a)
    s = compression_norm_sweep(T, range(2, 3 + 7))
    vals = [v for _, v in s.values]
    assert all(b >= a_ - 1e-10 for a_, b in zip(vals, vals[1:]))
    assert s.converged and s.q_converged <= 3 + 6
    dense = T.at(9).dense()
    assert s.final == pytest.approx(max(np.linalg.norm(M[i], 2) for M in dense for i in range(M.shape[0])))


def test_relation_suite_seeded():
    worst = max(r.worst for r in relation_suite(12, seed=5))
    assert worst <= 1e-10


@given(algebras(), seeds, st.integers(2, 5))
def test_toeplitz_relations(A, seed, q):
    rng = np.random.default_rng(seed)
    H = random_fgp_corr(A, int(rng.integers(1, 3)), rng)
    tr = FockTruncation(H, q)
    j = int(rng.integers(0, q - 1))
    sp = tr.degree(j).space
    d = toeplitz_defects(tr, Tensor(sp.random_vector(rng), j), Tensor(sp.random_vector(rng), j),
                         AlgElement.random(A, rng), AlgElement.random(A, rng), complex(rng.normal(), rng.normal()))
    assert max(d.values()) <= 1e-10


@given(algebras(), seeds)
def test_degrees_are_orthogonal(A, seed):
    rng = np.random.default_rng(seed)
    H = random_fgp_corr(A, 2, rng)
    tr = FockTruncation(H, 4)
    P0 = GradedOperator.degree_diagonal(tr, [AlgElement.identity(A)] + [AlgElement.zero(A)] * 3)
    P2 = GradedOperator.degree_diagonal(tr, [AlgElement.zero(A)] * 2 + [AlgElement.identity(A), AlgElement.zero(A)])
    assert (P0 @ P2).norm() == 0.0


@given(algebras(), seeds)
def test_compression_is_monotone(A, seed):
    rng = np.random.default_rng(seed)
    H = random_fgp_corr(A, 2, rng)
    cache = TensorPowerCache(H)
    T = Band.single(cache, Tensor(H.space.random_vector(rng), 1), Tensor(cache.get(2).space.random_vector(rng), 2))
    s = compression_norm_sweep(T, range(3, 6))
    vals = [v for _, v in s.values]
    assert all(b >= a - 1e-10 for a, b in zip(vals, vals[1:]))


@given(seeds)
def test_dp_products_reexpand(seed):
    rng = np.random.default_rng(seed)
    A = ScalarAlgebra((1, 2))
    H = random_twisted_free_corr(A, 2, rng)
    p = 3
    D = DpAlgebra(H, p)
    cache = D.trunc.cache
    span = D.spanning()
    e1, e2 = (span[int(i)] for i in rng.integers(0, len(span), size=2))

    def matrix_units(e: DpElement):
        # e_{x,y} (x) 1_k = sum over words w of length k of e_{x w, y w}
        out = []
        for t in e.terms:
            for w in range(cache.rank(t.k)):
                wv = cache.get(t.k).space.basis_vector(w)
                xw = Tensor(cache.tensor(t.x.vec, t.x.degree, wv, t.k), t.x.degree + t.k)
                yw = Tensor(cache.tensor(t.y.vec, t.y.degree, wv, t.k), t.y.degree + t.k)
                out.append((t.coef, xw, yw))
        return out

    terms = []
    for c1, a, b in matrix_units(e1):
        for c2, c, d in matrix_units(e2):
            if b.degree == c.degree:
                g = inner(b.vec, c.vec)
                terms.append(DpTerm(c1 * c2, Tensor(a.vec * g, a.degree), d, 0))
    product = DpElement(D.trunc, terms).operator()
    assert (e1.operator() @ e2.operator()).dist(product) <= 1e-9
