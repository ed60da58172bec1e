"""Finitely generated projective Hilbert modules and adjointable operators.

A module is the range of a projection ``P`` inside the free module ``A^m``.
Vectors are ``m x 1`` matrices over ``A`` and operators are matrices over
``A``, so the inner product is ``x^* y`` and the right action is ``x @ a``.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .algebra import AlgElement, BlockMatrix, ScalarAlgebra
from .errors import StructuralError

PROJ_TOL = 1e-10


class ModuleSpace:
    """``P A^m`` with ``P = P^* = P^2``; ``projection=None`` means free."""

    __slots__ = ("algebra", "free_rank", "_projection")

    def __init__(self, algebra: ScalarAlgebra, free_rank: int, projection: BlockMatrix | None = None):
        if free_rank < 1:
            raise StructuralError("free rank must be at least 1")
        if projection is not None:
            if projection.algebra != algebra or (projection.rows, projection.cols) != (free_rank, free_rank):
                raise StructuralError("projection must be a free_rank x free_rank matrix over the algebra")
            if projection.dist(projection.adjoint()) > PROJ_TOL or projection.dist(projection @ projection) > PROJ_TOL:
                raise StructuralError("projection is not self-adjoint and idempotent")
            if projection.allclose(BlockMatrix.identity(algebra, free_rank), atol=1e-14):
                projection = None
        self.algebra = algebra
        self.free_rank = int(free_rank)
        self._projection = projection

    @classmethod
    def free(cls, algebra: ScalarAlgebra, rank: int) -> "ModuleSpace":
        return cls(algebra, rank)

    @property
    def is_free(self) -> bool:
        return self._projection is None

    @property
    def projection(self) -> BlockMatrix:
        if self._projection is None:
            return BlockMatrix.identity(self.algebra, self.free_rank)
        return self._projection

    def same_as(self, other: "ModuleSpace") -> bool:
        if self is other:
            return True
        if self.algebra != other.algebra or self.free_rank != other.free_rank:
            return False
        if self.is_free and other.is_free:
            return True
        return self.projection.allclose(other.projection, atol=1e-12)

    def project(self, mat: BlockMatrix) -> BlockMatrix:
        return mat if self.is_free else self._projection @ mat

    # vectors ----------------------------------------------------------------
    def vector(self, coords: Sequence[AlgElement] | BlockMatrix, project: bool = False) -> "ModuleVector":
        mat = coords if isinstance(coords, BlockMatrix) else BlockMatrix.column(list(coords))
        if project:
            mat = self.project(mat)
        return ModuleVector(self, mat)

    def zero(self) -> "ModuleVector":
        return ModuleVector(self, BlockMatrix.zeros(self.algebra, self.free_rank, 1))

    def basis_vector(self, i: int) -> "ModuleVector":
        """``P e_i``; an orthonormal basis when the module is free."""
        A = self.algebra
        entries = [AlgElement.identity(A) if r == i else AlgElement.zero(A) for r in range(self.free_rank)]
        return self.vector(entries, project=True)

    def random_vector(self, rng: np.random.Generator) -> "ModuleVector":
        return self.vector([AlgElement.random(self.algebra, rng) for _ in range(self.free_rank)], project=True)

    def __repr__(self) -> str:
        kind = "free" if self.is_free else "projective"
        return f"ModuleSpace({kind}, rank={self.free_rank}, blocks={self.algebra.blocks})"


class ModuleVector:
    __slots__ = ("space", "mat")

    def __init__(self, space: ModuleSpace, mat: BlockMatrix):
        if mat.algebra != space.algebra or (mat.rows, mat.cols) != (space.free_rank, 1):
            raise StructuralError("coordinates do not fit the module")
        if not space.is_free and (space.projection @ mat).dist(mat) > 1e-9 * max(1.0, mat.norm()):
            raise StructuralError("coordinates are not in the range of the projection")
        self.space = space
        self.mat = mat

    @property
    def coords(self) -> list[AlgElement]:
        return [self.mat.entry(r, 0) for r in range(self.mat.rows)]

    def _check(self, other: "ModuleVector") -> None:
        if not self.space.same_as(other.space):
            raise StructuralError("vectors live in different modules")

    def __add__(self, other: "ModuleVector") -> "ModuleVector":
        self._check(other)
        return ModuleVector(self.space, self.mat + other.mat)

    def __sub__(self, other: "ModuleVector") -> "ModuleVector":
        self._check(other)
        return ModuleVector(self.space, self.mat - other.mat)

    def __mul__(self, other):
        """Right action by an algebra element, or scaling by a complex number."""
        if isinstance(other, AlgElement):
            return ModuleVector(self.space, self.mat.right_act(other))
        if np.isscalar(other):
            return ModuleVector(self.space, self.mat * other)
        return NotImplemented

    def __rmul__(self, other):
        if np.isscalar(other):
            return ModuleVector(self.space, other * self.mat)
        return NotImplemented

    def __neg__(self) -> "ModuleVector":
        return ModuleVector(self.space, -self.mat)

    def inner(self, other: "ModuleVector") -> AlgElement:
        return inner(self, other)

    def norm(self) -> float:
        return float(np.sqrt(max(inner(self, self).norm(), 0.0)))

    def dist(self, other: "ModuleVector") -> float:
        return (self - other).norm()

    def allclose(self, other: "ModuleVector", atol: float = 1e-10) -> bool:
        self._check(other)
        return self.mat.allclose(other.mat, atol)

    def __repr__(self) -> str:
        return f"ModuleVector(rank={self.space.free_rank}, norm={self.norm():.4g})"


def inner(x: ModuleVector, y: ModuleVector) -> AlgElement:
    """``<x, y> = sum_i x_i^* y_i``, linear in ``y``."""
    x._check(y)
    return (x.mat.adjoint() @ y.mat).to_element()


class ModOperator:
    """Adjointable map between module spaces, stored compressed ``P_K M P_H``."""

    __slots__ = ("domain", "codomain", "mat")

    def __init__(self, domain: ModuleSpace, codomain: ModuleSpace, mat: BlockMatrix, compress: bool = True):
        if mat.algebra != domain.algebra or domain.algebra != codomain.algebra:
            raise StructuralError("operator and spaces over different algebras")
        if (mat.rows, mat.cols) != (codomain.free_rank, domain.free_rank):
            raise StructuralError(f"matrix {mat.rows}x{mat.cols} does not map rank {domain.free_rank} "
                                  f"to rank {codomain.free_rank}")
        if compress:
            mat = codomain.project(mat)
            if not domain.is_free:
                mat = mat @ domain.projection
        self.domain = domain
        self.codomain = codomain
        self.mat = mat

    @classmethod
    def identity(cls, space: ModuleSpace) -> "ModOperator":
        return cls(space, space, space.projection, compress=False)

    @classmethod
    def zero(cls, domain: ModuleSpace, codomain: ModuleSpace) -> "ModOperator":
        return cls(domain, codomain, BlockMatrix.zeros(domain.algebra, codomain.free_rank, domain.free_rank),
                   compress=False)

    def __call__(self, x: ModuleVector) -> ModuleVector:
        if not x.space.same_as(self.domain):
            raise StructuralError("vector is not in the operator's domain")
        return ModuleVector(self.codomain, self.mat @ x.mat)

    def adjoint(self) -> "ModOperator":
        return ModOperator(self.codomain, self.domain, self.mat.adjoint(), compress=False)

    def __matmul__(self, other: "ModOperator") -> "ModOperator":
        if not other.codomain.same_as(self.domain):
            raise StructuralError("cannot compose: codomain/domain mismatch")
        return ModOperator(other.domain, self.codomain, self.mat @ other.mat, compress=False)

    def _check(self, other: "ModOperator") -> None:
        if not (self.domain.same_as(other.domain) and self.codomain.same_as(other.codomain)):
            raise StructuralError("operators between different spaces")

    def __add__(self, other: "ModOperator") -> "ModOperator":
        self._check(other)
        return ModOperator(self.domain, self.codomain, self.mat + other.mat, compress=False)

    def __sub__(self, other: "ModOperator") -> "ModOperator":
        self._check(other)
        return ModOperator(self.domain, self.codomain, self.mat - other.mat, compress=False)

    def __mul__(self, other):
        if np.isscalar(other):
            return ModOperator(self.domain, self.codomain, self.mat * other, compress=False)
        return NotImplemented

    __rmul__ = __mul__

    def norm(self) -> float:
        return self.mat.norm()

    def dist(self, other: "ModOperator") -> float:
        return (self - other).norm()

    def allclose(self, other: "ModOperator", atol: float = 1e-10) -> bool:
        self._check(other)
        return self.mat.allclose(other.mat, atol)

    def to_dense(self) -> list[np.ndarray]:
        """Complex matrix of the faithful image, one per block of the algebra."""
        return self.mat.dense_blocks()

    def __repr__(self) -> str:
        return f"ModOperator({self.domain.free_rank} -> {self.codomain.free_rank}, norm={self.norm():.4g})"


def rank_one(x: ModuleVector, y: ModuleVector) -> ModOperator:
    """``e_{x,y}: z -> x <y, z>``, from ``y``'s space to ``x``'s space."""
    return ModOperator(y.space, x.space, x.mat @ y.mat.adjoint(), compress=False)


def operator_norm(T: ModOperator) -> float:
    return T.norm()


def direct_sum_space(H: ModuleSpace, K: ModuleSpace) -> ModuleSpace:
    if H.algebra != K.algebra:
        raise StructuralError("direct sum of modules over different algebras")
    if H.is_free and K.is_free:
        return ModuleSpace(H.algebra, H.free_rank + K.free_rank)
    return ModuleSpace(H.algebra, H.free_rank + K.free_rank, BlockMatrix.block_diag([H.projection, K.projection]))


def direct_sum_vector(space: ModuleSpace, x: ModuleVector, y: ModuleVector) -> ModuleVector:
    """``(x, y)`` in ``space`` which must be ``direct_sum_space(x.space, y.space)``."""
    return ModuleVector(space, BlockMatrix.vstack([x.mat, y.mat]))
