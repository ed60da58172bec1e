"""Rokhlin towers for correspondences: defects, cyclic synthesis, bump weights.

A tower of height ``p`` with ``d + 1`` colours is a family ``f[l][k]`` of
positive contractions, ``k`` read modulo ``p``.  The shift condition for a
vector ``z`` of tensor degree ``j`` compares ``z . f_k`` (right action) with
``f_{k+j} . z`` (left action).
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .algebra import AlgElement, ScalarAlgebra, require_odd
from .correspondence import Correspondence, TensorPowerCache
from .errors import ArgumentError, ConsistencyError, InfeasibleError, PositivityError, StructuralError, WitnessError
from .fock import Tensor, bump
from .modules import ModOperator, ModuleVector

POS_TOL = 1e-10
WITNESS_TOL = 1e-9


class RokhlinTower:
    """``(d + 1) x p`` positive contractions over ``algebra``."""

    __slots__ = ("algebra", "d", "p", "elements")

    def __init__(self, algebra: ScalarAlgebra, elements: Sequence[Sequence[AlgElement]]):
        if not elements or not elements[0]:
            raise StructuralError("a tower needs at least one colour and one level")
        p = len(elements[0])
        if any(len(row) != p for row in elements):
            raise StructuralError("every colour must have the same height")
        for row in elements:
            for f in row:
                if f.parent != algebra:
                    raise StructuralError("tower element from another algebra")
                if not f.is_positive_contraction(POS_TOL):
                    raise PositivityError("tower elements must be positive contractions")
        self.algebra = algebra
        self.d = len(elements) - 1
        self.p = p
        self.elements = tuple(tuple(row) for row in elements)

    def f(self, l: int, k: int) -> AlgElement:
        return self.elements[l][k % self.p]

    def roots(self, l: int, offset: int = 0) -> list[AlgElement]:
        """``(f^l_{offset + k})^{1/2}`` for ``k = 0..p-1``."""
        return [self.f(l, offset + k).sqrt() for k in range(self.p)]

    def relabel(self, colours: Sequence[int]) -> "RokhlinTower":
        return RokhlinTower(self.algebra, [self.elements[l] for l in colours])

    def rotate(self, offset: int) -> "RokhlinTower":
        """``f'_k = f_{k + offset}``; the shift relation is preserved."""
        return RokhlinTower(self.algebra, [[self.f(l, k + offset) for k in range(self.p)] for l in range(self.d + 1)])

    def total(self) -> AlgElement:
        out = AlgElement.zero(self.algebra)
        for row in self.elements:
            for f in row:
                out = out + f
        return out

    def __repr__(self) -> str:
        return f"RokhlinTower(d={self.d}, p={self.p}, blocks={self.algebra.blocks})"


@dataclass(frozen=True)
class TowerDefects:
    orth: float
    unit: float
    shift: float
    commute: float

    def max(self) -> float:
        return max(self.orth, self.unit, self.shift, self.commute)

    def admissible(self, eps: float) -> bool:
        return self.max() < eps

    def as_dict(self) -> dict:
        return asdict(self)


def _as_tensor(z: ModuleVector | Tensor) -> Tensor:
    return z if isinstance(z, Tensor) else Tensor(z, 1)


def check_tower(t: RokhlinTower, H: Correspondence, V: Sequence[ModuleVector | Tensor] | None = None,
                F: Sequence[AlgElement] = (), cache: TensorPowerCache | None = None) -> TowerDefects:
    """Exact maxima of the four tower defects.

    ``V`` defaults to the (projected) standard basis of ``H``.  Entries of
    ``V`` may be :class:`Tensor` objects of any degree ``j``; they are tested
    against ``f_{k+j}``.
    """
    if t.algebra != H.algebra:
        raise StructuralError("tower and correspondence over different algebras")
    for a in F:
        if a.parent != t.algebra:
            raise StructuralError("test element from another algebra")
    if V is None:
        V = [H.space.basis_vector(i) for i in range(H.rank)]
    cache = cache or TensorPowerCache(H)
    if cache.base is not H:
        raise StructuralError("tensor power cache belongs to another correspondence")
    p = t.p
    orth = 0.0
    for row in t.elements:
        for k in range(p):
            for k2 in range(p):
                if k != k2:
                    orth = max(orth, (row[k] * row[k2]).norm())
    unit = (t.total() - AlgElement.identity(t.algebra)).norm()
    shift = 0.0
    for z in V:
        z = _as_tensor(z)
        Hj = cache.get(z.degree)
        if not z.vec.space.same_as(Hj.space):
            raise StructuralError(f"test vector is not in degree {z.degree}")
        for l in range(t.d + 1):
            for k in range(p):
                diff = z.vec * t.f(l, k) - Hj.act(t.f(l, k + z.degree), z.vec)
                shift = max(shift, diff.norm())
    commute = 0.0
    for a in F:
        for row in t.elements:
            for f in row:
                commute = max(commute, f.commutator(a).norm())
    return TowerDefects(orth, unit, shift, commute)


def exact_cyclic_tower(n: int, p: int) -> RokhlinTower:
    """``f_k`` = indicator of ``{j : j = -k mod p}`` on ``C(Z/n)``; exact for the shift when ``p | n``."""
    if p < 1 or n < 1 or n % p:
        raise InfeasibleError(f"no exact single-colour tower of height {p} on Z/{n}")
    A = ScalarAlgebra.commutative(n)
    return RokhlinTower(A, [[AlgElement.indicator(A, [j for j in range(n) if (j + k) % p == 0]) for k in range(p)]])


def _two_colour_weights(n: int, cuts: Sequence[int]) -> np.ndarray:
    """Piecewise-linear partition of unity vanishing next to each colour's cut."""
    raw = []
    for c in cuts:
        edge = c + 0.5
        dist = np.array([min((j - edge) % n, (edge - j) % n) for j in range(n)])
        raw.append(np.clip(dist - 0.5, 0.0, None))
    raw = np.array(raw)
    total = raw.sum(axis=0)
    total[total == 0] = 1.0
    return raw / total


def synthesize_cyclic_tower(n: int, p: int, d_target: int = 0) -> RokhlinTower:
    """Tower for the cyclic shift on ``C(Z/n)``.

    ``d_target = 0`` needs ``p | n`` and gives the exact indicator tower.
    ``d_target = 1`` labels the points of each colour by ``(c_l - j) mod n``
    from two cuts half a circle apart and damps each colour linearly towards
    its own cut; the two colours sum to one.  Its shift defect is of order
    ``1/n`` and is always re-measured by :func:`check_tower`.
    """
    if p < 1 or p > n:
        raise ArgumentError(f"need 1 <= p <= n, got p={p}, n={n}")
    if d_target == 0:
        return exact_cyclic_tower(n, p)
    if d_target != 1:
        raise ArgumentError("d_target must be 0 or 1")
    if n < 4:
        raise ArgumentError("two-colour synthesis needs n >= 4")
    A = ScalarAlgebra.commutative(n)
    cuts = [0, n // 2]
    weights = _two_colour_weights(n, cuts)
    rows = []
    for l, c in enumerate(cuts):
        labels = np.array([(c - j) % n for j in range(n)])
        rows.append([AlgElement.diagonal(A, weights[l] * (labels % p == k)) for k in range(p)])
    return RokhlinTower(A, rows)


# bump sum estimate ---------------------------------------------------------------------

@dataclass(frozen=True)
class BumpCheck:
    gap: float
    bound: float

    @property
    def holds(self) -> bool:
        return self.gap <= self.bound + 1e-9

    def __iter__(self):
        return iter((self.gap, self.bound))


def bump_sum_check(p: int, N: int, f: Sequence[AlgElement], strict: bool = True) -> BumpCheck:
    """Gap ``||sum_{k=N}^{p-1} d_p(k) (f_k + f_{h+k}) - sum_k f_k||`` with ``h = (p-1)/2``, against ``4N^2/(p-1)``.

    ``d_p(j) + d_p(j - h mod p)`` equals ``1 - 1/h`` for ``j < h``, so the gap
    is not zero at ``N = 0``; for orthogonal levels it stays within
    ``max(2, 2N)/(p-1)``.  With ``strict`` a gap above the bound raises
    :class:`ConsistencyError`; otherwise it is returned with ``holds`` false.
    """
    require_odd(p)
    if p < 3:
        raise ArgumentError("the bump sum estimate needs p >= 3")
    if len(f) != p:
        raise StructuralError(f"expected {p} elements, got {len(f)}")
    if not 0 <= N <= p - 1:
        raise ArgumentError("need 0 <= N <= p-1")
    h = (p - 1) // 2
    A = f[0].parent
    lhs = AlgElement.zero(A)
    for k in range(N, p):
        lhs = lhs + bump(p, k) * (f[k] + f[(h + k) % p])
    total = AlgElement.zero(A)
    for x in f:
        total = total + x
    gap = (lhs - total).norm()
    bound = 4.0 * N * N / (p - 1)
    if strict and gap > bound + 1e-9:
        raise ConsistencyError(f"bump sum estimate violated: gap {gap} > bound {bound}")
    return BumpCheck(gap, bound)


def bump_coefficients(p: int, N: int) -> np.ndarray:
    """Coefficient of ``f_j`` in ``sum_{k=N}^{p-1} d_p(k) (f_k + f_{h+k mod p})``."""
    require_odd(p)
    h = (p - 1) // 2
    c = np.zeros(p)
    for k in range(N, p):
        c[k] += bump(p, k)
        c[(h + k) % p] += bump(p, k)
    return c


# nonperiodicity ------------------------------------------------------------------

@dataclass(frozen=True)
class ObstructionReport:
    eps: float
    d: int
    orth: float
    unit: float
    shift: float
    level_difference: float
    level_norm: float
    tower_meets_eps: bool
    bound: float
    contradiction: bool
    anchor: str = "finite Rokhlin dimension forces nonperiodicity"

    def as_dict(self) -> dict:
        return asdict(self)


def check_witness(U: ModOperator, Hk: Correspondence, tol: float = WITNESS_TOL) -> None:
    """``U: H^{(x)k} -> A`` must be a unitary bimodule map."""
    A = Hk.algebra
    if U.codomain.free_rank != 1 or not U.codomain.is_free or not U.domain.same_as(Hk.space):
        raise WitnessError("witness must map the tensor power onto A")
    if (U.adjoint() @ U).dist(ModOperator.identity(Hk.space)) > tol:
        raise WitnessError("witness is not isometric (U*U != 1)")
    if (U @ U.adjoint()).dist(ModOperator.identity(U.codomain)) > tol:
        raise WitnessError("witness is not onto (UU* != 1)")
    for e in A.basis():
        lhs = U.mat @ Hk.left_matrix(e)
        rhs = U.mat.left_scalar_act(e)
        if lhs.dist(rhs) > tol:
            raise WitnessError("witness does not intertwine the left actions")


def nonperiodicity_obstruction(t: RokhlinTower, U: ModOperator, Hk: Correspondence, eps: float) -> ObstructionReport:
    """Run the two-level argument against a supplied witness ``H^{(x)k} ~ A``.

    Measures the three tower estimates for ``v = U^*(1)``, then checks whether
    ``2(d+1) sqrt(2 eps)`` is below ``1 - eps``; if so, no tower meeting the
    estimates at this ``eps`` can exist.
    """
    if t.p != 2:
        raise StructuralError("the obstruction uses towers with two levels")
    if eps <= 0:
        raise ArgumentError("eps must be positive")
    check_witness(U, Hk)
    A = t.algebra
    one = U.codomain.vector([AlgElement.identity(A)])
    v = U.adjoint()(one)
    orth = max((t.f(l, 0) * t.f(l, 1)).norm() for l in range(t.d + 1))
    unit = (t.total() - AlgElement.identity(A)).norm()
    shift = max((v * t.f(l, 0) - Hk.act(t.f(l, 1), v)).norm() for l in range(t.d + 1))
    diff = max((t.f(l, 0) - t.f(l, 1)).norm() for l in range(t.d + 1))
    level = max(t.f(l, k).norm() for l in range(t.d + 1) for k in range(2))
    bound = 2 * (t.d + 1) * math.sqrt(2 * eps)
    meets = orth < eps and unit < eps and shift < eps
    return ObstructionReport(eps, t.d, orth, unit, shift, diff, level, meets, bound, bound < 1 - eps)
