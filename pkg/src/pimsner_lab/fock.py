"""Truncated Fock modules, graded band operators and the compression into ``D_p``.

``F_q(H) = H^{(x)0} + ... + H^{(x)(q-1)}``.  An operator on the full Fock
module is kept as its compression to ``F_q``: one block per (shift, source
degree).  Each operator also records the *support* of every shift on the full
Fock module (a source-degree interval), so that compositions know when an
intermediate degree fell past the cutoff.  Blocks whose value cannot be
recovered from the truncation are marked unknown; norms are taken over the
sources with no unknown block, which makes every reported norm a compression
of the true operator and hence a certified lower bound.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np

from .algebra import AlgElement, BlockMatrix, ScalarAlgebra, require_odd, spectral_norms
from .correspondence import Correspondence, TensorPowerCache, words
from .errors import ArgumentError, ConsistencyError, CutoffError, DegenerateOperatorError, StructuralError
from .modules import ModuleVector, inner, rank_one

SWEEP_TOL = 1e-6
MONOTONE_TOL = 1e-8


@dataclass(frozen=True)
class Tensor:
    """A vector of the Fock module sitting in one degree."""

    vec: ModuleVector
    degree: int

    def __post_init__(self) -> None:
        if self.degree < 0:
            raise ArgumentError("tensor degree must be nonnegative")

    def norm(self) -> float:
        return self.vec.norm()

    def __len__(self) -> int:
        return self.degree


def vacuum(A: ScalarAlgebra, a: AlgElement | None = None) -> Tensor:
    """Degree-zero tensor ``a`` (default ``1_A``)."""
    from .modules import ModuleSpace
    a = AlgElement.identity(A) if a is None else a
    return Tensor(ModuleSpace.free(A, 1).vector([a]), 0)


class FockTruncation:
    """``F_q(H)``: the degrees ``0..q-1`` of the Fock module of ``base``."""

    def __init__(self, base: Correspondence | TensorPowerCache, cutoff: int):
        cache = base if isinstance(base, TensorPowerCache) else TensorPowerCache(base)
        if cutoff < 1:
            raise ArgumentError("cutoff must be at least 1")
        self.cache = cache
        self.base = cache.base
        self.algebra = cache.base.algebra
        self.cutoff = int(cutoff)
        cache.get(self.cutoff)
        self.ranks = [cache.rank(k) for k in range(self.cutoff)]
        self.offsets = np.concatenate([[0], np.cumsum(self.ranks)]).astype(int)

    @property
    def total_rank(self) -> int:
        return int(self.offsets[-1])

    def degree(self, k: int) -> Correspondence:
        return self.cache.get(k)

    def with_cutoff(self, q: int) -> "FockTruncation":
        return FockTruncation(self.cache, q)

    def elementary(self, factors: Sequence[ModuleVector]) -> Tensor:
        return Tensor(self.cache.elementary(factors), len(factors))

    def word(self, letters: Sequence[int]) -> Tensor:
        return Tensor(self.cache.word(letters), len(letters))

    def lift(self, t: Tensor) -> Tensor:
        """Re-home a tensor built on another truncation of the same base."""
        return Tensor(ModuleVector(self.cache.get(t.degree).space, t.vec.mat), t.degree)

    def __repr__(self) -> str:
        return f"FockTruncation(q={self.cutoff}, base rank={self.base.rank})"


Support = dict  # shift -> (lo, hi or None)


def _merge_support(acc: dict, shift: int, lo: int, hi: int | None) -> None:
    if shift in acc:
        lo0, hi0 = acc[shift]
        acc[shift] = (min(lo0, lo), None if hi is None or hi0 is None else max(hi0, hi))
    else:
        acc[shift] = (lo, hi)


def _in_support(rng: tuple[int, int | None], src: int) -> bool:
    lo, hi = rng
    return src >= lo and (hi is None or src <= hi)


class GradedOperator:
    """Compression to ``F_q`` of an operator on the Fock module, by degree shift.

    ``blocks[s][k]`` maps degree ``k`` to degree ``k + s``.  Missing blocks
    are zero unless listed in ``unknown``.
    """

    def __init__(self, trunc: FockTruncation, blocks: dict[int, dict[int, BlockMatrix]],
                 support: dict[int, tuple[int, int | None]], unknown: Iterable[tuple[int, int]] = ()):
        q = trunc.cutoff
        clean: dict[int, dict[int, BlockMatrix]] = {}
        for s, per in blocks.items():
            for k, B in per.items():
                t = k + s
                if not (0 <= k < q and 0 <= t < q):
                    continue
                if (B.rows, B.cols) != (trunc.ranks[t], trunc.ranks[k]):
                    raise StructuralError(f"block {k}->{t} has shape {B.rows}x{B.cols}")
                clean.setdefault(s, {})[k] = B
        self.trunc = trunc
        self.blocks = clean
        self.support = dict(support)
        self.unknown = frozenset((s, k) for s, k in unknown if 0 <= k < q and 0 <= k + s < q)
        for s, k in self.unknown:
            clean.get(s, {}).pop(k, None)

    # construction ---------------------------------------------------------------
    @classmethod
    def zero(cls, trunc: FockTruncation) -> "GradedOperator":
        return cls(trunc, {}, {})

    @classmethod
    def left_multiplier(cls, trunc: FockTruncation, a: AlgElement) -> "GradedOperator":
        """Left action of ``a`` on every degree."""
        blocks = {0: {k: trunc.degree(k).left_matrix(a) for k in range(trunc.cutoff)}}
        return cls(trunc, blocks, {0: (0, None)})

    @classmethod
    def identity(cls, trunc: FockTruncation) -> "GradedOperator":
        return cls.left_multiplier(trunc, AlgElement.identity(trunc.algebra))

    @classmethod
    def degree_diagonal(cls, trunc: FockTruncation, elems: Sequence[AlgElement]) -> "GradedOperator":
        """Left action of ``elems[k]`` on degree ``k`` (zero beyond the list)."""
        blocks = {0: {k: trunc.degree(k).left_matrix(a) for k, a in enumerate(elems) if k < trunc.cutoff}}
        return cls(trunc, blocks, {0: (0, len(elems) - 1)})

    # shape info -----------------------------------------------------------------
    @property
    def cutoff(self) -> int:
        return self.trunc.cutoff

    def block(self, shift: int, src: int) -> BlockMatrix | None:
        if (shift, src) in self.unknown:
            raise CutoffError(f"block {src}->{src + shift} is not determined at cutoff {self.cutoff}")
        return self.blocks.get(shift, {}).get(src)

    def overflow(self) -> set[tuple[int, int]]:
        """(shift, source) pairs whose target degree lies past the cutoff."""
        q = self.cutoff
        out = set()
        for s, rng in self.support.items():
            for k in range(q):
                if _in_support(rng, k) and k + s >= q:
                    out.add((s, k))
        return out

    def known_sources(self) -> list[int]:
        bad = {k for _, k in self.unknown}
        return [k for k in range(self.cutoff) if k not in bad]

    def is_degenerate(self) -> bool:
        q = self.cutoff
        return not any(_in_support(rng, k) and 0 <= k + s < q for s, rng in self.support.items() for k in range(q))

    # algebra ----------------------------------------------------------------------
    def _check(self, other: "GradedOperator") -> None:
        if other.trunc.cache is not self.trunc.cache or other.cutoff != self.cutoff:
            raise StructuralError("graded operators on different truncations")

    def __add__(self, other: "GradedOperator") -> "GradedOperator":
        self._check(other)
        blocks: dict[int, dict[int, BlockMatrix]] = {s: dict(per) for s, per in self.blocks.items()}
        for s, per in other.blocks.items():
            for k, B in per.items():
                cur = blocks.setdefault(s, {})
                cur[k] = cur[k] + B if k in cur else B
        support: dict = dict(self.support)
        for s, (lo, hi) in other.support.items():
            _merge_support(support, s, lo, hi)
        return GradedOperator(self.trunc, blocks, support, self.unknown | other.unknown)

    def __mul__(self, other):
        if np.isscalar(other):
            blocks = {s: {k: B * other for k, B in per.items()} for s, per in self.blocks.items()}
            return GradedOperator(self.trunc, blocks, self.support, self.unknown)
        return NotImplemented

    __rmul__ = __mul__

    def __neg__(self) -> "GradedOperator":
        return (-1.0) * self

    def __sub__(self, other: "GradedOperator") -> "GradedOperator":
        return self + (-1.0) * other

    def adjoint(self) -> "GradedOperator":
        blocks: dict[int, dict[int, BlockMatrix]] = {}
        for s, per in self.blocks.items():
            for k, B in per.items():
                blocks.setdefault(-s, {})[k + s] = B.adjoint()
        support = {-s: (lo + s, None if hi is None else hi + s) for s, (lo, hi) in self.support.items()}
        unknown = {(-s, k + s) for s, k in self.unknown}
        return GradedOperator(self.trunc, blocks, support, unknown)

    def __matmul__(self, other: "GradedOperator") -> "GradedOperator":
        """Composition ``self o other``, exact wherever the truncation allows."""
        self._check(other)
        q = self.cutoff
        blocks: dict[int, dict[int, BlockMatrix]] = {}
        unknown: set[tuple[int, int]] = set()
        support: dict = {}
        for sy, (ly, hy) in other.support.items():
            for sx, (lx, hx) in self.support.items():
                lo = max(ly, lx - sy)
                hi = hy if hx is None else (hx - sy if hy is None else min(hy, hx - sy))
                if hi is None or hi >= lo:
                    _merge_support(support, sx + sy, lo, hi)
        for sy, rng_y in other.support.items():
            for k in range(q):
                if not _in_support(rng_y, k):
                    continue
                mid = k + sy
                if mid < 0:
                    continue
                y_unknown = (sy, k) in other.unknown
                for sx, rng_x in self.support.items():
                    t = mid + sx
                    if not 0 <= t < q:
                        continue
                    if y_unknown or mid >= q:
                        if y_unknown or _in_support(rng_x, mid):
                            unknown.add((sx + sy, k))
                        continue
                    if (sx, mid) in self.unknown:
                        unknown.add((sx + sy, k))
                        continue
                    By = other.blocks.get(sy, {}).get(k)
                    Bx = self.blocks.get(sx, {}).get(mid)
                    if By is None or Bx is None:
                        continue
                    cur = blocks.setdefault(sx + sy, {})
                    prod = Bx @ By
                    cur[k] = cur[k] + prod if k in cur else prod
        return GradedOperator(self.trunc, blocks, support, unknown)

    def left_mul(self, a: AlgElement) -> "GradedOperator":
        """``a o self``."""
        blocks = {s: {k: self.trunc.degree(k + s).left_matrix(a) @ B for k, B in per.items()}
                  for s, per in self.blocks.items()}
        return GradedOperator(self.trunc, blocks, self.support, self.unknown)

    def right_mul(self, b: AlgElement) -> "GradedOperator":
        """``self o b``."""
        blocks = {s: {k: B @ self.trunc.degree(k).left_matrix(b) for k, B in per.items()}
                  for s, per in self.blocks.items()}
        return GradedOperator(self.trunc, blocks, self.support, self.unknown)

    # evaluation -------------------------------------------------------------------
    def apply(self, x: Tensor | dict[int, ModuleVector]) -> dict[int, ModuleVector]:
        """Image of a Fock vector given by degree components."""
        comps = {x.degree: x.vec} if isinstance(x, Tensor) else dict(x)
        out: dict[int, BlockMatrix] = {}
        for k, v in comps.items():
            for s, per in self.blocks.items():
                if (s, k) in self.unknown:
                    raise CutoffError(f"block {k}->{k + s} is not determined at cutoff {self.cutoff}")
                B = per.get(k)
                if B is None:
                    continue
                img = B @ v.mat
                out[k + s] = out[k + s] + img if k + s in out else img
        return {t: ModuleVector(self.trunc.degree(t).space, m) for t, m in out.items()}

    def dense(self, sources: Sequence[int] | None = None, targets: Sequence[int] | None = None) -> list[np.ndarray]:
        """Per-group stacks of the complex matrix on the chosen degrees."""
        tr = self.trunc
        A = tr.algebra
        sources = self.known_sources() if sources is None else list(sources)
        targets = list(range(self.cutoff)) if targets is None else list(targets)
        out = []
        for g, (n, idx) in enumerate(A.groups):
            row_off = {t: sum(tr.ranks[u] for u in targets[:i]) * n for i, t in enumerate(targets)}
            col_off = {k: sum(tr.ranks[u] for u in sources[:i]) * n for i, k in enumerate(sources)}
            R = sum(tr.ranks[t] for t in targets) * n
            C = sum(tr.ranks[k] for k in sources) * n
            M = np.zeros((len(idx), R, C), dtype=complex)
            for s, per in self.blocks.items():
                for k, B in per.items():
                    t = k + s
                    if k in col_off and t in row_off:
                        r0, c0 = row_off[t], col_off[k]
                        M[:, r0:r0 + B.rows * n, c0:c0 + B.cols * n] = B.data[g]
            out.append(M)
        return out

    def norm(self) -> float:
        """Norm of the compression to the known window (a lower bound for the true norm)."""
        mats = self.dense()
        vals = [spectral_norms(M).max() if M.size else 0.0 for M in mats]
        return float(max(vals)) if vals else 0.0

    def dist(self, other: "GradedOperator") -> float:
        return (self - other).norm()

    def allclose(self, other: "GradedOperator", atol: float = 1e-10) -> bool:
        return self.dist(other) <= atol

    def __repr__(self) -> str:
        return (f"GradedOperator(q={self.cutoff}, shifts={sorted(self.support)}, "
                f"unknown={len(self.unknown)})")


# creation and band operators ------------------------------------------------------

def creation(x: Tensor | ModuleVector, trunc: FockTruncation, degree: int | None = None) -> GradedOperator:
    """``T_x``: ``xi -> x (x) xi``; degree shift ``|x|``.  Degree 0 gives left multiplication."""
    if isinstance(x, ModuleVector):
        if degree is None:
            raise ArgumentError("degree of a bare module vector must be given")
        x = Tensor(x, degree)
    j = x.degree
    if j >= trunc.cutoff:
        raise DegenerateOperatorError(f"T_x with |x| = {j} vanishes on F_{trunc.cutoff}")
    blocks = {j: {k: trunc.degree(k).entrywise(x.vec.mat) for k in range(trunc.cutoff - j)}}
    return GradedOperator(trunc, blocks, {j: (0, None)})


def annihilation(x: Tensor, trunc: FockTruncation) -> GradedOperator:
    return creation(x, trunc).adjoint()


def band_product(x: Tensor, y: Tensor, trunc: FockTruncation, left: AlgElement | None = None,
                 right: AlgElement | None = None) -> GradedOperator:
    """``a T_x T_y^* b`` on ``F_q``; its block at source ``|y| + k`` is ``e_{a x, b^* y} (x) 1_k``."""
    if x.degree >= trunc.cutoff or y.degree >= trunc.cutoff:
        raise CutoffError("band product needs |x|, |y| below the cutoff")
    xv, yv = x.vec, y.vec
    H = trunc.cache
    if left is not None:
        xv = H.get(x.degree).act(left, xv)
    if right is not None:
        yv = H.get(y.degree).act(right.adjoint(), yv)
    core = xv.mat @ yv.mat.adjoint()
    s = x.degree - y.degree
    blocks = {s: {}}
    for k in range(trunc.cutoff - max(x.degree, y.degree)):
        blocks[s][y.degree + k] = trunc.degree(k).entrywise(core)
    return GradedOperator(trunc, blocks, {s: (y.degree, None)})


@dataclass(frozen=True)
class BandTerm:
    """``coef * T_x T_y^*`` with multipliers already absorbed into ``x`` and ``y``."""

    coef: complex
    x: Tensor
    y: Tensor


@dataclass
class Band:
    """A finite linear combination of band products, realizable at any cutoff."""

    cache: TensorPowerCache
    terms: list[BandTerm] = field(default_factory=list)

    @classmethod
    def single(cls, cache: TensorPowerCache, x: Tensor, y: Tensor, left: AlgElement | None = None,
               right: AlgElement | None = None, coef: complex = 1.0) -> "Band":
        if left is not None:
            x = Tensor(cache.get(x.degree).act(left, x.vec), x.degree)
        if right is not None:
            y = Tensor(cache.get(y.degree).act(right.adjoint(), y.vec), y.degree)
        return cls(cache, [BandTerm(coef, x, y)])

    def __add__(self, other: "Band") -> "Band":
        if other.cache is not self.cache:
            raise StructuralError("bands over different correspondences")
        return Band(self.cache, self.terms + other.terms)

    def __sub__(self, other: "Band") -> "Band":
        return self + (-1.0) * other

    def __mul__(self, c):
        if np.isscalar(c):
            return Band(self.cache, [BandTerm(c * t.coef, t.x, t.y) for t in self.terms])
        return NotImplemented

    __rmul__ = __mul__

    def left_mul(self, a: AlgElement) -> "Band":
        return Band(self.cache, [BandTerm(t.coef, Tensor(self.cache.get(t.x.degree).act(a, t.x.vec), t.x.degree), t.y)
                                 for t in self.terms])

    def right_mul(self, b: AlgElement) -> "Band":
        bs = b.adjoint()
        return Band(self.cache, [BandTerm(t.coef, t.x, Tensor(self.cache.get(t.y.degree).act(bs, t.y.vec), t.y.degree))
                                 for t in self.terms])

    @property
    def max_length(self) -> int:
        return max((max(t.x.degree, t.y.degree) for t in self.terms), default=0)

    def at(self, q: int) -> GradedOperator:
        trunc = FockTruncation(self.cache, q)
        # merge terms with equal shift into one core per (shift, |y|) to keep realization cheap
        cores: dict[tuple[int, int], BlockMatrix] = {}
        for t in self.terms:
            key = (t.x.degree, t.y.degree)
            c = t.coef * (t.x.vec.mat @ t.y.vec.mat.adjoint())
            cores[key] = cores[key] + c if key in cores else c
        blocks: dict[int, dict[int, BlockMatrix]] = {}
        support: dict = {}
        for (jx, jy), core in cores.items():
            s = jx - jy
            _merge_support(support, s, jy, None)
            per = blocks.setdefault(s, {})
            for k in range(q - max(jx, jy)):
                B = trunc.degree(k).entrywise(core)
                per[jy + k] = per[jy + k] + B if jy + k in per else B
        return GradedOperator(trunc, blocks, support)


# bump weights and the algebra D_p ----------------------------------------------------

def bump_fraction(p: int, k: int) -> Fraction:
    """``d_p(k) = 1 - |p - 1 - 2k| / (p - 1)`` as an exact rational; 0 for ``k >= p``."""
    require_odd(p)
    if p < 3:
        raise ArgumentError("bump weights need p >= 3")
    if k < 0:
        raise ArgumentError("bump index must be nonnegative")
    if k >= p:
        return Fraction(0)
    return 1 - Fraction(abs(p - 1 - 2 * k), p - 1)


def bump(p: int, k: int) -> float:
    return float(bump_fraction(p, k))


def bump_vector(p: int) -> np.ndarray:
    return np.array([bump(p, k) for k in range(p)])


@dataclass(frozen=True)
class DpTerm:
    """``coef * e_{x,y} (x) 1_{H^{(x)k}}``."""

    coef: complex
    x: Tensor
    y: Tensor
    k: int


class DpElement:
    """Formal element of ``D_p(H)`` with an operator realization on ``F_p``."""

    def __init__(self, trunc: FockTruncation, terms: Sequence[DpTerm]):
        p = trunc.cutoff
        for t in terms:
            if max(t.x.degree, t.y.degree) + t.k >= p or t.k < 0:
                raise ArgumentError(f"e_(x,y) (x) 1_{t.k} with |x|={t.x.degree}, |y|={t.y.degree} is not in D_{p}")
        self.trunc = trunc
        self.terms = list(terms)

    @property
    def p(self) -> int:
        return self.trunc.cutoff

    def operator(self) -> GradedOperator:
        tr = self.trunc
        blocks: dict[int, dict[int, BlockMatrix]] = {}
        support: dict = {}
        for t in self.terms:
            s = t.x.degree - t.y.degree
            src = t.y.degree + t.k
            B = t.coef * tr.degree(t.k).entrywise(t.x.vec.mat @ t.y.vec.mat.adjoint())
            per = blocks.setdefault(s, {})
            per[src] = per[src] + B if src in per else B
            _merge_support(support, s, src, src)
        return GradedOperator(tr, blocks, support)

    def adjoint(self) -> "DpElement":
        return DpElement(self.trunc, [DpTerm(np.conj(t.coef), t.y, t.x, t.k) for t in self.terms])

    def __add__(self, other: "DpElement") -> "DpElement":
        return DpElement(self.trunc, self.terms + other.terms)

    def __mul__(self, c):
        if np.isscalar(c):
            return DpElement(self.trunc, [DpTerm(c * t.coef, t.x, t.y, t.k) for t in self.terms])
        return NotImplemented

    __rmul__ = __mul__

    def coefficients(self) -> list[complex]:
        return [t.coef for t in self.terms]


class DpAlgebra:
    """Spanning family of ``D_p(H)``: ``e_{u . E, v} (x) 1_k`` over basis tensors ``u, v`` and matrix units ``E``.

    For a free correspondence the basis tensors are the words in the standard
    basis; otherwise the projected standard basis vectors of each degree.
    """

    def __init__(self, base: Correspondence | TensorPowerCache, p: int):
        self.trunc = FockTruncation(base, p)
        self.p = int(p)

    def basis_tensors(self, j: int) -> list[Tensor]:
        space = self.trunc.degree(j).space
        return [Tensor(space.basis_vector(i), j) for i in range(space.free_rank)]

    def spanning(self, max_elements: int | None = None) -> list[DpElement]:
        A = self.trunc.algebra
        units = A.basis()
        out = []
        p = self.p
        for jx in range(p):
            for jy in range(p):
                for k in range(p - max(jx, jy)):
                    for u in self.basis_tensors(jx):
                        for v in self.basis_tensors(jy):
                            for E in units:
                                ue = Tensor(u.vec * E, jx)
                                out.append(DpElement(self.trunc, [DpTerm(1.0, ue, v, k)]))
                                if max_elements is not None and len(out) >= max_elements:
                                    return out
        return out

    def element(self, x: Tensor, y: Tensor, k: int, coef: complex = 1.0) -> DpElement:
        return DpElement(self.trunc, [DpTerm(coef, self.trunc.lift(x), self.trunc.lift(y), k)])


def phi_compression(T: Band, p: int) -> DpElement:
    """Compression of a band combination by ``sqrt(Delta) P_p``, written in the spanning family.

    ``T_x T_y^*`` goes to ``sum_k sqrt(d_p(k+|x|) d_p(k+|y|)) e_{x,y} (x) 1_k``.
    """
    require_odd(p)
    if p < 3:
        raise ArgumentError("phi needs p >= 3")
    trunc = FockTruncation(T.cache, p)
    terms = []
    for t in T.terms:
        jx, jy = t.x.degree, t.y.degree
        for k in range(p - max(jx, jy)):
            c = math.sqrt(bump(p, k + jx) * bump(p, k + jy))
            if c != 0.0:
                terms.append(DpTerm(t.coef * c, trunc.lift(t.x), trunc.lift(t.y), k))
    return DpElement(trunc, terms)


def compress_by_weights(op: GradedOperator, weights: Sequence[float]) -> GradedOperator:
    """``W op W`` with ``W`` the scalar ``weights[k]`` on degree ``k``."""
    blocks = {s: {k: B * (weights[k] * weights[k + s]) for k, B in per.items()} for s, per in op.blocks.items()}
    return GradedOperator(op.trunc, blocks, op.support, op.unknown)


def phi_operator_reference(T: Band, p: int) -> GradedOperator:
    """Direct ``sqrt(Delta) P_p T P_p sqrt(Delta)``, independent of the formal expansion."""
    require_odd(p)
    return compress_by_weights(T.at(p), np.sqrt(bump_vector(p)))


# quasicentral units ------------------------------------------------------------------

@dataclass(frozen=True)
class QuasicentralReport:
    p: int
    n: int
    defect: float
    covered_defect: float
    uncovered_defect: float
    elements: int
    covered: int
    unit_is_identity: bool
    anchor: str = "quasicentral projection unit in D_p"

    def as_dict(self) -> dict:
        return {
            "p": self.p, "n": self.n, "defect": self.defect, "covered_defect": self.covered_defect,
            "uncovered_defect": self.uncovered_defect, "elements": self.elements, "covered": self.covered,
            "unit_is_identity": self.unit_is_identity, "anchor": self.anchor,
        }


def unit_projection(trunc: FockTruncation, n: int) -> GradedOperator:
    """``q_n``: diagonal projection onto basis words all of whose letters are among the first ``n``."""
    m = trunc.base.rank
    blocks = {0: {}}
    A = trunc.algebra
    for k in range(trunc.cutoff):
        mask = [all(c < n for c in w) for w in words(m, k)]
        diag = [AlgElement.identity(A) if keep else AlgElement.zero(A) for keep in mask]
        blocks[0][k] = BlockMatrix.diag(diag) if len(diag) > 1 else BlockMatrix.from_element(diag[0])
    return GradedOperator(trunc, blocks, {0: (0, trunc.cutoff - 1)})


def quasicentral_check(H: Correspondence, p: int, n: int) -> QuasicentralReport:
    """Max ``||[q_n, e]||`` over the spanning elements ``e`` of ``D_p``, split by whether ``n`` covers their letters.

    A finitely generated projective correspondence without a designated basis
    has ``K(F_p) = D_p = B(F_p)`` unital, so the unit is the identity and the
    defect is zero.
    """
    if p < 1:
        raise ArgumentError("p must be positive")
    if not H.designated_basis:
        # every stored correspondence is projective, so this is the unital case
        return QuasicentralReport(p, n, 0.0, 0.0, 0.0, 0, 0, True)
    Dp = DpAlgebra(H, p)
    tr = Dp.trunc
    qn = unit_projection(tr, n)
    m = H.rank
    A = tr.algebra
    units = A.basis()
    worst = covered_worst = uncovered_worst = 0.0
    count = covered = 0
    for jx in range(p):
        wx = words(m, jx)
        for jy in range(p):
            wy = words(m, jy)
            for k in range(p - max(jx, jy)):
                for ix, u in enumerate(wx):
                    for iy, v in enumerate(wy):
                        ok = all(c < n for c in u) and all(c < n for c in v)
                        for E in units:
                            x = Tensor(tr.degree(jx).space.basis_vector(ix) * E, jx)
                            y = Tensor(tr.degree(jy).space.basis_vector(iy), jy)
                            e = DpElement(tr, [DpTerm(1.0, x, y, k)]).operator()
                            d = (qn @ e - e @ qn).norm()
                            count += 1
                            worst = max(worst, d)
                            if ok:
                                covered += 1
                                covered_worst = max(covered_worst, d)
                            else:
                                uncovered_worst = max(uncovered_worst, d)
    return QuasicentralReport(p, n, worst, covered_worst, uncovered_worst, count, covered, n >= m)


# norm sweeps ---------------------------------------------------------------------

@dataclass(frozen=True)
class SweepResult:
    values: list[tuple[int, float]]
    converged: bool
    q_converged: int | None
    tol: float

    @property
    def final(self) -> float:
        return self.values[-1][1] if self.values else 0.0

    def as_rows(self) -> list[dict]:
        return [{"q": q, "lower_bound": v, "converged": self.q_converged is not None and q >= self.q_converged}
                for q, v in self.values]


def compression_norm_sweep(family: Band | GradedOperator | Callable[[int], GradedOperator],
                           q_range: Iterable[int], tol: float = SWEEP_TOL, stop_early: bool = False) -> SweepResult:
    """Norms of the compressions ``P_q T P_q`` over increasing ``q``.

    Values must be nondecreasing (up to ``1e-8``); a drop means an overflow
    block was mishandled and raises :class:`ConsistencyError`.  Convergence is
    declared once three consecutive values agree to ``tol``.
    """
    if isinstance(family, Band):
        build = family.at
    elif isinstance(family, GradedOperator):
        op = family
        build = lambda q: _restrict(op, q)  # noqa: E731
    else:
        build = family
    values: list[tuple[int, float]] = []
    q_conv = None
    for q in q_range:
        v = build(q).norm()
        if values and v < values[-1][1] - MONOTONE_TOL:
            raise ConsistencyError(f"compression norm dropped from {values[-1][1]:.12g} to {v:.12g} at q={q}")
        values.append((q, v))
        if q_conv is None and len(values) >= 3:
            window = [w for _, w in values[-3:]]
            if max(window) - min(window) < tol:
                q_conv = values[-3][0]
                if stop_early:
                    break
    return SweepResult(values, q_conv is not None, q_conv, tol)


def _restrict(op: GradedOperator, q: int) -> GradedOperator:
    if q > op.cutoff:
        raise CutoffError(f"operator only known up to cutoff {op.cutoff}")
    trunc = op.trunc.with_cutoff(q) if q != op.cutoff else op.trunc
    # a compression of a compression: blocks whose target falls past q become overflow
    unknown = {(s, k) for s, k in op.unknown if k < q and k + s < q}
    return GradedOperator(trunc, op.blocks, op.support, unknown)


def toeplitz_defects(trunc: FockTruncation, x: Tensor, y: Tensor, a: AlgElement, b: AlgElement,
                     alpha: complex = 1.0) -> dict[str, float]:
    """The three Toeplitz relations on one instance, as norm defects on the known window.

    ``x`` and ``y`` must have the same degree.
    """
    if x.degree != y.degree:
        raise ArgumentError("Toeplitz defects compare tensors of equal degree")
    j = x.degree
    Hj = trunc.degree(j)
    Tx = creation(x, trunc)
    Ty = creation(y, trunc)
    lin = Tensor(alpha * x.vec + y.vec, j)
    d_lin = (creation(lin, trunc) - (alpha * Tx + Ty)).norm()
    axb = Tensor(Hj.act(a, x.vec * b), j)
    ab = GradedOperator.left_multiplier(trunc, a) @ Tx @ GradedOperator.left_multiplier(trunc, b)
    d_bimod = (creation(axb, trunc) - ab).norm()
    TxTy = Tx.adjoint() @ Ty
    d_inner = (TxTy - GradedOperator.left_multiplier(trunc, inner(x.vec, y.vec))).norm()
    return {"linearity": d_lin, "bimodularity": d_bimod, "inner": d_inner}


__all__ = [
    "Band", "BandTerm", "DpAlgebra", "DpElement", "DpTerm", "FockTruncation", "GradedOperator",
    "QuasicentralReport", "SweepResult", "Tensor", "annihilation", "band_product", "bump", "bump_vector",
    "compress_by_weights", "compression_norm_sweep", "creation", "phi_compression", "phi_operator_reference",
    "quasicentral_check", "rank_one", "toeplitz_defects", "unit_projection", "vacuum",
]
