"""Finite-dimensional C*-algebras ``M_{n_1}(C) + ... + M_{n_r}(C)``.

Every array in the library is stored *per group*: blocks of equal size are
stacked into one ``(count, rows * n, cols * n)`` array, so that a commutative
algebra ``C^n`` is a single ``(n, 1, 1)`` stack and all block arithmetic is one
batched numpy call.  Within a group the blocks keep their original order; the
flat basis of the algebra is enumerated group-major (group, member, row, col).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import ArgumentError, PositivityError, StructuralError

POS_TOL = 1e-10
UNITARY_TOL = 1e-10


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr, dtype=complex)
    arr.setflags(write=False)
    return arr


def spectral_norms(stack: np.ndarray) -> np.ndarray:
    """Largest singular value of every matrix in a ``(count, r, c)`` stack."""
    if stack.size == 0:
        return np.zeros(stack.shape[0])
    if stack.shape[1] == 1 or stack.shape[2] == 1:
        return np.sqrt(np.sum(np.abs(stack) ** 2, axis=(1, 2)))
    return np.linalg.norm(stack, ord=2, axis=(1, 2))


@dataclass(frozen=True)
class ScalarAlgebra:
    """Direct sum of full matrix blocks; ``C(X)`` for finite X is ``[1]*|X|``."""

    blocks: tuple[int, ...]
    groups: tuple[tuple[int, tuple[int, ...]], ...] = field(init=False, repr=False, compare=False)
    _locate: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        blocks = tuple(int(n) for n in self.blocks)
        if not blocks or any(n < 1 for n in blocks):
            raise StructuralError(f"block sizes must be positive and nonempty, got {self.blocks!r}")
        object.__setattr__(self, "blocks", blocks)
        members: dict[int, list[int]] = {}
        for i, n in enumerate(blocks):
            members.setdefault(n, []).append(i)
        groups = tuple((n, tuple(idx)) for n, idx in members.items())
        locate = {}
        for g, (_, idx) in enumerate(groups):
            for c, i in enumerate(idx):
                locate[i] = (g, c)
        object.__setattr__(self, "groups", groups)
        object.__setattr__(self, "_locate", locate)

    @classmethod
    def commutative(cls, n: int) -> "ScalarAlgebra":
        """``C(Z/n)`` as ``n`` one-by-one blocks."""
        return cls((1,) * int(n))

    @property
    def N(self) -> int:
        """Dimension of the faithful representation."""
        return sum(self.blocks)

    @property
    def total_dim(self) -> int:
        return sum(n * n for n in self.blocks)

    @property
    def is_commutative(self) -> bool:
        return all(n == 1 for n in self.blocks)

    def locate(self, block: int) -> tuple[int, int]:
        return self._locate[block]

    def basis_order(self) -> list[tuple[int, int, int]]:
        """(block, row, col) for every flat basis index, group-major."""
        order = []
        for n, idx in self.groups:
            for i in idx:
                for a in range(n):
                    for b in range(n):
                        order.append((i, a, b))
        return order

    def block_major_permutation(self) -> np.ndarray:
        """Map block-major (JSON) basis positions to group-major indices."""
        position = {key: d for d, key in enumerate(self.basis_order())}
        keys = [(i, a, b) for i, n in enumerate(self.blocks) for a in range(n) for b in range(n)]
        return np.array([position[k] for k in keys])

    def basis(self) -> list["AlgElement"]:
        """Matrix units, group-major."""
        out = []
        for i, a, b in self.basis_order():
            blocks = [np.zeros((n, n), dtype=complex) for n in self.blocks]
            blocks[i][a, b] = 1.0
            out.append(AlgElement.from_blocks(self, blocks))
        return out

    def group_stack(self, per_block: Sequence[np.ndarray]) -> tuple[np.ndarray, ...]:
        """Stack a block-ordered list into per-group arrays."""
        return tuple(np.stack([np.asarray(per_block[i], dtype=complex) for i in idx]) for _, idx in self.groups)

    def unstack(self, data: Sequence[np.ndarray]) -> list[np.ndarray]:
        out: list = [None] * len(self.blocks)
        for g, (_, idx) in enumerate(self.groups):
            for c, i in enumerate(idx):
                out[i] = np.array(data[g][c])
        return out


class AlgElement:
    """Element of a :class:`ScalarAlgebra`; immutable."""

    __slots__ = ("parent", "data")

    def __init__(self, parent: ScalarAlgebra, data: Sequence[np.ndarray]):
        if len(data) != len(parent.groups):
            raise StructuralError("element has the wrong number of block groups")
        checked = []
        for (n, idx), arr in zip(parent.groups, data):
            arr = np.asarray(arr)
            if arr.shape != (len(idx), n, n):
                raise StructuralError(f"block group shape {arr.shape} does not match {(len(idx), n, n)}")
            checked.append(_readonly(arr))
        self.parent = parent
        self.data = tuple(checked)

    # construction -------------------------------------------------------
    @classmethod
    def from_blocks(cls, parent: ScalarAlgebra, blocks: Sequence[np.ndarray]) -> "AlgElement":
        if len(blocks) != len(parent.blocks):
            raise StructuralError(f"expected {len(parent.blocks)} blocks, got {len(blocks)}")
        for n, b in zip(parent.blocks, blocks):
            if np.shape(b) != (n, n):
                raise StructuralError(f"block of shape {np.shape(b)} where {(n, n)} expected")
        return cls(parent, parent.group_stack(blocks))

    @classmethod
    def zero(cls, parent: ScalarAlgebra) -> "AlgElement":
        return cls(parent, [np.zeros((len(idx), n, n)) for n, idx in parent.groups])

    @classmethod
    def scalar(cls, parent: ScalarAlgebra, value: complex) -> "AlgElement":
        return cls(parent, [value * np.broadcast_to(np.eye(n), (len(idx), n, n)) for n, idx in parent.groups])

    @classmethod
    def identity(cls, parent: ScalarAlgebra) -> "AlgElement":
        return cls.scalar(parent, 1.0)

    @classmethod
    def diagonal(cls, parent: ScalarAlgebra, values: Sequence[complex]) -> "AlgElement":
        """Function on the points of a commutative algebra."""
        if not parent.is_commutative:
            raise StructuralError("diagonal() needs a commutative algebra")
        values = np.asarray(values, dtype=complex)
        if values.shape != (len(parent.blocks),):
            raise StructuralError("one value per point required")
        return cls(parent, [values.reshape(-1, 1, 1)])

    @classmethod
    def indicator(cls, parent: ScalarAlgebra, points: Iterable[int]) -> "AlgElement":
        values = np.zeros(len(parent.blocks))
        values[list(points)] = 1.0
        return cls.diagonal(parent, values)

    @classmethod
    def random(cls, parent: ScalarAlgebra, rng: np.random.Generator) -> "AlgElement":
        return cls(parent, [rng.normal(size=(len(idx), n, n)) + 1j * rng.normal(size=(len(idx), n, n))
                            for n, idx in parent.groups])

    @classmethod
    def random_positive_contraction(cls, parent: ScalarAlgebra, rng: np.random.Generator) -> "AlgElement":
        data = []
        for n, idx in parent.groups:
            z = rng.normal(size=(len(idx), n, n)) + 1j * rng.normal(size=(len(idx), n, n))
            q, _ = np.linalg.qr(z)
            lam = rng.uniform(0.0, 1.0, size=(len(idx), n))
            data.append(np.einsum("cij,cj,ckj->cik", q, lam, q.conj()))
        return cls(parent, data)

    # views ----------------------------------------------------------------
    def blocks(self) -> list[np.ndarray]:
        return self.parent.unstack(self.data)

    def flat(self) -> np.ndarray:
        """Coefficients in the group-major matrix-unit basis."""
        return np.concatenate([arr.reshape(-1) for arr in self.data])

    @classmethod
    def from_flat(cls, parent: ScalarAlgebra, vec: np.ndarray) -> "AlgElement":
        data, pos = [], 0
        for n, idx in parent.groups:
            size = len(idx) * n * n
            data.append(np.asarray(vec[pos:pos + size]).reshape(len(idx), n, n))
            pos += size
        return cls(parent, data)

    def to_matrix(self) -> np.ndarray:
        """Block-diagonal image in ``M_N(C)``."""
        out = np.zeros((self.parent.N, self.parent.N), dtype=complex)
        pos = 0
        for n, b in zip(self.parent.blocks, self.blocks()):
            out[pos:pos + n, pos:pos + n] = b
            pos += n
        return out

    # algebra ------------------------------------------------------------------
    def _check(self, other: "AlgElement") -> None:
        if not isinstance(other, AlgElement) or other.parent != self.parent:
            raise StructuralError("elements live in different algebras")

    def __add__(self, other: "AlgElement") -> "AlgElement":
        self._check(other)
        return AlgElement(self.parent, [a + b for a, b in zip(self.data, other.data)])

    def __sub__(self, other: "AlgElement") -> "AlgElement":
        self._check(other)
        return AlgElement(self.parent, [a - b for a, b in zip(self.data, other.data)])

    def __neg__(self) -> "AlgElement":
        return AlgElement(self.parent, [-a for a in self.data])

    def __mul__(self, other):
        if isinstance(other, AlgElement):
            self._check(other)
            return AlgElement(self.parent, [a @ b for a, b in zip(self.data, other.data)])
        if np.isscalar(other):
            return AlgElement(self.parent, [a * other for a in self.data])
        return NotImplemented

    def __rmul__(self, other):
        if np.isscalar(other):
            return AlgElement(self.parent, [other * a for a in self.data])
        return NotImplemented

    def __matmul__(self, other: "AlgElement") -> "AlgElement":
        return self * other

    def adjoint(self) -> "AlgElement":
        return AlgElement(self.parent, [np.conj(np.swapaxes(a, 1, 2)) for a in self.data])

    @property
    def H(self) -> "AlgElement":
        return self.adjoint()

    def commutator(self, other: "AlgElement") -> "AlgElement":
        return self * other - other * self

    def power(self, k: int) -> "AlgElement":
        return AlgElement(self.parent, [np.linalg.matrix_power(a, k) for a in self.data])

    # analysis ---------------------------------------------------------------
    def norm(self) -> float:
        return float(max(spectral_norms(a).max() for a in self.data))

    def dist(self, other: "AlgElement") -> float:
        return (self - other).norm()

    def allclose(self, other: "AlgElement", atol: float = 1e-10) -> bool:
        self._check(other)
        return all(np.allclose(a, b, rtol=0.0, atol=atol) for a, b in zip(self.data, other.data))

    def is_selfadjoint(self, tol: float = POS_TOL) -> bool:
        return self.dist(self.adjoint()) <= tol

    def eigenvalues(self) -> np.ndarray:
        """Spectrum of the hermitian part, concatenated over blocks."""
        herm = [(a + np.conj(np.swapaxes(a, 1, 2))) / 2 for a in self.data]
        return np.concatenate([np.linalg.eigvalsh(h).reshape(-1) for h in herm])

    def is_positive(self, tol: float = POS_TOL) -> bool:
        return self.is_selfadjoint(tol) and float(self.eigenvalues().min()) >= -tol

    def is_positive_contraction(self, tol: float = POS_TOL) -> bool:
        return self.is_positive(tol) and self.norm() <= 1.0 + tol

    def functional_calculus(self, fn, tol: float = POS_TOL) -> "AlgElement":
        """Apply ``fn`` to the spectrum of a positive element (eigenvalues clipped at 0)."""
        if not self.is_selfadjoint(tol):
            raise PositivityError("element is not self-adjoint")
        out = []
        for a in self.data:
            lam, vec = np.linalg.eigh((a + np.conj(np.swapaxes(a, 1, 2))) / 2)
            if lam.size and lam.min() < -tol:
                raise PositivityError(f"eigenvalue {lam.min():.3e} below -{tol:g}")
            vals = fn(np.clip(lam, 0.0, None))
            out.append(np.einsum("cij,cj,ckj->cik", vec, vals, vec.conj()))
        return AlgElement(self.parent, out)

    def sqrt(self) -> "AlgElement":
        return self.functional_calculus(np.sqrt)

    def __repr__(self) -> str:
        return f"AlgElement(blocks={self.parent.blocks}, norm={self.norm():.4g})"


def op_norm(a: AlgElement) -> float:
    """C*-norm: largest singular value over all blocks."""
    return a.norm()


def sqrt_positive(a: AlgElement) -> AlgElement:
    return a.sqrt()


class Automorphism:
    """``a -> u_j a_{perm[j]} u_j^*`` blockwise; ``perm`` only moves equal-size blocks.

    Every automorphism of a finite-dimensional C*-algebra has this form.
    """

    __slots__ = ("parent", "perm", "unitaries", "_src", "_u")

    def __init__(self, parent: ScalarAlgebra, perm: Sequence[int] | None = None,
                 unitaries: Sequence[np.ndarray] | None = None):
        r = len(parent.blocks)
        perm = tuple(range(r)) if perm is None else tuple(int(j) for j in perm)
        if sorted(perm) != list(range(r)):
            raise StructuralError(f"{perm!r} is not a permutation of the blocks")
        for j, src in enumerate(perm):
            if parent.blocks[j] != parent.blocks[src]:
                raise StructuralError(f"block {src} (size {parent.blocks[src]}) cannot move to block {j} "
                                      f"(size {parent.blocks[j]})")
        if unitaries is None:
            u_blocks = [np.eye(n, dtype=complex) for n in parent.blocks]
        else:
            if len(unitaries) != r:
                raise StructuralError("one unitary per block required")
            u_blocks = [np.asarray(u, dtype=complex) for u in unitaries]
            for n, u in zip(parent.blocks, u_blocks):
                if u.shape != (n, n) or not np.allclose(u @ u.conj().T, np.eye(n), atol=UNITARY_TOL):
                    raise StructuralError("unitary data is not unitary")
        self.parent = parent
        self.perm = perm
        self.unitaries = tuple(_readonly(u) for u in u_blocks)
        self._src = tuple(np.array([parent.locate(perm[i])[1] for i in idx]) for _, idx in parent.groups)
        self._u = tuple(_readonly(s) for s in parent.group_stack(u_blocks))

    @classmethod
    def identity(cls, parent: ScalarAlgebra) -> "Automorphism":
        return cls(parent)

    @classmethod
    def cyclic_shift(cls, parent: ScalarAlgebra, k: int = 1) -> "Automorphism":
        """``(alpha f)(j) = f(j - k)`` on ``C(Z/n)``, so indicator of {0} goes to {k}."""
        if not parent.is_commutative:
            raise StructuralError("cyclic shift needs a commutative algebra")
        n = len(parent.blocks)
        return cls(parent, [(j - k) % n for j in range(n)])

    def __call__(self, a: AlgElement) -> AlgElement:
        if a.parent != self.parent:
            raise StructuralError("automorphism and element have different parents")
        out = []
        for arr, src, u in zip(a.data, self._src, self._u):
            out.append(u @ arr[src] @ np.conj(np.swapaxes(u, 1, 2)))
        return AlgElement(self.parent, out)

    def compose(self, other: "Automorphism") -> "Automorphism":
        """``self o other``."""
        if other.parent != self.parent:
            raise StructuralError("automorphisms on different algebras")
        perm = [other.perm[self.perm[j]] for j in range(len(self.perm))]
        units = [self.unitaries[j] @ other.unitaries[self.perm[j]] for j in range(len(self.perm))]
        return Automorphism(self.parent, perm, units)

    def inverse(self) -> "Automorphism":
        r = len(self.perm)
        inv = [0] * r
        for j, src in enumerate(self.perm):
            inv[src] = j
        units = [np.conj(self.unitaries[inv[i]]).T for i in range(r)]
        return Automorphism(self.parent, inv, units)

    def power(self, k: int) -> "Automorphism":
        if k < 0:
            return self.inverse().power(-k)
        out = Automorphism.identity(self.parent)
        for _ in range(k):
            out = self.compose(out)
        return out

    def is_identity(self, tol: float = 1e-12) -> bool:
        return all(self(b).allclose(b, tol) for b in self.parent.basis())

    def __repr__(self) -> str:
        return f"Automorphism(perm={self.perm})"


def apply_automorphism(alpha: Automorphism, a: AlgElement) -> AlgElement:
    return alpha(a)


class BlockMatrix:
    """An ``rows x cols`` matrix with entries in a :class:`ScalarAlgebra`.

    Group ``g`` is stored as a ``(count, rows * n_g, cols * n_g)`` complex
    stack: entry ``(r, s)`` of block ``c`` is the ``n_g x n_g`` tile at
    ``[c, r*n:(r+1)*n, s*n:(s+1)*n]``.  This is the faithful representation of
    ``M_{rows x cols}(A)``, so norms are exact.
    """

    __slots__ = ("algebra", "rows", "cols", "data")

    def __init__(self, algebra: ScalarAlgebra, rows: int, cols: int, data: Sequence[np.ndarray]):
        if len(data) != len(algebra.groups):
            raise StructuralError("wrong number of block groups")
        checked = []
        for (n, idx), arr in zip(algebra.groups, data):
            arr = np.asarray(arr)
            if arr.shape != (len(idx), rows * n, cols * n):
                raise StructuralError(f"group array {arr.shape} vs expected {(len(idx), rows * n, cols * n)}")
            checked.append(_readonly(arr))
        self.algebra = algebra
        self.rows = int(rows)
        self.cols = int(cols)
        self.data = tuple(checked)

    @classmethod
    def zeros(cls, algebra: ScalarAlgebra, rows: int, cols: int) -> "BlockMatrix":
        return cls(algebra, rows, cols, [np.zeros((len(idx), rows * n, cols * n)) for n, idx in algebra.groups])

    @classmethod
    def identity(cls, algebra: ScalarAlgebra, m: int) -> "BlockMatrix":
        return cls(algebra, m, m, [np.broadcast_to(np.eye(m * n), (len(idx), m * n, m * n))
                                   for n, idx in algebra.groups])

    @classmethod
    def from_element(cls, a: AlgElement) -> "BlockMatrix":
        return cls(a.parent, 1, 1, a.data)

    @classmethod
    def from_entries(cls, algebra: ScalarAlgebra, entries: Sequence[Sequence[AlgElement]]) -> "BlockMatrix":
        rows = len(entries)
        cols = len(entries[0]) if rows else 0
        data = []
        for g, (n, idx) in enumerate(algebra.groups):
            arr = np.zeros((len(idx), rows * n, cols * n), dtype=complex)
            for r, row in enumerate(entries):
                if len(row) != cols:
                    raise StructuralError("ragged entry matrix")
                for s, a in enumerate(row):
                    if a.parent != algebra:
                        raise StructuralError("entry from a different algebra")
                    arr[:, r * n:(r + 1) * n, s * n:(s + 1) * n] = a.data[g]
            data.append(arr)
        return cls(algebra, rows, cols, data)

    @classmethod
    def column(cls, entries: Sequence[AlgElement]) -> "BlockMatrix":
        return cls.from_entries(entries[0].parent, [[a] for a in entries])

    @classmethod
    def diag(cls, entries: Sequence[AlgElement]) -> "BlockMatrix":
        A = entries[0].parent
        zero = AlgElement.zero(A)
        m = len(entries)
        return cls.from_entries(A, [[entries[r] if r == s else zero for s in range(m)] for r in range(m)])

    @classmethod
    def block_diag(cls, mats: Sequence["BlockMatrix"]) -> "BlockMatrix":
        A = mats[0].algebra
        rows = sum(m.rows for m in mats)
        cols = sum(m.cols for m in mats)
        data = []
        for g, (n, idx) in enumerate(A.groups):
            arr = np.zeros((len(idx), rows * n, cols * n), dtype=complex)
            r0 = c0 = 0
            for m in mats:
                arr[:, r0 * n:(r0 + m.rows) * n, c0 * n:(c0 + m.cols) * n] = m.data[g]
                r0 += m.rows
                c0 += m.cols
            data.append(arr)
        return cls(A, rows, cols, data)

    @classmethod
    def vstack(cls, mats: Sequence["BlockMatrix"]) -> "BlockMatrix":
        A = mats[0].algebra
        cols = mats[0].cols
        if any(m.cols != cols for m in mats):
            raise StructuralError("vstack needs equal column counts")
        return cls(A, sum(m.rows for m in mats), cols,
                   [np.concatenate([m.data[g] for m in mats], axis=1) for g in range(len(A.groups))])

    @classmethod
    def hstack(cls, mats: Sequence["BlockMatrix"]) -> "BlockMatrix":
        A = mats[0].algebra
        rows = mats[0].rows
        if any(m.rows != rows for m in mats):
            raise StructuralError("hstack needs equal row counts")
        return cls(A, rows, sum(m.cols for m in mats),
                   [np.concatenate([m.data[g] for m in mats], axis=2) for g in range(len(A.groups))])

    def entry(self, r: int, s: int) -> AlgElement:
        return AlgElement(self.algebra, [arr[:, r * n:(r + 1) * n, s * n:(s + 1) * n]
                                         for (n, _), arr in zip(self.algebra.groups, self.data)])

    def entries(self) -> list[list[AlgElement]]:
        return [[self.entry(r, s) for s in range(self.cols)] for r in range(self.rows)]

    def sub(self, rows: slice, cols: slice) -> "BlockMatrix":
        """Contiguous sub-matrix by entry ranges."""
        r0, r1, _ = rows.indices(self.rows)
        c0, c1, _ = cols.indices(self.cols)
        return BlockMatrix(self.algebra, r1 - r0, c1 - c0,
                           [arr[:, r0 * n:r1 * n, c0 * n:c1 * n]
                            for (n, _), arr in zip(self.algebra.groups, self.data)])

    def flat_entries(self) -> np.ndarray:
        """Array ``(rows, cols, D)`` of entry coefficients in the group-major basis."""
        parts = []
        for (n, idx), arr in zip(self.algebra.groups, self.data):
            c = len(idx)
            t = arr.reshape(c, self.rows, n, self.cols, n).transpose(1, 3, 0, 2, 4)
            parts.append(t.reshape(self.rows, self.cols, c * n * n))
        return np.concatenate(parts, axis=2)

    def _check(self, other: "BlockMatrix") -> None:
        if other.algebra != self.algebra:
            raise StructuralError("matrices over different algebras")

    def __matmul__(self, other: "BlockMatrix") -> "BlockMatrix":
        self._check(other)
        if self.cols != other.rows:
            raise StructuralError(f"cannot compose {self.rows}x{self.cols} with {other.rows}x{other.cols}")
        return BlockMatrix(self.algebra, self.rows, other.cols, [a @ b for a, b in zip(self.data, other.data)])

    def __add__(self, other: "BlockMatrix") -> "BlockMatrix":
        self._check(other)
        if (self.rows, self.cols) != (other.rows, other.cols):
            raise StructuralError("shape mismatch in sum")
        return BlockMatrix(self.algebra, self.rows, self.cols, [a + b for a, b in zip(self.data, other.data)])

    def __sub__(self, other: "BlockMatrix") -> "BlockMatrix":
        return self + (-1.0) * other

    def __neg__(self) -> "BlockMatrix":
        return (-1.0) * self

    def __mul__(self, other):
        if np.isscalar(other):
            return BlockMatrix(self.algebra, self.rows, self.cols, [a * other for a in self.data])
        return NotImplemented

    __rmul__ = __mul__

    def adjoint(self) -> "BlockMatrix":
        return BlockMatrix(self.algebra, self.cols, self.rows, [np.conj(np.swapaxes(a, 1, 2)) for a in self.data])

    def right_act(self, a: AlgElement) -> "BlockMatrix":
        """Multiply every entry by ``a`` on the right (the right module action)."""
        if a.parent != self.algebra:
            raise StructuralError("right action by an element of another algebra")
        out = []
        for (n, idx), arr, b in zip(self.algebra.groups, self.data, a.data):
            c = len(idx)
            t = arr.reshape(c, self.rows * n, self.cols, n) @ b[:, None, :, :]
            out.append(t.reshape(c, self.rows * n, self.cols * n))
        return BlockMatrix(self.algebra, self.rows, self.cols, out)

    def left_scalar_act(self, a: AlgElement) -> "BlockMatrix":
        """Multiply every entry by ``a`` on the left (diagonal action on the free module)."""
        if a.parent != self.algebra:
            raise StructuralError("left multiplication by an element of another algebra")
        out = []
        for (n, idx), arr, b in zip(self.algebra.groups, self.data, a.data):
            c = len(idx)
            t = b[:, None, :, :] @ arr.reshape(c, self.rows, n, self.cols * n)
            out.append(t.reshape(c, self.rows * n, self.cols * n))
        return BlockMatrix(self.algebra, self.rows, self.cols, out)

    def norm(self) -> float:
        if self.rows == 0 or self.cols == 0:
            return 0.0
        return float(max(spectral_norms(a).max() for a in self.data))

    def allclose(self, other: "BlockMatrix", atol: float = 1e-10) -> bool:
        self._check(other)
        return (self.rows, self.cols) == (other.rows, other.cols) and all(
            np.allclose(a, b, rtol=0.0, atol=atol) for a, b in zip(self.data, other.data))

    def dist(self, other: "BlockMatrix") -> float:
        return (self - other).norm()

    def to_element(self) -> AlgElement:
        if (self.rows, self.cols) != (1, 1):
            raise StructuralError("only 1x1 matrices are algebra elements")
        return AlgElement(self.algebra, self.data)

    def dense_blocks(self) -> list[np.ndarray]:
        """Per-block complex matrices in block order."""
        return self.algebra.unstack(self.data)

    def __repr__(self) -> str:
        return f"BlockMatrix({self.rows}x{self.cols} over {self.algebra.blocks})"


def check_shape(cond: bool, message: str) -> None:
    if not cond:
        raise StructuralError(message)


def require_odd(p: int, what: str = "p") -> None:
    if int(p) != p or p < 1 or p % 2 == 0:
        raise ArgumentError(f"{what} must be an odd positive integer, got {p}")
