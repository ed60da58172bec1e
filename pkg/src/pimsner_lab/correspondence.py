"""Correspondences: a module plus a unital left action of the scalar algebra.

The left action is stored by its values on the matrix-unit basis of ``A``:
for block group ``g`` an array ``W[g]`` of shape ``(D, count, M, M)`` with
``M = rank * n_g``, so ``omega(a)`` is a single contraction against ``flat(a)``.
Interior tensor products use the identification
``H (x) K = E_K(P_H) K^{rank H}`` where ``E_K`` applies ``omega_K`` to every
entry of a matrix over ``A``; then ``x (x) y = E_K(x) y``.
"""
from __future__ import annotations

import threading
from typing import Callable, Sequence

import numpy as np

from .algebra import AlgElement, Automorphism, BlockMatrix, ScalarAlgebra
from .errors import ArgumentError, StructuralError
from .modules import ModOperator, ModuleSpace, ModuleVector, direct_sum_space

ACTION_TOL = 1e-10


def _flat_batch(algebra: ScalarAlgebra, rows: int, cols: int, data: Sequence[np.ndarray]) -> np.ndarray:
    """Entry coefficients of a batch of matrices: per-group ``(B, c, rows*n, cols*n)`` -> ``(B, rows, cols, D)``."""
    parts = []
    for (n, idx), arr in zip(algebra.groups, data):
        c = len(idx)
        B = arr.shape[0]
        t = arr.reshape(B, c, rows, n, cols, n).transpose(0, 2, 4, 1, 3, 5)
        parts.append(t.reshape(B, rows, cols, c * n * n))
    return np.concatenate(parts, axis=3)


def _apply_flat(flat: np.ndarray, W: Sequence[np.ndarray]) -> list[np.ndarray]:
    """Send entry coefficients ``(..., r, s, D)`` through the action, per output group."""
    lead = flat.shape[:-3]
    r, s = flat.shape[-3:-1]
    out = []
    for Wg in W:
        _, c, M, _ = Wg.shape
        t = np.einsum("...rsd,dcij->...crisj", flat, Wg, optimize=True)
        out.append(t.reshape(*lead, c, r * M, s * M))
    return out


class Correspondence:
    """Right Hilbert module ``space`` with a unital *-homomorphism ``A -> L(space)``.

    ``images`` lists ``omega(E_d)`` for the group-major matrix units ``E_d``.
    ``designated_basis`` marks free correspondences whose standard basis is the
    orthonormal basis used for basis tensors (words).
    """

    def __init__(self, space: ModuleSpace, images: Sequence[BlockMatrix] | None = None, *,
                 W: Sequence[np.ndarray] | None = None, validate: bool = True, name: str = "",
                 designated_basis: bool | None = None):
        A = space.algebra
        m = space.free_rank
        if W is None:
            if images is None or len(images) != A.total_dim:
                raise StructuralError(f"left action needs {A.total_dim} basis images")
            for im in images:
                if im.algebra != A or (im.rows, im.cols) != (m, m):
                    raise StructuralError("left action image has the wrong shape")
            W = [np.stack([im.data[g] for im in images]) for g in range(len(A.groups))]
        W = [np.ascontiguousarray(w, dtype=complex) for w in W]
        for w in W:
            w.setflags(write=False)
        for (n, idx), w in zip(A.groups, W):
            if w.shape != (A.total_dim, len(idx), m * n, m * n):
                raise StructuralError("left action array has the wrong shape")
        self.space = space
        self.W = tuple(W)
        self.name = name
        self.designated_basis = space.is_free if designated_basis is None else bool(designated_basis and space.is_free)
        if validate:
            self.validate()

    # basic data ---------------------------------------------------------------
    @property
    def algebra(self) -> ScalarAlgebra:
        return self.space.algebra

    @property
    def rank(self) -> int:
        return self.space.free_rank

    @property
    def is_free(self) -> bool:
        return self.space.is_free

    def image(self, d: int) -> BlockMatrix:
        return BlockMatrix(self.algebra, self.rank, self.rank, [w[d] for w in self.W])

    def left_matrix(self, a: AlgElement) -> BlockMatrix:
        if a.parent != self.algebra:
            raise StructuralError("left action by an element of another algebra")
        f = a.flat()
        return BlockMatrix(self.algebra, self.rank, self.rank,
                           [np.tensordot(f, w, axes=(0, 0)) for w in self.W])

    def left_action(self, a: AlgElement) -> ModOperator:
        return ModOperator(self.space, self.space, self.left_matrix(a), compress=False)

    def act(self, a: AlgElement, x: ModuleVector) -> ModuleVector:
        """``a . x``."""
        if not x.space.same_as(self.space):
            raise StructuralError("vector is not in this correspondence")
        return ModuleVector(self.space, self.left_matrix(a) @ x.mat)

    def entrywise(self, T: BlockMatrix) -> BlockMatrix:
        """Apply the left action to every entry: ``M_{r x s}(A) -> M_{rm x sm}(A)``."""
        if T.algebra != self.algebra:
            raise StructuralError("matrix over another algebra")
        data = _apply_flat(T.flat_entries(), self.W)
        return BlockMatrix(self.algebra, T.rows * self.rank, T.cols * self.rank, data)

    def validate(self, tol: float = ACTION_TOL) -> None:
        """Unital, multiplicative, *-preserving on the basis and compatible with ``P``."""
        A = self.algebra
        P = self.space.projection
        if self.left_matrix(AlgElement.identity(A)).dist(P) > tol:
            raise StructuralError("left action is not unital (omega(1) != P)")
        order = A.basis_order()
        imgs = [self.image(d) for d in range(A.total_dim)]
        index = {key: d for d, key in enumerate(order)}
        for d, (i, a, b) in enumerate(order):
            if imgs[d].adjoint().dist(imgs[index[(i, b, a)]]) > tol:
                raise StructuralError("left action is not *-preserving")
            if (P @ imgs[d]).dist(imgs[d]) > tol or (imgs[d] @ P).dist(imgs[d]) > tol:
                raise StructuralError("left action does not commute with the projection")
            n = A.blocks[i]
            for c in range(n):
                prod = imgs[d] @ imgs[index[(i, b, c)]]
                if prod.dist(imgs[index[(i, a, c)]]) > tol:
                    raise StructuralError("left action is not multiplicative")
            for e, (j, b2, _) in enumerate(order):
                if (j != i or b2 != b) and (imgs[d] @ imgs[e]).norm() > tol:
                    raise StructuralError("left action is not multiplicative")

    def is_injective(self, tol: float = 1e-9) -> bool:
        flat = np.concatenate([w.reshape(self.algebra.total_dim, -1) for w in self.W], axis=1)
        return np.linalg.matrix_rank(flat, tol=tol) == self.algebra.total_dim

    def __repr__(self) -> str:
        label = f" {self.name}" if self.name else ""
        return f"Correspondence({label.strip() or 'unnamed'}, rank={self.rank}, blocks={self.algebra.blocks})"


# constructions ----------------------------------------------------------------

def _action_from_automorphisms(A: ScalarAlgebra, alphas: Sequence[Automorphism]) -> list[BlockMatrix]:
    out = []
    for e in A.basis():
        vals = [alpha(e) for alpha in alphas]
        out.append(BlockMatrix.diag(vals) if len(vals) > 1 else BlockMatrix.from_element(vals[0]))
    return out


def identity_corr(A: ScalarAlgebra) -> Correspondence:
    """``A`` over itself with left multiplication (degree zero of every Fock space)."""
    data = []
    for n, idx in A.groups:
        c = len(idx)
        w = np.zeros((A.total_dim, c, n, n), dtype=complex)
        data.append(w)
    for d, e in enumerate(A.basis()):
        for g in range(len(A.groups)):
            data[g][d] = e.data[g]
    return Correspondence(ModuleSpace.free(A, 1), W=data, validate=False, name="identity")


def crossed_product_corr(alpha: Automorphism) -> Correspondence:
    """``A^alpha``: rank one, ``a . b = alpha(a) b``."""
    A = alpha.parent
    return Correspondence(ModuleSpace.free(A, 1), _action_from_automorphisms(A, [alpha]), name="crossed_product")


def twisted_free_corr(alphas: Sequence[Automorphism]) -> Correspondence:
    """Free module on ``xi_1..xi_m`` with ``a . xi_i = xi_i . alpha_i(a)``."""
    if len(alphas) == 0:
        raise ArgumentError("twisted_free_corr needs at least one automorphism")
    A = alphas[0].parent
    if any(al.parent != A for al in alphas):
        raise StructuralError("automorphisms on different algebras")
    return Correspondence(ModuleSpace.free(A, len(alphas)), _action_from_automorphisms(A, list(alphas)),
                          name="twisted_free", designated_basis=True)


def direct_sum_corr(H: Correspondence, K: Correspondence) -> Correspondence:
    if H.algebra != K.algebra:
        raise StructuralError("direct sum of correspondences over different algebras")
    space = direct_sum_space(H.space, K.space)
    images = [BlockMatrix.block_diag([H.image(d), K.image(d)]) for d in range(H.algebra.total_dim)]
    return Correspondence(space, images, validate=False, name="direct_sum",
                          designated_basis=H.designated_basis and K.designated_basis)


def tensor_corr(H: Correspondence, K: Correspondence) -> Correspondence:
    """``H (x) K`` realized inside the free module of rank ``rank(H) * rank(K)``."""
    if H.algebra != K.algebra:
        raise StructuralError("tensor product of correspondences over different algebras")
    A = H.algebra
    if H.is_free and K.is_free:
        space = ModuleSpace.free(A, H.rank * K.rank)
    else:
        space = ModuleSpace(A, H.rank * K.rank, K.entrywise(H.space.projection))
    flat = _flat_batch(A, H.rank, H.rank, H.W)
    W = _apply_flat(flat, K.W)
    return Correspondence(space, W=W, validate=False, name="tensor",
                          designated_basis=H.designated_basis and K.designated_basis)


def tensor(x: ModuleVector, y: ModuleVector, K: Correspondence, into: ModuleSpace | None = None) -> ModuleVector:
    """``x (x) y`` for ``x`` in ``H`` and ``y`` in ``K``; coordinates ``(omega_K(x_i) y)_i``."""
    if x.space.algebra != K.algebra:
        raise StructuralError("tensor factors over different algebras")
    if not y.space.same_as(K.space):
        raise StructuralError("second factor is not in K")
    mat = K.entrywise(x.mat) @ y.mat
    if into is None:
        proj = None if (x.space.is_free and K.is_free) else K.entrywise(x.space.projection)
        into = ModuleSpace(K.algebra, x.space.free_rank * K.rank, proj)
    return ModuleVector(into, mat)


class TensorPowerCache:
    """``H^{(x)0} = A, H^{(x)1} = H, ..., H^{(x)(k+1)} = H (x) H^{(x)k}``, grown on demand.

    With this recursion the realization is associative on the nose:
    ``H^{(x)j} (x) H^{(x)k}`` and ``H^{(x)(j+k)}`` have the same coordinates.
    """

    def __init__(self, base: Correspondence, k_max: int = 1):
        self.base = base
        self._powers: list[Correspondence] = [identity_corr(base.algebra), base]
        self._lock = threading.Lock()
        self.get(k_max)

    def get(self, k: int) -> Correspondence:
        if k < 0:
            raise ArgumentError("tensor powers have nonnegative degree")
        with self._lock:
            while len(self._powers) <= k:
                self._powers.append(tensor_corr(self.base, self._powers[-1]))
        return self._powers[k]

    def __getitem__(self, k: int) -> Correspondence:
        return self.get(k)

    @property
    def powers(self) -> list[Correspondence]:
        return list(self._powers)

    def rank(self, k: int) -> int:
        return self.base.rank ** k

    def tensor(self, x: ModuleVector, j: int, y: ModuleVector, k: int) -> ModuleVector:
        """``x (x) y`` with ``x`` in degree ``j`` and ``y`` in degree ``k``, landing in degree ``j + k``."""
        Hk = self.get(k)
        return tensor(x, y, Hk, into=self.get(j + k).space)

    def elementary(self, factors: Sequence[ModuleVector]) -> ModuleVector:
        """``x_1 (x) ... (x) x_k`` with every ``x_i`` in the base correspondence."""
        if not factors:
            return self.get(0).space.vector([AlgElement.identity(self.base.algebra)])
        out = factors[-1]
        for i, x in enumerate(reversed(factors[:-1])):
            out = self.tensor(x, 1, out, i + 1)
        return out

    def word(self, letters: Sequence[int]) -> ModuleVector:
        """Basis tensor ``xi_{i_1} (x) ... (x) xi_{i_k}`` (free base only)."""
        if not self.base.is_free:
            raise StructuralError("basis words need a free correspondence")
        k = len(letters)
        m = self.base.rank
        index = 0
        for i in letters:
            if not 0 <= i < m:
                raise ArgumentError(f"letter {i} outside 0..{m - 1}")
            index = index * m + i
        return self.get(k).space.basis_vector(index)


def words(m: int, k: int) -> list[tuple[int, ...]]:
    """All words of length ``k`` over ``m`` letters, in basis-index order."""
    return [tuple(int(c) for c in np.unravel_index(i, (m,) * k)) if k else () for i in range(m ** k)]


# random instances ------------------------------------------------------------

def _haar_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def _fillable(total: int, sizes: Sequence[int]) -> bool:
    """Whether ``total`` is a nonnegative integer combination of ``sizes``."""
    ok = [True] + [False] * total
    for t in range(1, total + 1):
        ok[t] = any(s <= t and ok[t - s] for s in sizes)
    return ok[total]


def random_fgp_corr(A: ScalarAlgebra, rank: int, rng: np.random.Generator, free: bool | None = None) -> Correspondence:
    """A random finitely generated projective correspondence of free rank ``rank``.

    In output block ``j`` (a copy of ``M_{rank * n_j}``) the left action is a
    direct sum of identity representations of the blocks of ``A`` with random
    multiplicities, conjugated by a random unitary; ``P`` is the projection onto
    the occupied subspace.  ``free=True`` forces the multiplicities to fill
    every block, which gives a free module.
    """
    if rank < 1:
        raise ArgumentError("rank must be positive")
    r = len(A.blocks)
    per_block_images: list[list[np.ndarray]] = [[] for _ in range(A.total_dim)]
    projections = []
    if free is None:
        free = bool(rng.integers(0, 2))
    for j, nj in enumerate(A.blocks):
        size = rank * nj
        mult = np.zeros(r, dtype=int)
        remaining = size
        if free:
            candidates = [i for i in range(r) if size % A.blocks[i] == 0]
        else:
            candidates = list(range(r))
        # fill greedily in random order; keep at least one copy somewhere
        for _ in range(4 * size):
            fits = [i for i in candidates if A.blocks[i] <= remaining]
            if free:
                fits = [i for i in fits if _fillable(remaining - A.blocks[i], [A.blocks[c] for c in candidates])]
            if not fits:
                break
            i = int(rng.choice(fits))
            mult[i] += 1
            remaining -= A.blocks[i]
            if not free and rng.random() < 0.3:
                break
        if free and remaining:
            # any leftover must be filled with one-dimensional blocks or a divisor block
            fits = [i for i in range(r) if remaining % A.blocks[i] == 0]
            if not fits:
                raise StructuralError("cannot build a free action with these block sizes")
            i = fits[0]
            mult[i] += remaining // A.blocks[i]
            remaining = 0
        used = size - remaining
        U = _haar_unitary(size, rng)
        P = np.zeros((size, size), dtype=complex)
        P[:used, :used] = np.eye(used)
        projections.append(U @ P @ U.conj().T)
        for d, (i, a, b) in enumerate(A.basis_order()):
            M = np.zeros((size, size), dtype=complex)
            pos = 0
            for i2 in range(r):
                n2 = A.blocks[i2]
                for _ in range(mult[i2]):
                    if i2 == i:
                        M[pos + a, pos + b] = 1.0
                    pos += n2
            per_block_images[d].append(U @ M @ U.conj().T)
    images = [BlockMatrix(A, rank, rank, A.group_stack(blocks)) for blocks in per_block_images]
    proj = None if free else BlockMatrix(A, rank, rank, A.group_stack(projections))
    space = ModuleSpace(A, rank, proj)
    return Correspondence(space, images, name="random_fgp", designated_basis=False)


def random_automorphism(A: ScalarAlgebra, rng: np.random.Generator) -> Automorphism:
    perm = list(range(len(A.blocks)))
    for _, idx in A.groups:
        shuffled = list(idx)
        rng.shuffle(shuffled)
        for i, j in zip(idx, shuffled):
            perm[i] = j
    return Automorphism(A, perm, [_haar_unitary(n, rng) for n in A.blocks])


def random_twisted_free_corr(A: ScalarAlgebra, rank: int, rng: np.random.Generator) -> Correspondence:
    return twisted_free_corr([random_automorphism(A, rng) for _ in range(rank)])


def from_action(space: ModuleSpace, action: Callable[[AlgElement], BlockMatrix], **kw) -> Correspondence:
    """Build a correspondence by evaluating ``action`` on the basis of ``A``."""
    return Correspondence(space, [action(e) for e in space.algebra.basis()], **kw)
