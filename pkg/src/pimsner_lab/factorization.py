"""Incoming maps, c.p.c./order-zero certification and the factorization certificate.

Two realizations of the incoming map for a root tuple ``G = (g_0..g_{p-1})``:

* ``rho_band``: the Toeplitz-level formula on spanning elements,
  ``e_{x,y} (x) 1_k -> g_{k+|x|} T_x T_y^* g_{k+|y|}``, used by the
  end-to-end factorization pipeline.
* ``RowOperator`` / ``incoming_map_sample``: the conjugation
  ``S -> R_G iota(S) R_G^*`` with ``R_G = sum_k g_k [T_eta]_{|eta| = k}``,
  a manifestly completely positive map on ``B(F_p(H))`` used for Choi and
  order-zero certification.  Both agree after passing to the Cuntz-Pimsner
  quotient; at the Toeplitz level the second carries an extra projection
  onto degrees ``>= k``.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from .algebra import AlgElement, BlockMatrix, ScalarAlgebra, require_odd, spectral_norms
from .correspondence import Correspondence, TensorPowerCache, _apply_flat, words
from .errors import ArgumentError, CutoffError, StructuralError
from .fock import (Band, BandTerm, DpAlgebra, DpElement, DpTerm, FockTruncation, GradedOperator, Tensor, bump,
                   compression_norm_sweep, phi_compression)
from .rokhlin import RokhlinTower, TowerDefects, check_tower

CHOI_TOL = 1e-8


# Toeplitz-level incoming map -----------------------------------------------------

def rho_band(G: Sequence[AlgElement], e: DpElement, cache: TensorPowerCache | None = None) -> Band:
    """Linear extension of ``e_{x,y} (x) 1_k -> g_{k+|x|} T_x T_y^* g_{k+|y|}``."""
    p = len(G)
    cache = cache or e.trunc.cache
    out = Band(cache, [])
    for t in e.terms:
        jx, jy = t.x.degree, t.y.degree
        if t.k + jx >= p or t.k + jy >= p:
            raise ArgumentError(f"k + |x| = {t.k + jx}, k + |y| = {t.k + jy} must stay below p = {p}")
        out = out + Band.single(cache, t.x, t.y, left=G[t.k + jx], right=G[t.k + jy], coef=t.coef)
    return out


def rho_map(G: Sequence[AlgElement], e: DpElement, q: int) -> GradedOperator:
    """``rho_band`` realized on ``F_q`` (``q >= p``)."""
    if q < len(G):
        raise CutoffError("rho_map needs a cutoff at least p")
    return rho_band(G, e).at(q)


# row operators ------------------------------------------------------------------

def fock_action_arrays(trunc: FockTruncation) -> list[np.ndarray]:
    """Left action of ``A`` on ``F_q`` in the layout of a correspondence (block diagonal in degree)."""
    A = trunc.algebra
    out = []
    for g, (n, idx) in enumerate(A.groups):
        dim = trunc.total_rank * n
        W = np.zeros((A.total_dim, len(idx), dim, dim), dtype=complex)
        for t in range(trunc.cutoff):
            o = int(trunc.offsets[t]) * n
            r = trunc.ranks[t] * n
            W[:, :, o:o + r, o:o + r] = trunc.degree(t).W[g]
        out.append(W)
    return out


class RowOperator:
    """``R_G = sum_k g_k [T_eta]_{W_k}`` from ``(+)_{eta in W_<p} F_{q_in}`` to ``F_{q_out}``.

    Needs a free correspondence (the words ``eta`` are its basis tensors).
    Each of the per-group arrays ``mats[g]`` has shape ``(count, dim F_out, |W_<p| dim F_in)``.
    """

    def __init__(self, G: Sequence[AlgElement], base: Correspondence | TensorPowerCache, q_in: int,
                 q_out: int | None = None):
        cache = base if isinstance(base, TensorPowerCache) else TensorPowerCache(base)
        if not cache.base.is_free:
            raise StructuralError("row operators need a free correspondence with its basis")
        self.G = list(G)
        self.p = len(G)
        self.q_in = int(q_in)
        self.q_out = int(q_out if q_out is not None else q_in)
        big = FockTruncation(cache, max(self.q_in, self.q_out))
        self.cache = cache
        self.words = [(j, w) for j in range(self.p) for w in range(cache.rank(j))]
        m = cache.base.rank
        parts: list[list[np.ndarray]] = [[] for _ in cache.base.algebra.groups]
        for j, w in self.words:
            if j >= big.cutoff:
                T = GradedOperator(big, {}, {})
            else:
                letters = words(m, j)[w]
                T = GradedOperator.left_multiplier(big, self.G[j]) @ _creation_full(big, big.word(letters))
            dense = T.dense(sources=range(self.q_in), targets=range(self.q_out))
            for g, M in enumerate(dense):
                parts[g].append(M)
        self.mats = [np.concatenate(ps, axis=2) for ps in parts]
        self.in_trunc = FockTruncation(cache, self.q_in)
        self.out_trunc = FockTruncation(cache, self.q_out)

    def gram(self) -> list[np.ndarray]:
        """``R^* R`` per group."""
        return [np.conj(np.swapaxes(M, 1, 2)) @ M for M in self.mats]


def _creation_full(trunc: FockTruncation, x: Tensor) -> GradedOperator:
    from .fock import creation
    return creation(x, trunc)


def iota(S: BlockMatrix, trunc: FockTruncation, WF: list[np.ndarray] | None = None) -> list[np.ndarray]:
    """``iota(S)`` on ``(+)_{W_<p} F_q``: entry ``S_{zeta', zeta}`` acting by left multiplication."""
    WF = WF if WF is not None else fock_action_arrays(trunc)
    return _apply_flat(S.flat_entries(), WF)


def _as_blockmatrix(op: GradedOperator) -> BlockMatrix:
    R = op.trunc.total_rank
    return BlockMatrix(op.trunc.algebra, R, R, op.dense(sources=range(op.cutoff)))


def _group_norm(mats: Sequence[np.ndarray]) -> float:
    return float(max((spectral_norms(M).max() if M.size else 0.0) for M in mats))


@dataclass(frozen=True)
class RowGramReport:
    p: int
    q: int
    delta: float
    dev1: float
    dev2: float
    bound1: float
    bound2: float
    tested: int
    anchor: str = "row-operator Gram estimates"

    @property
    def passed(self) -> bool:
        return self.dev1 <= self.bound1 + 1e-8 and self.dev2 <= self.bound2 + 1e-8

    def as_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return d


def root_delta(G: Sequence[AlgElement]) -> float:
    return max(((G[i] * G[j]).norm() for i in range(len(G)) for j in range(len(G)) if i != j), default=0.0)


def row_gram_check(G: Sequence[AlgElement], base: Correspondence | TensorPowerCache, q: int | None = None,
                   tests: Sequence[DpElement] | None = None) -> RowGramReport:
    """``dev1 = ||R^*R - iota(Gamma)||`` and ``dev2 = max ||[R^*R, iota(e)]||`` on ``(+) F_q``.

    ``Gamma`` acts by ``g_k^2`` on degree ``k``.  ``R^*R`` is computed exactly on
    ``(+) F_q`` by taking ``R`` into ``F_{q+p-1}``.  The default test set is
    the spanning family of ``D_p`` built from basis words.
    """
    cache = base if isinstance(base, TensorPowerCache) else TensorPowerCache(base)
    p = len(G)
    q = p if q is None else q
    R = RowOperator(G, cache, q, q + p - 1)
    gram = R.gram()
    Dp = DpAlgebra(cache, p)
    trunc_q = FockTruncation(cache, q)
    WF = fock_action_arrays(trunc_q)
    Gamma = GradedOperator.degree_diagonal(Dp.trunc, [g * g for g in G])
    iG = iota(_as_blockmatrix(Gamma), trunc_q, WF)
    dev1 = _group_norm([a - b for a, b in zip(gram, iG)])
    tests = Dp.spanning() if tests is None else tests
    dev2 = 0.0
    for e in tests:
        ie = iota(_as_blockmatrix(e.operator()), trunc_q, WF)
        dev2 = max(dev2, _group_norm([a @ b - b @ a for a, b in zip(gram, ie)]))
    delta = root_delta(G)
    return RowGramReport(p, q, delta, dev1, dev2, p * p * delta, 2 * (p * p + 2) * delta, len(tests))


# completely positive maps ------------------------------------------------------------

@dataclass
class CPMapSample:
    """A linear map between finite-dimensional C*-algebras.

    ``product(x, y)``, when given, returns ``psi(x) psi(y)`` computed without
    truncation loss (used for order-zero testing of compressed maps).
    """

    domain: ScalarAlgebra
    codomain: ScalarAlgebra
    apply: Callable[[AlgElement], AlgElement]
    product: Callable[[AlgElement, AlgElement], AlgElement] | None = None
    name: str = ""

    def __call__(self, x: AlgElement) -> AlgElement:
        if x.parent != self.domain:
            raise StructuralError("argument outside the map's domain")
        return self.apply(x)

    @classmethod
    def from_spanning(cls, domain: ScalarAlgebra, codomain: ScalarAlgebra,
                      family: Sequence[tuple[AlgElement, AlgElement]], name: str = "") -> "CPMapSample":
        """Linear map given by its values on a spanning family closed under adjoints."""
        X = np.array([x.flat() for x, _ in family])
        Y = np.array([y.flat() for _, y in family])
        if np.linalg.matrix_rank(X, tol=1e-9) < domain.total_dim:
            raise StructuralError("family does not span the domain")
        for x, _ in family:
            xs = x.adjoint().flat()
            if np.abs(X - xs[None, :]).max(axis=1).min() > 1e-9:
                raise StructuralError("spanning family is not closed under adjoints")
        L, *_ = np.linalg.lstsq(X, Y, rcond=None)

        def apply(a: AlgElement) -> AlgElement:
            return AlgElement.from_flat(codomain, a.flat() @ L)

        return cls(domain, codomain, apply, None, name)

    def choi_min_eigenvalue(self) -> float:
        """Smallest eigenvalue over the Choi matrices of every (domain block, codomain block) pair."""
        worst = math.inf
        for i, n in enumerate(self.domain.blocks):
            images = {}
            for a in range(n):
                for b in range(n):
                    blocks = [np.zeros((k, k), dtype=complex) for k in self.domain.blocks]
                    blocks[i][a, b] = 1.0
                    images[(a, b)] = self.apply(AlgElement.from_blocks(self.domain, blocks)).blocks()
            for j, mdim in enumerate(self.codomain.blocks):
                C = np.zeros((n * mdim, n * mdim), dtype=complex)
                for (a, b), img in images.items():
                    C[a * mdim:(a + 1) * mdim, b * mdim:(b + 1) * mdim] = img[j]
                C = (C + C.conj().T) / 2
                worst = min(worst, float(np.linalg.eigvalsh(C).min()))
        return worst


@dataclass(frozen=True)
class CPCReport:
    name: str
    choi_min_eigenvalue: float
    completely_positive: bool
    norm_estimate: float
    contractive: bool
    order_zero_max: float
    order_zero: bool
    seed: int
    pairs: int
    samples: int

    @property
    def passed(self) -> bool:
        return self.completely_positive and self.contractive and self.order_zero

    def as_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return d


def _orthogonal_positive_pair(A: ScalarAlgebra, rng: np.random.Generator) -> tuple[AlgElement, AlgElement]:
    """Spectral split of a random self-adjoint element at its median eigenvalue."""
    h = AlgElement.random(A, rng)
    h = h + h.adjoint()
    pieces = []  # (eigenvalue, block, vector)
    for i, b in enumerate(h.blocks()):
        lam, vec = np.linalg.eigh(b)
        for t in range(len(lam)):
            pieces.append((lam[t], i, vec[:, t]))
    pieces.sort(key=lambda z: z[0])
    half = len(pieces) // 2
    lower, upper = pieces[:half], pieces[half:]

    def assemble(part):
        blocks = [np.zeros((n, n), dtype=complex) for n in A.blocks]
        for _, i, v in part:
            blocks[i] += rng.uniform(0.05, 1.0) * np.outer(v, v.conj())
        return AlgElement.from_blocks(A, blocks)

    return assemble(lower), assemble(upper)


def certify_cpc_order_zero(m: CPMapSample, seed: int = 0, pairs: int = 100, samples: int = 200,
                           tol: float = CHOI_TOL) -> CPCReport:
    """Choi positivity, norm estimate and orthogonality preservation of ``m``."""
    rng = np.random.default_rng(seed)
    choi = m.choi_min_eigenvalue()
    norm = m(AlgElement.identity(m.domain)).norm()
    for _ in range(samples):
        x = AlgElement.random(m.domain, rng)
        x = x * (1.0 / x.norm())
        norm = max(norm, m(x).norm())
    worst = 0.0
    for _ in range(pairs):
        x, y = _orthogonal_positive_pair(m.domain, rng)
        prod = m.product(x, y) if m.product is not None else m(x) * m(y)
        worst = max(worst, prod.norm())
    return CPCReport(m.name, choi, choi >= -tol, norm, norm <= 1 + tol, worst, worst <= tol, seed, pairs, samples)


def incoming_map_sample(G: Sequence[AlgElement], base: Correspondence | TensorPowerCache, q: int | None = None,
                        name: str = "") -> CPMapSample:
    """``S -> P_q R_G iota(S) R_G^* P_q`` on ``B(F_p(H)) = M_{|W_<p|}(A)``.

    The product callback evaluates ``P_q sigma(S) sigma(S') P_q`` exactly by
    running both row operators on ``F_{q+p-1}``.
    """
    cache = base if isinstance(base, TensorPowerCache) else TensorPowerCache(base)
    A = cache.base.algebra
    p = len(G)
    q = p if q is None else q
    Q = q + p - 1
    R = RowOperator(G, cache, Q, Q)
    truncQ = FockTruncation(cache, Q)
    WF = fock_action_arrays(truncQ)
    Rp = FockTruncation(cache, p).total_rank
    Rq = FockTruncation(cache, q).total_rank
    domain = ScalarAlgebra(tuple(Rp * n for n in A.blocks))
    codomain = ScalarAlgebra(tuple(Rq * n for n in A.blocks))
    keep = [Rq * n for n, _ in A.groups]
    RH = [np.conj(np.swapaxes(M, 1, 2)) for M in R.mats]

    def inner_op(x: AlgElement) -> list[np.ndarray]:
        rows = A.groups
        S = BlockMatrix(A, Rp, Rp, [x.data[domain_group(g)] for g in range(len(rows))])
        return iota(S, truncQ, WF)

    # the domain algebra groups coincide with those of A (block sizes scaled by Rp)
    def domain_group(g: int) -> int:
        return g

    def apply(x: AlgElement) -> AlgElement:
        iS = inner_op(x)
        out = [(M @ I @ MH)[:, :k, :k] for M, I, MH, k in zip(R.mats, iS, RH, keep)]
        return AlgElement(codomain, out)

    def product(x: AlgElement, y: AlgElement) -> AlgElement:
        ix, iy = inner_op(x), inner_op(y)
        out = []
        for M, MH, a, b, k in zip(R.mats, RH, ix, iy, keep):
            left = M[:, :k, :] @ a
            right = b @ MH[:, :, :k]
            out.append(left @ (MH @ M) @ right)
        return AlgElement(codomain, out)

    return CPMapSample(domain, codomain, apply, product, name or "incoming map")


def phi_sample(base: Correspondence | TensorPowerCache, p: int, Q: int) -> CPMapSample:
    """``X -> sqrt(Delta) P_p X P_p sqrt(Delta)`` from ``B(F_Q)`` to ``B(F_p)``."""
    require_odd(p)
    cache = base if isinstance(base, TensorPowerCache) else TensorPowerCache(base)
    A = cache.base.algebra
    tQ, tp = FockTruncation(cache, Q), FockTruncation(cache, p)
    domain = ScalarAlgebra(tuple(tQ.total_rank * n for n in A.blocks))
    codomain = ScalarAlgebra(tuple(tp.total_rank * n for n in A.blocks))
    weights = []
    for n, _ in A.groups:
        w = np.concatenate([np.full(tp.ranks[k] * n, math.sqrt(bump(p, k))) for k in range(p)])
        weights.append(w)

    def apply(x: AlgElement) -> AlgElement:
        out = []
        for arr, w in zip(x.data, weights):
            k = len(w)
            out.append(w[None, :, None] * arr[:, :k, :k] * w[None, None, :])
        return AlgElement(codomain, out)

    return CPMapSample(domain, codomain, apply, None, "compression phi")


# p selection and the certificate ----------------------------------------------------

def analytic_bound(d: int, N: int, p: int) -> float:
    """``(d+1) (2 sqrt(2N/(p-1)) + 4N^2/(p-1))``."""
    return (d + 1) * (2 * math.sqrt(2 * N / (p - 1)) + 4 * N * N / (p - 1))


def select_p(d: int, N: int, eps: float) -> int:
    """Least odd ``p >= 3`` with ``analytic_bound(d, N, p) < eps``."""
    if eps <= 0:
        raise ArgumentError("eps must be positive")
    if N < 1 or d < 0:
        raise ArgumentError("need N >= 1 and d >= 0")
    if analytic_bound(d, N, 3) < eps:
        return 3
    hi = 5
    while analytic_bound(d, N, hi) >= eps:
        hi = 2 * hi + 1
    lo = (hi - 1) // 2 if (hi - 1) // 2 % 2 == 1 else (hi - 1) // 2 + 1
    lo = max(lo, 3)
    # bound is decreasing in p: invariant bound(lo) >= eps > bound(hi), both odd
    while hi - lo > 2:
        mid = (lo + hi) // 2
        if mid % 2 == 0:
            mid += 1
        if analytic_bound(d, N, mid) < eps:
            hi = mid
        else:
            lo = mid
    return hi


@dataclass(frozen=True)
class ElementResult:
    label: str
    x_degree: int
    y_degree: int
    measured: float
    converged: bool
    q_converged: int | None
    sweep: tuple[tuple[int, float], ...]
    adjoint_measured: float
    passed: bool

    def as_dict(self) -> dict:
        d = asdict(self)
        d["sweep"] = [list(r) for r in self.sweep]
        return d


@dataclass(frozen=True)
class FactorizationCertificate:
    p: int
    d: int
    N: int
    eps: float
    q_max: int
    analytic_bound: float
    select_p: int
    tower_defects: TowerDefects
    elements: tuple[ElementResult, ...]
    passed: bool
    anchor: str = "two-colour-per-tower factorization through D_p"

    @property
    def measured(self) -> float:
        return max((e.measured for e in self.elements), default=0.0)

    def as_dict(self) -> dict:
        return {
            "anchor": self.anchor, "p": self.p, "d": self.d, "N": self.N, "eps": self.eps, "q_max": self.q_max,
            "analytic_bound": self.analytic_bound, "select_p": self.select_p, "measured_max": self.measured,
            "bound_below_eps": self.analytic_bound < self.eps,
            "tower_defects": self.tower_defects.as_dict(),
            "elements": [e.as_dict() for e in self.elements], "passed": self.passed,
        }

    def csv_rows(self) -> list[dict]:
        rows = []
        for e in self.elements:
            for q, v in e.sweep:
                rows.append({"element": e.label, "p": self.p, "q": q, "measured": v, "bound": self.analytic_bound})
        return rows


def factorization_error(T: Band, tower: RokhlinTower) -> Band:
    """``sum_l (rho^l + rho_hat^l)(phi(T)) - T`` as a band combination."""
    p = tower.p
    h = (p - 1) // 2
    phiT = phi_compression(T, p)
    total = Band(T.cache, [])
    for l in range(tower.d + 1):
        total = total + rho_band(tower.roots(l), phiT, T.cache)
        total = total + rho_band(tower.roots(l, h), phiT, T.cache)
    return total - T


def _adjoint_band(T: Band) -> Band:
    return Band(T.cache, [BandTerm(np.conj(t.coef), t.y, t.x) for t in T.terms])


def verify_factorization(H: Correspondence | TensorPowerCache, tower: RokhlinTower, F: Sequence[Band], eps: float,
                         q_max: int, labels: Sequence[str] | None = None, sweep_tol: float = 1e-6,
                         workers: int | None = None) -> FactorizationCertificate:
    """Measure ``||sum_l (rho^l + rho_hat^l) phi(T) - T||`` for each ``T`` in ``F`` by compression sweeps.

    Uses the tower's own height ``p``.  An element passes when its sweep
    converged, the measured value is below ``eps`` and within the analytic
    bound (plus ``1e-6``).
    """
    cache = H if isinstance(H, TensorPowerCache) else TensorPowerCache(H)
    p = tower.p
    require_odd(p)
    if p < 3:
        raise ArgumentError("factorization needs p >= 3")
    if not F:
        raise ArgumentError("F must contain at least one element")
    for T in F:
        if T.cache is not cache:
            raise StructuralError("elements of F belong to another correspondence")
    N = max(1, max(T.max_length for T in F))
    if p > q_max - N:
        raise CutoffError(f"p = {p} exceeds q_max - N = {q_max - N}")
    bound = analytic_bound(tower.d, N, p)
    tensors = []
    for T in F:
        for t in T.terms:
            for z in (t.x, t.y):
                if z.degree > 0:
                    tensors.append(z)
    defects = check_tower(tower, cache.base, tensors or None, cache=cache)
    labels = list(labels) if labels is not None else [f"F[{i}]" for i in range(len(F))]
    q_range = range(N + 1, q_max + 1)

    def one(i: int) -> ElementResult:
        T = F[i]
        E = factorization_error(T, tower)
        sw = compression_norm_sweep(E, q_range, tol=sweep_tol)
        swa = compression_norm_sweep(_adjoint_band(E), q_range, tol=sweep_tol)
        jx = max(t.x.degree for t in T.terms)
        jy = max(t.y.degree for t in T.terms)
        ok = sw.converged and sw.final < eps and sw.final <= bound + 1e-6
        return ElementResult(labels[i], jx, jy, sw.final, sw.converged, sw.q_converged, tuple(sw.values),
                             swa.final, ok)

    n_workers = workers if workers is not None else thread_count()
    if n_workers > 1 and len(F) > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(one, range(len(F))))
    else:
        results = [one(i) for i in range(len(F))]
    passed = all(r.passed for r in results)
    sp = select_p(tower.d, N, eps)
    return FactorizationCertificate(p, tower.d, N, eps, q_max, bound, sp, defects, tuple(results), passed)


def thread_count() -> int:
    """Worker threads from ``PIMSNER_LAB_THREADS`` (default 1)."""
    try:
        return max(1, int(os.environ.get("PIMSNER_LAB_THREADS", "1")))
    except ValueError:
        return 1


def identity_coefficient(tower: RokhlinTower, length: int) -> AlgElement:
    """``c = sum_l sum_{k=|x|}^{p-1} d_p(k) (f_k^l + f_{h+k}^l)`` for ``|x| = |y| = length``."""
    p = tower.p
    h = (p - 1) // 2
    c = AlgElement.zero(tower.algebra)
    for l in range(tower.d + 1):
        for k in range(length, p):
            c = c + bump(p, k) * (tower.f(l, k) + tower.f(l, h + k))
    return c
