"""Batch runs shared by the CLI, the scripts and the acceptance tests."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Any, Mapping, Sequence

import numpy as np

from .algebra import AlgElement, ScalarAlgebra, require_odd
from .correspondence import TensorPowerCache, random_fgp_corr
from .errors import InputError
from .factorization import FactorizationCertificate, analytic_bound, thread_count, verify_factorization
from .fixtures import band_label, build_band, cyclic_fixture
from .fock import FockTruncation, Tensor, toeplitz_defects


@dataclass(frozen=True)
class RelationInstance:
    index: int
    blocks: tuple[int, ...]
    rank: int
    cutoff: int
    degree: int
    linearity: float
    bimodularity: float
    inner: float

    @property
    def worst(self) -> float:
        return max(self.linearity, self.bimodularity, self.inner)


def relation_instance(seed: int, index: int, max_blocks: int = 3, max_block_size: int = 3, max_rank: int = 2,
                      max_cutoff: int = 6) -> RelationInstance:
    rng = np.random.default_rng([seed, index])
    blocks = tuple(int(b) for b in rng.integers(1, max_block_size + 1, size=rng.integers(1, max_blocks + 1)))
    A = ScalarAlgebra(blocks)
    rank = int(rng.integers(1, max_rank + 1))
    cutoff = int(rng.integers(2, max_cutoff + 1))
    H = random_fgp_corr(A, rank, rng)
    trunc = FockTruncation(TensorPowerCache(H), cutoff)
    j = int(rng.integers(0, min(3, cutoff)))
    space = trunc.degree(j).space
    x, y = Tensor(space.random_vector(rng), j), Tensor(space.random_vector(rng), j)
    a, b = AlgElement.random(A, rng), AlgElement.random(A, rng)
    alpha = complex(rng.normal(), rng.normal())
    d = toeplitz_defects(trunc, x, y, a, b, alpha)
    return RelationInstance(index, blocks, rank, cutoff, j, d["linearity"], d["bimodularity"], d["inner"])


def relation_suite(count: int = 100, seed: int = 0, **limits: int) -> list[RelationInstance]:
    return [relation_instance(seed, i, **limits) for i in range(count)]


def relation_report(instances: Sequence[RelationInstance], tol: float) -> dict:
    worst = max((r.worst for r in instances), default=0.0)
    return {
        "anchor": "Toeplitz relations for creation operators on the truncated Fock module",
        "count": len(instances), "tol": tol, "worst": worst, "passed": worst <= tol,
        "instances": [dict(asdict(r), worst=r.worst) for r in instances],
    }


DEFAULT_F = ({"x": [0], "y": []},)


def sweep_over_p(ps: Sequence[int], d: int = 0, F: Sequence[Mapping[str, Any]] = DEFAULT_F, q_extra: int = 6,
                 epsilon: float = 1.0, workers: int | None = None) -> list[FactorizationCertificate]:
    """Factorization certificates on the rotation fixture ``n = p`` for each ``p``."""
    if not ps:
        raise InputError("the p list is empty")
    for p in ps:
        require_odd(p)
        if p < 3:
            raise InputError("sweep values of p must be at least 3")

    def one(p: int) -> FactorizationCertificate:
        H, tower = cyclic_fixture(p, d)
        cache = TensorPowerCache(H)
        bands = [build_band(cache, f) for f in F]
        N = max(1, max(b.max_length for b in bands))
        return verify_factorization(cache, tower, bands, epsilon, p + N + q_extra,
                                    labels=[band_label(f) for f in F], workers=1)

    n = workers if workers is not None else thread_count()
    if n > 1:
        with ThreadPoolExecutor(max_workers=n) as pool:
            return list(pool.map(one, ps))
    return [one(p) for p in ps]


def sweep_rows(certs: Sequence[FactorizationCertificate]) -> list[dict]:
    return [{"p": c.p, "analytic_bound": analytic_bound(c.d, c.N, c.p), "measured_error": c.measured,
             "q_converged": max((e.q_converged or -1) for e in c.elements)} for c in certs]


def nonincreasing(values: Sequence[float], slack: float = 1e-9) -> bool:
    return all(b <= a + slack for a, b in zip(values, values[1:]))
