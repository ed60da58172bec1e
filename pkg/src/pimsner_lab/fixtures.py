"""Concrete instances built from small JSON-style descriptions."""
from __future__ import annotations

from typing import Any, Mapping, Sequence

import numpy as np

from .algebra import AlgElement, Automorphism, ScalarAlgebra
from .correspondence import (Correspondence, TensorPowerCache, crossed_product_corr, identity_corr, random_fgp_corr,
                             twisted_free_corr)
from .errors import InputError
from .fock import Band, Tensor
from .rokhlin import RokhlinTower, synthesize_cyclic_tower


def build_algebra(desc: Mapping[str, Any]) -> ScalarAlgebra:
    if "commutative" in desc:
        return ScalarAlgebra.commutative(int(desc["commutative"]))
    return ScalarAlgebra(tuple(int(b) for b in desc["blocks"]))


def cyclic_crossed_product(n: int, shift: int = 1) -> Correspondence:
    """``C(Z/n)`` with the correspondence of the rotation ``j -> j + shift``."""
    A = ScalarAlgebra.commutative(n)
    return crossed_product_corr(Automorphism.cyclic_shift(A, shift))


def twisted_free_cyclic(n: int, shifts: Sequence[int]) -> Correspondence:
    A = ScalarAlgebra.commutative(n)
    return twisted_free_corr([Automorphism.cyclic_shift(A, s) for s in shifts])


def build_correspondence(desc: Mapping[str, Any]) -> Correspondence:
    kind = desc["type"]
    if kind == "crossed_product":
        return cyclic_crossed_product(int(desc["n"]), int(desc.get("shift", 1)))
    if kind == "twisted_free":
        return twisted_free_cyclic(int(desc["n"]), [int(s) for s in desc["shifts"]])
    if kind == "identity":
        return identity_corr(build_algebra(desc["algebra"]))
    if kind == "random_fgp":
        rng = np.random.default_rng(int(desc.get("seed", 0)))
        return random_fgp_corr(build_algebra(desc["algebra"]), int(desc["rank"]), rng, desc.get("free"))
    raise InputError(f"unknown correspondence type {kind!r}")


def build_tower(desc: Mapping[str, Any], A: ScalarAlgebra) -> RokhlinTower:
    kind = desc["type"]
    if kind == "cyclic":
        t = synthesize_cyclic_tower(int(desc["n"]), int(desc["p"]), int(desc.get("d", 0)))
    elif kind == "diagonal":
        rows = [[AlgElement.diagonal(A, np.asarray(level, dtype=float)) for level in colour]
                for colour in desc["levels"]]
        t = RokhlinTower(A, rows)
    else:
        raise InputError(f"unknown tower type {kind!r}")
    if t.algebra != A:
        raise InputError("tower and correspondence live over different algebras")
    return t


def word_tensor(cache: TensorPowerCache, letters: Sequence[int]) -> Tensor:
    return Tensor(cache.word([int(c) for c in letters]), len(letters))


def build_band(cache: TensorPowerCache, desc: Mapping[str, Any]) -> Band:
    """``coef * T_x T_y^*`` for basis words ``x``, ``y`` (an empty word is the vacuum)."""
    x = word_tensor(cache, desc.get("x", []))
    y = word_tensor(cache, desc.get("y", []))
    coef = desc.get("coef", 1.0)
    c = complex(coef[0], coef[1]) if isinstance(coef, list) else complex(coef)
    return Band.single(cache, x, y, coef=c)


def band_label(desc: Mapping[str, Any]) -> str:
    x = "".join(str(c) for c in desc.get("x", [])) or "1"
    y = "".join(str(c) for c in desc.get("y", [])) or "1"
    return f"T[{x}]T[{y}]*"


def c6_fixture() -> tuple[Correspondence, RokhlinTower]:
    """Rotation on six points with its exact height-3 indicator tower."""
    H = cyclic_crossed_product(6)
    return H, synthesize_cyclic_tower(6, 3)


def cyclic_fixture(p: int, d: int = 0, n: int | None = None) -> tuple[Correspondence, RokhlinTower]:
    n = p if n is None else n
    return cyclic_crossed_product(n), synthesize_cyclic_tower(n, p, d)
