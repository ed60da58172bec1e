import numpy as np
import pytest
from hypothesis import given, strategies as st

from pimsner_lab.dimcalc import (ANCHORS, FLAGS, RULE_NAMES, CalculusConfig, explain, parse_graph, propagate)
from pimsner_lab.errors import FactLookupError, InputError, StructuralError

BASE = {
    "entities": [{"id": "A", "kind": "algebra"}, {"id": "H", "kind": "correspondence", "over": "A"},
                 {"id": "T", "kind": "algebra"}, {"id": "O", "kind": "algebra"}],
    "constructions": [{"op": "toeplitz", "in": "H", "out": "T"}, {"op": "cuntz_pimsner", "in": "H", "out": "O"}],
}


def graph(*declared, base=BASE):
    decl = []
    for d in declared:
        if len(d) == 3:
            decl.append({"entity": d[0], "attribute": d[1], "value": d[2]})
        else:
            decl.append({"entity": d[0], "attribute": d[1]})
    return dict(base, declared=decl)


def bounds_doc(nuc, rok, qc=True):
    extra = [("H", "quasicentral_projection_unit")] if qc else []
    return graph(("A", "dim_nuc", nuc), ("H", "dim_Rok", rok), *extra)


def test_zero_dimensional_inputs():
    f = propagate(bounds_doc(0, 0))
    assert f.bound("T", "dim_nuc") == 1
    assert f["T.dim_nuc"].rule == "R1"
    assert f.bound("O", "dim_nuc") == 1


def test_one_dimensional_inputs():
    f = propagate(bounds_doc(1, 1))
    assert f.bound("O", "dim_nuc") == 7
    assert f["O.dim_nuc"].rule == "R2"


def test_fock_bounds_need_quasicentral_unit():
    f = propagate(bounds_doc(1, 1, qc=False))
    assert f.get("T", "dim_nuc") is None and f.get("O", "dim_nuc") is None


def test_fgp_supplies_quasicentral_unit():
    f = propagate(graph(("A", "dim_nuc", 0), ("H", "dim_Rok", 0), ("H", "fgp")))
    assert f.bound("T", "dim_nuc") == 1
    assert f["H.quasicentral_projection_unit"].rule == "AUX-fgp"


CLASSIFIABLE = (("A", "classifiable"), ("H", "fgp"), ("H", "finite_rokhlin"))


def test_classifiability_chain():
    f = propagate(graph(*CLASSIFIABLE))
    fact = f["O.classifiable"]
    assert fact.rule == "R14"
    assert f.premise_rules("O.classifiable") == ["R12", "R13", "R11", "R10", "R2"]


@pytest.mark.parametrize("drop", range(3))
def test_classifiability_needs_every_premise(drop):
    decl = [d for i, d in enumerate(CLASSIFIABLE) if i != drop]
    f = propagate(graph(*decl))
    assert not f.holds("O", "classifiable")


def test_explain_trees():
    f = propagate(bounds_doc(0, 0))
    tree = explain(f, "T.dim_nuc")
    lines = tree.splitlines()
    assert lines[0].startswith("dim_nuc(T) <= 1  [R1: ")
    assert ANCHORS["R1"] in lines[0]
    assert all(line.startswith("  ") and "[declared]" in line for line in lines[1:])
    assert explain(f, "A.dim_nuc") == "dim_nuc(A) <= 0  [declared]"
    deep = explain(propagate(graph(*CLASSIFIABLE)), "O.classifiable")
    assert "[R11: " in deep and "[R12: " in deep
    with pytest.raises(FactLookupError):
        explain(f, "Z.dim_nuc")


def test_cycle_rejected():
    doc = {"entities": [{"id": "A", "kind": "algebra"}, {"id": "H", "kind": "correspondence", "over": "A"}],
           "constructions": [{"op": "toeplitz", "in": "H", "out": "A"}]}
    with pytest.raises(StructuralError):
        parse_graph(doc)


@pytest.mark.parametrize("bad", [
    {"entity": "A", "attribute": "dim_nuc", "value": -1},
    {"entity": "A", "attribute": "dim_Rok", "value": 1},
    {"entity": "H", "attribute": "simple"},
    {"entity": "A", "attribute": "simple", "value": False},
    {"entity": "Z", "attribute": "simple"},
])
def test_bad_declarations(bad):
    with pytest.raises(InputError):
        propagate(dict(BASE, declared=[bad]))


def test_bad_constructions():
    for c in [{"op": "tensor", "in": "H", "out": "T"}, {"op": "toeplitz", "in": "A", "out": "T"},
              {"op": "extension", "in": ["A"], "out": "T"}]:
        with pytest.raises(InputError):
            parse_graph(dict(BASE, constructions=[c]))


def test_direct_sum_and_free_product():
    doc = {
        "entities": [{"id": "A", "kind": "algebra"}, {"id": "H", "kind": "correspondence", "over": "A"},
                     {"id": "S", "kind": "correspondence", "over": "A"}, {"id": "P", "kind": "algebra"},
                     {"id": "TS", "kind": "algebra"}],
        "constructions": [{"op": "direct_sum", "in": "H", "out": "S", "copies": 3},
                          {"op": "toeplitz", "in": "S", "out": "TS"},
                          {"op": "free_product", "in": "H", "out": "P", "copies": 3}],
        "declared": [{"entity": "A", "attribute": "dim_nuc", "value": 0},
                     {"entity": "H", "attribute": "dim_Rok", "value": 1}, {"entity": "H", "attribute": "fgp"},
                     {"entity": "S", "attribute": "fgp"}],
    }
    f = propagate(doc)
    assert f.bound("S", "dim_Rok") == 1 and f["S.dim_Rok"].rule == "R7"
    assert f.bound("TS", "dim_nuc") == 3
    assert f.bound("P", "dim_nuc") == 3 and f["P.dim_nuc"].rule == "R8"


def test_extension_rules():
    doc = {
        "entities": [{"id": "J", "kind": "algebra"}, {"id": "Q", "kind": "algebra"}, {"id": "E", "kind": "algebra"}],
        "constructions": [{"op": "extension", "in": ["J", "Q"], "out": "E"}],
        "declared": [{"entity": "J", "attribute": "dim_nuc", "value": 1},
                     {"entity": "Q", "attribute": "dim_nuc", "value": 2}],
    }
    assert propagate(doc).bound("E", "dim_nuc") == 4
    doc["declared"].append({"entity": "J", "attribute": "quasicentral_projection_unit"})
    f = propagate(doc)
    assert f.bound("E", "dim_nuc") == 2 and f["E.dim_nuc"].rule == "R5"


def test_compacts_and_dp_inherit():
    doc = dict(BASE, constructions=[{"op": "compacts", "in": "H", "out": "T"}, {"op": "d_p", "in": "H", "out": "O"}],
               declared=[{"entity": "A", "attribute": "dim_nuc", "value": 2}])
    f = propagate(doc)
    assert f.bound("T", "dim_nuc") == 2 and f["T.dim_nuc"].rule == "R3"
    assert f.bound("O", "dim_nuc") == 2 and f["O.dim_nuc"].rule == "R6"


def test_factorization_scheme_variants():
    doc = {"entities": [{"id": "B", "kind": "algebra"}],
           "constructions": [{"op": "factorization_scheme", "out": "B", "m": 2, "n": 3}]}
    assert propagate(doc).bound("B", "dim_nuc") == 2 * 4 - 1
    assert propagate(doc, CalculusConfig(r9_variant="proof")).bound("B", "dim_nuc") == 3 * 3 - 1
    with pytest.raises(InputError):
        CalculusConfig(r9_variant="other")


@given(st.integers(0, 6), st.integers(0, 6))
def test_crossed_product_shape(n, d):
    f = propagate(bounds_doc(n, d))
    assert f.bound("T", "dim_nuc") == 2 * (n + 1) * (d + 1) - 1


def random_graph(rng):
    k = int(rng.integers(1, 4))
    ents = [{"id": f"A{i}", "kind": "algebra"} for i in range(k)]
    cons, decl = [], []
    for i in range(k):
        ents.append({"id": f"H{i}", "kind": "correspondence", "over": f"A{i}"})
        ents.append({"id": f"S{i}", "kind": "correspondence", "over": f"A{i}"})
        for name in ("T", "O", "K", "D", "P"):
            ents.append({"id": f"{name}{i}", "kind": "algebra"})
        cons += [{"op": "direct_sum", "in": f"H{i}", "out": f"S{i}"},
                 {"op": "toeplitz", "in": f"S{i}", "out": f"T{i}"},
                 {"op": "cuntz_pimsner", "in": f"H{i}", "out": f"O{i}"},
                 {"op": "compacts", "in": f"H{i}", "out": f"K{i}"},
                 {"op": "d_p", "in": f"H{i}", "out": f"D{i}"},
                 {"op": "free_product", "in": f"H{i}", "out": f"P{i}"}]
    ents.append({"id": "E", "kind": "algebra"})
    cons.append({"op": "extension", "in": ["K0", "O0"], "out": "E"})
    for e in ents:
        kind = e["kind"]
        if rng.random() < 0.6:
            decl.append({"entity": e["id"], "attribute": "dim_nuc" if kind == "algebra" else "dim_Rok",
                         "value": int(rng.integers(0, 4))})
        for flag in FLAGS[kind]:
            if rng.random() < 0.25:
                decl.append({"entity": e["id"], "attribute": flag})
    return {"entities": ents, "constructions": cons, "declared": decl}


def test_confluence_under_shuffles():
    rng = np.random.default_rng(99)
    for trial in range(5):
        doc = random_graph(rng)
        ref = propagate(doc)
        for seed in range(20):
            order = list(np.random.default_rng(seed).permutation(RULE_NAMES))
            other = propagate(doc, rule_order=order)
            assert other.values() == ref.values()
            assert other.as_json() == ref.as_json()


def test_monotonicity():
    rng = np.random.default_rng(5)
    for trial in range(30):
        doc = random_graph(rng)
        before = propagate(doc)
        extra = random_graph(np.random.default_rng(trial))["declared"]
        names = {e["id"] for e in doc["entities"]}
        doc = dict(doc, declared=doc["declared"] + [d for d in extra if d["entity"] in names])
        after = propagate(doc)
        for fid, f in before.facts.items():
            assert fid in after
            if f.is_bound:
                assert after[fid].value <= f.value


def test_declared_facts_never_weakened():
    f = propagate(graph(("A", "dim_nuc", 0), ("H", "dim_Rok", 0), ("H", "fgp"), ("T", "dim_nuc", 0)))
    assert f.bound("T", "dim_nuc") == 0 and f["T.dim_nuc"].rule == "declared"


def test_every_trace_ends_in_declarations():
    f = propagate(random_graph(np.random.default_rng(1)))
    for fid, fact in f.facts.items():
        stack = [fid]
        while stack:
            cur = stack.pop()
            if cur.startswith("construction["):
                continue
            g = f[cur]
            assert g.rule == "declared" or g.premises
            stack.extend(g.premises)
