"""Symbolic propagation of nuclear-dimension and Rokhlin-dimension inequalities.

Entities are algebras and correspondences (each correspondence names the
algebra it lives ``over``).  Constructions connect them; declared facts are
upper bounds or positive flags.  Propagation computes the least fixed point
of the rule set and keeps one derivation per fact.

Values are computed by Gauss-Seidel sweeps in a caller-chosen rule order.
Derivations are then rebuilt by synchronous rounds in the canonical order,
so the reported traces do not depend on the sweep order either.
"""
from __future__ import annotations

import graphlib
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Mapping, Sequence

from .errors import ConsistencyError, FactLookupError, InputError, StructuralError

BOUNDS = {"algebra": ("dim_nuc",), "correspondence": ("dim_Rok",)}
FLAGS = {
    "algebra": ("unital", "simple", "UCT", "classifiable", "finite_dim_nuc", "quasicentral_projection_unit"),
    "correspondence": ("fgp", "minimal", "nonperiodic", "finite_rokhlin", "quasicentral_projection_unit"),
}
OPS = ("toeplitz", "cuntz_pimsner", "direct_sum", "free_product", "compacts", "d_p", "extension",
       "factorization_scheme")

ANCHORS = {
    "R1": "Toeplitz bound: dim_nuc(T(H)) + 1 <= 2 (dim_nuc(A) + 1)(dim_Rok(H) + 1)",
    "R2": "Cuntz-Pimsner bound: dim_nuc(O(H)) + 1 <= 2 (dim_nuc(A) + 1)(dim_Rok(H) + 1)",
    "R3": "compacts on a correspondence: dim_nuc(K(H)) <= dim_nuc(A)",
    "R4": "extension: dim_nuc(A) <= dim_nuc(J) + dim_nuc(A/J) + 1",
    "R5": "extension with a quasicentral projection unit: dim_nuc(A) = max(dim_nuc(J), dim_nuc(A/J))",
    "R6": "compressed Fock algebra: dim_nuc(D_p(H)) <= dim_nuc(A)",
    "R7": "direct sum of copies reuses the towers: dim_Rok(+H) <= dim_Rok(H)",
    "R8": "free product of Toeplitz copies is the Toeplitz algebra of the direct sum",
    "R9": "factorization scheme through m colours of n-dimensional pieces",
    "R10": "UCT passes from a simple A to O(H)",
    "R11": "O(H) is simple iff H is minimal and nonperiodic",
    "R12": "finite Rokhlin dimension forces nonperiodicity",
    "R13": "minimality is automatic over a simple coefficient algebra",
    "R14": "classifiable A, finitely generated projective H of finite Rokhlin dimension give classifiable O(H)",
    "AUX-classifiable": "classifiable means unital, simple, UCT and finite nuclear dimension",
    "AUX-finite": "a finite upper bound gives finiteness",
    "AUX-fgp": "finitely generated projective correspondences have a quasicentral projection unit",
    "AUX-unital": "unital coefficients give unital Toeplitz and Cuntz-Pimsner algebras",
}


@dataclass(frozen=True)
class CalculusConfig:
    """``r9_variant`` picks ``m(n+1) - 1`` ("statement") or ``(m+1)n - 1`` ("proof")."""

    r9_variant: str = "statement"
    max_sweeps: int = 10_000

    def __post_init__(self):
        if self.r9_variant not in ("statement", "proof"):
            raise InputError("r9_variant must be 'statement' or 'proof'")


@dataclass(frozen=True)
class Entity:
    id: str
    kind: str
    over: str | None = None


@dataclass(frozen=True)
class Construction:
    index: int
    op: str
    inputs: tuple[str, ...]
    out: str
    params: tuple[tuple[str, int], ...] = ()

    @property
    def id(self) -> str:
        return f"construction[{self.index}]"

    def param(self, name: str) -> int:
        return dict(self.params)[name]


Key = tuple[str, str]


@dataclass(frozen=True)
class DimFact:
    entity: str
    attribute: str
    value: float | bool
    rule: str
    premises: tuple[str, ...] = ()

    @property
    def id(self) -> str:
        return f"{self.entity}.{self.attribute}"

    @property
    def key(self) -> Key:
        return (self.entity, self.attribute)

    @property
    def is_bound(self) -> bool:
        return not isinstance(self.value, bool)

    @property
    def anchor(self) -> str:
        return ANCHORS.get(self.rule, "declared" if self.rule == "declared" else "construction")

    def describe(self) -> str:
        if self.is_bound:
            v = self.value
            return f"{self.attribute}({self.entity}) <= {int(v) if float(v).is_integer() else v}"
        return f"{self.attribute}({self.entity})"


@dataclass(frozen=True)
class Graph:
    entities: Mapping[str, Entity]
    constructions: tuple[Construction, ...]
    declared: tuple[DimFact, ...]

    def entity(self, eid: str) -> Entity:
        try:
            return self.entities[eid]
        except KeyError:
            raise InputError(f"unknown entity {eid!r}") from None

    def by_op(self, *ops: str) -> Iterator[Construction]:
        return (c for c in self.constructions if c.op in ops)


# parsing ----------------------------------------------------------------------------

def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise InputError(msg)


def parse_graph(doc: Mapping) -> Graph:
    """Build and validate a graph from its JSON form."""
    _require(isinstance(doc, Mapping), "graph must be an object")
    entities: dict[str, Entity] = {}
    for e in doc.get("entities", []):
        eid, kind = e.get("id"), e.get("kind")
        _require(isinstance(eid, str) and eid, "entity id must be a non-empty string")
        _require(kind in BOUNDS, f"entity {eid!r}: kind must be 'algebra' or 'correspondence'")
        _require(eid not in entities, f"duplicate entity {eid!r}")
        over = e.get("over")
        if kind == "correspondence":
            _require(isinstance(over, str), f"correspondence {eid!r} needs an 'over' algebra")
        else:
            _require(over is None, f"algebra {eid!r} cannot have 'over'")
        entities[eid] = Entity(eid, kind, over)
    for e in entities.values():
        if e.over is not None:
            _require(e.over in entities and entities[e.over].kind == "algebra",
                     f"{e.id!r} is over an unknown algebra {e.over!r}")
    cons = []
    for i, c in enumerate(doc.get("constructions", [])):
        cons.append(_parse_construction(i, c, entities))
    declared = []
    for d in doc.get("declared", []):
        declared.append(_parse_declared(d, entities))
    g = Graph(entities, tuple(cons), tuple(declared))
    check_acyclic(g)
    return g


def _kind(entities, eid, kind, where):
    _require(eid in entities, f"{where}: unknown entity {eid!r}")
    _require(entities[eid].kind == kind, f"{where}: {eid!r} must be a {kind}")


def _parse_construction(i: int, c: Mapping, entities: Mapping[str, Entity]) -> Construction:
    where = f"construction {i}"
    op = c.get("op")
    _require(op in OPS, f"{where}: unknown op {op!r}")
    raw = c.get("in", [])
    inputs = tuple([raw] if isinstance(raw, str) else raw)
    out = c.get("out")
    _require(isinstance(out, str), f"{where}: 'out' must be an entity id")
    params: list[tuple[str, int]] = []
    if op in ("toeplitz", "cuntz_pimsner", "compacts", "d_p", "free_product", "direct_sum"):
        _require(len(inputs) == 1, f"{where}: {op} takes one correspondence")
        _kind(entities, inputs[0], "correspondence", where)
        if op == "direct_sum":
            _kind(entities, out, "correspondence", where)
            _require(entities[out].over == entities[inputs[0]].over, f"{where}: direct sum changes the algebra")
        else:
            _kind(entities, out, "algebra", where)
        if op in ("direct_sum", "free_product"):
            copies = c.get("copies", 2)
            _require(isinstance(copies, int) and copies >= 1, f"{where}: copies must be a positive integer")
            params.append(("copies", copies))
    elif op == "extension":
        _require(len(inputs) == 2, f"{where}: extension takes [ideal, quotient]")
        for eid in inputs:
            _kind(entities, eid, "algebra", where)
        _kind(entities, out, "algebra", where)
    else:
        _require(not inputs, f"{where}: factorization_scheme takes no inputs")
        _kind(entities, out, "algebra", where)
        m, n = c.get("m"), c.get("n")
        _require(isinstance(m, int) and m >= 1, f"{where}: m must be a positive integer")
        _require(isinstance(n, int) and n >= 0, f"{where}: n must be a nonnegative integer")
        params += [("m", m), ("n", n)]
    return Construction(i, op, inputs, out, tuple(params))


def _parse_declared(d: Mapping, entities: Mapping[str, Entity]) -> DimFact:
    eid, attr, value = d.get("entity"), d.get("attribute"), d.get("value", True)
    _require(eid in entities, f"declared fact on unknown entity {eid!r}")
    kind = entities[eid].kind
    if attr in BOUNDS[kind]:
        _require(isinstance(value, (int, float)) and not isinstance(value, bool),
                 f"{eid}.{attr}: bound must be a number")
        _require(value >= 0, f"{eid}.{attr}: bound {value} is negative")
        _require(math.isfinite(value), f"{eid}.{attr}: bound must be finite")
        return DimFact(eid, attr, float(value), "declared")
    _require(attr in FLAGS[kind], f"{eid}: attribute {attr!r} does not apply to a {kind}")
    _require(value is True, f"{eid}.{attr}: only positive flags can be declared")
    return DimFact(eid, attr, True, "declared")


def check_acyclic(g: Graph) -> list[str]:
    ts = graphlib.TopologicalSorter()
    for e in g.entities.values():
        ts.add(e.id, *([e.over] if e.over else []))
    for c in g.constructions:
        ts.add(c.out, *c.inputs)
    try:
        return list(ts.static_order())
    except graphlib.CycleError as exc:
        raise StructuralError(f"construction graph has a cycle: {exc.args[1]}") from None


# rules ------------------------------------------------------------------------------

State = Mapping[Key, DimFact]
Rule = Callable[[Graph, State, CalculusConfig], Iterable[DimFact]]


def _fid(e: str, a: str) -> str:
    return f"{e}.{a}"


def _bound_of(s: State, e: str, a: str) -> DimFact | None:
    return s.get((e, a))


def _flag(s: State, e: str, a: str) -> bool:
    return (e, a) in s


def _fock_bound(g, s, cfg, ops, name):
    for c in g.by_op(*ops):
        H = c.inputs[0]
        A = g.entities[H].over
        if not _flag(s, H, "quasicentral_projection_unit"):
            continue
        a, r = _bound_of(s, A, "dim_nuc"), _bound_of(s, H, "dim_Rok")
        base = [c.id] if c.op == "free_product" else []
        if a and r:
            yield DimFact(c.out, "dim_nuc", 2 * (a.value + 1) * (r.value + 1) - 1, name,
                          tuple(base + [a.id, r.id, _fid(H, "quasicentral_projection_unit")]))
        if _flag(s, A, "finite_dim_nuc") and _flag(s, H, "finite_rokhlin"):
            yield DimFact(c.out, "finite_dim_nuc", True, name,
                          tuple(base + [_fid(A, "finite_dim_nuc"), _fid(H, "finite_rokhlin"),
                                        _fid(H, "quasicentral_projection_unit")]))


def r1(g, s, cfg):
    return _fock_bound(g, s, cfg, ("toeplitz",), "R1")


def r2(g, s, cfg):
    return _fock_bound(g, s, cfg, ("cuntz_pimsner",), "R2")


def _inherit(g, s, op, name):
    for c in g.by_op(op):
        A = g.entities[c.inputs[0]].over
        a = _bound_of(s, A, "dim_nuc")
        if a:
            yield DimFact(c.out, "dim_nuc", a.value, name, (a.id,))
        if _flag(s, A, "finite_dim_nuc"):
            yield DimFact(c.out, "finite_dim_nuc", True, name, (_fid(A, "finite_dim_nuc"),))


def r3(g, s, cfg):
    return _inherit(g, s, "compacts", "R3")


def r4(g, s, cfg):
    for c in g.by_op("extension"):
        J, Q = c.inputs
        a, b = _bound_of(s, J, "dim_nuc"), _bound_of(s, Q, "dim_nuc")
        if a and b:
            yield DimFact(c.out, "dim_nuc", a.value + b.value + 1, "R4", (a.id, b.id))
        if _flag(s, J, "finite_dim_nuc") and _flag(s, Q, "finite_dim_nuc"):
            yield DimFact(c.out, "finite_dim_nuc", True, "R4", (_fid(J, "finite_dim_nuc"), _fid(Q, "finite_dim_nuc")))


def r5(g, s, cfg):
    for c in g.by_op("extension"):
        J, Q = c.inputs
        if not _flag(s, J, "quasicentral_projection_unit"):
            continue
        a, b = _bound_of(s, J, "dim_nuc"), _bound_of(s, Q, "dim_nuc")
        if a and b:
            yield DimFact(c.out, "dim_nuc", max(a.value, b.value), "R5",
                          (a.id, b.id, _fid(J, "quasicentral_projection_unit")))


def r6(g, s, cfg):
    return _inherit(g, s, "d_p", "R6")


def r7(g, s, cfg):
    for c in g.by_op("direct_sum"):
        H = c.inputs[0]
        r = _bound_of(s, H, "dim_Rok")
        if r:
            yield DimFact(c.out, "dim_Rok", r.value, "R7", (c.id, r.id))
        if _flag(s, H, "finite_rokhlin"):
            yield DimFact(c.out, "finite_rokhlin", True, "R7", (c.id, _fid(H, "finite_rokhlin")))


def r8(g, s, cfg):
    # T(H) * ... * T(H) over A is T(+H); R7 keeps the tower data of H
    return _fock_bound(g, s, cfg, ("free_product",), "R8")


def r9(g, s, cfg):
    for c in g.by_op("factorization_scheme"):
        m, n = c.param("m"), c.param("n")
        v = m * (n + 1) - 1 if cfg.r9_variant == "statement" else (m + 1) * n - 1
        yield DimFact(c.out, "dim_nuc", float(max(v, 0)), "R9", (c.id,))


def r10(g, s, cfg):
    for c in g.by_op("cuntz_pimsner"):
        A = g.entities[c.inputs[0]].over
        if _flag(s, A, "UCT") and _flag(s, A, "simple"):
            yield DimFact(c.out, "UCT", True, "R10", (_fid(A, "UCT"), _fid(A, "simple")))


def r11(g, s, cfg):
    for c in g.by_op("cuntz_pimsner"):
        H = c.inputs[0]
        if _flag(s, H, "nonperiodic") and _flag(s, H, "minimal"):
            yield DimFact(c.out, "simple", True, "R11", (_fid(H, "nonperiodic"), _fid(H, "minimal")))
        if _flag(s, c.out, "simple"):
            for a in ("minimal", "nonperiodic"):
                yield DimFact(H, a, True, "R11", (_fid(c.out, "simple"),))


def r12(g, s, cfg):
    for e in g.entities.values():
        if e.kind == "correspondence" and _flag(s, e.id, "finite_rokhlin"):
            yield DimFact(e.id, "nonperiodic", True, "R12", (_fid(e.id, "finite_rokhlin"),))


def r13(g, s, cfg):
    for e in g.entities.values():
        if e.kind == "correspondence" and _flag(s, e.over, "simple"):
            yield DimFact(e.id, "minimal", True, "R13", (_fid(e.over, "simple"),))


def r14(g, s, cfg):
    for c in g.by_op("cuntz_pimsner"):
        H = c.inputs[0]
        A = g.entities[H].over
        need = [(A, "classifiable"), (H, "fgp"), (H, "finite_rokhlin"),
                (c.out, "simple"), (c.out, "UCT"), (c.out, "finite_dim_nuc"), (c.out, "unital")]
        if all(_flag(s, e, a) for e, a in need):
            yield DimFact(c.out, "classifiable", True, "R14", tuple(_fid(e, a) for e, a in need))


def aux_classifiable(g, s, cfg):
    for (e, a) in list(s):
        if a == "classifiable":
            for b in ("unital", "simple", "UCT", "finite_dim_nuc"):
                yield DimFact(e, b, True, "AUX-classifiable", (_fid(e, a),))


def aux_finite(g, s, cfg):
    for (e, a), f in list(s.items()):
        if a == "dim_nuc":
            yield DimFact(e, "finite_dim_nuc", True, "AUX-finite", (f.id,))
        elif a == "dim_Rok":
            yield DimFact(e, "finite_rokhlin", True, "AUX-finite", (f.id,))


def aux_fgp(g, s, cfg):
    for e in g.entities.values():
        if e.kind == "correspondence" and _flag(s, e.id, "fgp"):
            yield DimFact(e.id, "quasicentral_projection_unit", True, "AUX-fgp", (_fid(e.id, "fgp"),))


def aux_unital(g, s, cfg):
    for c in g.by_op("toeplitz", "cuntz_pimsner"):
        A = g.entities[c.inputs[0]].over
        if _flag(s, A, "unital"):
            yield DimFact(c.out, "unital", True, "AUX-unital", (_fid(A, "unital"),))


RULES: tuple[tuple[str, Rule], ...] = (
    ("R1", r1), ("R2", r2), ("R3", r3), ("R4", r4), ("R5", r5), ("R6", r6), ("R7", r7), ("R8", r8),
    ("R9", r9), ("R10", r10), ("R11", r11), ("R12", r12), ("R13", r13), ("R14", r14),
    ("AUX-classifiable", aux_classifiable), ("AUX-finite", aux_finite), ("AUX-fgp", aux_fgp),
    ("AUX-unital", aux_unital),
)
RULE_NAMES = tuple(n for n, _ in RULES)


def _better(new: DimFact, old: DimFact | None) -> bool:
    if old is None:
        return True
    return new.is_bound and new.value < old.value - 1e-12


# propagation -------------------------------------------------------------------------

@dataclass
class FactSet:
    graph: Graph
    facts: dict[str, DimFact]
    config: CalculusConfig = field(default_factory=CalculusConfig)
    rounds: int = 0

    def __getitem__(self, fid: str) -> DimFact:
        try:
            return self.facts[fid]
        except KeyError:
            raise FactLookupError(f"no fact {fid!r}") from None

    def __contains__(self, fid: str) -> bool:
        return fid in self.facts

    def get(self, entity: str, attribute: str) -> DimFact | None:
        return self.facts.get(_fid(entity, attribute))

    def bound(self, entity: str, attribute: str) -> float:
        f = self.get(entity, attribute)
        return math.inf if f is None else float(f.value)

    def holds(self, entity: str, attribute: str) -> bool:
        return self.get(entity, attribute) is not None

    def values(self) -> dict[str, float | bool]:
        return {k: f.value for k, f in sorted(self.facts.items())}

    def premise_rules(self, fid: str) -> list[str]:
        """Rules used strictly below ``fid``, post-order, auxiliary rules and declarations skipped."""
        out: list[str] = []
        seen: set[str] = set()

        def visit(pid: str) -> None:
            if pid in seen or pid not in self.facts:
                return
            seen.add(pid)
            f = self.facts[pid]
            for q in f.premises:
                visit(q)
            if f.rule.startswith("R") and f.rule not in out:
                out.append(f.rule)

        for q in self[fid].premises:
            visit(q)
        return out

    def as_json(self) -> list[dict]:
        out = []
        for fid, f in sorted(self.facts.items()):
            out.append({
                "id": fid, "entity": f.entity, "attribute": f.attribute,
                "relation": "<=" if f.is_bound else "holds",
                "value": f.value if not f.is_bound else (int(f.value) if float(f.value).is_integer() else f.value),
                "rule": f.rule, "anchor": f.anchor, "premises": list(f.premises), "trace": self.premise_rules(fid),
            })
        return out


def _sweep_values(g: Graph, order: Sequence[str], cfg: CalculusConfig) -> dict[Key, DimFact]:
    rules = dict(RULES)
    state: dict[Key, DimFact] = {}
    for d in g.declared:
        if _better(d, state.get(d.key)):
            state[d.key] = d
    for _ in range(cfg.max_sweeps):
        changed = False
        for name in order:
            for cand in list(rules[name](g, state, cfg)):
                if _better(cand, state.get(cand.key)):
                    state[cand.key] = cand
                    changed = True
        if not changed:
            return state
    raise ConsistencyError("propagation did not reach a fixed point")


def _canonical(g: Graph, cfg: CalculusConfig) -> tuple[dict[Key, DimFact], int]:
    state: dict[Key, DimFact] = {}
    for d in g.declared:
        if _better(d, state.get(d.key)):
            state[d.key] = d
    for rnd in range(1, cfg.max_sweeps + 1):
        snap = dict(state)
        new: dict[Key, DimFact] = {}
        for _, rule in RULES:
            for cand in rule(g, snap, cfg):
                if _better(cand, snap.get(cand.key)) and _better(cand, new.get(cand.key)):
                    new[cand.key] = cand
        if not new:
            return state, rnd
        state.update(new)
    raise ConsistencyError("propagation did not reach a fixed point")


def propagate(graph: Graph | Mapping, config: CalculusConfig | None = None,
              rule_order: Sequence[str] | None = None) -> FactSet:
    """Least fixed point of the rules; ``rule_order`` permutes the sweep order."""
    cfg = config or CalculusConfig()
    g = graph if isinstance(graph, Graph) else parse_graph(graph)
    order = list(rule_order) if rule_order is not None else list(RULE_NAMES)
    if sorted(order) != sorted(RULE_NAMES):
        raise InputError("rule_order must be a permutation of the rule names")
    swept = _sweep_values(g, order, cfg)
    canon, rounds = _canonical(g, cfg)
    if {k: f.value for k, f in swept.items()} != {k: f.value for k, f in canon.items()}:
        raise ConsistencyError("sweep order changed the fixed point")
    return FactSet(g, {f.id: f for f in canon.values()}, cfg, rounds)


def explain(facts: FactSet, fid: str) -> str:
    """Indented derivation tree with rule names and anchors."""
    facts[fid]
    lines: list[str] = []

    def visit(pid: str, depth: int) -> None:
        pad = "  " * depth
        if pid.startswith("construction["):
            lines.append(f"{pad}{pid}  [construction]")
            return
        f = facts[pid]
        tag = "declared" if f.rule == "declared" else f"{f.rule}: {f.anchor}"
        lines.append(f"{pad}{f.describe()}  [{tag}]")
        for q in f.premises:
            visit(q, depth + 1)

    visit(fid, 0)
    return "\n".join(lines)
