"""Brute-force reference for the synchronizer, plus a random instance generator.

The oracle answers "which rewrites of this view are legal after this change?"
by exhaustive search: every attribute or relation of the post-change schemas is
tried as a substitute, every admissible linking join and every admissible
attribute counterpart is tried, and each resulting view is checked against the
legality rules directly.  It reads the knowledge base only as raw data (schemas
and constraint lists) and shares nothing with :mod:`wssync.sync` beyond the
model and E-SQL data types, so agreement between the two is real evidence.
"""

from __future__ import annotations

import datetime as _dt
import itertools
import random
from collections.abc import Iterator
from dataclasses import dataclass, field

from wssync.errors import BoundsExceeded
from wssync.esql import (
    AttributeTerm,
    DateLiteral,
    EvolutionParams,
    FromItem,
    NumberLiteral,
    PrimitiveClause,
    SelectItem,
    StringLiteral,
    ViewDefinition,
    print_clause,
    print_from_item,
    print_select_item,
)
from wssync.model import (
    AttributeRef,
    ChangeEvent,
    DeleteAttribute,
    DeleteRelation,
    ExtentRelation,
    RelationRef,
    RelationSchema,
    SourceSchema,
    TypeDomain,
    WebService,
    apply_change,
)
from wssync.sync import DroppedComponent, Failed, Rewritten, Unchanged, ViewOutcome, synchronize
from wssync.wsmkb import JoinConstraint, MetaKnowledgeBase, PCConstraint, PCSide, ReplacementRule, TypeIntegrityConstraint
from wssync.wsvkb import ViewKnowledgeBase, ViewRecord

# Only the outcome value types above come from the engine module; no engine
# function is called outside ``check_instance``.

E = ExtentRelation
_VE_OK = {
    E.EQUIVALENT: {E.EQUIVALENT},
    E.SUPERSET: {E.EQUIVALENT, E.SUPERSET},
    E.SUBSET: {E.EQUIVALENT, E.SUBSET},
    E.INDIFFERENT: set(E),
}


@dataclass(frozen=True)
class InstanceSpec:
    sources: int = 3
    relations: int = 3
    attributes: int = 4
    jcs: int = 6
    pcs: int = 4
    views: int = 3
    clauses: int = 3

    def __post_init__(self) -> None:
        for name, value in vars(self).items():
            if not isinstance(value, int) or value < 1:
                raise ValueError(f"InstanceSpec.{name} must be a positive integer, got {value!r}")


def check_bounds(meta: MetaKnowledgeBase, view: ViewDefinition, spec: InstanceSpec) -> None:
    problems = []
    if len(meta.sources) > spec.sources:
        problems.append(f"{len(meta.sources)} sources")
    for s in meta.sources:
        if len(s.relations) > spec.relations:
            problems.append(f"{len(s.relations)} relations in {s.source_id}")
        for r in s.relations:
            if len(r.attributes) > spec.attributes:
                problems.append(f"{len(r.attributes)} attributes in {s.source_id}.{r.name}")
    if len(meta.join_constraints) > spec.jcs:
        problems.append(f"{len(meta.join_constraints)} join constraints")
    if len(meta.pc_constraints) > spec.pcs:
        problems.append(f"{len(meta.pc_constraints)} PC constraints")
    if len(view.where) > spec.clauses:
        problems.append(f"{len(view.where)} clauses in {view.name}")
    if problems:
        raise BoundsExceeded("instance exceeds oracle bounds: " + ", ".join(problems))


# ---------------------------------------------------------------------------
# Legality, written independently of the engine
# ---------------------------------------------------------------------------


class _World:
    """Post-change facts the oracle reasons over, flattened into plain dicts."""

    def __init__(self, meta: MetaKnowledgeBase, event: ChangeEvent) -> None:
        post = apply_change(meta.sources, event)
        self.live: dict[RelationRef, dict[str, TypeDomain]] = {}
        for s in post:
            for r in s.relations:
                self.live[RelationRef(s.source_id, r.name)] = dict(r.attributes)
        self.declared: dict[AttributeRef, TypeDomain] = {}
        for tc in meta.type_constraints:
            for name, t in tc.typing:
                self.declared[tc.relation.attribute(name)] = t
        self.links: list[tuple[AttributeRef, AttributeRef]] = []
        for jc in meta.join_constraints:
            for x, y in jc.equalities:
                self.links.append((jc.left.attribute(x), jc.right.attribute(y)))
        self.pcs = [pc for pc in meta.pc_constraints if not pc.left.selection and not pc.right.selection]

    def alive(self, ref: AttributeRef) -> TypeDomain | None:
        return self.live.get(ref.relation, {}).get(ref.attribute_name)

    def linked(self, x: AttributeRef, y: AttributeRef) -> bool:
        return (x, y) in self.links or (y, x) in self.links

    def containments(self, r: RelationRef, s: RelationRef) -> Iterator[tuple[E, list[tuple[str, str]]]]:
        """Every projection-only PC between r and s, read as ``r θ s`` with paired projections."""
        flip = {E.SUBSET: E.SUPERSET, E.SUPERSET: E.SUBSET, E.EQUIVALENT: E.EQUIVALENT}
        for pc in self.pcs:
            if pc.left.relation == r and pc.right.relation == s:
                yield pc.theta, list(zip(pc.left.projection, pc.right.projection))
            elif pc.right.relation == r and pc.left.relation == s:
                yield flip[pc.theta], list(zip(pc.right.projection, pc.left.projection))


def _fate(params: EvolutionParams, have: bool) -> str:
    if have and params.replaceable:
        return "swap"
    return "drop" if params.dispensable else "fail"


def _next_alias(base: str, taken: set[str]) -> str:
    n = 2
    while base + str(n) in taken:
        n += 1
    taken.add(base + str(n))
    return base + str(n)


def _extent_of(step: str, theta: E | None, dropped: list[DroppedComponent]) -> E:
    if step == "relation":
        extent = {E.EQUIVALENT: E.EQUIVALENT, E.SUBSET: E.SUPERSET, E.SUPERSET: E.SUBSET}[theta]
    elif step == "attribute":
        extent = E.INDIFFERENT if theta is None else (E.SUBSET if theta is E.SUPERSET else E.EQUIVALENT)
    else:
        extent = E.EQUIVALENT
    kinds = {extent} | {E.INDIFFERENT if d.kind == "select" else E.SUPERSET for d in dropped}
    kinds.discard(E.EQUIVALENT)
    if not kinds:
        return E.EQUIVALENT
    if len(kinds) == 1:
        return kinds.pop()
    return E.INDIFFERENT


def _valid(world: _World, view: ViewDefinition) -> bool:
    if not view.select or not view.from_:
        return False
    aliases = {}
    for f in view.from_:
        if f.alias in aliases or f.relation not in world.live:
            return False
        aliases[f.alias] = f.relation
    terms = [s.attribute for s in view.select] + [t for c in view.where for t in c.attribute_terms]
    for t in terms:
        if t.alias not in aliases or t.attribute not in world.live[aliases[t.alias]]:
            return False
    return view.column_list is None or len(view.column_list) == len(view.select)


def _conclude(world, view, select, columns, from_, where, dropped, extent) -> ViewOutcome:
    new = ViewDefinition(
        view.name + "'", tuple(select), tuple(from_), tuple(where), view.ve,
        tuple(columns) if columns is not None else None,
    )
    if extent not in _VE_OK[view.ve] or not _valid(world, new):
        return Failed()
    return Rewritten(new, extent, tuple(dropped))


def _attribute_outcome(
    world: _World, view: ViewDefinition, a: AttributeRef, b: AttributeRef | None, link: tuple[str, str, E | None] | None
) -> ViewOutcome:
    r_aliases = [f.alias for f in view.from_ if f.relation == a.relation]

    def is_a(t) -> bool:
        return isinstance(t, AttributeTerm) and t.alias in r_aliases and t.attribute == a.attribute_name

    have = b is not None
    sel = [(_fate(i.params, have) if is_a(i.attribute) else "keep") for i in view.select]
    cls = [(_fate(c.params, have) if (is_a(c.lhs) or is_a(c.rhs)) else "keep") for c in view.where]
    if all(f == "keep" for f in sel + cls):
        return Unchanged()
    if "fail" in sel + cls:
        return Failed()

    needing = set()
    for item, f in zip(view.select, sel):
        if f == "swap":
            needing.add(item.attribute.alias)
    for c, f in zip(view.where, cls):
        if f == "swap":
            needing |= {t.alias for t in (c.lhs, c.rhs) if is_a(t)}
    taken = {f.alias for f in view.from_}
    partner = {f.alias: _next_alias(f.alias, taken) for f in view.from_ if f.alias in needing}

    def moved(t):
        return AttributeTerm(partner[t.alias], b.attribute_name) if is_a(t) else t

    dropped, select, where = [], [], []
    columns = None if view.column_list is None else []
    for idx, (item, f) in enumerate(zip(view.select, sel)):
        if f == "drop":
            dropped.append(DroppedComponent("select", print_select_item(item)))
            continue
        select.append(SelectItem(moved(item.attribute), item.params) if f == "swap" else item)
        if columns is not None:
            columns.append(view.column_list[idx])
    for c, f in zip(view.where, cls):
        if f == "drop":
            dropped.append(DroppedComponent("clause", print_clause(c)))
        elif f == "swap":
            where.append(PrimitiveClause(moved(c.lhs), c.comparator, moved(c.rhs), c.params))
        else:
            where.append(c)
    from_ = list(view.from_)
    for f in view.from_:
        if f.alias in partner:
            from_.append(FromItem(b.relation, partner[f.alias], f.params))
            where.append(PrimitiveClause(AttributeTerm(f.alias, link[0]), "=", AttributeTerm(partner[f.alias], link[1])))
    extent = _extent_of("attribute" if partner else "none", link[2] if partner else None, dropped)
    return _conclude(world, view, select, columns, from_, where, dropped, extent)


def _links(world: _World, a: AttributeRef, b: AttributeRef) -> list[tuple[str, str, E | None]]:
    r, s = a.relation, b.relation
    out = []
    for theta, pairs in world.containments(r, s):
        for x, y in pairs:
            if x != a.attribute_name and world.alive(r.attribute(x)) and world.alive(s.attribute(y)):
                out.append((x, y, theta))
    for p, q in world.links:
        if p.relation == s and q.relation == r:
            p, q = q, p
        if p.relation == r and q.relation == s and p != a and world.alive(p) and world.alive(q):
            out.append((p.attribute_name, q.attribute_name, None))
    return out


def _relation_outcome(
    world: _World,
    view: ViewDefinition,
    r: RelationRef,
    s: RelationRef | None,
    theta: E | None,
    counterparts: dict[tuple[str, int], str | None],
) -> ViewOutcome:
    fates = {f.alias: _fate(f.params, s is not None) for f in view.from_ if f.relation == r}
    if not fates:
        return Unchanged()
    if "fail" in fates.values():
        return Failed()
    taken = {f.alias for f in view.from_}
    renamed = {f.alias: _next_alias(f.alias, taken) for f in view.from_ if fates.get(f.alias) == "swap"}

    dropped, from_, select, where = [], [], [], []
    for f in view.from_:
        fate = fates.get(f.alias)
        if fate is None:
            from_.append(f)
        elif fate == "swap":
            from_.append(FromItem(s, renamed[f.alias], f.params))
        else:
            dropped.append(DroppedComponent("relation", print_from_item(f)))

    def translate(t, slot):
        if not isinstance(t, AttributeTerm) or t.alias not in fates:
            return t
        if fates[t.alias] == "drop":
            return None
        name = counterparts.get(slot)
        return AttributeTerm(renamed[t.alias], name) if name else None

    columns = None if view.column_list is None else []
    for i, item in enumerate(view.select):
        t = translate(item.attribute, ("select", i))
        if t is None:
            if not item.params.dispensable:
                return Failed()
            dropped.append(DroppedComponent("select", print_select_item(item)))
            continue
        select.append(SelectItem(t, item.params))
        if columns is not None:
            columns.append(view.column_list[i])
    for j, c in enumerate(view.where):
        lhs, rhs = translate(c.lhs, ("lhs", j)), translate(c.rhs, ("rhs", j))
        if lhs is None or rhs is None:
            if not c.params.dispensable:
                return Failed()
            dropped.append(DroppedComponent("clause", print_clause(c)))
            continue
        where.append(PrimitiveClause(lhs, c.comparator, rhs, c.params))
    extent = _extent_of("relation" if renamed else "none", theta, dropped)
    return _conclude(world, view, select, columns, from_, where, dropped, extent)


def _counterpart_options(world: _World, r: RelationRef, s: RelationRef, attribute: str, replaceable: bool) -> list[str]:
    want = world.declared.get(r.attribute(attribute))
    if want is None:
        return []
    options = []
    for name, t in world.live[s].items():
        if t is not want:
            continue
        if name == attribute or (replaceable and world.linked(r.attribute(attribute), s.attribute(name))):
            options.append(name)
    return options


@dataclass(frozen=True)
class Choice:
    """One reachable outcome and the substitute that produced it (None for drop-or-fail)."""

    key: tuple
    outcome: ViewOutcome


def _references(view: ViewDefinition, event: ChangeEvent) -> bool:
    if isinstance(event, DeleteRelation):
        return any(f.relation == event.target for f in view.from_)
    a = event.target
    aliases = {f.alias for f in view.from_ if f.relation == a.relation}
    terms = [s.attribute for s in view.select] + [t for c in view.where for t in (c.lhs, c.rhs)]
    return any(isinstance(t, AttributeTerm) and t.alias in aliases and t.attribute == a.attribute_name for t in terms)


def enumerate_choices(
    meta: MetaKnowledgeBase, view: ViewDefinition, event: ChangeEvent, spec: InstanceSpec | None = None
) -> list[Choice]:
    """All reachable outcomes for ``view`` under ``event``, each tagged with its substitute.

    ``meta`` is the knowledge base *before* the change.
    """
    if spec is not None:
        check_bounds(meta, view, spec)
    if not _references(view, event):
        return [Choice((), Unchanged())]
    world = _World(meta, event)
    found: list[Choice] = []

    if isinstance(event, DeleteAttribute):
        a = event.target
        want = world.declared.get(a)
        for rel in sorted(world.live):
            if rel == a.relation:
                continue
            for name in sorted(world.live[rel]):
                b = rel.attribute(name)
                if want is None or world.declared.get(b) is not want or world.alive(b) is not want:
                    continue
                if not world.linked(a, b):
                    continue
                for link in _links(world, a, b):
                    outcome = _attribute_outcome(world, view, a, b, link)
                    if isinstance(outcome, Rewritten):
                        found.append(Choice((b.source_id, b.relation_name, b.attribute_name), outcome))
        return found or [Choice((), _attribute_outcome(world, view, a, None, None))]

    r = event.target
    substituted = [f.alias for f in view.from_ if f.relation == r and f.params.replaceable]
    for s in sorted(world.live):
        if s == r:
            continue
        thetas = set()
        for theta, pairs in world.containments(r, s):
            if all(y in world.live[s] for _, y in pairs):
                thetas.add(theta)
        if not thetas:
            continue
        slots: list[tuple[tuple[str, int], list[str | None]]] = []
        for i, item in enumerate(view.select):
            if item.attribute.alias in substituted:
                opts = _counterpart_options(world, r, s, item.attribute.attribute, item.params.replaceable)
                slots.append((("select", i), opts or [None]))
        for j, c in enumerate(view.where):
            for side, t in (("lhs", c.lhs), ("rhs", c.rhs)):
                if isinstance(t, AttributeTerm) and t.alias in substituted:
                    opts = _counterpart_options(world, r, s, t.attribute, c.params.replaceable)
                    slots.append(((side, j), opts or [None]))
        for theta in sorted(thetas, key=lambda e: e.value):
            for combo in itertools.product(*(opts for _, opts in slots)):
                counterparts = {slot: name for (slot, _), name in zip(slots, combo)}
                outcome = _relation_outcome(world, view, r, s, theta, counterparts)
                if isinstance(outcome, Rewritten):
                    found.append(Choice((s.source_id, s.relation_name, theta.value), outcome))
    return found or [Choice((), _relation_outcome(world, view, r, None, None, {}))]


def enumerate_outcomes(
    meta: MetaKnowledgeBase, view: ViewDefinition, event: ChangeEvent, spec: InstanceSpec | None = InstanceSpec()
) -> set[ViewOutcome]:
    """Every outcome reachable by some choice of substitute; raises BoundsExceeded on big inputs."""
    return {c.outcome for c in enumerate_choices(meta, view, event, spec)}


def oracle_rank(extent: E, ve: E) -> int:
    if extent is E.EQUIVALENT:
        return 0
    if extent is E.INDIFFERENT:
        return 3
    return 1 if extent is ve else 2


def preferred_outcomes(view: ViewDefinition, choices: list[Choice]) -> set[ViewOutcome]:
    """Outcomes of the top-ranked substitute: best extent first, then smallest reference."""
    rewritten = [c for c in choices if isinstance(c.outcome, Rewritten)]
    if not rewritten:
        return {c.outcome for c in choices}
    best = min((oracle_rank(c.outcome.extent, view.ve), c.key) for c in rewritten)
    return {c.outcome for c in rewritten if (oracle_rank(c.outcome.extent, view.ve), c.key) == best}


# ---------------------------------------------------------------------------
# Random instances
# ---------------------------------------------------------------------------

_TYPE_CYCLE = (TypeDomain.NUMBER, TypeDomain.STRING, TypeDomain.NUMBER, TypeDomain.DATE, TypeDomain.STRING)
_COMPARATORS = ("=", "=", "<>", "<", "<=", ">", ">=")


@dataclass
class Instance:
    seed: int
    sources: list[SourceSchema]
    join_constraints: list[JoinConstraint]
    pc_constraints: list[PCConstraint]
    web_services: list[WebService]
    views: list[ViewDefinition]
    event: ChangeEvent

    def build(self) -> tuple[MetaKnowledgeBase, ViewKnowledgeBase]:
        meta = MetaKnowledgeBase()
        for s in self.sources:
            meta.register(s)
            for r in s.relations:
                meta.register(TypeIntegrityConstraint.from_schema(s, r.name))
        meta.register_all(self.join_constraints)
        meta.register_all(self.pc_constraints)
        meta.register_all(self.web_services)
        views = ViewKnowledgeBase(meta)
        for v in self.views:
            views.add_view(ViewRecord(v.name, v))
        for ws in self.web_services:
            views.map_web_service(ws.ws_id, ws.view_ids)
            if ws.replacements:
                meta.register(ReplacementRule(ws.ws_id, ws.replacements))
        return meta, views


def _literal(rng: random.Random, domain: TypeDomain):
    if domain is TypeDomain.NUMBER:
        return NumberLiteral(rng.randint(0, 99))
    if domain is TypeDomain.STRING:
        return StringLiteral(rng.choice(["x", "Tunis", "Cardiologist", 'say "hi"']))
    return DateLiteral(_dt.date(2000, 1, 1) + _dt.timedelta(days=rng.randint(0, 9000)))


def _params(rng: random.Random) -> EvolutionParams:
    return EvolutionParams(rng.random() < 0.5, rng.random() < 0.85)


def generate_instance(seed: int, spec: InstanceSpec = InstanceSpec()) -> Instance:
    """Deterministic small universe of schemas, constraints and views, plus one deletion."""
    rng = random.Random(seed)
    attr_pool = [f"a{i + 1}" for i in range(spec.attributes + 1)]
    base_type = {name: _TYPE_CYCLE[i % len(_TYPE_CYCLE)] for i, name in enumerate(attr_pool)}
    rel_pool = [f"R{i + 1}" for i in range(spec.relations)]

    sources = []
    for i in range(rng.randint(min(2, spec.sources), spec.sources)):
        relations = []
        for name in sorted(rng.sample(rel_pool, rng.randint(1, spec.relations))):
            attrs = sorted(rng.sample(attr_pool, rng.randint(1, spec.attributes)), key=attr_pool.index)
            typed = [(a, rng.choice(list(TypeDomain)) if rng.random() < 0.1 else base_type[a]) for a in attrs]
            relations.append(RelationSchema(name, tuple(typed)))
        sources.append(SourceSchema(f"S{i + 1}", tuple(relations)))

    all_rels = [(RelationRef(s.source_id, r.name), r) for s in sources for r in s.relations]

    def pick_pair(same_name_bias: float):
        if len(all_rels) < 2:
            return None
        (r1, s1) = rng.choice(all_rels)
        same = [p for p in all_rels if p[0].relation_name == r1.relation_name and p[0] != r1]
        if same and rng.random() < same_name_bias:
            return (r1, s1), rng.choice(same)
        others = [p for p in all_rels if p[0] != r1]
        return (r1, s1), rng.choice(others)

    jcs: list[JoinConstraint] = []
    for _ in range(rng.randint(spec.jcs // 2, spec.jcs)):
        pair = pick_pair(0.8)
        if pair is None:
            break
        (r1, s1), (r2, s2) = pair
        x, tx = rng.choice(s1.attributes)
        matches = [n for n, t in s2.attributes if t is tx]
        if not matches:
            continue
        y = x if x in matches and rng.random() < 0.7 else rng.choice(matches)
        jc = JoinConstraint(r1, r2, ((x, y),))
        if jc not in jcs:
            jcs.append(jc)

    pcs: list[PCConstraint] = []
    for _ in range(rng.randint(spec.pcs // 2, spec.pcs)):
        pair = pick_pair(0.9)
        if pair is None:
            break
        (r1, s1), (r2, s2) = pair
        left, right = [], []
        for n, t in s1.attributes:
            options = [m for m, u in s2.attributes if u is t and m not in right]
            if not options or rng.random() < 0.15:
                continue
            left.append(n)
            right.append(n if n in options else rng.choice(options))
        if not left:
            continue
        selection = ()
        if rng.random() < 0.1:
            n, t = rng.choice(s1.attributes)
            selection = (PrimitiveClause(AttributeTerm(r1.relation_name, n), "=", _literal(rng, t)),)
        theta = rng.choice([E.SUBSET, E.SUPERSET, E.EQUIVALENT])
        pc = PCConstraint(PCSide(r1, left, selection), theta, PCSide(r2, right))
        if pc not in pcs:
            pcs.append(pc)

    views: list[ViewDefinition] = []
    for j in range(rng.randint(1, spec.views)):
        chosen = rng.sample(all_rels, rng.randint(1, min(2, len(all_rels))))
        from_ = [FromItem(ref, "XYZ"[k], _params(rng)) for k, (ref, _) in enumerate(chosen)]
        typed_terms = [
            (AttributeTerm(f.alias, n), t) for f, (_, schema) in zip(from_, chosen) for n, t in schema.attributes
        ]
        select: list[SelectItem] = []
        for _ in range(rng.randint(1, 3)):
            term, _ = rng.choice(typed_terms)
            if all(s.attribute != term for s in select):
                select.append(SelectItem(term, _params(rng)))
        where = []
        for _ in range(rng.randint(0, spec.clauses)):
            term, t = rng.choice(typed_terms)
            partners = [u for u, ut in typed_terms if ut is t and u.alias != term.alias]
            rhs = rng.choice(partners) if partners and rng.random() < 0.3 else _literal(rng, t)
            where.append(PrimitiveClause(term, rng.choice(_COMPARATORS), rhs, _params(rng)))
        views.append(ViewDefinition(f"V{j + 1}", tuple(select), tuple(from_), tuple(where), rng.choice(list(E))))

    n_ws = min(len(views), rng.randint(1, 2))
    services = []
    for w in range(n_ws):
        mine = [v for k, v in enumerate(views) if k % n_ws == w]
        used = sorted({f.relation.source_id for v in mine for f in v.from_})
        repl = (f"WS{w + 2}",) if w + 1 < n_ws else ()
        services.append(WebService(f"WS{w + 1}", frozenset(used), tuple(v.name for v in mine), repl))

    referenced_attrs = sorted(
        {v.aliases[t.alias].attribute(t.attribute) for v in views for t in _terms(v)}
    )
    referenced_rels = sorted({f.relation for v in views for f in v.from_})
    if rng.random() < 0.5:
        pool = referenced_attrs if rng.random() < 0.85 else sorted(
            ref.attribute(n) for ref, schema in all_rels for n in schema.attribute_names
        )
        event: ChangeEvent = DeleteAttribute(rng.choice(pool))
    else:
        pool = referenced_rels if rng.random() < 0.85 else [ref for ref, _ in all_rels]
        event = DeleteRelation(rng.choice(pool))
    return Instance(seed, sources, jcs, pcs, services, views, event)


def _terms(view: ViewDefinition) -> list[AttributeTerm]:
    return [s.attribute for s in view.select] + [t for c in view.where for t in c.attribute_terms]


# ---------------------------------------------------------------------------
# Engine/oracle agreement
# ---------------------------------------------------------------------------


@dataclass
class TrialResult:
    seed: int
    agree: bool = True
    ve_violations: int = 0
    rewritten: int = 0
    failed: int = 0
    problems: list[str] = field(default_factory=list)


def check_instance(instance: Instance, spec: InstanceSpec = InstanceSpec()) -> TrialResult:
    """Run the engine on ``instance`` and compare every per-view outcome with the oracle."""
    meta, views = instance.build()
    before = meta.copy()
    originals = {rec.view_id: rec.definition for rec in views.records}
    report = synchronize(meta, views, instance.event)
    result = TrialResult(instance.seed)

    expected_ids = {vid for vid, v in originals.items() if _references(v, instance.event)}
    if set(report.per_view) != expected_ids:
        result.agree = False
        result.problems.append(f"affected views {sorted(report.per_view)} != {sorted(expected_ids)}")

    for view_id, outcome in sorted(report.per_view.items()):
        view = originals[view_id]
        choices = enumerate_choices(before, view, instance.event, spec)
        if isinstance(outcome, Rewritten):
            result.rewritten += 1
            if outcome.extent not in _VE_OK[view.ve]:
                result.ve_violations += 1
                result.problems.append(f"{view_id}: extent {outcome.extent.symbol} violates VE {view.ve.symbol}")
        elif isinstance(outcome, Failed):
            result.failed += 1
        if outcome not in {c.outcome for c in choices}:
            result.agree = False
            result.problems.append(f"{view_id}: engine outcome not reachable by the oracle")
        elif outcome not in preferred_outcomes(view, choices):
            result.agree = False
            result.problems.append(f"{view_id}: engine outcome is not the top-ranked legal rewrite")
    return result


@dataclass
class FuzzSummary:
    trials: int
    agreed: int
    ve_violations: int
    rewritten: int
    failed: int
    first_disagreement: TrialResult | None

    @property
    def ok(self) -> bool:
        return self.agreed == self.trials and self.ve_violations == 0


def run_trials(trials: int, seed: int = 0, spec: InstanceSpec = InstanceSpec()) -> FuzzSummary:
    """Check ``trials`` generated instances using seeds ``seed, seed + 1, ...``."""
    if trials < 1:
        raise ValueError("trials must be at least 1")
    agreed = ve = rewritten = failed = 0
    first = None
    for k in range(trials):
        res = check_instance(generate_instance(seed + k, spec), spec)
        agreed += res.agree
        ve += res.ve_violations
        rewritten += res.rewritten
        failed += res.failed
        if not res.agree and first is None:
            first = res
    return FuzzSummary(trials, agreed, ve, rewritten, failed, first)
