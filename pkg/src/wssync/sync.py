"""View synchronization after attribute or relation deletions.

:func:`synchronize` is the entry point.  It applies a change event to the meta
knowledge base, finds every view that referenced the deleted component and
rewrites each one according to the evolution parameters written in its E-SQL
text:

* a component that is replaceable is substituted when a legal substitute
  exists (``find_relation`` / ``find_attribute``);
* otherwise a dispensable component is dropped;
* otherwise the view cannot be synchronized.

Each occurrence of the deleted component (a FROM item, a select item or a
WHERE clause) is judged on its own parameters.  A substitute is legal only if
the whole rewrite it produces is valid over the new schemas and its extent is
accepted by the view's ``VE`` preference.  Among legal substitutes the one
whose rewrite preserves the most extent wins; ties go to the lexicographically
smallest reference, so the engine is deterministic.
"""

from __future__ import annotations

import enum
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field, replace
from typing import Union

from wssync.errors import ValidationError
from wssync.esql import (
    AttributeTerm,
    FromItem,
    PrimitiveClause,
    SelectItem,
    ViewDefinition,
    print_clause,
    print_from_item,
    print_select_item,
    print_view,
    rename_terms,
)
from wssync.model import (
    AttributeRef,
    ChangeEvent,
    DeleteAttribute,
    DeleteRelation,
    ExtentRelation,
    RelationRef,
    apply_change,
)
from wssync.wsmkb import MetaKnowledgeBase
from wssync.wsvkb import ViewKnowledgeBase, validate_view

FAILURE_MESSAGE = "Web service can't be synchronized"

EQ = ExtentRelation.EQUIVALENT
SUP = ExtentRelation.SUPERSET
SUB = ExtentRelation.SUBSET
IND = ExtentRelation.INDIFFERENT

_ACCEPTS = {
    EQ: frozenset({EQ}),
    SUP: frozenset({EQ, SUP}),
    SUB: frozenset({EQ, SUB}),
    IND: frozenset({EQ, SUP, SUB, IND}),
}


@dataclass(frozen=True)
class DroppedComponent:
    kind: str  # "relation", "select" or "clause"
    text: str

    def __str__(self) -> str:
        return f"{self.kind} {self.text}"


@dataclass(frozen=True)
class Unchanged:
    pass


@dataclass(frozen=True)
class Rewritten:
    new: ViewDefinition
    extent: ExtentRelation
    dropped: tuple[DroppedComponent, ...] = ()


@dataclass(frozen=True)
class Failed:
    message: str = FAILURE_MESSAGE


ViewOutcome = Union[Unchanged, Rewritten, Failed]


@dataclass(frozen=True)
class FailedWithFallback:
    """A web service with at least one unsynchronizable view, and the replacement chosen for it."""

    chosen: str | None


@dataclass
class SyncReport:
    event: ChangeEvent
    per_view: dict[str, ViewOutcome] = field(default_factory=dict)
    per_ws: dict[str, ExtentRelation | FailedWithFallback] = field(default_factory=dict)

    @property
    def failed(self) -> bool:
        return any(isinstance(o, Failed) for o in self.per_view.values())

    def to_dict(self) -> dict:
        views = {}
        for view_id in sorted(self.per_view):
            outcome = self.per_view[view_id]
            if isinstance(outcome, Rewritten):
                views[view_id] = {
                    "status": "rewritten",
                    "extent": outcome.extent.symbol,
                    "dropped": [str(d) for d in outcome.dropped],
                    "esql": print_view(outcome.new),
                }
            elif isinstance(outcome, Failed):
                views[view_id] = {"status": "failed", "message": outcome.message}
            else:
                views[view_id] = {"status": "unchanged"}
        services = {}
        for ws_id in sorted(self.per_ws):
            status = self.per_ws[ws_id]
            if isinstance(status, FailedWithFallback):
                services[ws_id] = {"status": "failed", "fallback": status.chosen}
            else:
                services[ws_id] = {"status": "synchronized", "extent": status.symbol}
        return {"event": str(self.event), "views": views, "web_services": services}


class RewriteKind(enum.Enum):
    NONE = "none"
    RELATION_SUBSTITUTION = "relation-substitution"
    ATTRIBUTE_SUBSTITUTION = "attribute-substitution"


# ---------------------------------------------------------------------------
# Extents
# ---------------------------------------------------------------------------


def classify_extent(
    kind: RewriteKind,
    theta: ExtentRelation | None = None,
    dropped: Iterable[DroppedComponent] = (),
) -> ExtentRelation:
    """Extent of one rewrite step relative to the original view.

    ``theta`` is the containment ``R θ S`` between the replaced relation R and
    its substitute S, or None when no containment is known.
    """
    if kind is RewriteKind.RELATION_SUBSTITUTION:
        # R ⊆ S widens the view, R ⊇ S narrows it.
        extent = {EQ: EQ, SUB: SUP, SUP: SUB}.get(theta, IND)
    elif kind is RewriteKind.ATTRIBUTE_SUBSTITUTION:
        # R keeps driving the view; joining S only loses rows S lacks.
        extent = {EQ: EQ, SUB: EQ, SUP: SUB}.get(theta, IND)
    else:
        extent = EQ
    for d in dropped:
        extent = extent.meet(IND if d.kind == "select" else SUP)
    return extent


def ve_compatible(ve: ExtentRelation, extent: ExtentRelation) -> bool:
    return extent in _ACCEPTS[ve]


def classify_ws(view_extents: Sequence[ExtentRelation]) -> ExtentRelation:
    """Extent of a synchronized web service from the extents of its views."""
    if not view_extents:
        raise ValueError("a web service has at least one view")
    kinds = set(view_extents)
    if kinds == {EQ}:
        return EQ
    if IND in kinds or {SUP, SUB} <= kinds:
        return IND
    return SUP if SUP in kinds else SUB


def extent_rank(extent: ExtentRelation, ve: ExtentRelation) -> int:
    """Smaller is better: ≡, then the direction VE asks for, then the other direction, then ≈."""
    if extent is EQ:
        return 0
    if extent is ve and extent in (SUP, SUB):
        return 1
    if extent in (SUP, SUB):
        return 2
    return 3


# ---------------------------------------------------------------------------
# Shared rewrite helpers
# ---------------------------------------------------------------------------


class _Action(enum.Enum):
    SUBSTITUTE = "substitute"
    DROP = "drop"
    FAIL = "fail"


def _decide(params, have_substitute: bool) -> _Action:
    if params.replaceable and have_substitute:
        return _Action.SUBSTITUTE
    if params.dispensable:
        return _Action.DROP
    return _Action.FAIL


def fresh_alias(alias: str, used: set[str]) -> str:
    """``alias`` suffixed with the smallest integer from 2 up that is not taken."""
    k = 2
    while f"{alias}{k}" in used:
        k += 1
    return f"{alias}{k}"


def _finish(
    meta: MetaKnowledgeBase,
    view: ViewDefinition,
    select: list[SelectItem],
    columns: list[str] | None,
    from_: list[FromItem],
    where: list[PrimitiveClause],
    dropped: list[DroppedComponent],
    extent: ExtentRelation,
) -> ViewOutcome:
    if not select or not from_:
        return Failed()
    if not ve_compatible(view.ve, extent):
        return Failed()
    new = ViewDefinition(
        name=view.name + "'",
        select=tuple(select),
        from_=tuple(from_),
        where=tuple(where),
        ve=view.ve,
        column_list=tuple(columns) if columns is not None else None,
    )
    try:
        validate_view(new, meta)
    except (ValidationError, ValueError):
        return Failed()
    return Rewritten(new, extent, tuple(dropped))


# ---------------------------------------------------------------------------
# Relation deletion
# ---------------------------------------------------------------------------


def relation_counterpart(
    meta: MetaKnowledgeBase, r: RelationRef, s: RelationRef, attribute: str, replaceable: bool
) -> str | None:
    """Attribute of ``s`` standing in for ``r.attribute``.

    The identically named attribute of the same type always qualifies; a
    join-linked one of the same type only when the occurrence is replaceable.
    """
    domain = meta.declared_type(r.attribute(attribute))
    if domain is None:
        return None
    if meta.current_type(s.attribute(attribute)) is domain:
        return attribute
    if not replaceable:
        return None
    linked = sorted(
        b.attribute_name
        for b in meta.join_partners(r.attribute(attribute))
        if b.relation == s and meta.current_type(b) is domain
    )
    return linked[0] if linked else None


def _rewrite_relation(
    meta: MetaKnowledgeBase,
    view: ViewDefinition,
    r: RelationRef,
    candidate: tuple[RelationRef, ExtentRelation] | None,
) -> ViewOutcome:
    actions: dict[str, _Action] = {}
    for item in view.from_:
        if item.relation == r:
            actions[item.alias] = _decide(item.params, candidate is not None)
    if not actions:
        return Unchanged()
    if _Action.FAIL in actions.values():
        return Failed()

    used = set(view.aliases)
    renamed: dict[str, str] = {}
    for item in view.from_:
        if actions.get(item.alias) is _Action.SUBSTITUTE:
            renamed[item.alias] = fresh_alias(item.alias, used)
            used.add(renamed[item.alias])
    s = candidate[0] if candidate else None

    def map_term(term: AttributeTerm, replaceable: bool) -> AttributeTerm | None:
        name = relation_counterpart(meta, r, s, term.attribute, replaceable)
        return AttributeTerm(renamed[term.alias], name) if name else None

    dropped: list[DroppedComponent] = []
    from_: list[FromItem] = []
    for item in view.from_:
        action = actions.get(item.alias)
        if action is None:
            from_.append(item)
        elif action is _Action.SUBSTITUTE:
            from_.append(FromItem(s, renamed[item.alias], item.params))
        else:
            dropped.append(DroppedComponent("relation", print_from_item(item)))

    select: list[SelectItem] = []
    columns: list[str] | None = [] if view.column_list is not None else None
    for i, item in enumerate(view.select):
        term = item.attribute
        action = actions.get(term.alias)
        new_term = term
        if action is _Action.SUBSTITUTE:
            new_term = map_term(term, item.params.replaceable)
        elif action is _Action.DROP:
            new_term = None
        if new_term is None:
            if not item.params.dispensable:
                return Failed()
            dropped.append(DroppedComponent("select", print_select_item(item)))
            continue
        select.append(SelectItem(new_term, item.params))
        if columns is not None:
            columns.append(view.column_list[i])

    where: list[PrimitiveClause] = []
    for clause in view.where:
        mapping: dict[AttributeTerm, AttributeTerm] = {}
        lost = False
        for term in clause.attribute_terms:
            action = actions.get(term.alias)
            if action is _Action.DROP:
                lost = True
            elif action is _Action.SUBSTITUTE:
                new_term = map_term(term, clause.params.replaceable)
                if new_term is None:
                    lost = True
                else:
                    mapping[term] = new_term
        if lost:
            if not clause.params.dispensable:
                return Failed()
            dropped.append(DroppedComponent("clause", print_clause(clause)))
            continue
        where.append(rename_terms(clause, mapping) if mapping else clause)

    kind = RewriteKind.RELATION_SUBSTITUTION if renamed else RewriteKind.NONE
    extent = classify_extent(kind, candidate[1] if renamed else None, dropped)
    return _finish(meta, view, select, columns, from_, where, dropped, extent)


def relation_replaces(
    meta: MetaKnowledgeBase, view: ViewDefinition, r: RelationRef, s: RelationRef, theta: ExtentRelation
) -> bool:
    """Whether ``s`` (with ``r θ s``) yields a legal rewrite of ``view``.

    Every indispensable attribute of ``r`` the view uses needs a same-type
    counterpart in ``s`` (identical name, or join-linked when replaceable),
    dispensable ones may go, and the resulting extent must satisfy ``VE``.
    """
    return isinstance(_rewrite_relation(meta, view, r, (s, theta)), Rewritten)


def _ranked_relations(meta, view, r):
    ranked = []
    for s, theta in meta.candidate_substitute_relations(r):
        outcome = _rewrite_relation(meta, view, r, (s, theta))
        if isinstance(outcome, Rewritten):
            ranked.append(((extent_rank(outcome.extent, view.ve), s.source_id, s.relation_name, theta.value), (s, theta)))
    ranked.sort(key=lambda pair: pair[0])
    return [c for _, c in ranked]


def find_relation(
    meta: MetaKnowledgeBase, view: ViewDefinition, r: RelationRef
) -> tuple[RelationRef, ExtentRelation] | None:
    """Best legal substitute for ``r`` in ``view``, as ``(s, θ)`` with ``r θ s``."""
    ranked = _ranked_relations(meta, view, r)
    return ranked[0] if ranked else None


def substitute_relation(
    view: ViewDefinition, r: RelationRef, s: RelationRef, mapping: dict[str, str] | None = None
) -> ViewDefinition:
    """Rebind every alias of ``r`` to ``s`` under a fresh alias.

    ``mapping`` renames attributes of ``r`` to their counterparts in ``s``;
    by default names are kept.  Select items and clauses over attributes
    missing from ``mapping`` are removed.  Evolution parameters are unchanged.
    """
    names = view.aliases_of(r)
    used = set(view.aliases)
    renamed = {}
    for alias in names:
        renamed[alias] = fresh_alias(alias, used)
        used.add(renamed[alias])

    def rename(term: AttributeTerm) -> AttributeTerm | None:
        if term.alias not in renamed:
            return term
        if mapping is None:
            return AttributeTerm(renamed[term.alias], term.attribute)
        target = mapping.get(term.attribute)
        return AttributeTerm(renamed[term.alias], target) if target else None

    from_ = [FromItem(s, renamed[f.alias], f.params) if f.alias in renamed else f for f in view.from_]
    select, columns = [], [] if view.column_list is not None else None
    for i, item in enumerate(view.select):
        term = rename(item.attribute)
        if term is not None:
            select.append(SelectItem(term, item.params))
            if columns is not None:
                columns.append(view.column_list[i])
    where = []
    for clause in view.where:
        terms = {t: rename(t) for t in clause.attribute_terms}
        if all(v is not None for v in terms.values()):
            where.append(rename_terms(clause, terms))
    return replace(
        view,
        select=tuple(select),
        from_=tuple(from_),
        where=tuple(where),
        column_list=tuple(columns) if columns is not None else None,
    )


def rewrite_view_for_relation(meta: MetaKnowledgeBase, view: ViewDefinition, r: RelationRef) -> ViewOutcome:
    """Rewrite ``view`` after relation ``r`` was deleted."""
    return _rewrite_relation(meta, view, r, find_relation(meta, view, r))


# ---------------------------------------------------------------------------
# Attribute deletion
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LinkingJoin:
    """Equality tying the kept relation R to the added relation S."""

    r_attribute: str
    s_attribute: str
    theta: ExtentRelation | None  # containment R θ S backing the join, if any


_PC_PREFERENCE = {EQ: 0, SUB: 1, SUP: 2}


def linking_join(meta: MetaKnowledgeBase, a: AttributeRef, b: AttributeRef) -> LinkingJoin | None:
    """Join used when ``b`` replaces the deleted ``a``.

    The first projection pair of the best containment constraint between the
    two relations that avoids ``a`` and whose attributes still exist; failing
    that, a surviving join-constraint equality between them.
    """
    r, s = a.relation, b.relation
    pcs = sorted(meta.governing_pcs(r, s), key=lambda o: _PC_PREFERENCE[o[1]])
    for side_r, theta, side_s in pcs:
        for x, y in zip(side_r.projection, side_s.projection):
            if x != a.attribute_name and meta.current_type(r.attribute(x)) and meta.current_type(s.attribute(y)):
                return LinkingJoin(x, y, theta)
    for jc in meta.join_constraints:
        for p, q in jc.pairs():
            if p.relation == s and q.relation == r:
                p, q = q, p
            if p.relation != r or q.relation != s or p == a:
                continue
            if meta.current_type(p) and meta.current_type(q):
                return LinkingJoin(p.attribute_name, q.attribute_name, None)
    return None


def attribute_replaces(meta: MetaKnowledgeBase, a: AttributeRef, b: AttributeRef) -> bool:
    """Same declared type and a join constraint equating the two attributes."""
    ta, tb = meta.declared_type(a), meta.declared_type(b)
    return ta is not None and ta is tb and meta.joined(a, b)


def _rewrite_attribute(
    meta: MetaKnowledgeBase, view: ViewDefinition, a: AttributeRef, b: AttributeRef | None
) -> ViewOutcome:
    aliases = set(view.aliases_of(a.relation))

    def hit(term: AttributeTerm) -> bool:
        return term.alias in aliases and term.attribute == a.attribute_name

    link = linking_join(meta, a, b) if b is not None else None
    have = link is not None

    select_actions = [_decide(s.params, have) if hit(s.attribute) else None for s in view.select]
    clause_actions = [
        _decide(c.params, have) if any(hit(t) for t in c.attribute_terms) else None for c in view.where
    ]
    if all(x is None for x in select_actions + clause_actions):
        return Unchanged()
    if _Action.FAIL in select_actions or _Action.FAIL in clause_actions:
        return Failed()

    partnered = set()
    for item, action in zip(view.select, select_actions):
        if action is _Action.SUBSTITUTE:
            partnered.add(item.attribute.alias)
    for clause, action in zip(view.where, clause_actions):
        if action is _Action.SUBSTITUTE:
            partnered.update(t.alias for t in clause.attribute_terms if hit(t))
    used = set(view.aliases)
    partner: dict[str, str] = {}
    for item in view.from_:
        if item.alias in partnered:
            partner[item.alias] = fresh_alias(item.alias, used)
            used.add(partner[item.alias])

    def swap(term: AttributeTerm) -> AttributeTerm:
        return AttributeTerm(partner[term.alias], b.attribute_name)

    dropped: list[DroppedComponent] = []
    select: list[SelectItem] = []
    columns: list[str] | None = [] if view.column_list is not None else None
    for i, (item, action) in enumerate(zip(view.select, select_actions)):
        if action is _Action.DROP:
            dropped.append(DroppedComponent("select", print_select_item(item)))
            continue
        select.append(SelectItem(swap(item.attribute), item.params) if action else item)
        if columns is not None:
            columns.append(view.column_list[i])

    where: list[PrimitiveClause] = []
    for clause, action in zip(view.where, clause_actions):
        if action is _Action.DROP:
            dropped.append(DroppedComponent("clause", print_clause(clause)))
        elif action is _Action.SUBSTITUTE:
            where.append(rename_terms(clause, {t: swap(t) for t in clause.attribute_terms if hit(t)}))
        else:
            where.append(clause)

    from_ = list(view.from_)
    for item in view.from_:
        if item.alias in partner:
            from_.append(FromItem(b.relation, partner[item.alias], item.params))
            where.append(
                PrimitiveClause(
                    AttributeTerm(item.alias, link.r_attribute),
                    "=",
                    AttributeTerm(partner[item.alias], link.s_attribute),
                )
            )

    kind = RewriteKind.ATTRIBUTE_SUBSTITUTION if partner else RewriteKind.NONE
    extent = classify_extent(kind, link.theta if partner else None, dropped)
    return _finish(meta, view, select, columns, from_, where, dropped, extent)


def _ranked_attributes(meta, view, a):
    ranked = []
    for b in meta.candidate_substitute_attributes(a):
        if b.relation == a.relation or not attribute_replaces(meta, a, b):
            continue
        if linking_join(meta, a, b) is None:
            continue
        outcome = _rewrite_attribute(meta, view, a, b)
        if isinstance(outcome, Rewritten):
            ranked.append(((extent_rank(outcome.extent, view.ve), b.source_id, b.relation_name, b.attribute_name), b))
    ranked.sort(key=lambda pair: pair[0])
    return [b for _, b in ranked]


def find_attribute(meta: MetaKnowledgeBase, a: AttributeRef, view: ViewDefinition) -> AttributeRef | None:
    """Best legal substitute for the deleted attribute ``a`` in ``view``."""
    ranked = _ranked_attributes(meta, view, a)
    return ranked[0] if ranked else None


def substitute_attribute(
    meta: MetaKnowledgeBase, view: ViewDefinition, a: AttributeRef, b: AttributeRef
) -> ViewOutcome:
    """Replace ``a`` by ``b``: add b's relation under a fresh alias, join it, rewrite SELECT and WHERE.

    Clauses over ``a`` follow their own parameters: dispensable and not
    replaceable ones are deleted, indispensable and not replaceable ones make
    the view fail, the rest are moved onto ``b``.
    """
    if linking_join(meta, a, b) is None:
        return Failed()
    return _rewrite_attribute(meta, view, a, b)


def rewrite_view_for_attribute(meta: MetaKnowledgeBase, view: ViewDefinition, a: AttributeRef) -> ViewOutcome:
    """Rewrite ``view`` after attribute ``a`` was deleted."""
    return _rewrite_attribute(meta, view, a, find_attribute(meta, a, view))


# ---------------------------------------------------------------------------
# Web services
# ---------------------------------------------------------------------------


def search_affected(meta: MetaKnowledgeBase, views: ViewKnowledgeBase, target: AttributeRef | RelationRef) -> set[str]:
    out: set[str] = set()
    for view_id in views.views_referencing(target):
        out |= views.web_services_of_view(view_id)
    return out


def fallback_web_service(meta: MetaKnowledgeBase, views: ViewKnowledgeBase, ws_id: str) -> str | None:
    """First replacement of ``ws_id`` whose views are all currently valid."""
    for candidate in meta.replacement_chain(ws_id):
        view_ids = views.views_of(candidate) or meta.web_service(candidate).view_ids
        try:
            if all(views.is_valid(v) for v in view_ids):
                return candidate
        except KeyError:
            continue
    return None


def synchronize(meta: MetaKnowledgeBase, views: ViewKnowledgeBase, event: ChangeEvent) -> SyncReport:
    """Apply ``event`` and resynchronize every view and web service it touches.

    Rewritten definitions replace the stored ones; views that cannot be
    synchronized keep their definition and are marked invalid.  Calls must be
    serialized by the caller.
    """
    if not isinstance(event, (DeleteAttribute, DeleteRelation)):
        raise TypeError(f"unsupported change event {event!r}")
    new_schemas = apply_change(meta.sources, event)
    target = event.target
    affected_views = sorted(views.views_referencing(target))
    affected_ws = sorted(search_affected(meta, views, target))
    meta.replace_schemas(new_schemas)

    report = SyncReport(event)
    for view_id in affected_views:
        view = views.view(view_id)
        if isinstance(event, DeleteAttribute):
            outcome = rewrite_view_for_attribute(meta, view, target)
        else:
            outcome = rewrite_view_for_relation(meta, view, target)
        report.per_view[view_id] = outcome
        if isinstance(outcome, Rewritten):
            views.replace_definition(view_id, outcome.new)
        elif isinstance(outcome, Failed):
            views.mark_invalid(view_id)

    for ws_id in affected_ws:
        ws_views = views.views_of(ws_id)
        outcomes = [report.per_view.get(v) for v in ws_views]
        if any(isinstance(o, Failed) for o in outcomes):
            report.per_ws[ws_id] = FailedWithFallback(fallback_web_service(meta, views, ws_id))
        else:
            report.per_ws[ws_id] = classify_ws([o.extent if isinstance(o, Rewritten) else EQ for o in outcomes])
    return report


__all__ = [
    "FAILURE_MESSAGE",
    "DroppedComponent",
    "Failed",
    "FailedWithFallback",
    "LinkingJoin",
    "RewriteKind",
    "Rewritten",
    "SyncReport",
    "Unchanged",
    "ViewOutcome",
    "attribute_replaces",
    "classify_extent",
    "classify_ws",
    "extent_rank",
    "fallback_web_service",
    "find_attribute",
    "find_relation",
    "fresh_alias",
    "linking_join",
    "relation_replaces",
    "rewrite_view_for_attribute",
    "rewrite_view_for_relation",
    "search_affected",
    "substitute_attribute",
    "substitute_relation",
    "synchronize",
    "ve_compatible",
]
