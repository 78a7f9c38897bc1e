"""Web services Meta Knowledge Base.

Holds the registered source schemas together with the substitution knowledge
the synchronizer consults: type-integrity constraints, join constraints,
partial/complete (containment) constraints, the service-to-source map and the
service replacement rules.

Constraints are never cascade-deleted when a schema component disappears.
Candidate queries simply skip anything whose *substitute side* no longer
exists, while the deleted side keeps its recorded types and containments so
that the engine can still reason about what was lost.
"""

from __future__ import annotations

import copy
import logging
from collections.abc import Iterable
from dataclasses import dataclass, field

from wssync.errors import DanglingReference, InvariantViolation, UnknownAttribute, UnknownWebService
from wssync.esql import PrimitiveClause
from wssync.model import (
    AttributeRef,
    ExtentRelation,
    RelationRef,
    SourceSchema,
    TypeDomain,
    WebService,
    lookup_attribute_type,
    relation_exists,
)

log = logging.getLogger(__name__)

PC_THETAS = (ExtentRelation.SUBSET, ExtentRelation.SUPERSET, ExtentRelation.EQUIVALENT)


@dataclass(frozen=True)
class TypeIntegrityConstraint:
    relation: RelationRef
    typing: tuple[tuple[str, TypeDomain], ...]
    label: str | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        typing = self.typing.items() if isinstance(self.typing, dict) else self.typing
        object.__setattr__(self, "typing", tuple((n, t) for n, t in typing))

    @classmethod
    def from_schema(cls, source: SourceSchema, relation_name: str, label: str | None = None):
        rel = source.relation(relation_name)
        if rel is None:
            raise DanglingReference(f"no relation {source.source_id}.{relation_name}")
        return cls(RelationRef(source.source_id, rel.name), rel.attributes, label)

    def type_of(self, attribute_name: str) -> TypeDomain | None:
        for n, t in self.typing:
            if n == attribute_name:
                return t
        return None


@dataclass(frozen=True)
class JoinConstraint:
    left: RelationRef
    right: RelationRef
    equalities: tuple[tuple[str, str], ...]
    label: str | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "equalities", tuple((a, b) for a, b in self.equalities))
        if not self.equalities:
            raise InvariantViolation("a join constraint needs at least one equality")

    def pairs(self) -> Iterable[tuple[AttributeRef, AttributeRef]]:
        for a, b in self.equalities:
            yield self.left.attribute(a), self.right.attribute(b)


@dataclass(frozen=True)
class PCSide:
    relation: RelationRef
    projection: tuple[str, ...]
    selection: tuple[PrimitiveClause, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "projection", tuple(self.projection))
        object.__setattr__(self, "selection", tuple(self.selection))
        if not self.projection:
            raise InvariantViolation(f"PC side over {self.relation} needs a nonempty projection")


@dataclass(frozen=True)
class PCConstraint:
    """``π(σ left) θ π(σ right)`` with θ one of ⊆, ⊇, ≡."""

    left: PCSide
    theta: ExtentRelation
    right: PCSide
    label: str | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if self.theta not in PC_THETAS:
            raise InvariantViolation(f"PC theta must be one of ⊆, ⊇, ≡, got {self.theta.symbol}")
        if len(self.left.projection) != len(self.right.projection):
            raise InvariantViolation("PC projections must have equal length")

    @property
    def projection_only(self) -> bool:
        return not self.left.selection and not self.right.selection

    def oriented(self, relation: RelationRef) -> tuple[PCSide, ExtentRelation, PCSide] | None:
        """View the constraint as ``relation θ other``; None if ``relation`` is on neither side."""
        if self.left.relation == relation:
            return self.left, self.theta, self.right
        if self.right.relation == relation:
            return self.right, self.theta.inverse(), self.left
        return None


@dataclass(frozen=True)
class ReplacementRule:
    ws_id: str
    substitutes: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "substitutes", tuple(self.substitutes))
        if self.ws_id in self.substitutes:
            raise InvariantViolation(f"web service {self.ws_id} cannot replace itself")


class MetaKnowledgeBase:
    """Registry of schemas and substitution constraints (the WSMKB).

    Mutation goes through :meth:`register` and :meth:`replace_schemas`; callers
    that mutate from several threads must serialize those calls themselves.
    Query methods only read and never mutate.
    """

    def __init__(self) -> None:
        self._sources: dict[str, SourceSchema] = {}
        self._type_constraints: dict[RelationRef, TypeIntegrityConstraint] = {}
        self._join_constraints: list[JoinConstraint] = []
        self._pc_constraints: list[PCConstraint] = []
        self._web_services: dict[str, WebService] = {}
        self._replacements: dict[str, ReplacementRule] = {}

    # -- read-only views ----------------------------------------------------

    @property
    def sources(self) -> tuple[SourceSchema, ...]:
        return tuple(self._sources.values())

    @property
    def type_constraints(self) -> tuple[TypeIntegrityConstraint, ...]:
        return tuple(self._type_constraints.values())

    @property
    def join_constraints(self) -> tuple[JoinConstraint, ...]:
        return tuple(self._join_constraints)

    @property
    def pc_constraints(self) -> tuple[PCConstraint, ...]:
        return tuple(self._pc_constraints)

    @property
    def web_services(self) -> tuple[WebService, ...]:
        return tuple(self._web_services.values())

    @property
    def replacement_rules(self) -> tuple[ReplacementRule, ...]:
        return tuple(self._replacements.values())

    def source(self, source_id: str) -> SourceSchema | None:
        return self._sources.get(source_id)

    def web_service(self, ws_id: str) -> WebService:
        try:
            return self._web_services[ws_id]
        except KeyError:
            raise UnknownWebService(f"no web service {ws_id}") from None

    def copy(self) -> MetaKnowledgeBase:
        return copy.copy(self)

    def __copy__(self) -> MetaKnowledgeBase:
        new = MetaKnowledgeBase()
        new._sources = dict(self._sources)
        new._type_constraints = dict(self._type_constraints)
        new._join_constraints = list(self._join_constraints)
        new._pc_constraints = list(self._pc_constraints)
        new._web_services = dict(self._web_services)
        new._replacements = dict(self._replacements)
        return new

    def has_relation(self, ref: RelationRef) -> bool:
        return relation_exists(self._sources.values(), ref)

    def current_type(self, ref: AttributeRef) -> TypeDomain | None:
        """Type of ``ref`` in the current schemas, None once it has been deleted."""
        return lookup_attribute_type(self._sources.values(), ref)

    # -- registration ---------------------------------------------------------

    def register(self, item) -> MetaKnowledgeBase:
        """Add a schema, constraint, web service or replacement rule.

        Registering an identical item twice is a no-op.  Returns ``self`` so
        registrations can be chained.
        """
        if isinstance(item, SourceSchema):
            self._register_source(item)
        elif isinstance(item, TypeIntegrityConstraint):
            self._register_tc(item)
        elif isinstance(item, JoinConstraint):
            self._check_jc(item)
            if item not in self._join_constraints:
                self._join_constraints.append(item)
        elif isinstance(item, PCConstraint):
            self._check_pc(item)
            if item not in self._pc_constraints:
                self._pc_constraints.append(item)
        elif isinstance(item, WebService):
            missing = sorted(s for s in item.source_ids if s not in self._sources)
            if missing:
                raise DanglingReference(f"web service {item.ws_id} names unknown sources {missing}")
            self._web_services[item.ws_id] = item
        elif isinstance(item, ReplacementRule):
            for ws in (item.ws_id, *item.substitutes):
                if ws not in self._web_services:
                    raise DanglingReference(f"replacement rule names unknown web service {ws}")
            self._replacements[item.ws_id] = item
        else:
            raise TypeError(f"cannot register {type(item).__name__}")
        return self

    def register_all(self, items: Iterable) -> MetaKnowledgeBase:
        for item in items:
            self.register(item)
        return self

    def _register_source(self, source: SourceSchema) -> None:
        previous = self._sources.get(source.source_id)
        if previous == source:
            return
        self._sources[source.source_id] = source
        if previous is None:
            return
        try:
            self.revalidate()
        except InvariantViolation:
            self._sources[source.source_id] = previous
            raise

    def _register_tc(self, tc: TypeIntegrityConstraint) -> None:
        source = self._sources.get(tc.relation.source_id)
        rel = source.relation(tc.relation.relation_name) if source else None
        if rel is None:
            raise DanglingReference(f"type constraint over unknown relation {tc.relation}")
        if dict(tc.typing) != dict(rel.attributes):
            raise InvariantViolation(
                f"type constraint for {tc.relation} must type exactly {list(rel.attribute_names)} "
                "with the schema's domains"
            )
        self._type_constraints[tc.relation] = tc

    def _attr_type_for_check(self, ref: AttributeRef) -> TypeDomain:
        if not self.has_relation(ref.relation):
            raise DanglingReference(f"unknown relation {ref.relation}")
        domain = self.current_type(ref)
        if domain is None:
            raise DanglingReference(f"unknown attribute {ref}")
        return domain

    def _check_jc(self, jc: JoinConstraint) -> None:
        for a, b in jc.pairs():
            ta, tb = self._attr_type_for_check(a), self._attr_type_for_check(b)
            if ta is not tb:
                raise InvariantViolation(f"join constraint {a} = {b} mixes {ta.value} and {tb.value}")

    def _check_pc(self, pc: PCConstraint) -> None:
        for side in (pc.left, pc.right):
            for name in side.projection:
                self._attr_type_for_check(side.relation.attribute(name))
            for clause in side.selection:
                for term in clause.attribute_terms:
                    if term.alias != side.relation.relation_name:
                        raise InvariantViolation(
                            f"PC selection over {side.relation} must qualify attributes with "
                            f"{side.relation.relation_name}, got {term}"
                        )
                    self._attr_type_for_check(side.relation.attribute(term.attribute))
        for a, b in zip(pc.left.projection, pc.right.projection):
            ta = self._attr_type_for_check(pc.left.relation.attribute(a))
            tb = self._attr_type_for_check(pc.right.relation.attribute(b))
            if ta is not tb:
                raise InvariantViolation(
                    f"PC projections pair {pc.left.relation}.{a} ({ta.value}) "
                    f"with {pc.right.relation}.{b} ({tb.value})"
                )

    def revalidate(self) -> None:
        """Re-check every constraint whose components all still exist."""
        for tc in self._type_constraints.values():
            source = self._sources.get(tc.relation.source_id)
            rel = source.relation(tc.relation.relation_name) if source else None
            if rel is None:
                continue
            for name, domain in rel.attributes:
                declared = tc.type_of(name)
                if declared is not None and declared is not domain:
                    raise InvariantViolation(
                        f"{tc.relation}.{name} is {domain.value} but its type constraint says {declared.value}"
                    )
        for jc in self._join_constraints:
            if all(self.current_type(a) and self.current_type(b) for a, b in jc.pairs()):
                self._check_jc(jc)
        for pc in self._pc_constraints:
            try:
                self._check_pc(pc)
            except DanglingReference:
                continue

    def replace_schemas(self, schemas: Iterable[SourceSchema]) -> None:
        """Install post-change schemas without touching any constraint."""
        self._sources = {s.source_id: s for s in schemas}

    # -- queries ----------------------------------------------------------------

    def attribute_type(self, ref: AttributeRef) -> TypeDomain:
        """Declared domain of ``ref`` from its type-integrity constraint.

        Answers for deleted attributes too, since constraints outlive schema
        changes.
        """
        tc = self._type_constraints.get(ref.relation)
        domain = tc.type_of(ref.attribute_name) if tc else None
        if domain is None:
            raise UnknownAttribute(f"no type constraint covers {ref}")
        return domain

    def declared_type(self, ref: AttributeRef) -> TypeDomain | None:
        tc = self._type_constraints.get(ref.relation)
        return tc.type_of(ref.attribute_name) if tc else None

    def join_partners(self, ref: AttributeRef) -> list[AttributeRef]:
        """Attributes equated with ``ref`` by some join constraint, in registration order."""
        out: list[AttributeRef] = []
        for jc in self._join_constraints:
            for a, b in jc.pairs():
                other = b if a == ref else a if b == ref else None
                if other is not None and other != ref and other not in out:
                    out.append(other)
        return out

    def joined(self, a: AttributeRef, b: AttributeRef) -> bool:
        return b in self.join_partners(a)

    def candidate_substitute_attributes(self, ref: AttributeRef) -> set[AttributeRef]:
        """Live attributes join-linked to ``ref`` with the same declared type."""
        domain = self.declared_type(ref)
        if domain is None:
            return set()
        return {
            b
            for b in self.join_partners(ref)
            if self.current_type(b) is not None and self.declared_type(b) is domain
        }

    def governing_pcs(self, r: RelationRef, s: RelationRef) -> list[tuple[PCSide, ExtentRelation, PCSide]]:
        """Projection-only PCs between ``r`` and ``s``, oriented as ``r θ s``."""
        out = []
        for pc in self._pc_constraints:
            if not pc.projection_only:
                continue
            oriented = pc.oriented(r)
            if oriented is not None and oriented[2].relation == s and s != r:
                out.append(oriented)
        return out

    def candidate_substitute_relations(self, r: RelationRef) -> set[tuple[RelationRef, ExtentRelation]]:
        """Live relations tied to ``r`` by a projection-only PC, with θ read as ``r θ s``."""
        out = set()
        for pc in self._pc_constraints:
            if not pc.projection_only:
                continue
            oriented = pc.oriented(r)
            if oriented is None:
                continue
            _, theta, other = oriented
            if other.relation == r or not self.has_relation(other.relation):
                continue
            if any(self.current_type(other.relation.attribute(n)) is None for n in other.projection):
                continue
            out.add((other.relation, theta))
        return out

    def replacement_chain(self, ws_id: str) -> list[str]:
        ws = self.web_service(ws_id)
        rule = self._replacements.get(ws_id)
        return list(rule.substitutes if rule else ws.replacements)

    def summary(self) -> dict[str, int]:
        return {
            "sources": len(self._sources),
            "type_constraints": len(self._type_constraints),
            "join_constraints": len(self._join_constraints),
            "pc_constraints": len(self._pc_constraints),
            "web_services": len(self._web_services),
        }
